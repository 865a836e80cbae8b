#include "abaf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "abaf/error.hpp"
#include "abaf/text_io.hpp"

namespace abaf {

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        require(eq != std::string::npos, ErrorCode::InvalidValue,
                "expected 'key = value' on line " + std::to_string(line_no), "config");
        const std::string key = trim(trimmed.substr(0, eq));
        require(!key.empty(), ErrorCode::InvalidValue, "empty key on line " + std::to_string(line_no),
                "config");
        cfg.entries_[key] = trim(trimmed.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    return parse(read_text_file(path));
}

const std::string& KeyValueConfig::at(const std::string& key) const {
    const auto it = entries_.find(key);
    require(it != entries_.end(), ErrorCode::MissingColumn, "config key not set", key);
    return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
    return parse_double(at(key), key);
}

long long KeyValueConfig::get_int(const std::string& key) const {
    return parse_int(at(key), key);
}

bool KeyValueConfig::get_bool(const std::string& key) const {
    const std::string& v = at(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::InvalidValue, "expected boolean, got '" + v + "'", key);
}

std::string KeyValueConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

std::vector<std::string> KeyValueConfig::unknown_keys(const KeyValueConfig& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (!known.contains(k)) out.push_back(k);
    return out;
}

}  // namespace abaf
