#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace abaf {

/// Flat `section.key = value` text configuration. Lines starting with '#'
/// are comments. Keys keep their sorted order so serialization is canonical.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    bool contains(const std::string& key) const { return entries_.count(key) != 0; }
    const std::string& at(const std::string& key) const;

    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    std::string serialize() const;

    /// Keys that are present here but missing from `known`.
    std::vector<std::string> unknown_keys(const KeyValueConfig& known) const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace abaf
