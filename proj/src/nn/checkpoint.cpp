#include "abaf/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "abaf/error.hpp"

namespace abaf::nn {

namespace {

struct Entry {
    std::string name;
    Tensor* tensor;
};

std::vector<Entry> entries_of(Layer& model) {
    std::vector<Entry> out;
    for (Parameter* p : model.parameters()) out.push_back({p->name, &p->value});
    for (auto& [name, t] : model.buffers()) out.push_back({name, t});
    return out;
}

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    const std::string& b;
    std::size_t pos = 0;
    std::uint64_t get(int bytes) {
        require(pos + static_cast<std::size_t>(bytes) <= b.size(), ErrorCode::MalformedHeader,
                "checkpoint truncated", "checkpoint");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[pos + i])) << (8 * i);
        pos += static_cast<std::size_t>(bytes);
        return v;
    }
    std::string str(std::size_t n) {
        require(pos + n <= b.size(), ErrorCode::MalformedHeader, "checkpoint truncated", "checkpoint");
        std::string s = b.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(Layer& model, const std::filesystem::path& path) {
    const auto entries = entries_of(model);
    std::string b = "ABCK";
    b.push_back(static_cast<char>(kCheckpointVersion));
    put_u32(b, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put_u32(b, static_cast<std::uint32_t>(e.name.size()));
        b += e.name;
        put_u32(b, static_cast<std::uint32_t>(e.tensor->ndim()));
        for (std::size_t d : e.tensor->shape) put_u64(b, d);
        for (double v : e.tensor->data) put_u64(b, std::bit_cast<std::uint64_t>(v));
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot write " + path.string(), "checkpoint");
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

void load_checkpoint(Layer& model, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::MissingFile, "missing checkpoint " + path.string(), "checkpoint");
    const std::string b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Cursor c{b};
    require(c.str(4) == "ABCK", ErrorCode::MalformedHeader, "bad checkpoint magic", "checkpoint");
    require(c.get(1) == kCheckpointVersion, ErrorCode::FormatVersion, "unsupported checkpoint version",
            "checkpoint");
    std::map<std::string, Tensor> stored;
    const std::uint64_t count = c.get(4);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = c.str(c.get(4));
        Shape shape(c.get(4));
        for (std::size_t& d : shape) d = c.get(8);
        Tensor t(shape);
        for (double& v : t.data) v = std::bit_cast<double>(c.get(8));
        stored.emplace(name, std::move(t));
    }
    for (const auto& e : entries_of(model)) {
        const auto it = stored.find(e.name);
        require(it != stored.end(), ErrorCode::MissingColumn, "checkpoint lacks " + e.name, e.name);
        require(it->second.shape == e.tensor->shape, ErrorCode::ShapeMismatch,
                e.name + ": checkpoint shape " + shape_string(it->second.shape) + " vs model " +
                    shape_string(e.tensor->shape),
                e.name);
        e.tensor->data = it->second.data;
    }
}

Snapshot take_snapshot(Layer& model) {
    Snapshot s;
    for (const auto& e : entries_of(model)) s.values.push_back(e.tensor->data);
    return s;
}

void restore_snapshot(Layer& model, const Snapshot& snapshot) {
    const auto entries = entries_of(model);
    require(entries.size() == snapshot.values.size(), ErrorCode::ShapeMismatch, "snapshot does not match model",
            "snapshot");
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].tensor->data = snapshot.values[i];
}

}  // namespace abaf::nn
