#include "abaf/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "abaf/error.hpp"
#include "abaf/text_io.hpp"

namespace abaf {

ScaleKind parse_scale_kind(const std::string& s) {
    if (s == "hamd17") return ScaleKind::Hamd17;
    if (s == "phq9") return ScaleKind::Phq9;
    if (s == "synthetic") return ScaleKind::Synthetic;
    fail(ErrorCode::InvalidValue, "unknown scale kind '" + s + "'", "scale_kind");
}

std::string to_string(ScaleKind kind) {
    switch (kind) {
        case ScaleKind::Hamd17: return "hamd17";
        case ScaleKind::Phq9: return "phq9";
        case ScaleKind::Synthetic: return "synthetic";
    }
    return "synthetic";
}

int scale_max(ScaleKind kind) {
    switch (kind) {
        case ScaleKind::Hamd17: return 52;
        case ScaleKind::Phq9: return 27;
        case ScaleKind::Synthetic: return 52;
    }
    return 52;
}

std::vector<int> CorpusManifest::labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

CorpusManifest load_manifest(const std::filesystem::path& path, bool check_files) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::MissingColumn, "empty manifest",
            "header");
    const auto header = parse_csv_row(trim(line));
    static const std::vector<std::string> expected = {"subject_id", "wav_path", "label", "scale_score",
                                                      "scale_kind"};
    for (const auto& col : expected)
        require(std::find(header.begin(), header.end(), col) != header.end(), ErrorCode::MissingColumn,
                "manifest lacks column", col);
    auto column = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    const std::size_t c_id = column("subject_id"), c_path = column("wav_path"), c_label = column("label"),
                      c_score = column("scale_score"), c_kind = column("scale_kind");

    CorpusManifest manifest;
    manifest.corpus_name = path.parent_path().filename().string();
    const auto base = path.parent_path();
    std::set<std::string> seen;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = parse_csv_row(trim(line));
        require(cells.size() == header.size(), ErrorCode::MissingColumn,
                "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) + " cells",
                "row");
        SubjectRecord rec;
        rec.subject_id = cells[c_id];
        require(!rec.subject_id.empty(), ErrorCode::InvalidValue, "empty subject id", "subject_id");
        require(seen.insert(rec.subject_id).second, ErrorCode::DuplicateId,
                "duplicate subject id '" + rec.subject_id + "'", "subject_id");
        rec.wav_path = cells[c_path];
        if (rec.wav_path.is_relative()) rec.wav_path = base / rec.wav_path;
        const long long label = parse_int(cells[c_label], "label");
        require(label == 0 || label == 1, ErrorCode::OutOfRange, "label must be 0 or 1", "label");
        rec.label = static_cast<int>(label);
        rec.scale_kind = parse_scale_kind(trim(cells[c_kind]));
        const std::string score = trim(cells[c_score]);
        if (!score.empty()) {
            const long long s = parse_int(score, "scale_score");
            require(s >= 0 && s <= scale_max(rec.scale_kind), ErrorCode::OutOfRange,
                    "score " + score + " outside [0, " + std::to_string(scale_max(rec.scale_kind)) + "]",
                    "scale_score");
            rec.scale_score = static_cast<int>(s);
            if (rec.scale_kind != ScaleKind::Synthetic)
                require(rec.label == label_from_score(rec.scale_kind, rec.scale_score.value()),
                        ErrorCode::InvalidValue,
                        "label of '" + rec.subject_id + "' disagrees with its score band", "label");
        }
        if (check_files)
            require(std::filesystem::exists(rec.wav_path), ErrorCode::MissingFile,
                    "wav not found: " + rec.wav_path.string(), "wav_path");
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    const auto base = path.parent_path();
    std::string out = std::string(kManifestHeader) + "\n";
    for (const auto& r : manifest.records) {
        std::filesystem::path p = r.wav_path;
        if (!base.empty()) {
            const auto rel = p.lexically_relative(base);
            if (!rel.empty() && *rel.begin() != "..") p = rel;
        }
        out += csv_row({r.subject_id, p.generic_string(), std::to_string(r.label),
                        r.scale_score ? std::to_string(*r.scale_score) : std::string(),
                        to_string(r.scale_kind)});
    }
    write_text_file(path, out);
}

std::size_t BandTable::band_of(int score) const {
    require(score >= 0, ErrorCode::OutOfRange, "negative score", "scale_score");
    std::size_t band = 0;
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (score >= lower[i]) band = i;
    return band;
}

std::size_t BandTable::index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    require(it != names.end(), ErrorCode::InvalidValue, "unknown band '" + name + "'", "band");
    return static_cast<std::size_t>(it - names.begin());
}

BandTable hamd17_bands() { return {{"NC", "Mild", "Moderate", "Severe"}, {0, 8, 17, 25}}; }

BandTable phq9_bands() {
    return {{"NC", "Minimal", "Mild", "Moderate", "ModeratelySevere", "Severe"}, {0, 1, 5, 10, 15, 20}};
}

BandTable band_table_for(ScaleKind kind) {
    return kind == ScaleKind::Phq9 ? phq9_bands() : hamd17_bands();
}

int label_from_score(ScaleKind kind, int score) {
    return band_table_for(kind).band_of(score) == 0 ? 0 : 1;
}

}  // namespace abaf
