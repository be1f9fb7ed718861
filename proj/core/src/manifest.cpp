#include "handwash/manifest.hpp"

#include <fstream>
#include <set>
#include <utility>

#include <json.hpp>

#include "handwash/errors.hpp"

namespace handwash {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::none: break;
    }
    return "none";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "none") return Split::none;
    throw ParseError("unknown split value: " + s);
}

DatasetManifest::DatasetManifest(LabelRegistry registry, std::vector<FrameSample> samples,
                                 std::vector<Split> splits)
    : registry_(std::move(registry)), samples_(std::move(samples)), splits_(std::move(splits)) {
    if (splits_.empty()) splits_.assign(samples_.size(), Split::none);
    if (splits_.size() != samples_.size())
        throw ConfigError("split assignment does not cover the sample list");

    std::set<std::pair<std::string, int>> frames_seen;
    for (const auto& s : samples_) {
        if (s.label_id < 0 || s.label_id >= registry_.size())
            throw ConfigError("sample label id not in registry: " + std::to_string(s.label_id));
        if (s.frame_index < 0)
            throw ConfigError("negative frame index for " + s.image_path);
        if (!frames_seen.insert({s.source_video, s.frame_index}).second)
            throw ConfigError("duplicate frame index " + std::to_string(s.frame_index) +
                              " in video " + s.source_video);
    }
}

std::vector<std::size_t> DatasetManifest::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits_.size(); ++i)
        if (splits_[i] == s) out.push_back(i);
    return out;
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(registry_.size()), 0);
    for (const auto& s : samples_) counts[static_cast<std::size_t>(s.label_id)]++;
    return counts;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open for writing: " + file.string());

    json header;
    header["version"] = 1;
    header["labels"] = manifest.registry().names();
    out << header.dump() << '\n';

    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& s = manifest.samples()[i];
        json rec;
        rec["path"] = s.image_path;
        rec["label"] = manifest.registry().at(s.label_id).name;
        rec["video"] = s.source_video;
        rec["frame"] = s.frame_index;
        rec["split"] = to_string(manifest.splits()[i]);
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

DatasetManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest: " + file.string());

    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw ParseError("empty manifest file: " + file.string());
    line_no = 1;

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad header: ") + e.what(), line_no);
    }
    if (!header.is_object() || !header.contains("version") || !header.contains("labels"))
        throw ParseError("header must carry version and labels", line_no);
    if (header["version"].get<int>() != 1)
        throw ParseError("unsupported manifest version", line_no);

    LabelRegistry registry(header["labels"].get<std::vector<std::string>>());

    std::vector<FrameSample> samples;
    std::vector<Split> splits;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), line_no);
        }
        try {
            FrameSample s;
            s.image_path = rec.at("path").get<std::string>();
            const auto label_name = rec.at("label").get<std::string>();
            auto id = registry.find(label_name);
            if (!id) throw ParseError("unknown label: " + label_name, line_no);
            s.label_id = *id;
            s.source_video = rec.at("video").get<std::string>();
            s.frame_index = rec.at("frame").get<int>();
            samples.push_back(std::move(s));
            splits.push_back(split_from_string(rec.at("split").get<std::string>()));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), line_no);
        }
    }

    return DatasetManifest(std::move(registry), std::move(samples), std::move(splits));
}

}  // namespace handwash
