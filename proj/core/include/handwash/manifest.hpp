#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "handwash/labels.hpp"

namespace handwash {

enum class Split { none, train, val };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// One extracted frame image on disk.
struct FrameSample {
    std::string image_path;
    int label_id = -1;
    std::string source_video;
    int frame_index = 0;

    bool operator==(const FrameSample&) const = default;
};

// Immutable collection of frame samples plus the registry they refer to and
// an optional train/val assignment (parallel to samples()).
class DatasetManifest {
public:
    DatasetManifest(LabelRegistry registry, std::vector<FrameSample> samples,
                    std::vector<Split> splits = {});

    const LabelRegistry& registry() const { return registry_; }
    const std::vector<FrameSample>& samples() const { return samples_; }
    const std::vector<Split>& splits() const { return splits_; }
    std::size_t size() const { return samples_.size(); }

    std::vector<std::size_t> indices_of(Split s) const;
    // Number of samples per class id, in registry order.
    std::vector<std::size_t> class_counts() const;

    bool operator==(const DatasetManifest&) const = default;

private:
    LabelRegistry registry_;
    std::vector<FrameSample> samples_;
    std::vector<Split> splits_;
};

// Line-delimited JSON, one object per sample, preceded by a header object
// {"version":1,"labels":[...]}. Round-trips exactly, split column included.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);
DatasetManifest load_manifest(const std::filesystem::path& file);

}  // namespace handwash
