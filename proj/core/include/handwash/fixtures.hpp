#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>

#include "handwash/labels.hpp"

namespace handwash {

// Parameters for one synthetic clip. Frames are a pure function of these
// fields; there is no hidden global randomness.
struct FixtureSpec {
    int class_id = 0;
    int num_frames = 30;
    int height = 64;
    int width = 64;
    std::uint64_t seed = 0;
};

// Three visually separable motion archetypes over a noisy background,
// keyed by class_id in default-registry order:
//   FingersInterlaced - vertical stripe pattern with oscillating phase
//   Linear            - one bright blob translating left to right
//   Palm2Palm         - two blobs oscillating toward and away from each other
// Frames are 8-bit grayscale replicated to 3 channels.
std::vector<cv::Mat> generate_clip(const FixtureSpec& spec);

struct CorpusOptions {
    int per_class = 20;
    int frames_per_clip = 30;
    int height = 64;
    int width = 64;
    std::uint64_t seed = 0;
    // false: write still images consumable by build_manifest directly.
    // true: write MJPG .avi clips for exercising the decoder path.
    bool encode_clips = false;
    int jpeg_quality = 95;
};

// Writes a directory-per-class tree under corpus_root.
void generate_corpus(const std::filesystem::path& corpus_root, const LabelRegistry& registry,
                     const CorpusOptions& options);

}  // namespace handwash
