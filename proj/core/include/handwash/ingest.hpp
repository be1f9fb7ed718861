#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "handwash/manifest.hpp"

namespace handwash {

// A decodable gesture clip: either a video container file or a directory of
// still images treated as an ordered frame sequence.
struct ClipRef {
    std::filesystem::path path;
    std::optional<int> label_id;  // hint taken from the parent directory name
    int frame_count = -1;         // >= 0 once probed

    std::string stem() const;
};

// Opens the clip and counts its frames. Throws DecodeError when the path is
// neither a decodable video nor a directory of images.
ClipRef probe_clip(const std::filesystem::path& path,
                   std::optional<int> label_id = std::nullopt);

// Sequential frame access over both clip flavors.
class FrameReader {
public:
    explicit FrameReader(const std::filesystem::path& path);
    ~FrameReader();
    FrameReader(FrameReader&&) noexcept;
    FrameReader& operator=(FrameReader&&) noexcept;

    // Fills frame (BGR, 8-bit) and returns true, or returns false at the end.
    bool next(cv::Mat& frame);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// {clip_stem}_{frame_index:05d}{ext}; zero padding keeps lexicographic and
// numeric order identical.
std::string frame_file_name(const std::string& clip_stem, int frame_index,
                            const std::string& ext = ".jpg");

// Inverse of frame_file_name for a file stem; returns (source_video,
// frame_index), falling back to (stem, 0) for foreign names.
std::pair<std::string, int> parse_frame_file_stem(const std::string& stem);

// Decodes frames 0, stride, 2*stride, ... to JPEG stills under out_dir and
// returns one sample per written frame, carrying the clip stem and the
// original frame index. The clip must carry a label hint.
std::vector<FrameSample> extract_frames(const ClipRef& clip, int stride,
                                        const std::filesystem::path& out_dir);

// Scans corpus_root/<ClassName>/<stills> (one subdirectory per registry
// label) into a manifest, ordered lexicographically by path. Non-image files
// are skipped; a note per skip is appended to warnings when given.
DatasetManifest build_manifest(const std::filesystem::path& corpus_root,
                               const LabelRegistry& registry,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace handwash
