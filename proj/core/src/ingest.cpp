#include "handwash/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "handwash/errors.hpp"

namespace handwash {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp";
}

std::vector<fs::path> sorted_image_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && has_image_extension(entry.path()))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
    return files;
}

}  // namespace

std::string ClipRef::stem() const {
    return fs::is_directory(path) ? path.filename().string() : path.stem().string();
}

struct FrameReader::Impl {
    cv::VideoCapture capture;
    std::vector<fs::path> files;
    std::size_t next_file = 0;
    bool is_sequence = false;
};

FrameReader::FrameReader(const fs::path& path) : impl_(std::make_unique<Impl>()) {
    if (fs::is_directory(path)) {
        impl_->is_sequence = true;
        impl_->files = sorted_image_files(path);
    } else {
        if (!fs::exists(path)) throw DecodeError("clip does not exist: " + path.string());
        if (!impl_->capture.open(path.string()))
            throw DecodeError("cannot decode clip: " + path.string());
    }
}

FrameReader::~FrameReader() = default;
FrameReader::FrameReader(FrameReader&&) noexcept = default;
FrameReader& FrameReader::operator=(FrameReader&&) noexcept = default;

bool FrameReader::next(cv::Mat& frame) {
    if (impl_->is_sequence) {
        if (impl_->next_file >= impl_->files.size()) return false;
        const auto& file = impl_->files[impl_->next_file++];
        frame = cv::imread(file.string(), cv::IMREAD_COLOR);
        if (frame.empty()) throw DecodeError("cannot decode image: " + file.string());
        return true;
    }
    return impl_->capture.read(frame);
}

ClipRef probe_clip(const fs::path& path, std::optional<int> label_id) {
    ClipRef clip;
    clip.path = path;
    clip.label_id = label_id;

    if (fs::is_directory(path)) {
        clip.frame_count = static_cast<int>(sorted_image_files(path).size());
        return clip;
    }
    if (!fs::exists(path)) throw DecodeError("clip does not exist: " + path.string());

    cv::VideoCapture capture(path.string());
    if (!capture.isOpened()) throw DecodeError("cannot decode clip: " + path.string());
    int count = static_cast<int>(capture.get(cv::CAP_PROP_FRAME_COUNT));
    if (count <= 0) {
        // Container without a reliable frame count: count by decoding.
        count = 0;
        cv::Mat frame;
        while (capture.read(frame)) ++count;
    }
    clip.frame_count = count;
    return clip;
}

std::string frame_file_name(const std::string& clip_stem, int frame_index,
                            const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_%05d", frame_index);
    return clip_stem + buf + ext;
}

std::pair<std::string, int> parse_frame_file_stem(const std::string& stem) {
    const auto underscore = stem.find_last_of('_');
    if (underscore != std::string::npos && stem.size() - underscore - 1 == 5) {
        const std::string digits = stem.substr(underscore + 1);
        if (std::all_of(digits.begin(), digits.end(),
                        [](unsigned char c) { return std::isdigit(c); }))
            return {stem.substr(0, underscore), std::stoi(digits)};
    }
    return {stem, 0};
}

std::vector<FrameSample> extract_frames(const ClipRef& clip, int stride,
                                        const fs::path& out_dir) {
    if (stride < 1) throw ConfigError("stride must be a positive integer");
    if (!clip.label_id)
        throw ConfigError("clip has no label hint: " + clip.path.string());

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir.string());

    const std::string stem = clip.stem();
    std::vector<FrameSample> samples;

    FrameReader reader(clip.path);
    cv::Mat frame;
    int index = 0;
    while (reader.next(frame)) {
        if (index % stride == 0) {
            const auto file = out_dir / frame_file_name(stem, index);
            if (!cv::imwrite(file.string(), frame, {cv::IMWRITE_JPEG_QUALITY, 95}))
                throw IoError("cannot write frame image: " + file.string());
            samples.push_back(FrameSample{file.string(), *clip.label_id, stem, index});
        }
        ++index;
    }

    if (index == 0) throw EmptyClipError("no decodable frames in " + clip.path.string());
    return samples;
}

DatasetManifest build_manifest(const fs::path& corpus_root, const LabelRegistry& registry,
                               std::vector<std::string>* warnings) {
    if (!fs::is_directory(corpus_root))
        throw CorpusLayoutError("corpus root is not a directory: " + corpus_root.string());

    std::vector<FrameSample> samples;
    for (const auto& label : registry.labels()) {
        const auto class_dir = corpus_root / label.name;
        if (!fs::is_directory(class_dir))
            throw CorpusLayoutError("missing class directory: " + label.name);

        std::size_t found = 0;
        std::vector<fs::path> entries;
        for (const auto& entry : fs::directory_iterator(class_dir))
            entries.push_back(entry.path());
        std::sort(entries.begin(), entries.end(),
                  [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });

        for (const auto& p : entries) {
            if (!fs::is_regular_file(p) || !has_image_extension(p)) {
                if (warnings)
                    warnings->push_back("skipped non-image entry: " + p.string());
                continue;
            }
            auto [video, frame] = parse_frame_file_stem(p.stem().string());
            samples.push_back(FrameSample{p.string(), label.id,
                                          label.name + "/" + video, frame});
            ++found;
        }
        if (found == 0)
            throw CorpusLayoutError("class directory holds no images: " + label.name);
    }

    std::sort(samples.begin(), samples.end(),
              [](const FrameSample& a, const FrameSample& b) {
                  return a.image_path < b.image_path;
              });
    return DatasetManifest(registry, std::move(samples));
}

}  // namespace handwash
