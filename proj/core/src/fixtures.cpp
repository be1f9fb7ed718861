#include "handwash/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "handwash/errors.hpp"
#include "handwash/ingest.hpp"
#include "handwash/rng.hpp"

namespace handwash {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

void add_blob(cv::Mat& img, double cx, double cy, double sigma, double amplitude) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < img.rows; ++y) {
        auto* row = img.ptr<float>(y);
        const double dy = y - cy;
        for (int x = 0; x < img.cols; ++x) {
            const double dx = x - cx;
            row[x] += static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) * inv));
        }
    }
}

cv::Mat render_frame(const FixtureSpec& spec, int t) {
    const int h = spec.height;
    const int w = spec.width;
    cv::Mat field(h, w, CV_32FC1, cv::Scalar(30.0f));

    Rng noise(mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
    for (int y = 0; y < h; ++y) {
        auto* row = field.ptr<float>(y);
        for (int x = 0; x < w; ++x) row[x] += static_cast<float>(noise.uniform(-10.0, 10.0));
    }

    // Per-clip geometry jitter, constant across frames of the clip.
    Rng layout(mix_seed(spec.seed, 0xC11Fu));
    const double n = std::max(1, spec.num_frames - 1);
    const double period = std::max(2.0, spec.num_frames / 2.0);

    switch (spec.class_id % 3) {
        case 0: {  // stripes, phase wobbles over time
            const double stripes = 8.0;
            const double phase0 = layout.uniform(0.0, kTwoPi);
            const double phase = phase0 + 1.5 * std::sin(kTwoPi * t / period);
            for (int y = 0; y < h; ++y) {
                auto* row = field.ptr<float>(y);
                for (int x = 0; x < w; ++x) {
                    const double s = std::sin(kTwoPi * stripes * x / w + phase);
                    row[x] += static_cast<float>(90.0 + 85.0 * s);
                }
            }
            break;
        }
        case 1: {  // one blob moving left to right
            const double margin = w / 8.0;
            const double cy = h / 2.0 + layout.uniform(-h / 8.0, h / 8.0);
            const double cx = margin + (w - 2.0 * margin) * t / n;
            add_blob(field, cx, cy, w / 9.0, 205.0);
            break;
        }
        default: {  // two blobs, separation oscillates
            // The pair must stay clearly bimodal at closest approach, or the
            // merged shape becomes indistinguishable from the moving blob of
            // class 1.
            const double cy = h / 2.0 + layout.uniform(-h / 10.0, h / 10.0);
            const double cx = w / 2.0;
            const double d_min = w / 5.0;
            const double d_max = w / 2.6;
            const double d = d_min + (d_max - d_min) * (0.5 + 0.5 * std::cos(kTwoPi * t / period));
            add_blob(field, cx - d / 2.0, cy, w / 14.0, 205.0);
            add_blob(field, cx + d / 2.0, cy, w / 14.0, 205.0);
            break;
        }
    }

    cv::Mat gray;
    field.convertTo(gray, CV_8UC1);
    cv::Mat out;
    cv::merge(std::vector<cv::Mat>{gray, gray, gray}, out);
    return out;
}

}  // namespace

std::vector<cv::Mat> generate_clip(const FixtureSpec& spec) {
    if (spec.height < 32 || spec.width < 32)
        throw ConfigError("fixture dimensions must be at least 32x32");
    if (spec.num_frames < 1) throw ConfigError("fixture clips need at least one frame");
    if (spec.class_id < 0) throw ConfigError("fixture class_id must be non-negative");

    std::vector<cv::Mat> frames;
    frames.reserve(static_cast<std::size_t>(spec.num_frames));
    for (int t = 0; t < spec.num_frames; ++t) frames.push_back(render_frame(spec, t));
    return frames;
}

void generate_corpus(const std::filesystem::path& corpus_root, const LabelRegistry& registry,
                     const CorpusOptions& options) {
    if (options.per_class < 1) throw ConfigError("per_class must be at least 1");

    std::error_code ec;
    std::filesystem::create_directories(corpus_root, ec);
    if (ec) throw IoError("cannot create corpus root: " + corpus_root.string());

    for (const auto& label : registry.labels()) {
        const auto class_dir = corpus_root / label.name;
        std::filesystem::create_directories(class_dir, ec);
        if (ec) throw IoError("cannot create class directory: " + class_dir.string());

        for (int k = 0; k < options.per_class; ++k) {
            FixtureSpec spec;
            spec.class_id = label.id;
            spec.num_frames = options.frames_per_clip;
            spec.height = options.height;
            spec.width = options.width;
            spec.seed = mix_seed(options.seed,
                                 static_cast<std::uint64_t>(label.id) * 10007u +
                                     static_cast<std::uint64_t>(k));
            const auto frames = generate_clip(spec);

            char stem[64];
            std::snprintf(stem, sizeof(stem), "%s_%03d", label.name.c_str(), k);

            if (options.encode_clips) {
                const auto clip_path = class_dir / (std::string(stem) + ".avi");
                cv::VideoWriter writer(clip_path.string(),
                                       cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 25.0,
                                       frames.front().size());
                if (!writer.isOpened())
                    throw IoError("cannot open clip for writing: " + clip_path.string());
                for (const auto& f : frames) writer.write(f);
            } else {
                for (int t = 0; t < static_cast<int>(frames.size()); ++t) {
                    const auto file = class_dir / frame_file_name(stem, t);
                    if (!cv::imwrite(file.string(), frames[static_cast<std::size_t>(t)],
                                     {cv::IMWRITE_JPEG_QUALITY, options.jpeg_quality}))
                        throw IoError("cannot write frame image: " + file.string());
                }
            }
        }
    }
}

}  // namespace handwash
