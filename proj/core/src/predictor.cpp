#include "handwash/predictor.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "handwash/errors.hpp"
#include "handwash/head.hpp"
#include "handwash/preprocess.hpp"

namespace handwash {

using nlohmann::json;

Eigen::MatrixXd smooth_timeline(const Eigen::MatrixXd& raw, int window) {
    if (window < 1) throw ConfigError("smoothing window must be at least 1");
    // A width-1 mean is the row itself; bypass the running sum so the
    // identity holds bit-for-bit.
    if (window == 1) return raw;

    Eigen::MatrixXd smoothed(raw.rows(), raw.cols());
    Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(raw.cols());
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
        running += raw.row(t);
        if (t >= window) running -= raw.row(t - window);
        smoothed.row(t) = running / static_cast<double>(std::min<Eigen::Index>(t + 1, window));
    }
    return smoothed;
}

PredictionTimeline predict_clip(const TransferModel& model, const ClipRef& clip, int window) {
    if (window < 1) throw ConfigError("smoothing window must be at least 1");

    const PreprocessSpec& input = model.backbone().spec().input;
    std::vector<cv::Mat> frames;
    FrameReader reader(clip.path);
    cv::Mat frame;
    while (reader.next(frame)) frames.push_back(preprocess_frame(frame, input));
    if (frames.empty()) throw EmptyClipError("clip has no frames: " + clip.path.string());

    const Eigen::MatrixXd raw = model.forward(frames);
    const Eigen::MatrixXd smoothed = smooth_timeline(raw, window);

    PredictionTimeline timeline;
    timeline.reserve(frames.size());
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
        FramePrediction p;
        p.frame_index = static_cast<int>(t);
        p.raw_probs = raw.row(t).transpose();
        p.smoothed_probs = smoothed.row(t).transpose();
        p.label_id = argmax_index(smoothed.row(t));
        timeline.push_back(std::move(p));
    }
    return timeline;
}

void annotate_frames(const ClipRef& clip, const PredictionTimeline& timeline,
                     const std::vector<int>& selected_frames, const LabelRegistry& registry,
                     const std::filesystem::path& out_dir) {
    if (selected_frames.empty()) return;

    std::set<int> wanted;
    for (int f : selected_frames) {
        if (f < 0 || f >= static_cast<int>(timeline.size()))
            throw RangeError("frame index outside clip", f);
        wanted.insert(f);
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string());

    FrameReader reader(clip.path);
    cv::Mat frame;
    int index = 0;
    std::size_t written = 0;
    while (reader.next(frame) && written < wanted.size()) {
        if (wanted.count(index) != 0) {
            const FramePrediction& p = timeline[static_cast<std::size_t>(index)];
            const double confidence = p.smoothed_probs(p.label_id);
            char text[96];
            std::snprintf(text, sizeof(text), "%s  %.2f", registry.at(p.label_id).name.c_str(),
                          confidence);

            // Banner sized to the frame so labels stay legible on small clips.
            cv::Mat annotated = frame.clone();
            const double scale = std::max(0.4, annotated.cols / 640.0);
            const int banner = static_cast<int>(28 * scale);
            cv::rectangle(annotated, {0, 0}, {annotated.cols, banner}, {32, 32, 32}, cv::FILLED);
            cv::putText(annotated, text, {8, banner - static_cast<int>(8 * scale)},
                        cv::FONT_HERSHEY_SIMPLEX, 0.6 * scale, {80, 220, 80}, 1, cv::LINE_AA);

            const auto out_path = out_dir / frame_file_name(clip.stem(), index, "_pred.png");
            if (!cv::imwrite(out_path.string(), annotated))
                throw IoError("cannot write " + out_path.string());
            ++written;
        }
        ++index;
    }
    if (written < wanted.size())
        throw RangeError("frame index outside clip", *wanted.rbegin());
}

void save_timeline(const PredictionTimeline& timeline, const LabelRegistry& registry,
                   const std::filesystem::path& path) {
    json doc = json::array();
    for (const FramePrediction& p : timeline) {
        json record{{"frame", p.frame_index},
                    {"label_id", p.label_id},
                    {"label", registry.at(p.label_id).name}};
        record["raw_probs"] =
            std::vector<double>(p.raw_probs.data(), p.raw_probs.data() + p.raw_probs.size());
        record["smoothed_probs"] = std::vector<double>(
            p.smoothed_probs.data(), p.smoothed_probs.data() + p.smoothed_probs.size());
        doc.push_back(std::move(record));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

PredictionTimeline load_timeline(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json doc;
    try {
        in >> doc;
        if (!doc.is_array()) throw ParseError("timeline must be a JSON array");
        PredictionTimeline timeline;
        for (const auto& j : doc) {
            FramePrediction p;
            p.frame_index = j.at("frame").get<int>();
            p.label_id = j.at("label_id").get<int>();
            const auto raw = j.at("raw_probs").get<std::vector<double>>();
            const auto smoothed = j.at("smoothed_probs").get<std::vector<double>>();
            p.raw_probs = Eigen::Map<const Eigen::VectorXd>(raw.data(),
                                                            static_cast<Eigen::Index>(raw.size()));
            p.smoothed_probs = Eigen::Map<const Eigen::VectorXd>(
                smoothed.data(), static_cast<Eigen::Index>(smoothed.size()));
            timeline.push_back(std::move(p));
        }
        return timeline;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed timeline: ") + e.what());
    }
}

}  // namespace handwash
