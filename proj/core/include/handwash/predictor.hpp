#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "handwash/ingest.hpp"
#include "handwash/labels.hpp"
#include "handwash/model.hpp"

namespace handwash {

struct FramePrediction {
    int frame_index = 0;
    Eigen::VectorXd raw_probs;
    Eigen::VectorXd smoothed_probs;
    int label_id = 0;  // argmax of smoothed_probs, ties to the lowest id
};

using PredictionTimeline = std::vector<FramePrediction>;

/// Rolling mean over probability rows: row t of the result averages the last
/// min(t+1, window) rows of raw. Early frames use partial means, so there is
/// no zero-padding bias and every frame gets a value.
Eigen::MatrixXd smooth_timeline(const Eigen::MatrixXd& raw, int window);

/// Runs the model over every frame of the clip and smooths the per-frame
/// distributions. window = 1 reproduces the raw per-frame argmax.
PredictionTimeline predict_clip(const TransferModel& model, const ClipRef& clip, int window);

/// Writes {clip_stem}_{frame:05d}_pred.png for each selected frame, with the
/// smoothed label and confidence overlaid. An empty selection writes nothing.
void annotate_frames(const ClipRef& clip, const PredictionTimeline& timeline,
                     const std::vector<int>& selected_frames, const LabelRegistry& registry,
                     const std::filesystem::path& out_dir);

/// timeline.json: per-frame records at full precision.
void save_timeline(const PredictionTimeline& timeline, const LabelRegistry& registry,
                   const std::filesystem::path& path);
PredictionTimeline load_timeline(const std::filesystem::path& path);

}  // namespace handwash
