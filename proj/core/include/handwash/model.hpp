#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <opencv2/core.hpp>

#include "handwash/backbone.hpp"
#include "handwash/head.hpp"
#include "handwash/labels.hpp"

namespace handwash {

/// Frozen pretrained feature extractor plus a trainable classifier head.
/// The backbone's weights are never updated; only the head participates in
/// optimization. Evaluation-mode inference is a pure function of the input,
/// so a model may be shared across threads as long as nobody trains it.
class TransferModel {
public:
    /// Builds the backbone, freezes it, and attaches a freshly initialized
    /// head. The head width must match the registry.
    static TransferModel assemble(const BackboneSpec& backbone,
                                  const HeadSpec& head,
                                  const LabelRegistry& labels);

    /// Marks all backbone parameters non-trainable. Idempotent; assemble
    /// already applies it, mirroring the freeze-then-extend workflow.
    void freeze_backbone() { backbone_frozen_ = true; }
    bool backbone_frozen() const { return backbone_frozen_; }

    const Backbone& backbone() const { return *backbone_; }
    const ClassifierHead& head() const { return head_; }
    ClassifierHead& head() { return head_; }
    const LabelRegistry& labels() const { return labels_; }

    /// Head-only once the backbone is frozen.
    std::int64_t trainable_parameter_count() const;

    /// Digest of the backbone weights; byte-identical across a training run.
    std::uint64_t backbone_checksum() const { return backbone_->checksum(); }

    /// Backbone features for a batch of preprocessed frames, B x feature_dim.
    Eigen::MatrixXd extract_features(const std::vector<cv::Mat>& preprocessed) const;

    /// Full evaluation-mode pass: B preprocessed frames in, B x num_classes
    /// probability rows out. An empty batch yields an empty matrix.
    Eigen::MatrixXd forward(const std::vector<cv::Mat>& preprocessed) const;

    /// Checkpoint layout: {dir}/spec.json (backbone + head specs, labels,
    /// backbone checksum) and {dir}/head_params.bin. Enough to reload for
    /// prediction without the training corpus.
    void save_checkpoint(const std::filesystem::path& dir) const;
    static TransferModel load_checkpoint(const std::filesystem::path& dir);

private:
    TransferModel(std::unique_ptr<Backbone> backbone, ClassifierHead head, LabelRegistry labels);

    std::shared_ptr<const Backbone> backbone_;
    ClassifierHead head_;
    LabelRegistry labels_;
    bool backbone_frozen_ = false;
};

}  // namespace handwash
