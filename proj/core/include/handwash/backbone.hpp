#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <opencv2/core.hpp>

#include "handwash/preprocess.hpp"

namespace handwash {

enum class BackboneKind { pretrained_resnet50, stub };

std::string to_string(BackboneKind k);
BackboneKind backbone_kind_from_string(const std::string& s);

struct BackboneSpec {
    BackboneKind kind = BackboneKind::stub;
    int feature_dim = 256;
    PreprocessSpec input;

    // Seeded random-projection extractor; deterministic and dependency-free.
    static BackboneSpec stub(int feature_dim = 256);
    // ImageNet-pretrained 50-layer residual network served from the local
    // weight cache; 2048 pooled features over 224x224 inputs.
    static BackboneSpec resnet50();

    bool operator==(const BackboneSpec&) const = default;
};

// Frozen feature extractor. Implementations never expose a training path;
// their parameters are immutable for the lifetime of the object.
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual const BackboneSpec& spec() const = 0;
    // preprocessed must match spec().input (CV_32FC3). Returns feature_dim values.
    virtual Eigen::VectorXd extract(const cv::Mat& preprocessed) const = 0;
    virtual std::int64_t parameter_count() const = 0;
    // Fingerprint of the frozen parameters; byte-stable across the run.
    virtual std::uint64_t checksum() const = 0;

    Eigen::MatrixXd extract_batch(const std::vector<cv::Mat>& preprocessed) const;
};

// Builds the extractor a BackboneSpec describes. pretrained_resnet50 loads
// resnet50_features.onnx from the weight cache and throws
// WeightsUnavailableError when it is absent; callers fall back to the stub
// explicitly, never silently.
std::unique_ptr<Backbone> make_backbone(const BackboneSpec& spec);

// $HANDWASH_CACHE when set, otherwise ~/.cache/handwash.
std::filesystem::path weights_cache_root();

inline constexpr const char* kResnetWeightsFile = "resnet50_features.onnx";

}  // namespace handwash
