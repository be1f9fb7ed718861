#include "handwash/backbone.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <opencv2/dnn.hpp>

#include "handwash/errors.hpp"
#include "handwash/hash.hpp"
#include "handwash/rng.hpp"

namespace handwash {

namespace {

// The stub projection is a fixture of the library, not a per-run choice:
// identical feature_dim always yields identical features.
constexpr std::uint64_t kStubProjectionSeed = 0x48573530u;  // "HW50"
constexpr int kStubPoolGrid = 16;

void require_input_shape(const cv::Mat& m, const PreprocessSpec& input) {
    if (m.type() != CV_32FC3)
        throw ShapeError("backbone expects CV_32FC3 preprocessed frames");
    if (m.rows != input.target_height || m.cols != input.target_width)
        throw ShapeError("backbone expects " + std::to_string(input.target_height) + "x" +
                         std::to_string(input.target_width) + " input, got " +
                         std::to_string(m.rows) + "x" + std::to_string(m.cols));
}

class StubBackbone final : public Backbone {
public:
    explicit StubBackbone(BackboneSpec spec) : spec_(std::move(spec)) {
        const int grid_h = std::min(kStubPoolGrid, spec_.input.target_height);
        const int grid_w = std::min(kStubPoolGrid, spec_.input.target_width);
        pooled_dim_ = grid_h * grid_w * 3;
        grid_h_ = grid_h;
        grid_w_ = grid_w;

        Rng rng(kStubProjectionSeed);
        const double bound = std::sqrt(6.0 / (pooled_dim_ + spec_.feature_dim));
        projection_.resize(spec_.feature_dim, pooled_dim_);
        for (int r = 0; r < projection_.rows(); ++r)
            for (int c = 0; c < projection_.cols(); ++c)
                projection_(r, c) = rng.uniform(-bound, bound);
    }

    const BackboneSpec& spec() const override { return spec_; }

    Eigen::VectorXd extract(const cv::Mat& preprocessed) const override {
        require_input_shape(preprocessed, spec_.input);

        // Block-average pool to a fixed grid, then a frozen projection.
        Eigen::VectorXd pooled(pooled_dim_);
        int out = 0;
        for (int gy = 0; gy < grid_h_; ++gy) {
            const int y0 = gy * preprocessed.rows / grid_h_;
            const int y1 = std::max(y0 + 1, (gy + 1) * preprocessed.rows / grid_h_);
            for (int gx = 0; gx < grid_w_; ++gx) {
                const int x0 = gx * preprocessed.cols / grid_w_;
                const int x1 = std::max(x0 + 1, (gx + 1) * preprocessed.cols / grid_w_);
                double sum[3] = {0.0, 0.0, 0.0};
                for (int y = y0; y < y1; ++y) {
                    const auto* row = preprocessed.ptr<cv::Vec3f>(y);
                    for (int x = x0; x < x1; ++x)
                        for (int ch = 0; ch < 3; ++ch) sum[ch] += row[x][ch];
                }
                const double area = static_cast<double>(y1 - y0) * (x1 - x0);
                for (int ch = 0; ch < 3; ++ch)
                    pooled(out++) = sum[ch] / (area * 255.0);
            }
        }

        return (projection_ * pooled).array().tanh();
    }

    std::int64_t parameter_count() const override { return projection_.size(); }

    std::uint64_t checksum() const override {
        return fnv1a64(projection_.data(),
                       static_cast<std::size_t>(projection_.size()) * sizeof(double));
    }

private:
    BackboneSpec spec_;
    Eigen::MatrixXd projection_;
    int pooled_dim_ = 0;
    int grid_h_ = 0;
    int grid_w_ = 0;
};

class ResnetBackbone final : public Backbone {
public:
    ResnetBackbone(BackboneSpec spec, const std::filesystem::path& weights)
        : spec_(std::move(spec)) {
        std::ifstream in(weights, std::ios::binary);
        if (!in) throw WeightsUnavailableError("cannot read weights: " + weights.string());
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        checksum_ = fnv1a64(bytes.data(), bytes.size());

        try {
            net_ = cv::dnn::readNetFromONNX(bytes.data(), bytes.size());
        } catch (const cv::Exception& e) {
            throw WeightsUnavailableError("cannot load " + weights.string() + ": " + e.what());
        }

        parameter_count_ = 0;
        for (const auto& name : net_.getLayerNames()) {
            const auto layer = net_.getLayer(name);
            for (const auto& blob : layer->blobs) parameter_count_ += blob.total();
        }
    }

    const BackboneSpec& spec() const override { return spec_; }

    Eigen::VectorXd extract(const cv::Mat& preprocessed) const override {
        require_input_shape(preprocessed, spec_.input);
        const cv::Mat blob = cv::dnn::blobFromImage(preprocessed);
        // cv::dnn::Net::setInput is non-const; inference does not mutate weights.
        auto& net = const_cast<cv::dnn::Net&>(net_);
        net.setInput(blob);
        const cv::Mat out = net.forward();
        if (static_cast<int>(out.total()) != spec_.feature_dim)
            throw ConfigError("backbone emits " + std::to_string(out.total()) +
                              " features, expected " + std::to_string(spec_.feature_dim));

        cv::Mat flat = out.reshape(1, 1);
        Eigen::VectorXd features(spec_.feature_dim);
        for (int i = 0; i < spec_.feature_dim; ++i)
            features(i) = static_cast<double>(flat.at<float>(0, i));
        return features;
    }

    std::int64_t parameter_count() const override { return parameter_count_; }
    std::uint64_t checksum() const override { return checksum_; }

private:
    BackboneSpec spec_;
    cv::dnn::Net net_;
    std::int64_t parameter_count_ = 0;
    std::uint64_t checksum_ = 0;
};

}  // namespace

std::string to_string(BackboneKind k) {
    return k == BackboneKind::pretrained_resnet50 ? "pretrained_resnet50" : "stub";
}

BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "pretrained_resnet50") return BackboneKind::pretrained_resnet50;
    if (s == "stub") return BackboneKind::stub;
    throw ParseError("unknown backbone kind: " + s);
}

BackboneSpec BackboneSpec::stub(int feature_dim) {
    BackboneSpec spec;
    spec.kind = BackboneKind::stub;
    spec.feature_dim = feature_dim;
    spec.input.target_height = 64;
    spec.input.target_width = 64;
    spec.input.channel_means = {0.0, 0.0, 0.0};
    spec.input.channel_order = ChannelOrder::bgr;
    return spec;
}

BackboneSpec BackboneSpec::resnet50() {
    BackboneSpec spec;
    spec.kind = BackboneKind::pretrained_resnet50;
    spec.feature_dim = 2048;
    spec.input = PreprocessSpec{};  // 224x224, BGR, ImageNet channel means
    return spec;
}

Eigen::MatrixXd Backbone::extract_batch(const std::vector<cv::Mat>& preprocessed) const {
    Eigen::MatrixXd features(static_cast<Eigen::Index>(preprocessed.size()),
                             spec().feature_dim);
    for (std::size_t i = 0; i < preprocessed.size(); ++i)
        features.row(static_cast<Eigen::Index>(i)) = extract(preprocessed[i]).transpose();
    return features;
}

std::filesystem::path weights_cache_root() {
    if (const char* env = std::getenv("HANDWASH_CACHE"); env && *env)
        return std::filesystem::path(env);
    if (const char* home = std::getenv("HOME"); home && *home)
        return std::filesystem::path(home) / ".cache" / "handwash";
    return std::filesystem::path(".") / ".handwash-cache";
}

std::unique_ptr<Backbone> make_backbone(const BackboneSpec& spec) {
    if (spec.feature_dim < 1) throw ConfigError("feature_dim must be positive");
    if (spec.input.target_height < 1 || spec.input.target_width < 1)
        throw ConfigError("backbone input dimensions must be positive");

    switch (spec.kind) {
        case BackboneKind::stub:
            return std::make_unique<StubBackbone>(spec);
        case BackboneKind::pretrained_resnet50: {
            if (spec.feature_dim != 2048)
                throw ConfigError("pretrained_resnet50 implies feature_dim 2048");
            if (spec.input.target_height != 224 || spec.input.target_width != 224)
                throw ConfigError("pretrained_resnet50 implies 224x224 input");
            const auto weights = weights_cache_root() / kResnetWeightsFile;
            if (!std::filesystem::exists(weights))
                throw WeightsUnavailableError(
                    "pretrained weights not found: " + weights.string() +
                    " (populate the cache with scripts/export_resnet50.py or pass --backbone stub)");
            return std::make_unique<ResnetBackbone>(spec, weights);
        }
    }
    throw ConfigError("unknown backbone kind");
}

}  // namespace handwash
