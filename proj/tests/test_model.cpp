#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>

#include "handwash/errors.hpp"
#include "handwash/fixtures.hpp"
#include "handwash/model.hpp"
#include "handwash/preprocess.hpp"
#include "handwash/rng.hpp"
#include "test_util.hpp"

using namespace handwash;

namespace {

cv::Mat zero_image(int size = 64) { return cv::Mat(size, size, CV_8UC3, cv::Scalar(0, 0, 0)); }

cv::Mat fixture_image(int class_id, std::uint64_t seed) {
    FixtureSpec spec;
    spec.class_id = class_id;
    spec.num_frames = 1;
    spec.seed = seed;
    return generate_clip(spec)[0];
}

TransferModel small_model(std::uint64_t init_seed = 5) {
    HeadSpec head;
    head.hidden_sizes = {32};
    head.dropout_rate = 0.5;
    head.num_classes = 3;
    head.init_seed = init_seed;
    return TransferModel::assemble(BackboneSpec::stub(64), head,
                                   LabelRegistry::default_registry());
}

std::string head_bytes(const ClassifierHead& head) {
    std::ostringstream out;
    head.save_params(out);
    return out.str();
}

}  // namespace

TEST_CASE("stub backbone is deterministic and self-consistent") {
    const auto backbone = make_backbone(BackboneSpec::stub(96));
    CHECK(backbone->spec().feature_dim == 96);

    const cv::Mat img = preprocess_frame(fixture_image(0, 8), backbone->spec().input);
    const Eigen::VectorXd a = backbone->extract(img);
    const Eigen::VectorXd b = backbone->extract(img);
    REQUIRE(a.size() == 96);
    CHECK((a.array() == b.array()).all());
    // tanh keeps features bounded.
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);

    // A second instance shares the fixed projection.
    const auto again = make_backbone(BackboneSpec::stub(96));
    CHECK((again->extract(img).array() == a.array()).all());
    CHECK(again->checksum() == backbone->checksum());
}

TEST_CASE("stub features of the all-zero image are exactly zero") {
    // Zero raster, zero channel means: block averages vanish and the fixed
    // projection maps them to tanh(0) = 0. This pins the derived fixture.
    const auto backbone = make_backbone(BackboneSpec::stub(256));
    const cv::Mat img = preprocess_frame(zero_image(), backbone->spec().input);
    const Eigen::VectorXd f = backbone->extract(img);
    CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stub rejects wrongly shaped input") {
    const auto backbone = make_backbone(BackboneSpec::stub(64));
    cv::Mat small(32, 32, CV_32FC3, cv::Scalar(0, 0, 0));
    CHECK_THROWS_AS((void)backbone->extract(small), ShapeError);
    cv::Mat bytes(64, 64, CV_8UC3, cv::Scalar(0, 0, 0));
    CHECK_THROWS_AS((void)backbone->extract(bytes), ShapeError);
}

TEST_CASE("backbone spec invariants are enforced") {
    CHECK_THROWS_AS((void)make_backbone(BackboneSpec::stub(0)), ConfigError);

    BackboneSpec wrong_dim = BackboneSpec::resnet50();
    wrong_dim.feature_dim = 512;
    CHECK_THROWS_AS((void)make_backbone(wrong_dim), ConfigError);

    BackboneSpec wrong_input = BackboneSpec::resnet50();
    wrong_input.input.target_height = 64;
    CHECK_THROWS_AS((void)make_backbone(wrong_input), ConfigError);

    CHECK(BackboneSpec::resnet50().feature_dim == 2048);
    CHECK(BackboneSpec::resnet50().input.target_height == 224);
    CHECK(BackboneSpec::resnet50().input.target_width == 224);
}

TEST_CASE("missing pretrained weights fail loudly, never silently") {
    const TempDir tmp("weights_cache");
    const char* old_cache = std::getenv("HANDWASH_CACHE");
    setenv("HANDWASH_CACHE", tmp.path().c_str(), 1);

    CHECK_THROWS_AS((void)make_backbone(BackboneSpec::resnet50()), WeightsUnavailableError);

    if (old_cache)
        setenv("HANDWASH_CACHE", old_cache, 1);
    else
        unsetenv("HANDWASH_CACHE");
}

TEST_CASE("head parameter count: 64 -> [32] -> 3 gives 2179") {
    HeadSpec spec;
    spec.hidden_sizes = {32};
    spec.num_classes = 3;
    const ClassifierHead head(spec, 64);
    CHECK(head.parameter_count() == 64 * 32 + 32 + 32 * 3 + 3);
    CHECK(head.parameter_count() == 2179);
}

TEST_CASE("assembled model counts only head parameters as trainable") {
    const auto model = small_model();
    CHECK(model.backbone_frozen());
    CHECK(model.trainable_parameter_count() == 2179);
}

TEST_CASE("freezing twice changes nothing") {
    auto model = small_model();
    const auto count = model.trainable_parameter_count();
    const auto checksum = model.backbone_checksum();
    model.freeze_backbone();
    model.freeze_backbone();
    CHECK(model.trainable_parameter_count() == count);
    CHECK(model.backbone_checksum() == checksum);
}

TEST_CASE("identical specs and init_seed reproduce identical head parameters") {
    const auto a = small_model(31);
    const auto b = small_model(31);
    const auto c = small_model(32);
    CHECK(head_bytes(a.head()) == head_bytes(b.head()));
    CHECK(head_bytes(a.head()) != head_bytes(c.head()));
}

TEST_CASE("forward emits probability rows") {
    const auto model = small_model();
    const auto& input = model.backbone().spec().input;
    std::vector<cv::Mat> batch;
    for (int i = 0; i < 5; ++i)
        batch.push_back(preprocess_frame(fixture_image(i % 3, 50 + i), input));

    const Eigen::MatrixXd probs = model.forward(batch);
    REQUIRE(probs.rows() == 5);
    REQUIRE(probs.cols() == 3);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(probs.row(r).minCoeff() >= 0.0);
    }
}

TEST_CASE("empty batch forwards to an empty matrix") {
    const auto model = small_model();
    const Eigen::MatrixXd probs = model.forward({});
    CHECK(probs.rows() == 0);
    CHECK(probs.cols() == 3);
}

TEST_CASE("duplicated input rows produce duplicated output rows") {
    const auto model = small_model();
    const auto& input = model.backbone().spec().input;
    const cv::Mat img = preprocess_frame(fixture_image(2, 17), input);
    const Eigen::MatrixXd probs = model.forward({img, img});
    CHECK((probs.row(0).array() == probs.row(1).array()).all());
}

TEST_CASE("evaluation-mode forward is bit-stable") {
    const auto model = small_model();
    const auto& input = model.backbone().spec().input;
    const cv::Mat img = preprocess_frame(fixture_image(1, 4), input);
    const Eigen::MatrixXd once = model.forward({img});
    const Eigen::MatrixXd twice = model.forward({img});
    CHECK((once.array() == twice.array()).all());
}

TEST_CASE("assemble validates class counts against the registry") {
    HeadSpec head;
    head.num_classes = 1;
    CHECK_THROWS_AS(
        (void)TransferModel::assemble(BackboneSpec::stub(16), head, LabelRegistry({"only"})),
        ConfigError);

    head.num_classes = 4;
    CHECK_THROWS_AS((void)TransferModel::assemble(BackboneSpec::stub(16), head,
                                                  LabelRegistry::default_registry()),
                    ConfigError);
}

TEST_CASE("head spec validation") {
    HeadSpec bad;
    bad.dropout_rate = 1.0;
    CHECK_THROWS_AS(ClassifierHead(bad, 8), ConfigError);
    bad = HeadSpec{};
    bad.hidden_sizes = {0};
    CHECK_THROWS_AS(ClassifierHead(bad, 8), ConfigError);
    CHECK_THROWS_AS(ClassifierHead(HeadSpec{}, 0), ConfigError);
}

TEST_CASE("checkpoints round-trip the whole model") {
    const TempDir tmp("checkpoint");
    const auto model = small_model(77);
    model.save_checkpoint(tmp / "model");

    const auto loaded = TransferModel::load_checkpoint(tmp / "model");
    CHECK(loaded.labels() == model.labels());
    CHECK(loaded.backbone_checksum() == model.backbone_checksum());
    CHECK(head_bytes(loaded.head()) == head_bytes(model.head()));

    const auto& input = model.backbone().spec().input;
    const cv::Mat img = preprocess_frame(fixture_image(0, 3), input);
    CHECK((loaded.forward({img}).array() == model.forward({img}).array()).all());
}

TEST_CASE("checkpoints refuse swapped backbone weights") {
    const TempDir tmp("checkpoint_tamper");
    small_model().save_checkpoint(tmp / "model");

    // Rewrite the stored checksum; the loader must notice.
    const auto spec_path = tmp / "model" / "spec.json";
    std::ifstream in(spec_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("\"backbone_checksum\": \"0x");
    REQUIRE(pos != std::string::npos);
    text[pos + 24] = text[pos + 24] == 'f' ? '0' : 'f';
    std::ofstream(spec_path) << text;

    CHECK_THROWS_AS((void)TransferModel::load_checkpoint(tmp / "model"), ConfigError);
}

TEST_CASE("corrupt parameter blobs are rejected") {
    const TempDir tmp("checkpoint_blob");
    small_model().save_checkpoint(tmp / "model");
    std::ofstream(tmp / "model" / "head_params.bin", std::ios::binary) << "garbage";
    CHECK_THROWS_AS((void)TransferModel::load_checkpoint(tmp / "model"), ParseError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    Eigen::RowVectorXd row(4);
    row << 0.25, 0.25, 0.25, 0.25;
    CHECK(argmax_index(row) == 0);
    row << 0.1, 0.4, 0.4, 0.1;
    CHECK(argmax_index(row) == 1);
    row << 0.0, 0.2, 0.1, 0.7;
    CHECK(argmax_index(row) == 3);
}

TEST_CASE("analytic head gradients match central finite differences") {
    HeadSpec spec;
    spec.hidden_sizes = {16};
    spec.dropout_rate = 0.0;  // gradients must be deterministic to compare
    spec.num_classes = 3;
    spec.init_seed = 11;
    ClassifierHead head(spec, 24);

    Rng rng(2210);
    Eigen::MatrixXd features(8, 24);
    for (Eigen::Index r = 0; r < features.rows(); ++r)
        for (Eigen::Index c = 0; c < features.cols(); ++c) features(r, c) = rng.normal();
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng.below(3)));

    HeadGradients grads;
    head.loss_and_gradients(features, labels, nullptr, &grads, nullptr);

    for (int probe = 0; probe < 10; ++probe) {
        const int layer = static_cast<int>(rng.below(2));
        auto& w = head.weight(layer);
        const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.rows())));
        const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.cols())));

        const double h = 1e-5;
        const double saved = w(r, c);
        w(r, c) = saved + h;
        const double up = head.loss_and_gradients(features, labels, nullptr, nullptr, nullptr);
        w(r, c) = saved - h;
        const double down = head.loss_and_gradients(features, labels, nullptr, nullptr, nullptr);
        w(r, c) = saved;

        const double numeric = (up - down) / (2.0 * h);
        const double analytic = grads.weights[static_cast<std::size_t>(layer)](r, c);
        const double scale = std::max({1e-8, std::abs(numeric), std::abs(analytic)});
        CHECK(std::abs(numeric - analytic) / scale < 1e-3);
    }
}

TEST_CASE("dropout at rate zero equals evaluation mode") {
    HeadSpec spec;
    spec.hidden_sizes = {8};
    spec.dropout_rate = 0.0;
    spec.num_classes = 3;
    ClassifierHead head(spec, 12);

    Eigen::MatrixXd features = Eigen::MatrixXd::Constant(4, 12, 0.3);
    std::vector<int> labels{0, 1, 2, 1};
    Rng rng(5);
    const double with_rng = head.loss_and_gradients(features, labels, &rng, nullptr, nullptr);
    const double without = head.loss_and_gradients(features, labels, nullptr, nullptr, nullptr);
    CHECK(with_rng == without);
}
