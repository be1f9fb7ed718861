#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "handwash/errors.hpp"
#include "handwash/fixtures.hpp"
#include "handwash/ingest.hpp"
#include "handwash/predictor.hpp"
#include "handwash/rng.hpp"
#include "test_util.hpp"

using namespace handwash;

namespace {

// Naive rolling mean, written independently of the implementation: the mean
// of the last min(t+1, window) raw rows, recomputed from scratch per frame.
Eigen::MatrixXd oracle_smooth(const Eigen::MatrixXd& raw, int window) {
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
        const Eigen::Index first = std::max<Eigen::Index>(0, t - window + 1);
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(raw.cols());
        for (Eigen::Index i = first; i <= t; ++i) sum += raw.row(i);
        out.row(t) = sum / static_cast<double>(t - first + 1);
    }
    return out;
}

Eigen::MatrixXd random_distributions(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        double total = 0.0;
        for (int c = 0; c < cols; ++c) {
            m(r, c) = rng.uniform() + 1e-9;
            total += m(r, c);
        }
        m.row(r) /= total;
    }
    return m;
}

TransferModel tiny_model() {
    HeadSpec head;
    head.hidden_sizes = {8};
    head.dropout_rate = 0.0;
    head.num_classes = 3;
    head.init_seed = 2;
    return TransferModel::assemble(BackboneSpec::stub(32), head,
                                   LabelRegistry::default_registry());
}

// One generated clip as a directory of stills, ready for FrameReader. The
// class directory of a one-clip stills corpus is itself such a sequence.
ClipRef fixture_clip(const TempDir& tmp, int frames = 12) {
    const auto registry = LabelRegistry::default_registry();
    CorpusOptions options;
    options.per_class = 1;
    options.frames_per_clip = frames;
    options.seed = 31;
    generate_corpus(tmp.path(), registry, options);
    return probe_clip(tmp / registry.at(1).name, 1);
}

}  // namespace

TEST_CASE("window 1 leaves the rows untouched") {
    Rng rng(5);
    const auto raw = random_distributions(40, 3, rng);
    const Eigen::MatrixXd smoothed = smooth_timeline(raw, 1);
    CHECK((smoothed.array() == raw.array()).all());
}

TEST_CASE("constant input is a fixed point of smoothing") {
    Eigen::MatrixXd raw(30, 3);
    for (int r = 0; r < 30; ++r) raw.row(r) << 0.2, 0.5, 0.3;
    const auto smoothed = smooth_timeline(raw, 7);
    for (int r = 0; r < 30; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(smoothed(r, c) == doctest::Approx(raw(r, c)).epsilon(1e-12));
}

TEST_CASE("alternating frames settle at the midpoint, ties break low") {
    Eigen::MatrixXd raw(10, 3);
    for (int r = 0; r < 10; ++r) {
        raw.row(r).setZero();
        raw(r, r % 2) = 1.0;
    }
    const auto smoothed = smooth_timeline(raw, 2);
    // Frame 0 has only itself to average; every later window holds one frame
    // of each class.
    CHECK(smoothed(0, 0) == 1.0);
    for (int r = 1; r < 10; ++r) {
        CHECK(smoothed(r, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(smoothed(r, 1) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(smoothed(r, 2) == 0.0);
        CHECK(argmax_index(smoothed.row(r)) == 0);
    }
}

TEST_CASE("warm-up frames use partial means") {
    Rng rng(77);
    const auto raw = random_distributions(60, 3, rng);
    const auto smoothed = smooth_timeline(raw, 25);
    const auto expected = oracle_smooth(raw, 25);
    for (int r = 0; r < 60; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(smoothed(r, c) == doctest::Approx(expected(r, c)).epsilon(1e-12));
}

TEST_CASE("smoothing preserves normalization and bounds") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 5 + static_cast<int>(rng.below(80));
        const int window = 1 + static_cast<int>(rng.below(30));
        const auto raw = random_distributions(rows, 3, rng);
        const auto smoothed = smooth_timeline(raw, window);
        for (int r = 0; r < rows; ++r) {
            CHECK(smoothed.row(r).sum() == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(smoothed.row(r).minCoeff() >= 0.0);
            CHECK(smoothed.row(r).maxCoeff() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("smoothed values stay inside the window's raw envelope") {
    Rng rng(99);
    const auto raw = random_distributions(50, 3, rng);
    const int window = 9;
    const auto smoothed = smooth_timeline(raw, window);
    for (int r = 0; r < 50; ++r) {
        const int first = std::max(0, r - window + 1);
        for (int c = 0; c < 3; ++c) {
            double lo = 1.0, hi = 0.0;
            for (int i = first; i <= r; ++i) {
                lo = std::min(lo, raw(i, c));
                hi = std::max(hi, raw(i, c));
            }
            CHECK(smoothed(r, c) >= lo - 1e-12);
            CHECK(smoothed(r, c) <= hi + 1e-12);
        }
    }
}

TEST_CASE("smoothing rejects an empty window") {
    CHECK_THROWS_AS((void)smooth_timeline(Eigen::MatrixXd::Zero(4, 3), 0), ConfigError);
    CHECK(smooth_timeline(Eigen::MatrixXd(0, 3), 5).rows() == 0);
}

TEST_CASE("predict_clip produces one smoothed record per frame") {
    const TempDir tmp("predict_clip");
    const auto clip = fixture_clip(tmp, 12);
    const auto model = tiny_model();

    const auto timeline = predict_clip(model, clip, 5);
    REQUIRE(timeline.size() == 12);
    for (std::size_t t = 0; t < timeline.size(); ++t) {
        const auto& rec = timeline[t];
        CHECK(rec.frame_index == static_cast<int>(t));
        CHECK(rec.raw_probs.size() == 3);
        CHECK(rec.smoothed_probs.size() == 3);
        CHECK(rec.raw_probs.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rec.smoothed_probs.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rec.label_id == argmax_index(rec.smoothed_probs.transpose()));
    }

    // Same clip, same model: bit-identical pass.
    const auto again = predict_clip(model, clip, 5);
    REQUIRE(again.size() == timeline.size());
    for (std::size_t t = 0; t < timeline.size(); ++t) {
        CHECK((again[t].raw_probs.array() == timeline[t].raw_probs.array()).all());
        CHECK((again[t].smoothed_probs.array() == timeline[t].smoothed_probs.array()).all());
        CHECK(again[t].label_id == timeline[t].label_id);
    }
}

TEST_CASE("predict_clip validates its inputs") {
    const TempDir tmp("predict_bad");
    const auto clip = fixture_clip(tmp, 4);
    const auto model = tiny_model();
    CHECK_THROWS_AS((void)predict_clip(model, clip, 0), ConfigError);

    const TempDir empty("predict_empty");
    std::filesystem::create_directories(empty / "hollow");
    ClipRef hollow;
    hollow.path = empty / "hollow";
    CHECK_THROWS_AS((void)predict_clip(model, hollow, 5), EmptyClipError);
}

TEST_CASE("annotate_frames writes the requested overlays") {
    const TempDir tmp("annotate");
    const TempDir out("annotate_out");
    const auto clip = fixture_clip(tmp, 10);
    const auto model = tiny_model();
    const auto registry = LabelRegistry::default_registry();
    const auto timeline = predict_clip(model, clip, 5);

    annotate_frames(clip, timeline, {0, 4, 9}, registry, out.path());
    for (int f : {0, 4, 9}) {
        const auto file = out / frame_file_name(clip.stem(), f, "_pred.png");
        CAPTURE(file.string());
        CHECK(std::filesystem::exists(file));
        CHECK(std::filesystem::file_size(file) > 0);
    }
    CHECK(!std::filesystem::exists(out / frame_file_name(clip.stem(), 1, "_pred.png")));

    // An empty selection writes nothing at all.
    const TempDir none("annotate_none");
    annotate_frames(clip, timeline, {}, registry, none.path());
    CHECK(std::filesystem::is_empty(none.path()));

    CHECK_THROWS_AS(annotate_frames(clip, timeline, {99}, registry, out.path()), RangeError);
    try {
        annotate_frames(clip, timeline, {-1}, registry, out.path());
        FAIL("expected RangeError");
    } catch (const RangeError& e) {
        CHECK(e.index() == -1);
    }
}

TEST_CASE("timeline io round-trips") {
    const TempDir tmp("timeline_io");
    const auto clip = fixture_clip(tmp, 8);
    const auto model = tiny_model();
    const auto timeline = predict_clip(model, clip, 3);

    const auto file = tmp / "timeline.json";
    save_timeline(timeline, model.labels(), file);
    const auto loaded = load_timeline(file);
    REQUIRE(loaded.size() == timeline.size());
    for (std::size_t t = 0; t < timeline.size(); ++t) {
        CHECK(loaded[t].frame_index == timeline[t].frame_index);
        CHECK(loaded[t].label_id == timeline[t].label_id);
        CHECK((loaded[t].raw_probs.array() == timeline[t].raw_probs.array()).all());
        CHECK((loaded[t].smoothed_probs.array() == timeline[t].smoothed_probs.array()).all());
    }
}
