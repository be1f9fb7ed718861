// Micro-benchmarks for the pipeline's hot paths. All inputs are synthetic
// and in memory; disk and codec costs are excluded on purpose.

#include <benchmark/benchmark.h>

#include <opencv2/core.hpp>

#include "handwash/backbone.hpp"
#include "handwash/head.hpp"
#include "handwash/manifest.hpp"
#include "handwash/metrics.hpp"
#include "handwash/predictor.hpp"
#include "handwash/preprocess.hpp"
#include "handwash/rng.hpp"
#include "handwash/split.hpp"

using namespace handwash;

namespace {

cv::Mat camera_frame() {
    cv::Mat img(240, 320, CV_8UC3);
    Rng rng(41);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x)
            for (int c = 0; c < 3; ++c)
                img.at<cv::Vec3b>(y, x)[c] = static_cast<unsigned char>(rng.below(256));
    return img;
}

Eigen::MatrixXd random_probabilities(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
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

DatasetManifest synthetic_manifest(int per_class) {
    const auto registry = LabelRegistry::default_registry();
    std::vector<FrameSample> samples;
    for (int c = 0; c < registry.size(); ++c)
        for (int i = 0; i < per_class; ++i)
            samples.push_back(FrameSample{"frame.jpg", c, "clip" + std::to_string(c), i});
    return DatasetManifest(registry, std::move(samples));
}

void BM_PreprocessFrame(benchmark::State& state) {
    const cv::Mat img = camera_frame();
    const PreprocessSpec spec;  // 224x224, mean subtraction, BGR
    for (auto _ : state) {
        benchmark::DoNotOptimize(preprocess_frame(img, spec));
    }
}
BENCHMARK(BM_PreprocessFrame);

void BM_StubExtract(benchmark::State& state) {
    const auto backbone = make_backbone(BackboneSpec::stub(256));
    cv::Mat frame(64, 64, CV_32FC3, cv::Scalar(0.1f, 0.5f, 0.9f));
    for (auto _ : state) {
        benchmark::DoNotOptimize(backbone->extract(frame));
    }
}
BENCHMARK(BM_StubExtract);

void BM_HeadForward(benchmark::State& state) {
    HeadSpec spec;  // 512 hidden units, 3 classes
    ClassifierHead head(spec, 256);
    Rng rng(9);
    Eigen::MatrixXd batch(state.range(0), 256);
    for (Eigen::Index r = 0; r < batch.rows(); ++r)
        for (Eigen::Index c = 0; c < batch.cols(); ++c) batch(r, c) = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(head.forward(batch));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeadForward)->Arg(1)->Arg(32)->Arg(256);

void BM_HeadTrainStep(benchmark::State& state) {
    HeadSpec spec;
    ClassifierHead head(spec, 256);
    Rng init(12);
    Eigen::MatrixXd batch(32, 256);
    for (Eigen::Index r = 0; r < batch.rows(); ++r)
        for (Eigen::Index c = 0; c < batch.cols(); ++c) batch(r, c) = init.normal();
    std::vector<int> labels;
    for (int i = 0; i < 32; ++i) labels.push_back(i % 3);

    Rng dropout(7);
    for (auto _ : state) {
        HeadGradients grads;
        benchmark::DoNotOptimize(
            head.loss_and_gradients(batch, labels, &dropout, &grads, nullptr));
        head.apply_sgd(grads, 1e-3);
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_HeadTrainStep);

void BM_ClassificationReport(benchmark::State& state) {
    const ConfusionMatrix cm(LabelRegistry::default_registry(),
                             {{14, 0, 0}, {0, 14, 0}, {12, 1, 0}});
    for (auto _ : state) {
        benchmark::DoNotOptimize(report(cm));
    }
}
BENCHMARK(BM_ClassificationReport);

void BM_SmoothTimeline(benchmark::State& state) {
    const Eigen::MatrixXd raw = random_probabilities(static_cast<int>(state.range(0)), 3, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(smooth_timeline(raw, 25));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmoothTimeline)->Arg(100)->Arg(1000)->Arg(10000);

void BM_MakeSplit(benchmark::State& state) {
    const auto manifest = synthetic_manifest(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(make_split(manifest, 0.25, 7));
    }
    state.SetItemsProcessed(state.iterations() * manifest.size());
}
BENCHMARK(BM_MakeSplit)->Arg(54)->Arg(600);

}  // namespace

BENCHMARK_MAIN();
