// Command-line entry point: every pipeline stage behind one binary with
// auditable run directories. Exit codes are a stable contract: 0 success,
// 2 user or configuration error, 1 anything else.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "handwash/curves.hpp"
#include "handwash/errors.hpp"
#include "handwash/fixtures.hpp"
#include "handwash/ingest.hpp"
#include "handwash/labels.hpp"
#include "handwash/manifest.hpp"
#include "handwash/metrics.hpp"
#include "handwash/model.hpp"
#include "handwash/predictor.hpp"
#include "handwash/split.hpp"
#include "handwash/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kVideoExtensions{".avi", ".mp4", ".mov", ".mkv",
                                             ".mpg", ".mpeg", ".wmv"};
const std::set<std::string> kImageExtensions{".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff"};

std::string lower_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw handwash::IoError("cannot create directory: " + dir.string());
}

void write_json_file(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw handwash::IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

json preprocess_json(const handwash::PreprocessSpec& p) {
    return json{{"height", p.target_height},
                {"width", p.target_width},
                {"channel_means", p.channel_means},
                {"channel_order", handwash::to_string(p.channel_order)}};
}

struct FixturesArgs {
    std::string out;
    int per_class = 20;
    int frames = 30;
    int size = 64;
    std::uint64_t seed = 7;
    bool encode = false;
    int quality = 95;
};

void cmd_fixtures(const FixturesArgs& a) {
    const auto registry = handwash::LabelRegistry::default_registry();
    handwash::CorpusOptions options;
    options.per_class = a.per_class;
    options.frames_per_clip = a.frames;
    options.height = a.size;
    options.width = a.size;
    options.seed = a.seed;
    options.encode_clips = a.encode;
    options.jpeg_quality = a.quality;
    handwash::generate_corpus(a.out, registry, options);
    std::cout << "wrote " << registry.size() << " x " << a.per_class << " "
              << (a.encode ? "encoded clips" : "still-frame clips") << " under " << a.out << "\n";
}

struct ExtractArgs {
    std::string corpus;
    std::string out;
    int stride = 1;
};

void cmd_extract(const ExtractArgs& a) {
    const fs::path root(a.corpus);
    if (!fs::is_directory(root))
        throw handwash::CorpusLayoutError("corpus root is not a directory: " + root.string());

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
    std::sort(class_names.begin(), class_names.end());
    if (class_names.empty())
        throw handwash::CorpusLayoutError("corpus holds no class directories: " + root.string());
    const handwash::LabelRegistry registry(class_names);

    ensure_dir(a.out);
    std::vector<handwash::FrameSample> samples;
    int clips = 0;
    for (const auto& label : registry.labels()) {
        const fs::path class_dir = root / label.name;
        std::vector<fs::path> entries;
        for (const auto& entry : fs::directory_iterator(class_dir))
            entries.push_back(entry.path());
        std::sort(entries.begin(), entries.end());

        std::set<std::string> stems_seen;
        std::size_t found = 0;
        for (const auto& path : entries) {
            if (fs::is_directory(path) || kVideoExtensions.count(lower_ext(path)) != 0) {
                const auto clip = handwash::probe_clip(path, label.id);
                auto extracted =
                    handwash::extract_frames(clip, a.stride, fs::path(a.out) / label.name);
                // Class-qualify so equal clip stems in different classes
                // cannot collide in the manifest's (video, frame) identity.
                for (auto& s : extracted) s.source_video = label.name + "/" + s.source_video;
                samples.insert(samples.end(), extracted.begin(), extracted.end());
                stems_seen.insert(clip.stem());
                ++found;
            } else if (kImageExtensions.count(lower_ext(path)) != 0) {
                // Already a frame still: manifest it in place, honoring the
                // stride against its parsed frame index.
                const auto [video, frame] = handwash::parse_frame_file_stem(path.stem().string());
                if (frame % a.stride != 0) continue;
                samples.push_back(handwash::FrameSample{path.string(), label.id,
                                                        label.name + "/" + video, frame});
                stems_seen.insert(video);
                ++found;
            } else {
                std::cerr << "note: skipped entry: " << path.string() << "\n";
            }
        }
        if (found == 0)
            throw handwash::CorpusLayoutError("class directory holds no clips or images: " +
                                              class_dir.string());
        clips += static_cast<int>(stems_seen.size());
    }

    std::sort(samples.begin(), samples.end(),
              [](const auto& x, const auto& y) { return x.image_path < y.image_path; });
    const handwash::DatasetManifest manifest(registry, std::move(samples));
    const fs::path manifest_path = fs::path(a.out) / "manifest.jsonl";
    handwash::save_manifest(manifest, manifest_path);
    std::cout << "extracted " << manifest.size() << " frames from " << clips << " clips across "
              << registry.size() << " classes -> " << manifest_path.string() << "\n";
}

struct SplitArgs {
    std::string manifest;
    std::string out;
    double val_fraction = 0.25;
    std::uint64_t seed = 7;
};

void cmd_split(const SplitArgs& a) {
    const auto manifest = handwash::load_manifest(a.manifest);
    const auto assigned = handwash::make_split(manifest, a.val_fraction, a.seed);
    handwash::save_manifest(assigned, a.out);

    const auto train_n = assigned.indices_of(handwash::Split::train).size();
    const auto val_n = assigned.indices_of(handwash::Split::val).size();
    std::cout << "split " << assigned.size() << " samples: " << train_n << " train, " << val_n
              << " val -> " << a.out << "\n";
}

struct TrainArgs {
    std::string manifest;
    std::string out;
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 7;
    std::string backbone = "stub";
    int feature_dim = 256;
    std::vector<int> hidden{512};
    double dropout = 0.5;
    std::optional<std::uint64_t> init_seed;
};

void cmd_train(const TrainArgs& a) {
    const auto manifest = handwash::load_manifest(a.manifest);

    handwash::BackboneSpec backbone_spec;
    if (a.backbone == "stub") {
        backbone_spec = handwash::BackboneSpec::stub(a.feature_dim);
    } else {
        backbone_spec = handwash::BackboneSpec::resnet50();
        if (a.feature_dim != 256 && a.feature_dim != backbone_spec.feature_dim)
            throw handwash::ConfigError("pretrained_resnet50 implies feature_dim 2048");
    }

    handwash::HeadSpec head_spec;
    head_spec.hidden_sizes = a.hidden;
    head_spec.dropout_rate = a.dropout;
    head_spec.num_classes = manifest.registry().size();
    head_spec.init_seed = a.init_seed.value_or(a.seed);

    handwash::TrainConfig config;
    config.epochs = a.epochs;
    config.batch_size = a.batch_size;
    config.learning_rate = a.learning_rate;
    config.seed = a.seed;
    config.run_dir = fs::path(a.out);

    ensure_dir(a.out);
    write_json_file(
        json{{"command", "train"},
             {"manifest", a.manifest},
             {"run_dir", a.out},
             {"train",
              {{"epochs", config.epochs},
               {"batch_size", config.batch_size},
               {"learning_rate", config.learning_rate},
               {"seed", config.seed},
               {"loss", handwash::to_string(config.loss)}}},
             {"backbone",
              {{"kind", handwash::to_string(backbone_spec.kind)},
               {"feature_dim", backbone_spec.feature_dim},
               {"input", preprocess_json(backbone_spec.input)}}},
             {"head",
              {{"hidden_sizes", head_spec.hidden_sizes},
               {"dropout_rate", head_spec.dropout_rate},
               {"num_classes", head_spec.num_classes},
               {"init_seed", head_spec.init_seed}}},
             {"labels", manifest.registry().names()}},
        fs::path(a.out) / "config.json");

    auto model = handwash::TransferModel::assemble(backbone_spec, head_spec, manifest.registry());
    const auto history = handwash::train(model, manifest, config);
    handwash::save_history(history, fs::path(a.out) / "history.json");
    handwash::emit_curves(history, fs::path(a.out) / "curves.png");

    const auto& last = history.back();
    double best_val = 0.0;
    for (const auto& r : history) best_val = std::max(best_val, r.val_acc);
    std::cout << "trained " << a.epochs << " epochs: final train_loss=" << last.train_loss
              << " val_acc=" << last.val_acc << " (best val_acc=" << best_val << ")\n"
              << "run directory: " << a.out << "\n";
}

struct EvalArgs {
    std::string run;
    std::string manifest;
    std::string split = "val";
    std::string out;
    std::string predictions;
};

int label_from_json(const json& v, const handwash::LabelRegistry& registry) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        const auto id = registry.find(v.get<std::string>());
        if (!id) throw handwash::ParseError("unknown label: " + v.get<std::string>());
        return *id;
    }
    throw handwash::ParseError("labels must be class ids or names");
}

void cmd_eval(const EvalArgs& a) {
    const auto manifest = handwash::load_manifest(a.manifest);
    const auto& registry = manifest.registry();
    const fs::path out_dir = a.out.empty() ? fs::path(a.run) : fs::path(a.out);
    ensure_dir(out_dir);

    std::vector<int> y_true;
    std::vector<int> y_pred;
    if (!a.predictions.empty()) {
        std::ifstream in(a.predictions);
        if (!in) throw handwash::IoError("cannot read " + a.predictions);
        json doc;
        try {
            in >> doc;
            for (const auto& v : doc.at("y_true")) y_true.push_back(label_from_json(v, registry));
            for (const auto& v : doc.at("y_pred")) y_pred.push_back(label_from_json(v, registry));
        } catch (const json::exception& e) {
            throw handwash::ParseError(std::string("malformed predictions file: ") + e.what());
        }
    } else {
        const auto model = handwash::TransferModel::load_checkpoint(fs::path(a.run) / "model");
        if (!(model.labels() == registry))
            throw handwash::ConfigError("manifest labels do not match the model checkpoint");

        handwash::DatasetManifest target = manifest;
        handwash::Split which;
        if (a.split == "all") {
            target = handwash::DatasetManifest(registry, manifest.samples());
            which = handwash::Split::none;
        } else {
            which = handwash::split_from_string(a.split);
        }
        const auto data = handwash::load_split_features(model, target, which);
        const Eigen::MatrixXd probs = model.head().forward(data.features);
        y_true = data.labels;
        for (Eigen::Index r = 0; r < probs.rows(); ++r)
            y_pred.push_back(handwash::argmax_index(probs.row(r)));
    }

    const auto cm = handwash::confusion(y_true, y_pred, registry);
    const auto rep = handwash::report(cm);
    handwash::save_report_json(rep, out_dir / "report.json");
    const std::string table = handwash::render_text(rep);
    std::ofstream txt(out_dir / "report.txt");
    if (!txt) throw handwash::IoError("cannot write " + (out_dir / "report.txt").string());
    txt << table;
    std::cout << table;
}

struct PredictArgs {
    std::string run;
    std::string clip;
    int window = 25;
    std::vector<int> annotate;
    std::string out;
};

void cmd_predict(const PredictArgs& a) {
    const auto model = handwash::TransferModel::load_checkpoint(fs::path(a.run) / "model");
    const auto clip = handwash::probe_clip(a.clip);
    const auto timeline = handwash::predict_clip(model, clip, a.window);

    const fs::path out_dir = a.out.empty() ? fs::path(a.run) / "predict" : fs::path(a.out);
    ensure_dir(out_dir);
    handwash::save_timeline(timeline, model.labels(), out_dir / "timeline.json");
    if (!a.annotate.empty())
        handwash::annotate_frames(clip, timeline, a.annotate, model.labels(), out_dir);

    std::vector<int> votes(static_cast<std::size_t>(model.labels().size()), 0);
    for (const auto& p : timeline) ++votes[static_cast<std::size_t>(p.label_id)];
    const int top = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    std::cout << timeline.size() << " frames; majority label: " << model.labels().at(top).name
              << " (" << votes[static_cast<std::size_t>(top)] << "/" << timeline.size()
              << " frames), window " << a.window << "\n"
              << "timeline: " << (out_dir / "timeline.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"handwash: gesture-video classification pipeline"};
    app.require_subcommand(1);

    FixturesArgs fixtures_args;
    auto* fixtures = app.add_subcommand("fixtures", "Generate the synthetic gesture corpus");
    fixtures->add_option("--out", fixtures_args.out, "Corpus output directory")->required();
    fixtures->add_option("--per-class", fixtures_args.per_class, "Clips per class")
        ->check(CLI::PositiveNumber);
    fixtures->add_option("--frames", fixtures_args.frames, "Frames per clip")
        ->check(CLI::PositiveNumber);
    fixtures->add_option("--size", fixtures_args.size, "Frame height and width");
    fixtures->add_option("--seed", fixtures_args.seed, "Corpus seed");
    fixtures->add_flag("--encode", fixtures_args.encode, "Write MJPG video clips, not stills");
    fixtures->add_option("--quality", fixtures_args.quality, "JPEG quality for stills");
    fixtures->callback([&] { cmd_fixtures(fixtures_args); });

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "Decode corpus clips into frame stills");
    extract->add_option("--corpus", extract_args.corpus, "Clip corpus root")->required();
    extract->add_option("--out", extract_args.out, "Frame output directory")->required();
    extract->add_option("--stride", extract_args.stride, "Keep every stride-th frame")
        ->check(CLI::PositiveNumber);
    extract->callback([&] { cmd_extract(extract_args); });

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Assign stratified train/val splits");
    split->add_option("--manifest", split_args.manifest, "Input manifest")->required();
    split->add_option("--out", split_args.out, "Output manifest path")->required();
    split->add_option("--val-fraction", split_args.val_fraction, "Validation fraction");
    split->add_option("--seed", split_args.seed, "Shuffle seed");
    split->callback([&] { cmd_split(split_args); });

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train the classifier head");
    train->add_option("--manifest", train_args.manifest, "Split manifest")->required();
    train->add_option("--out", train_args.out, "Run directory")->required();
    train->add_option("--epochs", train_args.epochs, "Training epochs")
        ->check(CLI::PositiveNumber);
    train->add_option("--batch-size", train_args.batch_size, "Minibatch size")
        ->check(CLI::PositiveNumber);
    train->add_option("--lr", train_args.learning_rate, "SGD learning rate");
    train->add_option("--seed", train_args.seed, "Shuffle/dropout seed");
    train->add_option("--backbone", train_args.backbone, "Feature backbone")
        ->check(CLI::IsMember({"stub", "pretrained_resnet50"}));
    train->add_option("--feature-dim", train_args.feature_dim, "Stub backbone feature width");
    train->add_option("--hidden", train_args.hidden, "Head hidden layer widths")
        ->delimiter(',');
    train->add_option("--dropout", train_args.dropout, "Head dropout rate");
    train->add_option("--init-seed", train_args.init_seed,
                      "Head initialization seed (defaults to --seed)");
    train->callback([&] { cmd_train(train_args); });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Write the classification report for a run");
    eval->add_option("--run", eval_args.run, "Run directory holding model/")->required();
    eval->add_option("--manifest", eval_args.manifest, "Evaluation manifest")->required();
    eval->add_option("--split", eval_args.split, "Manifest split to evaluate")
        ->check(CLI::IsMember({"train", "val", "all"}));
    eval->add_option("--out", eval_args.out, "Report directory (defaults to --run)");
    eval->add_option("--predictions", eval_args.predictions,
                     "Score a JSON {y_true, y_pred} file instead of running the model");
    eval->callback([&] { cmd_eval(eval_args); });

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Smoothed per-frame prediction for one clip");
    predict->add_option("--run", predict_args.run, "Run directory holding model/")->required();
    predict->add_option("--clip", predict_args.clip, "Video file or directory of stills")
        ->required();
    predict->add_option("--window", predict_args.window, "Rolling-average window")
        ->check(CLI::PositiveNumber);
    predict->add_option("--annotate-frames", predict_args.annotate,
                        "Comma-separated frame indices to annotate")
        ->delimiter(',');
    predict->add_option("--out", predict_args.out, "Output directory (defaults to {run}/predict)");
    predict->callback([&] { cmd_predict(predict_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const handwash::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
