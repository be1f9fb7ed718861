#include "handwash/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "handwash/errors.hpp"
#include "handwash/preprocess.hpp"
#include "handwash/rng.hpp"

namespace handwash {

using nlohmann::json;

std::string to_string(LossKind k) {
    (void)k;
    return "categorical_cross_entropy";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "categorical_cross_entropy") return LossKind::categorical_cross_entropy;
    throw ParseError("unknown loss kind: " + s);
}

SplitData load_split_features(const TransferModel& model, const DatasetManifest& manifest,
                              Split split) {
    const auto indices = manifest.indices_of(split);
    const PreprocessSpec& input = model.backbone().spec().input;

    SplitData data;
    data.features.resize(static_cast<Eigen::Index>(indices.size()),
                         model.backbone().spec().feature_dim);
    data.labels.reserve(indices.size());

    for (std::size_t i = 0; i < indices.size(); ++i) {
        const FrameSample& sample = manifest.samples()[indices[i]];
        const cv::Mat image = cv::imread(sample.image_path, cv::IMREAD_COLOR);
        if (image.empty()) throw DecodeError("cannot decode image: " + sample.image_path);
        const cv::Mat prepared = preprocess_frame(image, input);
        data.features.row(static_cast<Eigen::Index>(i)) =
            model.backbone().extract(prepared).transpose();
        data.labels.push_back(sample.label_id);
    }
    return data;
}

TrainHistory train(TransferModel& model, const DatasetManifest& manifest,
                   const TrainConfig& config) {
    if (config.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (config.learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (!model.backbone_frozen()) throw ConfigError("train requires a frozen backbone");

    const SplitData train_data = load_split_features(model, manifest, Split::train);
    const SplitData val_data = load_split_features(model, manifest, Split::val);
    if (train_data.labels.empty()) throw TrainDataError("training split is empty");
    if (val_data.labels.empty()) throw TrainDataError("validation split is empty");

    const Eigen::Index n_train = train_data.features.rows();
    std::vector<std::size_t> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), std::size_t{0});

    // One stream covers the per-epoch reshuffle and every dropout mask, in a
    // fixed consumption order, so config.seed pins the whole run.
    Rng rng(config.seed);

    TrainHistory history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    double best_val_acc = -1.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);

        double loss_sum = 0.0;
        double acc_sum = 0.0;
        for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(config.batch_size, n_train - start);
            Eigen::MatrixXd batch(count, train_data.features.cols());
            std::vector<int> labels(static_cast<std::size_t>(count));
            for (Eigen::Index i = 0; i < count; ++i) {
                const std::size_t src = order[static_cast<std::size_t>(start + i)];
                batch.row(i) = train_data.features.row(static_cast<Eigen::Index>(src));
                labels[static_cast<std::size_t>(i)] = train_data.labels[src];
            }

            HeadGradients gradients;
            double batch_acc = 0.0;
            const double batch_loss =
                model.head().loss_and_gradients(batch, labels, &rng, &gradients, &batch_acc);
            if (!std::isfinite(batch_loss))
                throw DivergenceError("training loss became non-finite", epoch);
            model.head().apply_sgd(gradients, config.learning_rate);

            loss_sum += batch_loss * static_cast<double>(count);
            acc_sum += batch_acc * static_cast<double>(count);
        }

        double val_acc = 0.0;
        const double val_loss = model.head().loss_and_gradients(
            val_data.features, val_data.labels, nullptr, nullptr, &val_acc);
        if (!std::isfinite(val_loss))
            throw DivergenceError("validation loss became non-finite", epoch);

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(n_train);
        record.train_acc = acc_sum / static_cast<double>(n_train);
        record.val_loss = val_loss;
        record.val_acc = val_acc;
        history.push_back(record);

        if (config.run_dir && val_acc > best_val_acc) {
            best_val_acc = val_acc;
            model.save_checkpoint(*config.run_dir / "model");
        }
    }
    return history;
}

void save_history(const TrainHistory& history, const std::filesystem::path& path) {
    json doc = json::array();
    for (const EpochRecord& r : history)
        doc.push_back(json{{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"train_acc", r.train_acc},
                           {"val_loss", r.val_loss},
                           {"val_acc", r.val_acc}});
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

TrainHistory load_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json doc;
    try {
        in >> doc;
        if (!doc.is_array()) throw ParseError("history must be a JSON array");
        TrainHistory history;
        for (const auto& j : doc) {
            EpochRecord r;
            r.epoch = j.at("epoch").get<int>();
            r.train_loss = j.at("train_loss").get<double>();
            r.train_acc = j.at("train_acc").get<double>();
            r.val_loss = j.at("val_loss").get<double>();
            r.val_acc = j.at("val_acc").get<double>();
            history.push_back(r);
        }
        return history;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed history: ") + e.what());
    }
}

}  // namespace handwash
