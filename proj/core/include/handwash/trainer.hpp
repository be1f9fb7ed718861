#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "handwash/manifest.hpp"
#include "handwash/model.hpp"

namespace handwash {

enum class LossKind { categorical_cross_entropy };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::categorical_cross_entropy;
    /// When set, {run_dir}/model/ receives a checkpoint every time validation
    /// accuracy improves.
    std::optional<std::filesystem::path> run_dir;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// Cached backbone features for one manifest split, in manifest order.
struct SplitData {
    Eigen::MatrixXd features;  // N x feature_dim
    std::vector<int> labels;   // N class ids
};

/// Decodes, preprocesses, and embeds every sample of the split once. The
/// backbone is frozen, so features never change across epochs.
SplitData load_split_features(const TransferModel& model, const DatasetManifest& manifest,
                              Split split);

/// Trains the head in place for config.epochs passes over the train split,
/// evaluating on the val split after each epoch. Single-threaded with one
/// seeded rng for shuffling and dropout, so identical inputs reproduce the
/// history bit-for-bit.
TrainHistory train(TransferModel& model, const DatasetManifest& manifest,
                   const TrainConfig& config);

/// history.json: array of per-epoch records at full precision.
void save_history(const TrainHistory& history, const std::filesystem::path& path);
TrainHistory load_history(const std::filesystem::path& path);

}  // namespace handwash
