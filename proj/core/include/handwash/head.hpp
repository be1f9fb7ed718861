#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "handwash/rng.hpp"

namespace handwash {

/// Architecture of the trainable classifier stacked on the frozen backbone.
/// Defaults: one hidden layer of 512 units with dropout 0.5 before the
/// class layer.
struct HeadSpec {
    std::vector<int> hidden_sizes{512};
    double dropout_rate = 0.5;
    int num_classes = 3;
    std::uint64_t init_seed = 0;
};

/// Per-layer loss gradients, shaped exactly like the head's parameters.
struct HeadGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Fully connected softmax classifier: ReLU hidden layers with inverted
/// dropout, Glorot-uniform initialization from spec.init_seed, trained with
/// categorical cross-entropy. All math is double precision so results are
/// reproducible bit-for-bit across platforms.
class ClassifierHead {
public:
    ClassifierHead(HeadSpec spec, int input_dim);

    const HeadSpec& spec() const { return spec_; }
    int input_dim() const { return input_dim_; }

    /// Number of weight matrices (hidden layers plus the class layer).
    int layer_count() const { return static_cast<int>(weights_.size()); }

    /// weight(l) has shape out_dim x in_dim; bias(l) has length out_dim.
    /// Mutable access exists for optimizer updates and gradient checks.
    const Eigen::MatrixXd& weight(int layer) const;
    Eigen::MatrixXd& weight(int layer);
    const Eigen::VectorXd& bias(int layer) const;
    Eigen::VectorXd& bias(int layer);

    std::int64_t parameter_count() const;

    /// Evaluation-mode forward pass: no dropout, pure function of the input.
    /// features is B x input_dim; the result is B x num_classes with each row
    /// a probability distribution. B = 0 yields an empty matrix.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& features) const;

    /// Mean cross-entropy over the batch, plus gradients and accuracy when
    /// requested. dropout_rng enables inverted dropout on hidden activations;
    /// pass nullptr for deterministic evaluation-mode loss.
    double loss_and_gradients(const Eigen::MatrixXd& features,
                              const std::vector<int>& labels,
                              Rng* dropout_rng,
                              HeadGradients* gradients,
                              double* accuracy) const;

    void apply_sgd(const HeadGradients& gradients, double learning_rate);

    /// Binary parameter blob. load_params validates every layer shape against
    /// this head's spec before accepting the data.
    void save_params(std::ostream& out) const;
    void load_params(std::istream& in);

private:
    HeadSpec spec_;
    int input_dim_ = 0;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_index(const Eigen::RowVectorXd& row);

}  // namespace handwash
