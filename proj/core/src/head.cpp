#include "handwash/head.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "handwash/errors.hpp"

namespace handwash {

namespace {

constexpr char kParamsMagic[8] = {'H', 'W', 'H', 'E', 'A', 'D', '0', '1'};

void write_i64(std::ostream& out, std::int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError("truncated head parameter blob");
    return v;
}

}  // namespace

int argmax_index(const Eigen::RowVectorXd& row) {
    int best = 0;
    for (int i = 1; i < row.size(); ++i)
        if (row(i) > row(best)) best = i;
    return best;
}

ClassifierHead::ClassifierHead(HeadSpec spec, int input_dim)
    : spec_(std::move(spec)), input_dim_(input_dim) {
    if (input_dim_ < 1) throw ConfigError("head input_dim must be positive");
    if (spec_.num_classes < 1) throw ConfigError("head num_classes must be positive");
    if (spec_.dropout_rate < 0.0 || spec_.dropout_rate >= 1.0)
        throw ConfigError("dropout_rate must lie in [0,1)");
    for (int width : spec_.hidden_sizes)
        if (width < 1) throw ConfigError("hidden layer widths must be positive");

    // One Rng drives all layers in order, so init_seed alone pins every
    // parameter.
    Rng rng(spec_.init_seed);
    int fan_in = input_dim_;
    std::vector<int> widths = spec_.hidden_sizes;
    widths.push_back(spec_.num_classes);
    for (int fan_out : widths) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXd::Zero(fan_out));
        fan_in = fan_out;
    }
}

const Eigen::MatrixXd& ClassifierHead::weight(int layer) const {
    if (layer < 0 || layer >= layer_count()) throw RangeError("no such head layer", layer);
    return weights_[static_cast<std::size_t>(layer)];
}

Eigen::MatrixXd& ClassifierHead::weight(int layer) {
    if (layer < 0 || layer >= layer_count()) throw RangeError("no such head layer", layer);
    return weights_[static_cast<std::size_t>(layer)];
}

const Eigen::VectorXd& ClassifierHead::bias(int layer) const {
    if (layer < 0 || layer >= layer_count()) throw RangeError("no such head layer", layer);
    return biases_[static_cast<std::size_t>(layer)];
}

Eigen::VectorXd& ClassifierHead::bias(int layer) {
    if (layer < 0 || layer >= layer_count()) throw RangeError("no such head layer", layer);
    return biases_[static_cast<std::size_t>(layer)];
}

std::int64_t ClassifierHead::parameter_count() const {
    std::int64_t total = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        total += weights_[l].size() + biases_[l].size();
    return total;
}

Eigen::MatrixXd ClassifierHead::forward(const Eigen::MatrixXd& features) const {
    if (features.rows() == 0) return Eigen::MatrixXd(0, spec_.num_classes);
    if (features.cols() != input_dim_)
        throw ShapeError("head expects " + std::to_string(input_dim_) + " features, got " +
                         std::to_string(features.cols()));

    Eigen::MatrixXd a = features;
    const int hidden = static_cast<int>(spec_.hidden_sizes.size());
    for (int l = 0; l < hidden; ++l)
        a = ((a * weights_[l].transpose()).rowwise() + biases_[l].transpose()).cwiseMax(0.0);
    Eigen::MatrixXd logits =
        (a * weights_[hidden].transpose()).rowwise() + biases_[hidden].transpose();

    // Row-stable softmax.
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double peak = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - peak).exp();
        logits.row(r) = e / e.sum();
    }
    return logits;
}

double ClassifierHead::loss_and_gradients(const Eigen::MatrixXd& features,
                                          const std::vector<int>& labels,
                                          Rng* dropout_rng,
                                          HeadGradients* gradients,
                                          double* accuracy) const {
    const Eigen::Index batch = features.rows();
    if (batch == 0) throw TrainDataError("cannot compute a loss over an empty batch");
    if (features.cols() != input_dim_)
        throw ShapeError("head expects " + std::to_string(input_dim_) + " features, got " +
                         std::to_string(features.cols()));
    if (static_cast<Eigen::Index>(labels.size()) != batch)
        throw ShapeError("labels/features batch size mismatch");
    for (int label : labels)
        if (label < 0 || label >= spec_.num_classes)
            throw TrainDataError("label " + std::to_string(label) + " outside head range");

    const int hidden = static_cast<int>(spec_.hidden_sizes.size());
    const bool drop = dropout_rng != nullptr && spec_.dropout_rate > 0.0;
    const double keep = 1.0 - spec_.dropout_rate;

    // Forward, keeping activations and dropout masks for the backward pass.
    // Masks are sampled row-major per layer so the rng stream is well defined.
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(static_cast<std::size_t>(hidden) + 1);
    acts.push_back(features);
    std::vector<Eigen::MatrixXd> masks;
    for (int l = 0; l < hidden; ++l) {
        Eigen::MatrixXd a =
            ((acts.back() * weights_[l].transpose()).rowwise() + biases_[l].transpose())
                .cwiseMax(0.0);
        if (drop) {
            Eigen::MatrixXd mask(a.rows(), a.cols());
            for (Eigen::Index r = 0; r < mask.rows(); ++r)
                for (Eigen::Index c = 0; c < mask.cols(); ++c)
                    mask(r, c) = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
            a = a.cwiseProduct(mask);
            masks.push_back(std::move(mask));
        }
        acts.push_back(std::move(a));
    }
    Eigen::MatrixXd logits =
        (acts.back() * weights_[hidden].transpose()).rowwise() + biases_[hidden].transpose();

    // Loss via log-sum-exp; probabilities reused for the gradient and accuracy.
    double loss = 0.0;
    Eigen::MatrixXd probs(batch, spec_.num_classes);
    int correct = 0;
    for (Eigen::Index r = 0; r < batch; ++r) {
        const double peak = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd shifted = logits.row(r).array() - peak;
        const double log_z = std::log(shifted.array().exp().sum());
        loss += log_z - shifted(labels[static_cast<std::size_t>(r)]);
        probs.row(r) = (shifted.array() - log_z).exp();
        if (argmax_index(probs.row(r)) == labels[static_cast<std::size_t>(r)]) ++correct;
    }
    loss /= static_cast<double>(batch);
    if (accuracy != nullptr) *accuracy = static_cast<double>(correct) / static_cast<double>(batch);

    if (gradients != nullptr) {
        gradients->weights.assign(weights_.size(), Eigen::MatrixXd());
        gradients->biases.assign(biases_.size(), Eigen::VectorXd());

        Eigen::MatrixXd delta = probs;
        for (Eigen::Index r = 0; r < batch; ++r)
            delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
        delta /= static_cast<double>(batch);

        for (int l = hidden; l >= 0; --l) {
            gradients->weights[static_cast<std::size_t>(l)] =
                delta.transpose() * acts[static_cast<std::size_t>(l)];
            gradients->biases[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
            if (l > 0) {
                delta = delta * weights_[static_cast<std::size_t>(l)];
                // acts[l] already folds in ReLU and any dropout mask, so its
                // nonzero entries mark exactly the units that passed forward.
                const Eigen::MatrixXd& a = acts[static_cast<std::size_t>(l)];
                Eigen::MatrixXd gate = (a.array() > 0.0).cast<double>();
                if (drop) gate = gate.cwiseProduct(masks[static_cast<std::size_t>(l - 1)]);
                delta = delta.cwiseProduct(gate);
            }
        }
    }
    return loss;
}

void ClassifierHead::apply_sgd(const HeadGradients& gradients, double learning_rate) {
    if (gradients.weights.size() != weights_.size() || gradients.biases.size() != biases_.size())
        throw ShapeError("gradient layer count mismatch");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (gradients.weights[l].rows() != weights_[l].rows() ||
            gradients.weights[l].cols() != weights_[l].cols() ||
            gradients.biases[l].size() != biases_[l].size())
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
        weights_[l] -= learning_rate * gradients.weights[l];
        biases_[l] -= learning_rate * gradients.biases[l];
    }
}

void ClassifierHead::save_params(std::ostream& out) const {
    out.write(kParamsMagic, sizeof(kParamsMagic));
    write_i64(out, layer_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        write_i64(out, weights_[l].rows());
        write_i64(out, weights_[l].cols());
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
                const double v = weights_[l](r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) {
            const double v = biases_[l](i);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    if (!out) throw IoError("failed writing head parameters");
}

void ClassifierHead::load_params(std::istream& in) {
    char magic[sizeof(kParamsMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0)
        throw ParseError("not a head parameter blob");
    if (read_i64(in) != layer_count()) throw ParseError("head layer count mismatch");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (read_i64(in) != weights_[l].rows() || read_i64(in) != weights_[l].cols())
            throw ParseError("head layer shape mismatch at layer " + std::to_string(l));
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                weights_[l](r, c) = v;
            }
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            biases_[l](i) = v;
        }
        if (!in) throw ParseError("truncated head parameter blob");
    }
}

}  // namespace handwash
