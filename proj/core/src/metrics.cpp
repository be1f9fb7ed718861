#include "handwash/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "handwash/errors.hpp"

namespace handwash {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(LabelRegistry registry,
                                 std::vector<std::vector<std::int64_t>> counts)
    : registry_(std::move(registry)), counts_(std::move(counts)) {
    const auto k = static_cast<std::size_t>(registry_.size());
    if (counts_.size() != k) throw EvalError("confusion matrix must be K x K");
    for (const auto& row : counts_) {
        if (row.size() != k) throw EvalError("confusion matrix must be K x K");
        for (auto v : row)
            if (v < 0) throw EvalError("confusion counts must be non-negative");
    }
}

std::int64_t ConfusionMatrix::at(int true_class, int predicted_class) const {
    if (true_class < 0 || true_class >= num_classes() || predicted_class < 0 ||
        predicted_class >= num_classes())
        throw EvalError("confusion index out of range");
    return counts_[static_cast<std::size_t>(true_class)][static_cast<std::size_t>(predicted_class)];
}

std::int64_t ConfusionMatrix::row_sum(int true_class) const {
    std::int64_t s = 0;
    for (int j = 0; j < num_classes(); ++j) s += at(true_class, j);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int predicted_class) const {
    std::int64_t s = 0;
    for (int i = 0; i < num_classes(); ++i) s += at(i, predicted_class);
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int i = 0; i < num_classes(); ++i) s += at(i, i);
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (int i = 0; i < num_classes(); ++i) s += row_sum(i);
    return s;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          const LabelRegistry& registry) {
    if (y_true.size() != y_pred.size())
        throw EvalError("y_true and y_pred lengths differ: " + std::to_string(y_true.size()) +
                        " vs " + std::to_string(y_pred.size()));
    if (y_true.empty()) throw EvalError("cannot evaluate an empty label sequence");

    const auto k = static_cast<std::size_t>(registry.size());
    std::vector<std::vector<std::int64_t>> counts(k, std::vector<std::int64_t>(k, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= registry.size())
            throw EvalError("true label outside registry: " + std::to_string(t));
        if (p < 0 || p >= registry.size())
            throw EvalError("predicted label outside registry: " + std::to_string(p));
        counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
    }
    return ConfusionMatrix(registry, std::move(counts));
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double precision, double recall) {
    return safe_div(2.0 * precision * recall, precision + recall);
}

}  // namespace

ClassReport report(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total < 1) throw EvalError("confusion matrix holds no samples");

    const int k = cm.num_classes();
    ClassReport rep;
    rep.labels = cm.registry().names();
    rep.per_class.resize(static_cast<std::size_t>(k));

    std::int64_t pooled_tp = 0;
    for (int c = 0; c < k; ++c) {
        const std::int64_t tp = cm.at(c, c);
        const std::int64_t fp = cm.col_sum(c) - tp;
        const std::int64_t fn = cm.row_sum(c) - tp;
        pooled_tp += tp;

        auto& row = rep.per_class[static_cast<std::size_t>(c)];
        row.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
        row.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
        row.f1 = f1_of(row.precision, row.recall);
        row.support = cm.row_sum(c);
    }

    // Pooled FP and pooled FN both equal total - trace, so micro precision,
    // recall and F1 coincide.
    const double micro = safe_div(static_cast<double>(pooled_tp), static_cast<double>(total));
    rep.micro = MetricRow{micro, micro, micro, total};

    MetricRow macro{0.0, 0.0, 0.0, total};
    MetricRow weighted{0.0, 0.0, 0.0, total};
    for (int c = 0; c < k; ++c) {
        const auto& row = rep.per_class[static_cast<std::size_t>(c)];
        macro.precision += row.precision;
        macro.recall += row.recall;
        macro.f1 += row.f1;
        const auto w = static_cast<double>(row.support);
        weighted.precision += w * row.precision;
        weighted.recall += w * row.recall;
        weighted.f1 += w * row.f1;
    }
    macro.precision /= k;
    macro.recall /= k;
    macro.f1 /= k;
    weighted.precision /= static_cast<double>(total);
    weighted.recall /= static_cast<double>(total);
    weighted.f1 /= static_cast<double>(total);
    rep.macro = macro;
    rep.weighted = weighted;
    return rep;
}

double round_half_up(double x, int decimals) {
    double scale = 1.0;
    for (int i = 0; i < decimals; ++i) scale *= 10.0;
    if (x >= 0.0) return std::floor(x * scale + 0.5) / scale;
    return -std::floor(-x * scale + 0.5) / scale;
}

std::string render_text(const ClassReport& rep) {
    std::size_t name_width = 12;  // at least as wide as "Weighted avg"
    for (const auto& l : rep.labels) name_width = std::max(name_width, l.size());

    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %9s  %9s  %9s  %9s\n",
                  static_cast<int>(name_width), "", "Precision", "Recall", "F1 score", "Support");
    out += buf;

    auto emit = [&](const std::string& name, const MetricRow& row) {
        std::snprintf(buf, sizeof(buf), "%-*s  %9.2f  %9.2f  %9.2f  %9lld\n",
                      static_cast<int>(name_width), name.c_str(), round_half_up(row.precision, 2),
                      round_half_up(row.recall, 2), round_half_up(row.f1, 2),
                      static_cast<long long>(row.support));
        out += buf;
    };

    for (std::size_t c = 0; c < rep.per_class.size(); ++c) emit(rep.labels[c], rep.per_class[c]);
    emit("Micro avg", rep.micro);
    emit("Macro avg", rep.macro);
    emit("Weighted avg", rep.weighted);
    return out;
}

namespace {

json row_to_json(const MetricRow& row) {
    return json{{"precision", row.precision},
                {"recall", row.recall},
                {"f1", row.f1},
                {"support", row.support}};
}

MetricRow row_from_json(const json& j) {
    MetricRow row;
    row.precision = j.at("precision").get<double>();
    row.recall = j.at("recall").get<double>();
    row.f1 = j.at("f1").get<double>();
    row.support = j.at("support").get<std::int64_t>();
    return row;
}

}  // namespace

void save_report_json(const ClassReport& rep, const std::filesystem::path& file) {
    json j;
    j["schema_version"] = 1;
    j["labels"] = rep.labels;
    json rows = json::array();
    for (const auto& row : rep.per_class) rows.push_back(row_to_json(row));
    j["per_class"] = rows;
    j["micro_avg"] = row_to_json(rep.micro);
    j["macro_avg"] = row_to_json(rep.macro);
    j["weighted_avg"] = row_to_json(rep.weighted);

    std::ofstream out(file);
    if (!out) throw IoError("cannot open for writing: " + file.string());
    out << j.dump(2) << '\n';
}

ClassReport load_report_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open report: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad report json: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw ParseError("unsupported report schema");

    ClassReport rep;
    rep.labels = j.at("labels").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_class")) rep.per_class.push_back(row_from_json(row));
    rep.micro = row_from_json(j.at("micro_avg"));
    rep.macro = row_from_json(j.at("macro_avg"));
    rep.weighted = row_from_json(j.at("weighted_avg"));
    return rep;
}

}  // namespace handwash
