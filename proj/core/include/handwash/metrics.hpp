#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "handwash/labels.hpp"

namespace handwash {

// K x K count matrix, rows = true class, columns = predicted class, both in
// registry order.
class ConfusionMatrix {
public:
    ConfusionMatrix(LabelRegistry registry, std::vector<std::vector<std::int64_t>> counts);

    const LabelRegistry& registry() const { return registry_; }
    int num_classes() const { return registry_.size(); }
    std::int64_t at(int true_class, int predicted_class) const;
    std::int64_t row_sum(int true_class) const;
    std::int64_t col_sum(int predicted_class) const;
    std::int64_t trace() const;
    std::int64_t total() const;

private:
    LabelRegistry registry_;
    std::vector<std::vector<std::int64_t>> counts_;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          const LabelRegistry& registry);

struct MetricRow {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;

    bool operator==(const MetricRow&) const = default;
};

// Per-class rows plus micro / macro / weighted aggregates. Metrics are kept
// at full precision; rounding happens only when rendering.
struct ClassReport {
    std::vector<std::string> labels;
    std::vector<MetricRow> per_class;
    MetricRow micro;
    MetricRow macro;
    MetricRow weighted;

    bool operator==(const ClassReport&) const = default;
};

// Precision, recall and F1 use the 0/0 -> 0 convention: a class that is
// never predicted reports 0.00 precision, not NaN.
ClassReport report(const ConfusionMatrix& cm);

// Round half away from zero to the given number of decimals.
double round_half_up(double x, int decimals);

// Fixed-width table: per-class rows in registry order, then the
// Micro avg / Macro avg / Weighted avg rows, metrics at 2 decimals.
std::string render_text(const ClassReport& rep);

void save_report_json(const ClassReport& rep, const std::filesystem::path& file);
ClassReport load_report_json(const std::filesystem::path& file);

}  // namespace handwash
