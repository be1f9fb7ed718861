#include "handwash/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "handwash/errors.hpp"

namespace handwash {

namespace {

struct Series {
    std::string name;
    cv::Scalar color;  // BGR
    std::vector<double> values;
};

}  // namespace

void emit_curves(const TrainHistory& history, const std::filesystem::path& out) {
    if (history.empty()) throw ConfigError("cannot plot an empty history");

    std::vector<Series> series{{"train loss", {180, 60, 40}, {}},
                               {"val loss", {240, 160, 80}, {}},
                               {"train acc", {40, 120, 40}, {}},
                               {"val acc", {60, 200, 120}, {}}};
    for (const EpochRecord& r : history) {
        series[0].values.push_back(r.train_loss);
        series[1].values.push_back(r.val_loss);
        series[2].values.push_back(r.train_acc);
        series[3].values.push_back(r.val_acc);
    }

    double y_max = 1.0;
    for (const Series& s : series)
        for (double v : s.values) y_max = std::max(y_max, v);
    y_max *= 1.05;

    const int width = 900, height = 600;
    const int left = 70, right = 40, top = 40, bottom = 50;
    const int plot_w = width - left - right;
    const int plot_h = height - top - bottom;
    const int n = static_cast<int>(history.size());

    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    const auto x_at = [&](int epoch_idx) {
        if (n == 1) return left + plot_w / 2;
        return left + epoch_idx * plot_w / (n - 1);
    };
    const auto y_at = [&](double v) {
        return top + static_cast<int>(std::lround((1.0 - v / y_max) * plot_h));
    };

    // Frame, horizontal gridlines, and tick labels.
    cv::rectangle(canvas, {left, top}, {left + plot_w, top + plot_h}, {120, 120, 120}, 1);
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = y_max * tick / 5.0;
        const int y = y_at(v);
        cv::line(canvas, {left, y}, {left + plot_w, y}, {225, 225, 225}, 1);
        char label[16];
        std::snprintf(label, sizeof(label), "%.2f", v);
        cv::putText(canvas, label, {8, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, {60, 60, 60}, 1,
                    cv::LINE_AA);
    }
    for (int tick = 0; tick <= std::min(10, n - 1); ++tick) {
        const int epoch_idx = (n == 1) ? 0 : tick * (n - 1) / std::max(1, std::min(10, n - 1));
        const int x = x_at(epoch_idx);
        cv::putText(canvas, std::to_string(history[epoch_idx].epoch), {x - 8, height - 28},
                    cv::FONT_HERSHEY_SIMPLEX, 0.4, {60, 60, 60}, 1, cv::LINE_AA);
    }
    cv::putText(canvas, "epoch", {left + plot_w / 2 - 24, height - 8}, cv::FONT_HERSHEY_SIMPLEX,
                0.5, {40, 40, 40}, 1, cv::LINE_AA);

    for (const Series& s : series) {
        for (int i = 0; i + 1 < n; ++i)
            cv::line(canvas, {x_at(i), y_at(s.values[i])}, {x_at(i + 1), y_at(s.values[i + 1])},
                     s.color, 2, cv::LINE_AA);
        for (int i = 0; i < n; ++i)
            cv::circle(canvas, {x_at(i), y_at(s.values[i])}, n > 60 ? 1 : 3, s.color, cv::FILLED,
                       cv::LINE_AA);
    }

    // Legend, top right corner of the plot area.
    int ly = top + 16;
    for (const Series& s : series) {
        const int lx = left + plot_w - 150;
        cv::line(canvas, {lx, ly - 4}, {lx + 24, ly - 4}, s.color, 2, cv::LINE_AA);
        cv::putText(canvas, s.name, {lx + 32, ly}, cv::FONT_HERSHEY_SIMPLEX, 0.45, {40, 40, 40},
                    1, cv::LINE_AA);
        ly += 20;
    }

    if (!cv::imwrite(out.string(), canvas))
        throw IoError("cannot write " + out.string());
}

}  // namespace handwash
