#include "handwash/preprocess.hpp"

#include <opencv2/imgproc.hpp>

#include "handwash/errors.hpp"

namespace handwash {

std::string to_string(ChannelOrder o) { return o == ChannelOrder::rgb ? "rgb" : "bgr"; }

ChannelOrder channel_order_from_string(const std::string& s) {
    if (s == "rgb") return ChannelOrder::rgb;
    if (s == "bgr") return ChannelOrder::bgr;
    throw ParseError("unknown channel order: " + s);
}

cv::Mat preprocess_frame(const cv::Mat& image, const PreprocessSpec& spec) {
    if (spec.target_height <= 0 || spec.target_width <= 0)
        throw ConfigError("preprocess target dimensions must be positive");
    if (image.empty()) throw PreprocessError("empty input image");
    if (image.channels() != 3)
        throw PreprocessError("expected a 3-channel image, got " +
                              std::to_string(image.channels()) + " channels");
    if (image.depth() != CV_8U) throw PreprocessError("expected an 8-bit image");

    cv::Mat resized;
    if (image.rows == spec.target_height && image.cols == spec.target_width) {
        resized = image;
    } else {
        cv::resize(image, resized, cv::Size(spec.target_width, spec.target_height), 0.0, 0.0,
                   cv::INTER_LINEAR);
    }

    cv::Mat ordered;
    if (spec.channel_order == ChannelOrder::rgb) {
        cv::cvtColor(resized, ordered, cv::COLOR_BGR2RGB);
    } else {
        ordered = resized;
    }

    cv::Mat out;
    ordered.convertTo(out, CV_32FC3);
    out -= cv::Scalar(spec.channel_means[0], spec.channel_means[1], spec.channel_means[2]);
    return out;
}

}  // namespace handwash
