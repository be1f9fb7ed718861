#pragma once

#include <array>
#include <string>

#include <opencv2/core.hpp>

namespace handwash {

enum class ChannelOrder { rgb, bgr };

std::string to_string(ChannelOrder o);
ChannelOrder channel_order_from_string(const std::string& s);

// Geometry and normalization applied to every frame before the backbone.
// channel_means are expressed in the output channel order. Defaults match
// the ImageNet-pretrained backbone convention (BGR, per-channel means).
struct PreprocessSpec {
    int target_height = 224;
    int target_width = 224;
    std::array<double, 3> channel_means{103.939, 116.779, 123.68};
    ChannelOrder channel_order = ChannelOrder::bgr;

    bool operator==(const PreprocessSpec&) const = default;
};

// image is an 8-bit 3-channel raster in OpenCV's native BGR layout. Returns
// CV_32FC3 of target size: resized, channels permuted to spec.channel_order,
// channel means subtracted.
cv::Mat preprocess_frame(const cv::Mat& image, const PreprocessSpec& spec);

}  // namespace handwash
