#include <doctest.h>

#include <opencv2/core.hpp>

#include "handwash/errors.hpp"
#include "handwash/preprocess.hpp"

using namespace handwash;

TEST_CASE("already target-sized image with zero means passes through unchanged") {
    cv::Mat img(8, 8, CV_8UC3);
    cv::randu(img, 0, 255);
    PreprocessSpec spec;
    spec.target_height = 8;
    spec.target_width = 8;
    spec.channel_means = {0.0, 0.0, 0.0};
    spec.channel_order = ChannelOrder::bgr;

    const cv::Mat out = preprocess_frame(img, spec);
    REQUIRE(out.type() == CV_32FC3);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(out.at<cv::Vec3f>(y, x)[c] ==
                      static_cast<float>(img.at<cv::Vec3b>(y, x)[c]));
}

TEST_CASE("resize contract: 320x240 in, 224x224 out") {
    cv::Mat img(240, 320, CV_8UC3, cv::Scalar(10, 20, 30));
    const cv::Mat out = preprocess_frame(img, PreprocessSpec{});
    CHECK(out.rows == 224);
    CHECK(out.cols == 224);
    CHECK(out.channels() == 3);
}

TEST_CASE("constant image minus matching means is all zero") {
    cv::Mat img(16, 16, CV_8UC3, cv::Scalar(77, 77, 77));
    PreprocessSpec spec;
    spec.target_height = 16;
    spec.target_width = 16;
    spec.channel_means = {77.0, 77.0, 77.0};

    const cv::Mat out = preprocess_frame(img, spec);
    double lo, hi;
    cv::minMaxLoc(out.reshape(1), &lo, &hi);
    CHECK(lo == 0.0);
    CHECK(hi == 0.0);
}

TEST_CASE("channel order rgb swaps the first and last channels") {
    cv::Mat img(4, 4, CV_8UC3, cv::Scalar(1, 2, 3));  // BGR input
    PreprocessSpec spec;
    spec.target_height = 4;
    spec.target_width = 4;
    spec.channel_means = {0.0, 0.0, 0.0};
    spec.channel_order = ChannelOrder::rgb;

    const cv::Mat out = preprocess_frame(img, spec);
    const auto v = out.at<cv::Vec3f>(0, 0);
    CHECK(v[0] == 3.0f);
    CHECK(v[1] == 2.0f);
    CHECK(v[2] == 1.0f);
}

TEST_CASE("means are subtracted in the output channel order") {
    cv::Mat img(4, 4, CV_8UC3, cv::Scalar(10, 20, 30));
    PreprocessSpec spec;
    spec.target_height = 4;
    spec.target_width = 4;
    spec.channel_means = {30.0, 20.0, 10.0};
    spec.channel_order = ChannelOrder::rgb;

    const cv::Mat out = preprocess_frame(img, spec);
    const auto v = out.at<cv::Vec3f>(2, 2);
    CHECK(v[0] == 0.0f);
    CHECK(v[1] == 0.0f);
    CHECK(v[2] == 0.0f);
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS((void)preprocess_frame(cv::Mat(), PreprocessSpec{}), PreprocessError);

    cv::Mat gray(8, 8, CV_8UC1, cv::Scalar(0));
    CHECK_THROWS_AS((void)preprocess_frame(gray, PreprocessSpec{}), PreprocessError);

    cv::Mat img(8, 8, CV_8UC3, cv::Scalar(0, 0, 0));
    PreprocessSpec bad;
    bad.target_height = 0;
    CHECK_THROWS_AS((void)preprocess_frame(img, bad), ConfigError);
}

TEST_CASE("shape idempotence: reprocessing the output raster keeps the shape") {
    cv::Mat img(100, 50, CV_8UC3);
    cv::randu(img, 0, 255);
    PreprocessSpec spec;
    spec.target_height = 32;
    spec.target_width = 48;
    spec.channel_means = {0.0, 0.0, 0.0};

    const cv::Mat once = preprocess_frame(img, spec);
    cv::Mat raster;
    once.convertTo(raster, CV_8UC3);
    const cv::Mat twice = preprocess_frame(raster, spec);
    CHECK(twice.rows == once.rows);
    CHECK(twice.cols == once.cols);
    CHECK(twice.channels() == once.channels());
}
