// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "tfd/error.hpp"
#include "tfd/image_io.hpp"
#include "tfd/synth.hpp"

using namespace tfd;

namespace {

std::vector<std::uint8_t> bytes(const std::string& header, std::initializer_list<int> body) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (int b : body) out.push_back(static_cast<std::uint8_t>(b));
    return out;
}

}  // namespace

TEST(Ppm, ParsesP6AndP5) {
    Image8 rgb = parse_ppm(bytes("P6\n2 1\n255\n", {255, 0, 0, 0, 255, 0}));
    EXPECT_EQ(rgb.width, 2);
    EXPECT_EQ(rgb.height, 1);
    EXPECT_EQ(rgb.channels, 3);
    EXPECT_EQ(rgb.data, (std::vector<std::uint8_t>{255, 0, 0, 0, 255, 0}));
    Image8 g = parse_ppm(bytes("P5\n# comment\n1 1\n255\n", {128}));
    EXPECT_EQ(g.channels, 1);
    EXPECT_EQ(g.data, std::vector<std::uint8_t>{128});
}

TEST(Ppm, RejectsMalformed) {
    EXPECT_THROW(parse_ppm(bytes("P6\n1 1\n65535\n", {0, 0, 0, 0, 0, 0})), ParseError);
    try {
        parse_ppm(bytes("P5\n1 1\n65535\n", {0, 0}));
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported maxval"), std::string::npos);
        EXPECT_EQ(e.offset(), 7u);
    }
    EXPECT_THROW(parse_ppm(bytes("P3\n1 1\n255\n", {0})), ParseError);
    EXPECT_THROW(parse_ppm(bytes("P5\n2 2\n255\n", {0, 1, 2})), ParseError);
    EXPECT_THROW(load_ppm("/nonexistent/x.ppm"), IoError);
}

TEST(Ppm, EncodeLayoutAndRoundTrip) {
    Image8 z(1, 1, 1, 0);
    EXPECT_EQ(encode_ppm(z), bytes("P5\n1 1\n255\n", {0}));
    Image8 cb(2, 2, 3, 0);
    for (int c = 0; c < 3; ++c) {
        cb.at(0, 0, c) = 255;
        cb.at(1, 1, c) = 255;
    }
    EXPECT_EQ(encode_ppm(cb), bytes("P6\n2 2\n255\n", {255, 255, 255, 0, 0, 0, 0, 0, 0, 255, 255, 255}));

    const auto dir = std::filesystem::temp_directory_path() / "tfd_io_test";
    std::filesystem::create_directories(dir);
    for (int ch : {1, 3}) {
        Image8 img = synth_image(13, 7, ch, 2);
        const auto path = dir / (ch == 1 ? "a.pgm" : "a.ppm");
        save_ppm(img, path);
        EXPECT_EQ(load_ppm(path), img);
    }
    EXPECT_EQ(list_images(dir).size(), 2u);
    std::filesystem::remove_all(dir);
}

TEST(Tensorize, ScalingAndRounding) {
    Image8 img(3, 1, 1);
    img.data = {255, 0, 128};
    Tensor t = to_tensor(img);
    EXPECT_EQ(t[0], 1.0);
    EXPECT_EQ(t[1], 0.0);
    EXPECT_NEAR(t[2], 0.50196, 1e-5);
    EXPECT_EQ(from_tensor(t), img);
    Tensor out(Shape{1, 1, 1, 3}, std::vector<double>{-0.2, 1.7, 0.5 / 255});
    EXPECT_EQ(from_tensor(out).data, (std::vector<std::uint8_t>{0, 255, 1}));
}

TEST(Patches, GridCounts) {
    EXPECT_EQ(extract_patches(Image8(64, 64, 1), 32, 32, 100).size(), 4u);
    Image8 one = synth_image(32, 32, 1, 1);
    auto p1 = extract_patches(one, 32, 32, 100);
    ASSERT_EQ(p1.size(), 1u);
    EXPECT_EQ(p1[0], one);
    Image8 img = synth_image(48, 48, 1, 2);
    auto p = extract_patches(img, 32, 16, 100);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[1], crop(img, 16, 0, 32, 32));
    EXPECT_EQ(p[2], crop(img, 0, 16, 32, 32));
    EXPECT_EQ(p[3], crop(img, 16, 16, 32, 32));
    EXPECT_EQ(extract_patches(img, 32, 16, 3).size(), 3u);
}
