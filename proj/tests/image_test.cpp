// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "diffx/backend.hpp"
#include "diffx/codec.hpp"
#include "diffx/png.hpp"

using namespace diffx;

TEST(Png, EncodeDecodeRoundTrip) {
    Rng rng(5);
    png::Raster r{17, 9, std::vector<std::uint8_t>(17 * 9 * 3)};
    for (auto& b : r.rgb) b = static_cast<std::uint8_t>(rng.below(256));
    const auto bytes = png::encode(r);
    EXPECT_EQ(png::decode(bytes), r);
    const auto header = png::read_header(bytes);
    EXPECT_EQ(header.width, 17);
    EXPECT_EQ(header.height, 9);
}

TEST(Png, PaddingHitsTargetSizeExactly) {
    png::Raster r{32, 32, std::vector<std::uint8_t>(32 * 32 * 3, 200)};
    const auto natural = png::encode(r);
    const auto padded = png::encode(r, 10'000);
    EXPECT_LT(natural.size(), 10'000u);
    EXPECT_EQ(padded.size(), 10'000u);
    EXPECT_EQ(png::decode(padded), r);
    // a target below the natural size is ignored
    EXPECT_EQ(png::encode(r, 10).size(), natural.size());
}

TEST(Png, RejectsGarbage) {
    std::vector<std::uint8_t> junk(64, 7);
    EXPECT_THROW(png::read_header(junk), Error);
}

TEST(Codec, Base64RoundTrip) {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 100u}) {
        std::vector<std::uint8_t> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<std::uint8_t>(i * 37 + 11);
        EXPECT_EQ(base64_decode(base64_encode(data)), data);
    }
    EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o'}), "Zm9v");
    EXPECT_THROW(base64_decode("abc"), Error);
}

TEST(Codec, Sha256KnownVector) {
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(GeneratedImage, MockPayloadIsMeasuredContainerLength) {
    MockBackend backend;
    const auto img = backend.txt2img("a cat on a table", 25, 3);
    const auto& bytes = img.encoded();
    EXPECT_EQ(img.payload_bytes(), bytes.size());
    EXPECT_EQ(img.payload_bytes(), kMockPreviewPayloadBytes);
    const auto decoded = png::decode(bytes);
    EXPECT_EQ(decoded.width, 512);
    EXPECT_EQ(decoded.height, 512);
    EXPECT_EQ(decoded, img.pixels());
}

TEST(GeneratedImage, CopiesShareTheEncodedPayload) {
    MockBackend backend;
    const auto img = backend.txt2img("a cat on a table", 25, 3);
    const auto copy = img;
    EXPECT_EQ(&img.encoded(), &copy.encoded());
    EXPECT_EQ(img.digest(), copy.digest());
}

TEST(GeneratedImage, FromContainerKeepsBytes) {
    png::Raster r{8, 4, std::vector<std::uint8_t>(8 * 4 * 3, 9)};
    auto bytes = png::encode(r);
    const auto img = GeneratedImage::from_container(bytes, Provenance::Remote, 1);
    EXPECT_EQ(img.encoded(), bytes);
    EXPECT_EQ(img.width(), 8);
    EXPECT_EQ(img.pixels(), r);
    EXPECT_FALSE(img.semantic_vec().has_value());
}
