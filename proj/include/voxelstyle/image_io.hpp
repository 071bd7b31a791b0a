// Copyright 2026 The voxelstyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOXELSTYLE_IMAGE_IO_HPP_
#define VOXELSTYLE_IMAGE_IO_HPP_

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxelstyle/image.hpp"

namespace voxelstyle {

// 8-bit PNG write; 1, 3, or 4 channels. Values clamp to [0,1] and round.
inline void write_png(const std::string& path, const Image<float>& img) {
  require(img.width >= 1 && img.height >= 1, "png: empty image");
  require(img.channels == 1 || img.channels == 3 || img.channels == 4,
          "png: channel count must be 1, 3, or 4");
  std::vector<uint8_t> bytes(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) {
    const float v = std::clamp(img.data[i], 0.0f, 1.0f);
    bytes[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 1   ? PNG_FORMAT_GRAY
               : img.channels == 3 ? PNG_FORMAT_RGB
                                   : PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0,
                               nullptr)) {
    throw std::runtime_error("png: write failed for " + path + ": " +
                             png.message);
  }
}

// Reads a PNG as floats in [0,1]. Grayscale comes back 1-channel, color
// 3-channel, anything with alpha 4-channel.
inline Image<float> read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error("png: cannot read " + path + ": " + png.message);
  }
  const bool has_alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool has_color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const int channels = has_alpha ? 4 : (has_color ? 3 : 1);
  png.format = has_alpha ? PNG_FORMAT_RGBA
                         : (has_color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY);
  std::vector<uint8_t> bytes(static_cast<size_t>(png.width) * png.height *
                             channels);
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    throw std::runtime_error("png: decode failed for " + path + ": " +
                             png.message);
  }
  Image<float> img(static_cast<int>(png.width), static_cast<int>(png.height),
                   channels);
  for (size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  }
  return img;
}

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_u64(std::string& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v & 0xFFFFFFFFull));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

inline void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

// Sequential little-endian reader that throws on truncation.
class ByteReader {
 public:
  ByteReader(std::string data, std::string context)
      : data_(std::move(data)), context_(std::move(context)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<uint8_t>(data_[pos_ + i]);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    const uint64_t lo = u32();
    const uint64_t hi = u32();
    return lo | (hi << 32);
  }

  int32_t i32() { return static_cast<int32_t>(u32()); }

  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  void bytes(char* out, size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error(context_ + ": truncated file");
    }
  }

  std::string data_;
  std::string context_;
  size_t pos_ = 0;
};

inline std::string read_file(const std::string& path,
                             const std::string& context) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(context + ": cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

inline void write_file(const std::string& path, const std::string& data,
                       const std::string& context) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(context + ": cannot open " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error(context + ": write failed for " + path);
}

}  // namespace detail

// Raw float32 image file, for lossless depth and opacity round trips.
// Layout: "VXRF", version, width, height, channels, then the samples.
inline constexpr uint32_t kRawImageVersion = 1;

inline void write_raw_image(const std::string& path,
                            const Image<float>& img) {
  require(img.width >= 1 && img.height >= 1 && img.channels >= 1,
          "raw image: empty image");
  std::string out;
  out.reserve(20 + img.data.size() * 4);
  out += "VXRF";
  detail::put_u32(out, kRawImageVersion);
  detail::put_u32(out, static_cast<uint32_t>(img.width));
  detail::put_u32(out, static_cast<uint32_t>(img.height));
  detail::put_u32(out, static_cast<uint32_t>(img.channels));
  for (float v : img.data) detail::put_f32(out, v);
  detail::write_file(path, out, "raw image");
}

inline Image<float> read_raw_image(const std::string& path) {
  detail::ByteReader r(detail::read_file(path, "raw image"), "raw image");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "VXRF", 4) != 0) {
    throw std::runtime_error("raw image: bad magic in " + path);
  }
  const uint32_t version = r.u32();
  if (version != kRawImageVersion) {
    throw std::runtime_error("raw image: unsupported version in " + path);
  }
  const uint32_t w = r.u32(), h = r.u32(), c = r.u32();
  if (w < 1 || h < 1 || c < 1 || w > (1u << 20) || h > (1u << 20) ||
      c > 16) {
    throw std::runtime_error("raw image: implausible dimensions in " + path);
  }
  Image<float> img(static_cast<int>(w), static_cast<int>(h),
                   static_cast<int>(c));
  for (auto& v : img.data) v = r.f32();
  if (!r.at_end()) {
    throw std::runtime_error("raw image: trailing bytes in " + path);
  }
  return img;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_IMAGE_IO_HPP_
