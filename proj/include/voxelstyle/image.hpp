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

#ifndef VOXELSTYLE_IMAGE_HPP_
#define VOXELSTYLE_IMAGE_HPP_

#include <cstdint>
#include <vector>

#include "voxelstyle/common.hpp"

namespace voxelstyle {

// Dense row-major image, channel-interleaved. Row 0 is the top of the image.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  T& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const T& at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  T* pixel(int y, int x) {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }
  const T* pixel(int y, int x) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool empty() const { return data.empty(); }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
};

using ImageU8 = Image<uint8_t>;

template <typename T>
uint8_t to_byte(T v) {
  double x = static_cast<double>(v);
  x = std::clamp(x, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(x * 255.0));
}

template <typename T>
Image<T> to_float_image(const ImageU8& img) {
  Image<T> out(img.width, img.height, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<T>(img.data[i]) / T(255);
  }
  return out;
}

template <typename T>
ImageU8 to_byte_image(const Image<T>& img) {
  ImageU8 out(img.width, img.height, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = to_byte(img.data[i]);
  }
  return out;
}

template <typename T>
double mean_squared_error(const Image<T>& a, const Image<T>& b) {
  require(a.same_shape(b), "mse: image shapes differ");
  require(!a.data.empty(), "mse: empty images");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) -
                     static_cast<double>(b.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

// Peak signal-to-noise ratio for unit-range images, capped at 99 dB so
// identical images stay finite.
template <typename T>
double psnr_db(const Image<T>& a, const Image<T>& b) {
  const double mse = mean_squared_error(a, b);
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

// Box-filter downsample to at most max_long_edge on the longer side.
// Returns the input unchanged when it already fits.
template <typename T>
Image<T> downsample_to(const Image<T>& img, int max_long_edge) {
  int long_edge = std::max(img.width, img.height);
  if (long_edge <= max_long_edge) return img;
  double scale = static_cast<double>(max_long_edge) / long_edge;
  int nw = std::max(1, static_cast<int>(std::lround(img.width * scale)));
  int nh = std::max(1, static_cast<int>(std::lround(img.height * scale)));
  Image<T> out(nw, nh, img.channels);
  for (int y = 0; y < nh; ++y) {
    int y0 = static_cast<int>(static_cast<double>(y) * img.height / nh);
    int y1 = static_cast<int>(static_cast<double>(y + 1) * img.height / nh);
    y1 = std::max(y1, y0 + 1);
    for (int x = 0; x < nw; ++x) {
      int x0 = static_cast<int>(static_cast<double>(x) * img.width / nw);
      int x1 = static_cast<int>(static_cast<double>(x + 1) * img.width / nw);
      x1 = std::max(x1, x0 + 1);
      for (int c = 0; c < img.channels; ++c) {
        double sum = 0.0;
        for (int yy = y0; yy < y1; ++yy) {
          for (int xx = x0; xx < x1; ++xx) {
            sum += static_cast<double>(img.at(yy, xx, c));
          }
        }
        out.at(y, x, c) = static_cast<T>(sum / ((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return out;
}

}  // namespace voxelstyle

#endif  // VOXELSTYLE_IMAGE_HPP_
