#pragma once

#include <cstdint>
#include <vector>

namespace ucad {

/// Grayscale-or-multichannel raster, pixel values in [0,1], row-major with
/// channel-last layout: pixels[(y*width + x)*channels + c].
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 1;
  std::vector<double> pixels;

  double at(int64_t y, int64_t x, int64_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  double& at(int64_t y, int64_t x, int64_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }

  static Image filled(int64_t h, int64_t w, double value, int64_t channels = 1) {
    Image img;
    img.height = h;
    img.width = w;
    img.channels = channels;
    img.pixels.assign(static_cast<size_t>(h * w * channels), value);
    return img;
  }
};

}  // namespace ucad
