#include "ucad/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "ucad/pgm.hpp"
#include "ucad/scene.hpp"

namespace ucad {

LabelMap segment_synthetic(const SceneSpec& scene) { return scene.rasterize_labels(); }

LabelMap segment_flood(const Image& image, int quant_levels) {
  if (quant_levels < 2) throw std::invalid_argument("segment_flood: quant_levels must be >= 2");
  if (image.channels != 1) throw std::invalid_argument("segment_flood: grayscale only");
  const int64_t h = image.height, w = image.width;

  std::vector<int> bins(static_cast<size_t>(h * w));
  for (int64_t i = 0; i < h * w; ++i) {
    const int b = static_cast<int>(std::floor(image.pixels[i] * quant_levels));
    bins[i] = std::clamp(b, 0, quant_levels - 1);
  }

  LabelMap out;
  out.height = h;
  out.width = w;
  out.labels.assign(static_cast<size_t>(h * w), -1);
  int32_t next_label = 0;
  std::deque<int64_t> queue;
  for (int64_t start = 0; start < h * w; ++start) {
    if (out.labels[start] != -1) continue;
    const int bin = bins[start];
    const int32_t label = next_label++;
    out.labels[start] = label;
    queue.push_back(start);
    while (!queue.empty()) {
      const int64_t idx = queue.front();
      queue.pop_front();
      const int64_t y = idx / w, x = idx % w;
      const int64_t neighbors[4] = {idx - w, idx + w, idx - 1, idx + 1};
      const bool ok[4] = {y > 0, y + 1 < h, x > 0, x + 1 < w};
      for (int n = 0; n < 4; ++n) {
        if (ok[n] && out.labels[neighbors[n]] == -1 && bins[neighbors[n]] == bin) {
          out.labels[neighbors[n]] = label;
          queue.push_back(neighbors[n]);
        }
      }
    }
  }
  out.num_regions = next_label;
  return out;
}

LabelGrid downsample_labels(const LabelMap& map, int64_t grid_h, int64_t grid_w) {
  if (grid_h < 1 || grid_w < 1 || map.height % grid_h != 0 || map.width % grid_w != 0) {
    throw std::invalid_argument("downsample_labels: extents not divisible by grid");
  }
  const int64_t bh = map.height / grid_h, bw = map.width / grid_w;
  LabelGrid grid;
  grid.grid_h = grid_h;
  grid.grid_w = grid_w;
  grid.labels.resize(static_cast<size_t>(grid_h * grid_w));
  std::vector<int64_t> counts(static_cast<size_t>(std::max<int32_t>(map.num_regions, 1)));
  for (int64_t r = 0; r < grid_h; ++r) {
    for (int64_t c = 0; c < grid_w; ++c) {
      std::fill(counts.begin(), counts.end(), 0);
      for (int64_t y = r * bh; y < (r + 1) * bh; ++y) {
        for (int64_t x = c * bw; x < (c + 1) * bw; ++x) {
          ++counts[static_cast<size_t>(map.at(y, x))];
        }
      }
      int32_t best = 0;
      // Scanning upward keeps ties on the smallest label.
      for (int32_t l = 1; l < static_cast<int32_t>(counts.size()); ++l) {
        if (counts[l] > counts[best]) best = l;
      }
      grid.labels[r * grid_w + c] = best;
    }
  }
  return grid;
}

void write_label_pgm(const LabelMap& map, const std::string& path) {
  if (map.num_regions > 256) {
    throw std::invalid_argument("label pgm: more than 256 regions");
  }
  std::vector<uint8_t> gray(map.labels.size());
  for (size_t i = 0; i < gray.size(); ++i) gray[i] = static_cast<uint8_t>(map.labels[i]);
  write_pgm_bytes(gray, map.height, map.width, path);
}

LabelMap read_label_pgm(const std::string& path) {
  LabelMap map;
  const std::vector<uint8_t> gray = read_pgm_bytes(path, map.height, map.width);
  map.labels.resize(gray.size());
  int32_t max_label = 0;
  for (size_t i = 0; i < gray.size(); ++i) {
    map.labels[i] = gray[i];
    max_label = std::max(max_label, map.labels[i]);
  }
  map.num_regions = max_label + 1;
  return map;
}

}  // namespace ucad
