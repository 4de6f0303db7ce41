#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ucad/image.hpp"

namespace ucad {

struct SceneSpec;

/// Per-pixel structure labels, values in 0..num_regions-1.
struct LabelMap {
  int64_t height = 0;
  int64_t width = 0;
  int32_t num_regions = 0;
  std::vector<int32_t> labels;  // row-major

  int32_t at(int64_t y, int64_t x) const { return labels[y * width + x]; }
};

/// Structure labels aligned to the patch grid of a feature map.
struct LabelGrid {
  int64_t grid_h = 0;
  int64_t grid_w = 0;
  std::vector<int32_t> labels;

  int32_t at(int64_t r, int64_t c) const { return labels[r * grid_w + c]; }
};

/// Ground-truth structure labels for a generated scene. The generator knows
/// the exact region decomposition, so this stands in for a learned segmenter
/// with zero label noise.
LabelMap segment_synthetic(const SceneSpec& scene);

/// Fallback for externally supplied images: quantize intensities into
/// quant_levels bins, then label 4-connected components in raster-scan order.
LabelMap segment_flood(const Image& image, int quant_levels);

/// Majority label per pixel block; ties break to the smallest label value.
LabelGrid downsample_labels(const LabelMap& map, int64_t grid_h, int64_t grid_w);

// Debug exchange format: P5 PGM with the label as the gray value.
void write_label_pgm(const LabelMap& map, const std::string& path);
LabelMap read_label_pgm(const std::string& path);

}  // namespace ucad
