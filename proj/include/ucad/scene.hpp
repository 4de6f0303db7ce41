#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ucad/image.hpp"
#include "ucad/segmenter.hpp"

namespace ucad {

enum class TextureFamily { kStripes, kChecker, kBlobs, kValueNoise, kGradient };

std::string family_name(TextureFamily f);
TextureFamily family_from_name(const std::string& name);

/// Parameters for one procedural texture patch. Unused fields are ignored by
/// families that do not consume them.
struct TextureParams {
  TextureFamily family = TextureFamily::kStripes;
  double frequency = 0.25;   // stripes: cycles per pixel
  double angle = 0.0;        // stripes/gradient: radians
  double phase = 0.0;        // stripes
  int64_t cell = 8;          // checker cell edge in pixels
  int64_t blob_count = 8;
  double blob_radius = 5.0;
  double noise_scale = 12.0;  // value-noise lattice spacing in pixels
  uint64_t texture_seed = 0;  // blobs / value-noise lattice
  double lo = 0.15;
  double hi = 0.85;
};

/// Texture intensity at (x, y), in [0,1]. Pure and deterministic.
double texture_value(const TextureParams& params, double x, double y,
                     int64_t height, int64_t width);

struct AnomalySpec {
  enum class Kind { kPastePatch, kScratch };
  Kind kind = Kind::kPastePatch;
  // paste: half-open rect filled with a foreign texture
  int64_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  TextureParams paste_texture;
  // scratch: bright line segment
  double line_y0 = 0, line_x0 = 0, line_y1 = 0, line_x1 = 0;
  double line_half_width = 1.0;
  double line_delta = 0.5;
};

struct Mask {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<uint8_t> values;  // 0/1

  bool empty() const { return values.empty(); }
  int64_t positive_count() const;
};

enum class DecompKind { kRectSplit, kVoronoi };

/// A fully determined synthetic scene: a partition of the image into textured
/// regions plus an optional pixel-annotated anomaly. Rendering, the label
/// ground truth, and the anomaly mask are all pure functions of the spec.
struct SceneSpec {
  int64_t height = 64;
  int64_t width = 64;
  DecompKind decomp = DecompKind::kRectSplit;

  struct Rect {
    int64_t y0, x0, y1, x1;  // half-open
    TextureParams texture;
  };
  std::vector<Rect> rects;  // must partition the image (rect mode)

  struct Site {
    double y, x;
    TextureParams texture;
  };
  std::vector<Site> sites;  // nearest-site partition (voronoi mode)

  std::optional<AnomalySpec> anomaly;
  double pixel_noise = 0.0;
  uint64_t pixel_noise_seed = 0;

  int32_t region_label(int64_t y, int64_t x) const;
  LabelMap rasterize_labels() const;
  Image render() const;
  Mask anomaly_mask() const;  // empty when no anomaly

  /// Throws unless the rects exactly partition the image (rect mode) or at
  /// least one site exists (voronoi mode).
  void validate() const;
};

}  // namespace ucad
