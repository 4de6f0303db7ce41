#include "ucad/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ucad/rng.hpp"

namespace ucad {
namespace {

double lattice_value(uint64_t seed, int64_t i, int64_t j) {
  Rng r = Rng(seed).fork(static_cast<uint64_t>(i), static_cast<uint64_t>(j));
  return r.uniform();
}

double scratch_distance2(const AnomalySpec& a, double x, double y) {
  const double dx = a.line_x1 - a.line_x0, dy = a.line_y1 - a.line_y0;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((x - a.line_x0) * dx + (y - a.line_y0) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double px = a.line_x0 + t * dx, py = a.line_y0 + t * dy;
  return (x - px) * (x - px) + (y - py) * (y - py);
}

bool scratch_hit(const AnomalySpec& a, int64_t x, int64_t y) {
  return scratch_distance2(a, static_cast<double>(x), static_cast<double>(y)) <=
         a.line_half_width * a.line_half_width;
}

bool paste_hit(const AnomalySpec& a, int64_t x, int64_t y) {
  return y >= a.y0 && y < a.y1 && x >= a.x0 && x < a.x1;
}

}  // namespace

std::string family_name(TextureFamily f) {
  switch (f) {
    case TextureFamily::kStripes: return "stripes";
    case TextureFamily::kChecker: return "checker";
    case TextureFamily::kBlobs: return "blobs";
    case TextureFamily::kValueNoise: return "value-noise";
    case TextureFamily::kGradient: return "gradient";
  }
  throw std::logic_error("unknown texture family");
}

TextureFamily family_from_name(const std::string& name) {
  if (name == "stripes") return TextureFamily::kStripes;
  if (name == "checker") return TextureFamily::kChecker;
  if (name == "blobs") return TextureFamily::kBlobs;
  if (name == "value-noise") return TextureFamily::kValueNoise;
  if (name == "gradient") return TextureFamily::kGradient;
  throw std::invalid_argument("unknown texture family: " + name);
}

double texture_value(const TextureParams& p, double x, double y, int64_t height,
                     int64_t width) {
  switch (p.family) {
    case TextureFamily::kStripes: {
      const double u = x * std::cos(p.angle) + y * std::sin(p.angle);
      const double s = 0.5 * (1.0 + std::sin(2.0 * M_PI * p.frequency * u + p.phase));
      return p.lo + (p.hi - p.lo) * s;
    }
    case TextureFamily::kChecker: {
      const int64_t cx = static_cast<int64_t>(std::floor(x / static_cast<double>(p.cell)));
      const int64_t cy = static_cast<int64_t>(std::floor(y / static_cast<double>(p.cell)));
      return ((cx + cy) & 1) == 0 ? p.hi : p.lo;
    }
    case TextureFamily::kBlobs: {
      Rng rng(p.texture_seed);
      double bump = 0.0;
      const double sigma = std::max(p.blob_radius * 0.5, 1e-6);
      for (int64_t b = 0; b < p.blob_count; ++b) {
        const double by = rng.uniform(0.0, static_cast<double>(height));
        const double bx = rng.uniform(0.0, static_cast<double>(width));
        const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
        bump = std::max(bump, std::exp(-0.5 * d2 / (sigma * sigma)));
      }
      return p.lo + (p.hi - p.lo) * bump;
    }
    case TextureFamily::kValueNoise: {
      const double gx = x / p.noise_scale, gy = y / p.noise_scale;
      const int64_t ix = static_cast<int64_t>(std::floor(gx));
      const int64_t iy = static_cast<int64_t>(std::floor(gy));
      const double fx = gx - static_cast<double>(ix), fy = gy - static_cast<double>(iy);
      const double v00 = lattice_value(p.texture_seed, iy, ix);
      const double v01 = lattice_value(p.texture_seed, iy, ix + 1);
      const double v10 = lattice_value(p.texture_seed, iy + 1, ix);
      const double v11 = lattice_value(p.texture_seed, iy + 1, ix + 1);
      const double top = v00 + (v01 - v00) * fx;
      const double bot = v10 + (v11 - v10) * fx;
      return p.lo + (p.hi - p.lo) * (top + (bot - top) * fy);
    }
    case TextureFamily::kGradient: {
      const double cs = std::cos(p.angle), sn = std::sin(p.angle);
      const double corners[4] = {0.0, (width - 1.0) * cs, (height - 1.0) * sn,
                                 (width - 1.0) * cs + (height - 1.0) * sn};
      const double dmin = *std::min_element(corners, corners + 4);
      const double dmax = *std::max_element(corners, corners + 4);
      const double d = x * cs + y * sn;
      const double s = (d - dmin) / std::max(dmax - dmin, 1e-9);
      return p.lo + (p.hi - p.lo) * std::clamp(s, 0.0, 1.0);
    }
  }
  throw std::logic_error("unknown texture family");
}

int64_t Mask::positive_count() const {
  int64_t n = 0;
  for (uint8_t v : values) n += v;
  return n;
}

void SceneSpec::validate() const {
  if (height < 1 || width < 1) throw std::invalid_argument("scene: empty image");
  if (decomp == DecompKind::kRectSplit) {
    if (rects.empty()) throw std::invalid_argument("scene: no regions");
    int64_t area = 0;
    for (const Rect& r : rects) {
      if (r.y0 < 0 || r.x0 < 0 || r.y1 > height || r.x1 > width || r.y0 >= r.y1 ||
          r.x0 >= r.x1) {
        throw std::invalid_argument("scene: region out of bounds");
      }
      area += (r.y1 - r.y0) * (r.x1 - r.x0);
    }
    if (area != height * width) {
      throw std::invalid_argument("scene: regions do not partition the image");
    }
    // Area equality plus pairwise disjointness would be the full check; the
    // generator only emits split trees, so overlap cannot occur there.
  } else {
    if (sites.empty()) throw std::invalid_argument("scene: no voronoi sites");
  }
  if (anomaly && anomaly->kind == AnomalySpec::Kind::kPastePatch) {
    const AnomalySpec& a = *anomaly;
    if (a.y0 < 0 || a.x0 < 0 || a.y1 > height || a.x1 > width || a.y0 >= a.y1 ||
        a.x0 >= a.x1) {
      throw std::invalid_argument("scene: paste rect out of bounds");
    }
  }
}

int32_t SceneSpec::region_label(int64_t y, int64_t x) const {
  if (decomp == DecompKind::kRectSplit) {
    for (size_t i = 0; i < rects.size(); ++i) {
      const Rect& r = rects[i];
      if (y >= r.y0 && y < r.y1 && x >= r.x0 && x < r.x1) {
        return static_cast<int32_t>(i);
      }
    }
    throw std::logic_error("scene: pixel not covered by any region");
  }
  int32_t best = 0;
  double best_d2 = 0.0;
  for (size_t i = 0; i < sites.size(); ++i) {
    const double dy = static_cast<double>(y) - sites[i].y;
    const double dx = static_cast<double>(x) - sites[i].x;
    const double d2 = dy * dy + dx * dx;
    if (i == 0 || d2 < best_d2) {
      best = static_cast<int32_t>(i);
      best_d2 = d2;
    }
  }
  return best;
}

LabelMap SceneSpec::rasterize_labels() const {
  validate();
  LabelMap map;
  map.height = height;
  map.width = width;
  map.labels.resize(static_cast<size_t>(height * width));
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      map.labels[y * width + x] = region_label(y, x);
    }
  }
  map.num_regions = static_cast<int32_t>(
      decomp == DecompKind::kRectSplit ? rects.size() : sites.size());
  return map;
}

Image SceneSpec::render() const {
  validate();
  Image img = Image::filled(height, width, 0.0);
  Rng noise(pixel_noise_seed);
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      const int32_t label = region_label(y, x);
      const TextureParams& tex = decomp == DecompKind::kRectSplit
                                     ? rects[static_cast<size_t>(label)].texture
                                     : sites[static_cast<size_t>(label)].texture;
      double v = texture_value(tex, static_cast<double>(x), static_cast<double>(y),
                               height, width);
      if (anomaly) {
        if (anomaly->kind == AnomalySpec::Kind::kPastePatch && paste_hit(*anomaly, x, y)) {
          // Local coordinates so the paste looks like a cut-out of the
          // foreign texture rather than a window into it.
          v = texture_value(anomaly->paste_texture, static_cast<double>(x - anomaly->x0),
                            static_cast<double>(y - anomaly->y0), anomaly->y1 - anomaly->y0,
                            anomaly->x1 - anomaly->x0);
        } else if (anomaly->kind == AnomalySpec::Kind::kScratch && scratch_hit(*anomaly, x, y)) {
          v += anomaly->line_delta;
        }
      }
      if (pixel_noise > 0.0) v += noise.uniform(-pixel_noise, pixel_noise);
      img.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

Mask SceneSpec::anomaly_mask() const {
  Mask mask;
  if (!anomaly) return mask;
  mask.height = height;
  mask.width = width;
  mask.values.assign(static_cast<size_t>(height * width), 0);
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) {
      const bool hit = anomaly->kind == AnomalySpec::Kind::kPastePatch
                           ? paste_hit(*anomaly, x, y)
                           : scratch_hit(*anomaly, x, y);
      mask.values[y * width + x] = hit ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace ucad
