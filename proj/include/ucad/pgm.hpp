#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ucad/image.hpp"

namespace ucad {

/// Binary (P5) 8-bit PGM. Gray values map linearly to [0,1].
void write_pgm(const Image& image, const std::string& path);
Image read_pgm(const std::string& path);

/// Raw byte-level helpers shared by the label-map and heatmap writers.
void write_pgm_bytes(const std::vector<uint8_t>& gray, int64_t height,
                     int64_t width, const std::string& path);
std::vector<uint8_t> read_pgm_bytes(const std::string& path, int64_t& height,
                                    int64_t& width);

}  // namespace ucad
