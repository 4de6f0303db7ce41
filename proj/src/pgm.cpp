#include "ucad/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ucad {
namespace {

int read_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines, then reads one integer.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("pgm: truncated header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw std::runtime_error("pgm: malformed header");
  return value;
}

}  // namespace

void write_pgm_bytes(const std::vector<uint8_t>& gray, int64_t height,
                     int64_t width, const std::string& path) {
  if (static_cast<int64_t>(gray.size()) != height * width) {
    throw std::invalid_argument("pgm: byte buffer size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot open " + path + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

std::vector<uint8_t> read_pgm_bytes(const std::string& path, int64_t& height,
                                    int64_t& width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a P5 file: " + path);
  width = read_pgm_token(in);
  height = read_pgm_token(in);
  const int maxval = read_pgm_token(in);
  if (maxval != 255) throw std::runtime_error("pgm: only 8-bit maxval 255 supported");
  std::vector<uint8_t> gray(static_cast<size_t>(height * width));
  in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (in.gcount() != static_cast<std::streamsize>(gray.size())) {
    throw std::runtime_error("pgm: truncated pixel data in " + path);
  }
  return gray;
}

void write_pgm(const Image& image, const std::string& path) {
  if (image.channels != 1) throw std::invalid_argument("pgm: grayscale only");
  std::vector<uint8_t> gray(static_cast<size_t>(image.height * image.width));
  for (size_t i = 0; i < gray.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    gray[i] = static_cast<uint8_t>(std::lround(v * 255.0));
  }
  write_pgm_bytes(gray, image.height, image.width, path);
}

Image read_pgm(const std::string& path) {
  int64_t h = 0, w = 0;
  const std::vector<uint8_t> gray = read_pgm_bytes(path, h, w);
  Image img;
  img.height = h;
  img.width = w;
  img.channels = 1;
  img.pixels.resize(gray.size());
  for (size_t i = 0; i < gray.size(); ++i) {
    img.pixels[i] = static_cast<double>(gray[i]) / 255.0;
  }
  return img;
}

}  // namespace ucad
