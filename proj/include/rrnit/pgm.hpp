#pragma once

#include <cctype>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrnit/vector_ops.hpp"

namespace rrnit {

/// Grayscale image with intensities normalized to [0, 1].
struct GrayImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector pixels;  // row-major
};

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok.empty() ? EOF : 0;
}

inline std::size_t pgm_read_size(std::istream& in, const char* what) {
  std::string tok;
  if (pgm_next_token(in, tok) == EOF) throw std::runtime_error(std::string("pgm: missing ") + what);
  const long long v = std::stoll(tok);
  if (v <= 0) throw std::runtime_error(std::string("pgm: nonpositive ") + what);
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Read a P2 (ASCII) or P5 (binary) PGM file; 16-bit P5 samples are
/// big-endian per the format.
inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  std::string magic;
  if (detail::pgm_next_token(in, magic) == EOF || (magic != "P2" && magic != "P5")) {
    throw std::runtime_error("pgm: " + path + " is not a P2/P5 file");
  }
  GrayImage img;
  img.cols = detail::pgm_read_size(in, "width");
  img.rows = detail::pgm_read_size(in, "height");
  const std::size_t maxval = detail::pgm_read_size(in, "maxval");
  if (maxval > 65535) throw std::runtime_error("pgm: maxval out of range in " + path);
  img.pixels.resize(img.rows * img.cols);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    std::string tok;
    for (double& px : img.pixels) {
      if (detail::pgm_next_token(in, tok) == EOF) throw std::runtime_error("pgm: truncated " + path);
      px = scale * static_cast<double>(std::stoll(tok));
    }
  } else {
    // single whitespace byte after maxval, then raw samples
    const bool wide = maxval > 255;
    for (double& px : img.pixels) {
      int hi = in.get();
      if (hi == EOF) throw std::runtime_error("pgm: truncated " + path);
      long v = hi;
      if (wide) {
        const int lo = in.get();
        if (lo == EOF) throw std::runtime_error("pgm: truncated " + path);
        v = (v << 8) | lo;
      }
      px = scale * static_cast<double>(v);
    }
  }
  return img;
}

/// Write an ASCII P2 file, clamping intensities to [0, 1].
inline void write_pgm(const std::string& path, std::size_t rows, std::size_t cols,
                      const Vector& pixels, std::size_t maxval = 255) {
  if (pixels.size() != rows * cols) throw std::invalid_argument("write_pgm: size mismatch");
  if (maxval == 0 || maxval > 65535) throw std::invalid_argument("write_pgm: bad maxval");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P2\n" << cols << ' ' << rows << '\n' << maxval << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double v = pixels[r * cols + c];
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      out << static_cast<long>(v * static_cast<double>(maxval) + 0.5);
      out << (c + 1 == cols ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace rrnit
