#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rrnit/linear_operator.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

namespace detail {

using Cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform on a contiguous line.
inline void fft_pow2(Cplx* a, std::size_t n, bool inverse) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
    const Cplx step(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Cplx u = a[i + j];
        const Cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

/// Direct O(n^2) transform for lengths that are not powers of two. Image
/// sides at desk scale keep this affordable.
inline void dft_direct(Cplx* a, std::size_t n, bool inverse) {
  std::vector<Cplx> out(n, Cplx(0.0, 0.0));
  const double sgn = inverse ? 2.0 : -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    Cplx s(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sgn * pi * static_cast<double>(k * j) / static_cast<double>(n);
      s += a[j] * Cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  for (std::size_t k = 0; k < n; ++k) a[k] = out[k];
}

inline void dft_line(Cplx* a, std::size_t n, bool inverse) {
  if (n <= 1) return;
  if (is_pow2(n)) {
    fft_pow2(a, n, inverse);
  } else {
    dft_direct(a, n, inverse);
  }
}

/// 2-D transform over a row-major h x w grid. The inverse includes the
/// 1/(h*w) normalization.
inline void dft_2d(std::vector<Cplx>& g, std::size_t h, std::size_t w, bool inverse) {
  for (std::size_t r = 0; r < h; ++r) dft_line(g.data() + r * w, w, inverse);
  std::vector<Cplx> col(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) col[r] = g[r * w + c];
    dft_line(col.data(), h, inverse);
    for (std::size_t r = 0; r < h; ++r) g[r * w + c] = col[r];
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(h * w);
    for (Cplx& z : g) z *= scale;
  }
}

inline std::size_t wrap_index(long i, std::size_t n) {
  const long ln = static_cast<long>(n);
  long m = i % ln;
  if (m < 0) m += ln;
  return static_cast<std::size_t>(m);
}

}  // namespace detail

/// Convolution stencil with odd dimensions so the center is well defined.
struct Kernel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t a, std::size_t b) const { return values[a * cols + b]; }
};

/// Truncated Gaussian point-spread function, normalized to unit sum.
inline Kernel gaussian_psf(std::size_t size, double sigma) {
  if (size == 0 || size % 2 == 0) {
    throw std::invalid_argument("gaussian_psf: size must be odd and positive");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_psf: sigma must be positive");
  Kernel k;
  k.rows = k.cols = size;
  k.values.resize(size * size);
  const double c = static_cast<double>(size / 2);
  double sum = 0.0;
  for (std::size_t a = 0; a < size; ++a) {
    for (std::size_t b = 0; b < size; ++b) {
      const double da = static_cast<double>(a) - c;
      const double db = static_cast<double>(b) - c;
      const double v = std::exp(-(da * da + db * db) / (2.0 * sigma * sigma));
      k.values[a * size + b] = v;
      sum += v;
    }
  }
  for (double& v : k.values) v /= sum;
  return k;
}

enum class Boundary { periodic, zero_pad };

/// 2-D blurring operator acting on row-major images flattened to vectors.
/// With periodic boundary the operator diagonalizes in the discrete Fourier
/// basis, which supplies an exact shifted-normal solve; the spatial apply and
/// adjoint below stay independent of that machinery so the two can cross-check
/// each other.
class ConvolutionOperator : public LinearOperator {
 public:
  ConvolutionOperator(Kernel kernel, std::size_t image_rows, std::size_t image_cols,
                      Boundary boundary = Boundary::periodic)
      : kernel_(std::move(kernel)), h_(image_rows), w_(image_cols), boundary_(boundary) {
    if (h_ == 0 || w_ == 0) {
      throw std::invalid_argument("ConvolutionOperator: image dimensions must be positive");
    }
    if (kernel_.rows == 0 || kernel_.cols == 0 || kernel_.rows % 2 == 0 ||
        kernel_.cols % 2 == 0) {
      throw std::invalid_argument("ConvolutionOperator: kernel dimensions must be odd");
    }
    if (kernel_.values.size() != kernel_.rows * kernel_.cols) {
      throw std::invalid_argument("ConvolutionOperator: kernel values size mismatch");
    }
    if (boundary_ == Boundary::periodic) build_symbol();
  }

  std::size_t domain_dim() const override { return h_ * w_; }
  std::size_t range_dim() const override { return h_ * w_; }

  std::size_t image_rows() const { return h_; }
  std::size_t image_cols() const { return w_; }
  Boundary boundary() const { return boundary_; }
  const Kernel& kernel() const { return kernel_; }

  Vector apply(const Vector& x) const override {
    check_domain(x);
    return convolve(x, /*adjoint=*/false);
  }

  Vector apply_adjoint(const Vector& r) const override {
    check_range(r);
    return convolve(r, /*adjoint=*/true);
  }

  /// Exact solve of (alpha*I + A*A) x = b through the Fourier symbol;
  /// available for the periodic boundary only.
  bool solve_shifted_normal(double alpha, const Vector& b, Vector& x) const override {
    if (boundary_ != Boundary::periodic) return false;
    if (b.size() != domain_dim()) {
      throw std::invalid_argument("solve_shifted_normal: dimension mismatch");
    }
    std::vector<detail::Cplx> g(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) g[i] = detail::Cplx(b[i], 0.0);
    detail::dft_2d(g, h_, w_, false);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double denom = alpha + symbol_sq_[i];
      // A zero denominator means alpha = 0 at a frequency the blur kills;
      // take the minimal-norm component there.
      g[i] = denom > 0.0 ? g[i] / denom : detail::Cplx(0.0, 0.0);
    }
    detail::dft_2d(g, h_, w_, true);
    x.assign(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) x[i] = g[i].real();
    return true;
  }

 private:
  Vector convolve(const Vector& in, bool adjoint) const {
    Vector out(h_ * w_, 0.0);
    const long ch = static_cast<long>(kernel_.rows / 2);
    const long cw = static_cast<long>(kernel_.cols / 2);
    for (std::size_t r = 0; r < h_; ++r) {
      for (std::size_t c = 0; c < w_; ++c) {
        double s = 0.0;
        for (std::size_t a = 0; a < kernel_.rows; ++a) {
          for (std::size_t b = 0; b < kernel_.cols; ++b) {
            const long dr = static_cast<long>(a) - ch;
            const long dc = static_cast<long>(b) - cw;
            // Forward blur gathers from (r - dr, c - dc); the adjoint
            // scatters, which equals gathering from (r + dr, c + dc).
            const long rr = adjoint ? static_cast<long>(r) + dr : static_cast<long>(r) - dr;
            const long cc = adjoint ? static_cast<long>(c) + dc : static_cast<long>(c) - dc;
            double v = 0.0;
            if (boundary_ == Boundary::periodic) {
              v = in[detail::wrap_index(rr, h_) * w_ + detail::wrap_index(cc, w_)];
            } else {
              if (rr < 0 || cc < 0 || rr >= static_cast<long>(h_) || cc >= static_cast<long>(w_)) {
                continue;
              }
              v = in[static_cast<std::size_t>(rr) * w_ + static_cast<std::size_t>(cc)];
            }
            s += kernel_.at(a, b) * v;
          }
        }
        out[r * w_ + c] = s;
      }
    }
    return out;
  }

  void build_symbol() {
    // Embed the kernel on the image grid with wrap-around so entries of a
    // stencil wider than the image fold together, then take |DFT|^2.
    std::vector<detail::Cplx> g(h_ * w_, detail::Cplx(0.0, 0.0));
    const long ch = static_cast<long>(kernel_.rows / 2);
    const long cw = static_cast<long>(kernel_.cols / 2);
    for (std::size_t a = 0; a < kernel_.rows; ++a) {
      for (std::size_t b = 0; b < kernel_.cols; ++b) {
        const std::size_t r = detail::wrap_index(static_cast<long>(a) - ch, h_);
        const std::size_t c = detail::wrap_index(static_cast<long>(b) - cw, w_);
        g[r * w_ + c] += detail::Cplx(kernel_.at(a, b), 0.0);
      }
    }
    detail::dft_2d(g, h_, w_, false);
    symbol_sq_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) symbol_sq_[i] = std::norm(g[i]);
  }

  Kernel kernel_;
  std::size_t h_, w_;
  Boundary boundary_;
  std::vector<double> symbol_sq_;
};

}  // namespace rrnit
