#pragma once

// Fast correlation kernels for the cosine/sine atom banks.
//
// The banks evaluate, for a real input r of length N and bank size M,
//
//   cos bank:  C(n) = sum_i r(i) cos(pi (2i-1)(n-1) / 2M) / wc(n),  n = 1..M
//   sin bank:  S(n) = sum_i r(i) sin(pi (2i-1) n / 2M)     / ws(n),  n = 1..M
//
// Both are read off one length-2M DFT of the zero-padded input,
//   Z(m) = exp(-i pi m / 2M) * sum_{t=0}^{N-1} r(t) exp(-2 pi i t m / 2M),
// with C = Re Z(n-1) and S = -Im Z(n).  When 2M is a power of two the DFT is a
// plain radix-2 FFT; otherwise it is evaluated as a chirp-z convolution on a
// power-of-two grid.

#include <spmp/types.hpp>

#include <bit>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace spmp::transforms {

using Complex = std::complex<double>;

/// sin(pi * num / den) with exact integer range reduction, den > 0.
inline double sin_pi_frac(std::int64_t num, std::int64_t den) {
  const std::int64_t period = 2 * den;
  std::int64_t p = num % period;
  if (p < 0) p += period;
  double sign = 1.0;
  if (p >= den) {
    p -= den;
    sign = -1.0;
  }
  if (2 * p > den) p = den - p;
  if (p == 0) return 0.0;
  if (2 * p == den) return sign;
  return sign * std::sin(std::numbers::pi * static_cast<double>(p) / static_cast<double>(den));
}

/// cos(pi * num / den) with exact integer range reduction, den > 0.
inline double cos_pi_frac(std::int64_t num, std::int64_t den) {
  return sin_pi_frac(2 * num + den, 2 * den);
}

/// In-place iterative radix-2 complex FFT of a fixed power-of-two length.
class Radix2Fft {
 public:
  explicit Radix2Fft(std::size_t n) : n_(n) {
    if (n == 0 || !std::has_single_bit(n)) throw PreconditionError("Radix2Fft: length must be a power of two");
    twiddles_.resize(n / 2);
    const auto len = static_cast<std::int64_t>(n);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const auto kk = static_cast<std::int64_t>(k);
      // exp(-2 pi i k / n)
      twiddles_[k] = Complex(cos_pi_frac(2 * kk, len), -sin_pi_frac(2 * kk, len));
    }
    bitrev_.resize(n);
    const int bits = std::countr_zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<Complex> data) const { run(data, false); }
  /// Unnormalized inverse; divide by size() to invert forward().
  void inverse(std::span<Complex> data) const { run(data, true); }

 private:
  void run(std::span<Complex> a, bool inverse) const {
    if (a.size() != n_) throw PreconditionError("Radix2Fft: buffer length mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          Complex w = twiddles_[k * stride];
          if (inverse) w = std::conj(w);
          const Complex u = a[start + k];
          const Complex v = a[start + k + half] * w;
          a[start + k] = u + v;
          a[start + k + half] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> bitrev_;
};

/// Evaluates the first `outputs` bins of a length-L DFT,
///   X(m) = sum_{t=0}^{n-1} x(t) exp(-2 pi i t m / L),
/// of an input of length n (zero-padded when n < L, wrapped when n > L).
class PartialDft {
 public:
  PartialDft(std::size_t input_length, std::size_t transform_length, std::size_t outputs)
      : n_(input_length),
        length_(transform_length),
        outputs_(outputs),
        direct_(is_direct(input_length, transform_length)),
        fft_(grid_length(input_length, transform_length, outputs)) {
    if (direct_) return;
    // chirp-z: t*m = (t^2 + m^2 - (m - t)^2) / 2
    const std::size_t chirp_len = std::max(n_, outputs_);
    chirp_.resize(chirp_len);
    const auto two_l = static_cast<std::int64_t>(2 * length_);
    const auto l = static_cast<std::int64_t>(length_);
    for (std::size_t t = 0; t < chirp_len; ++t) {
      const auto tt = static_cast<std::int64_t>(t);
      const std::int64_t sq = (tt % two_l) * (tt % two_l) % two_l;
      // exp(-i pi t^2 / L)
      chirp_[t] = Complex(cos_pi_frac(sq, l), -sin_pi_frac(sq, l));
    }
    const std::size_t grid = fft_.size();
    kernel_.assign(grid, Complex(0.0, 0.0));
    for (std::size_t m = 0; m < outputs_; ++m) kernel_[m] = std::conj(chirp_[m]);
    for (std::size_t s = 1; s < n_; ++s) kernel_[grid - s] = std::conj(chirp_[s]);
    fft_.forward(kernel_);
  }

  std::size_t input_length() const noexcept { return n_; }
  std::size_t transform_length() const noexcept { return length_; }
  std::size_t outputs() const noexcept { return outputs_; }
  /// Length of the power-of-two FFT used internally.
  std::size_t fft_length() const noexcept { return fft_.size(); }

  std::vector<Complex> operator()(std::span<const Complex> x) const {
    if (x.size() != n_) throw PreconditionError("PartialDft: input length mismatch");
    const std::size_t grid = fft_.size();
    std::vector<Complex> buf(grid, Complex(0.0, 0.0));
    const Radix2Fft& fft = fft_;
    if (direct_) {
      std::copy(x.begin(), x.end(), buf.begin());
      fft.forward(buf);
      buf.resize(outputs_);
      return buf;
    }
    for (std::size_t t = 0; t < n_; ++t) buf[t] = x[t] * chirp_[t];
    fft.forward(buf);
    for (std::size_t i = 0; i < grid; ++i) buf[i] *= kernel_[i];
    fft.inverse(buf);
    const double scale = 1.0 / static_cast<double>(grid);
    std::vector<Complex> out(outputs_);
    for (std::size_t m = 0; m < outputs_; ++m) out[m] = buf[m] * scale * chirp_[m];
    return out;
  }

  std::vector<Complex> operator()(std::span<const double> x) const {
    std::vector<Complex> cx(x.begin(), x.end());
    return (*this)(std::span<const Complex>(cx));
  }

 private:
  static bool is_direct(std::size_t n, std::size_t length) {
    if (n == 0 || length == 0) throw PreconditionError("PartialDft: zero length");
    return std::has_single_bit(length) && n <= length;
  }
  static std::size_t grid_length(std::size_t n, std::size_t length, std::size_t outputs) {
    if (outputs == 0) throw PreconditionError("PartialDft: zero outputs");
    return is_direct(n, length) ? length : std::bit_ceil(n + outputs - 1);
  }

  std::size_t n_;
  std::size_t length_;
  std::size_t outputs_;
  bool direct_;
  Radix2Fft fft_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_;
};

/// Full forward DFT of arbitrary length.
inline std::vector<Complex> forward_fft(std::span<const Complex> x) {
  return PartialDft(x.size(), x.size(), x.size())(x);
}

/// Inverse DFT of arbitrary length, normalized so inverse_fft(forward_fft(x)) == x.
inline std::vector<Complex> inverse_fft(std::span<const Complex> spectrum) {
  std::vector<Complex> conj(spectrum.begin(), spectrum.end());
  for (auto& c : conj) c = std::conj(c);
  auto out = forward_fft(conj);
  const double scale = 1.0 / static_cast<double>(spectrum.size());
  for (auto& c : out) c = std::conj(c) * scale;
  return out;
}

/// Non-redundant half spectrum (n/2 + 1 bins) of a real sequence.
inline std::vector<Complex> forward_real_fft(std::span<const double> x) {
  if (x.empty()) throw PreconditionError("forward_real_fft: empty input");
  return PartialDft(x.size(), x.size(), x.size() / 2 + 1)(x);
}

/// Reconstructs a real sequence of length n from its half spectrum.
inline std::vector<double> inverse_real_fft(std::span<const Complex> half, std::size_t n) {
  if (n == 0 || half.size() != n / 2 + 1) throw PreconditionError("inverse_real_fft: spectrum size mismatch");
  std::vector<Complex> full(n);
  for (std::size_t m = 0; m < half.size(); ++m) full[m] = half[m];
  for (std::size_t m = half.size(); m < n; ++m) full[m] = std::conj(half[n - m]);
  auto z = inverse_fft(full);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i].real();
  return out;
}

// ---------------------------------------------------------------------------
// Atom norms of the trigonometric banks
// ---------------------------------------------------------------------------

/// Brute-force norm of the n-th cosine atom before normalization.
inline double cos_weight_bruteforce(std::size_t n, std::size_t N, std::size_t M) {
  const auto den = static_cast<std::int64_t>(2 * M);
  double s = 0.0;
  for (std::size_t i = 1; i <= N; ++i) {
    const double c = cos_pi_frac(static_cast<std::int64_t>((2 * i - 1) * (n - 1)), den);
    s += c * c;
  }
  return std::sqrt(s);
}

/// Brute-force norm of the n-th sine atom before normalization.
inline double sin_weight_bruteforce(std::size_t n, std::size_t N, std::size_t M) {
  const auto den = static_cast<std::int64_t>(2 * M);
  double s = 0.0;
  for (std::size_t i = 1; i <= N; ++i) {
    const double v = sin_pi_frac(static_cast<std::int64_t>((2 * i - 1) * n), den);
    s += v * v;
  }
  return std::sqrt(s);
}

/// Closed-form wc(n).  1 - cos(2a) is evaluated as 2 sin^2(a).
inline double cos_weight(std::size_t n, std::size_t N, std::size_t M) {
  if (n == 1) return std::sqrt(static_cast<double>(N));
  const auto m = static_cast<std::int64_t>(M);
  const auto p = static_cast<std::int64_t>(n - 1);
  if (p % m == 0) return cos_weight_bruteforce(n, N, M);
  const double sa = sin_pi_frac(p, m);
  const double sb = sin_pi_frac(2 * p * static_cast<std::int64_t>(N), m);
  return std::sqrt(0.5 * static_cast<double>(N) + sa * sb / (4.0 * sa * sa));
}

/// Closed-form ws(n); n = M (and any n = 0 mod M) falls back to summation.
inline double sin_weight(std::size_t n, std::size_t N, std::size_t M) {
  const auto m = static_cast<std::int64_t>(M);
  const auto p = static_cast<std::int64_t>(n);
  if (p % m == 0) return sin_weight_bruteforce(n, N, M);
  const double sa = sin_pi_frac(p, m);
  const double sb = sin_pi_frac(2 * p * static_cast<std::int64_t>(N), m);
  return std::sqrt(0.5 * static_cast<double>(N) - sa * sb / (4.0 * sa * sa));
}

// ---------------------------------------------------------------------------
// Bank plan
// ---------------------------------------------------------------------------

/// Precomputed tables for the cosine and sine banks of size M on inputs of length N.
class TransformPlan {
 public:
  TransformPlan(std::size_t N, std::size_t M) : N_(N), M_(M), dft_(N, 2 * M, M + 1) {
    if (N == 0 || M == 0) throw PreconditionError("TransformPlan: N and M must be positive");
    cos_weights_.resize(M);
    sin_weights_.resize(M);
    for (std::size_t n = 1; n <= M; ++n) {
      cos_weights_[n - 1] = cos_weight(n, N, M);
      sin_weights_[n - 1] = sin_weight(n, N, M);
      if (!(cos_weights_[n - 1] > 0.0) || !(sin_weights_[n - 1] > 0.0)) {
        throw PreconditionError("TransformPlan: degenerate atom for this (N, M)");
      }
    }
    phase_.resize(M + 1);
    const auto den = static_cast<std::int64_t>(2 * M);
    for (std::size_t m = 0; m <= M; ++m) {
      const auto mm = static_cast<std::int64_t>(m);
      phase_[m] = Complex(cos_pi_frac(mm, den), -sin_pi_frac(mm, den));
    }
  }

  std::size_t N() const noexcept { return N_; }
  std::size_t M() const noexcept { return M_; }
  /// Length of the DFT grid the banks are sampled from (always 2M).
  std::size_t transform_length() const noexcept { return dft_.transform_length(); }
  /// Power-of-two length actually transformed.
  std::size_t fft_length() const noexcept { return dft_.fft_length(); }
  std::span<const double> cos_weights() const noexcept { return cos_weights_; }
  std::span<const double> sin_weights() const noexcept { return sin_weights_; }

  std::vector<double> cos_bank(std::span<const double> r) const {
    std::vector<double> c(M_), s(M_);
    both_banks(r, c, s);
    return c;
  }

  std::vector<double> sin_bank(std::span<const double> r) const {
    std::vector<double> c(M_), s(M_);
    both_banks(r, c, s);
    return s;
  }

  /// Fills both banks from a single transform.
  void both_banks(std::span<const double> r, std::span<double> cos_out, std::span<double> sin_out) const {
    if (r.size() != N_) throw PreconditionError("TransformPlan: input length mismatch");
    if (cos_out.size() != M_ || sin_out.size() != M_) throw PreconditionError("TransformPlan: output size mismatch");
    const auto z = dft_(r);
    for (std::size_t n = 1; n <= M_; ++n) {
      cos_out[n - 1] = (z[n - 1] * phase_[n - 1]).real() / cos_weights_[n - 1];
      sin_out[n - 1] = -(z[n] * phase_[n]).imag() / sin_weights_[n - 1];
    }
  }

  /// O(N*M) direct evaluation of the cosine bank.
  std::vector<double> naive_cos_bank(std::span<const double> r) const {
    if (r.size() != N_) throw PreconditionError("TransformPlan: input length mismatch");
    std::vector<double> out(M_);
    const auto den = static_cast<std::int64_t>(2 * M_);
    for (std::size_t n = 1; n <= M_; ++n) {
      double s = 0.0;
      for (std::size_t i = 1; i <= N_; ++i) {
        s += r[i - 1] * cos_pi_frac(static_cast<std::int64_t>((2 * i - 1) * (n - 1)), den);
      }
      out[n - 1] = s / cos_weights_[n - 1];
    }
    return out;
  }

  /// O(N*M) direct evaluation of the sine bank.
  std::vector<double> naive_sin_bank(std::span<const double> r) const {
    if (r.size() != N_) throw PreconditionError("TransformPlan: input length mismatch");
    std::vector<double> out(M_);
    const auto den = static_cast<std::int64_t>(2 * M_);
    for (std::size_t n = 1; n <= M_; ++n) {
      double s = 0.0;
      for (std::size_t i = 1; i <= N_; ++i) {
        s += r[i - 1] * sin_pi_frac(static_cast<std::int64_t>((2 * i - 1) * n), den);
      }
      out[n - 1] = s / sin_weights_[n - 1];
    }
    return out;
  }

 private:
  std::size_t N_;
  std::size_t M_;
  PartialDft dft_;
  std::vector<double> cos_weights_;
  std::vector<double> sin_weights_;
  std::vector<Complex> phase_;  // exp(-i pi m / 2M)
};

}  // namespace spmp::transforms
