#pragma once

#include <spmp/transforms.hpp>
#include <spmp/types.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace spmp {

/// An indexed family of unit-norm atoms in R^N.
///
/// `inner(a, b)` is the Gram entry <d_a, d_b>.  Dictionaries that can evaluate
/// it in O(1) advertise `has_fast_inner`; pursuit code then updates selected
/// correlations incrementally instead of caching a Gram block.
template <class D>
concept Dictionary = requires(const D& d, AtomIndex i, std::span<const double> r,
                              std::span<const AtomIndex> subset, std::span<double> out) {
  { d.dimension() } -> std::convertible_to<std::size_t>;
  { d.size() } -> std::convertible_to<std::size_t>;
  { d.atom(i) } -> std::same_as<Signal>;
  d.fill_atom(i, out);
  { d.correlate_all(r) } -> std::same_as<std::vector<double>>;
  { d.correlate_subset(r, subset) } -> std::same_as<std::vector<double>>;
  { d.inner(i, i) } -> std::convertible_to<double>;
  { D::has_fast_inner } -> std::convertible_to<bool>;
};

/// Result of an argmax-|correlation| scan.
struct Correlation {
  AtomIndex index;
  double value = 0.0;  // signed <d_index, r>
  double magnitude() const { return std::abs(value); }
};

/// Position of the largest |v[i]|; on ties the first position wins.
inline std::size_t argmax_abs(std::span<const double> v) {
  if (v.empty()) throw PreconditionError("argmax_abs: empty input");
  std::size_t best = 0;
  double best_mag = std::abs(v[0]);
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  return best;
}

/// Atom maximizing |<d_n, r>| over the whole dictionary (ties: smallest index).
template <Dictionary D>
Correlation max_correlation(const D& dict, std::span<const double> r) {
  if (r.size() != dict.dimension()) throw PreconditionError("max_correlation: dimension mismatch");
  const auto corr = dict.correlate_all(r);
  const std::size_t best = argmax_abs(corr);
  return {AtomIndex::from_zero_based(best), corr[best]};
}

/// Atom maximizing |<d_n, r>| over `allowed` (ties: smallest atom index).
template <Dictionary D>
Correlation max_correlation(const D& dict, std::span<const double> r, std::span<const AtomIndex> allowed) {
  if (allowed.empty()) throw PreconditionError("max_correlation: empty allowed set");
  if (r.size() != dict.dimension()) throw PreconditionError("max_correlation: dimension mismatch");
  for (AtomIndex a : allowed) check_index(a, dict.size());
  const auto corr = dict.correlate_subset(r, allowed);
  std::size_t best = 0;
  for (std::size_t i = 1; i < allowed.size(); ++i) {
    const double m = std::abs(corr[i]);
    const double b = std::abs(corr[best]);
    if (m > b || (m == b && allowed[i] < allowed[best])) best = i;
  }
  return {allowed[best], corr[best]};
}

// ---------------------------------------------------------------------------
// Explicit matrix dictionary
// ---------------------------------------------------------------------------

/// Dictionary stored as an N x M column-major matrix of unit-norm columns.
class MatrixDictionary {
 public:
  static constexpr bool has_fast_inner = false;
  static constexpr double kUnitTolerance = 1e-12;

  /// Takes columns that are already unit norm (within 1e-12).
  MatrixDictionary(std::size_t N, std::size_t M, std::vector<double> column_major)
      : N_(N), M_(M), data_(std::move(column_major)) {
    check_shape();
    for (std::size_t j = 0; j < M_; ++j) {
      const double nrm = detail::norm(column(j));
      if (std::abs(nrm - 1.0) > kUnitTolerance) {
        throw PreconditionError("MatrixDictionary: column " + std::to_string(j + 1) + " is not unit norm");
      }
    }
  }

  /// Normalizes every column; rejects numerically zero columns.
  static MatrixDictionary normalized(std::size_t N, std::size_t M, std::vector<double> column_major) {
    if (N == 0 || M == 0 || column_major.size() != N * M) {
      throw PreconditionError("MatrixDictionary: data size does not match N x M");
    }
    for (std::size_t j = 0; j < M; ++j) {
      std::span<double> col(column_major.data() + j * N, N);
      const double nrm = detail::norm(col);
      if (nrm < kUnitTolerance) {
        throw PreconditionError("MatrixDictionary: column " + std::to_string(j + 1) + " is numerically zero");
      }
      for (double& v : col) v /= nrm;
    }
    return MatrixDictionary(N, M, std::move(column_major));
  }

  static MatrixDictionary identity(std::size_t N) {
    std::vector<double> data(N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i) data[i * N + i] = 1.0;
    return MatrixDictionary(N, N, std::move(data));
  }

  std::size_t dimension() const noexcept { return N_; }
  std::size_t size() const noexcept { return M_; }
  std::span<const double> column(std::size_t zero_based) const { return {data_.data() + zero_based * N_, N_}; }
  std::span<const double> data() const noexcept { return data_; }

  Signal atom(AtomIndex idx) const {
    check_index(idx, M_);
    const auto col = column(idx.zero_based());
    return Signal(std::vector<double>(col.begin(), col.end()));
  }

  void fill_atom(AtomIndex idx, std::span<double> out) const {
    check_index(idx, M_);
    if (out.size() != N_) throw PreconditionError("fill_atom: output length mismatch");
    const auto col = column(idx.zero_based());
    std::copy(col.begin(), col.end(), out.begin());
  }

  std::vector<double> correlate_all(std::span<const double> r) const {
    if (r.size() != N_) throw PreconditionError("correlate_all: dimension mismatch");
    Eigen::Map<const Eigen::MatrixXd> D(data_.data(), static_cast<Eigen::Index>(N_), static_cast<Eigen::Index>(M_));
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(N_));
    std::vector<double> out(M_);
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(M_)).noalias() = D.transpose() * rv;
    return out;
  }

  std::vector<double> correlate_subset(std::span<const double> r, std::span<const AtomIndex> subset) const {
    if (r.size() != N_) throw PreconditionError("correlate_subset: dimension mismatch");
    std::vector<double> out(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      check_index(subset[i], M_);
      out[i] = detail::dot(column(subset[i].zero_based()), r);
    }
    return out;
  }

  double inner(AtomIndex a, AtomIndex b) const {
    check_index(a, M_);
    check_index(b, M_);
    return detail::dot(column(a.zero_based()), column(b.zero_based()));
  }

 private:
  void check_shape() const {
    if (N_ == 0 || M_ == 0) throw PreconditionError("MatrixDictionary: N and M must be positive");
    if (data_.size() != N_ * M_) throw PreconditionError("MatrixDictionary: data size does not match N x M");
  }

  std::size_t N_;
  std::size_t M_;
  std::vector<double> data_;
};

/// Reads a matrix dictionary file.
///
/// Text layout: `N M` followed by N*M column-major reals, whitespace separated.
/// Binary layout: two little-endian int64 (N, M) followed by N*M float64.
/// The layout is detected from the first bytes.  Columns whose norm deviates
/// from 1 by more than 1e-6 are renormalized and reported in `warnings`.
inline MatrixDictionary load_matrix_dictionary(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dictionary file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw std::runtime_error("empty dictionary file: " + path);

  const bool text = std::all_of(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(16, bytes.size())),
                                [](char c) {
                                  return std::isdigit(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c)) ||
                                         c == '-' || c == '+' || c == '.' || c == 'e' || c == 'E';
                                });
  std::size_t N = 0, M = 0;
  std::vector<double> data;
  if (text) {
    std::istringstream ss(bytes);
    long long n = 0, m = 0;
    if (!(ss >> n >> m) || n <= 0 || m <= 0) throw std::runtime_error("bad dictionary header in " + path);
    N = static_cast<std::size_t>(n);
    M = static_cast<std::size_t>(m);
    data.resize(N * M);
    for (double& v : data) {
      if (!(ss >> v)) throw std::runtime_error("truncated dictionary data in " + path);
    }
  } else {
    if (bytes.size() < 16) throw std::runtime_error("truncated dictionary header in " + path);
    std::int64_t hdr[2];
    std::memcpy(hdr, bytes.data(), 16);
    if (hdr[0] <= 0 || hdr[1] <= 0) throw std::runtime_error("bad dictionary header in " + path);
    N = static_cast<std::size_t>(hdr[0]);
    M = static_cast<std::size_t>(hdr[1]);
    if (bytes.size() != 16 + N * M * sizeof(double)) throw std::runtime_error("dictionary data size mismatch in " + path);
    data.resize(N * M);
    std::memcpy(data.data(), bytes.data() + 16, N * M * sizeof(double));
  }
  for (std::size_t j = 0; j < M; ++j) {
    std::span<double> col(data.data() + j * N, N);
    for (double v : col) {
      if (!std::isfinite(v)) throw std::runtime_error("non-finite dictionary entry in " + path);
    }
    const double nrm = detail::norm(col);
    if (nrm < MatrixDictionary::kUnitTolerance) {
      throw std::runtime_error("dictionary column " + std::to_string(j + 1) + " is numerically zero");
    }
    if (std::abs(nrm - 1.0) > 1e-6 && warnings) {
      warnings->push_back("column " + std::to_string(j + 1) + " renormalized (norm " + std::to_string(nrm) + ")");
    }
  }
  return MatrixDictionary::normalized(N, M, std::move(data));
}

/// Writes a dictionary in the binary layout read by load_matrix_dictionary.
inline void save_matrix_dictionary(const MatrixDictionary& dict, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dictionary file: " + path);
  const std::int64_t hdr[2] = {static_cast<std::int64_t>(dict.dimension()), static_cast<std::int64_t>(dict.size())};
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  out.write(reinterpret_cast<const char*>(dict.data().data()), static_cast<std::streamsize>(dict.data().size() * sizeof(double)));
}

// ---------------------------------------------------------------------------
// Trigonometric dictionary
// ---------------------------------------------------------------------------

/// Cosine family (indices 1..M) followed by sine family (M+1..2M); atoms are
/// never stored, correlations go through TransformPlan.
class TrigDictionary {
 public:
  static constexpr bool has_fast_inner = true;

  /// Redundancy 4 overall: M = 2N atoms per family.
  explicit TrigDictionary(std::size_t N) : TrigDictionary(N, 2 * N) {}

  TrigDictionary(std::size_t N, std::size_t M)
      : N_(N), M_(M), plan_(std::make_shared<const transforms::TransformPlan>(N, M)) {
    auto table = std::make_shared<std::vector<double>>(4 * M);
    const auto den = static_cast<std::int64_t>(2 * M);
    for (std::size_t p = 0; p < table->size(); ++p) (*table)[p] = transforms::sin_pi_frac(static_cast<std::int64_t>(p), den);
    sine_table_ = std::move(table);
    auto sums = std::make_shared<std::vector<double>>(2 * (2 * M + 1));
    for (std::size_t q = 0; q <= 2 * M; ++q) {
      (*sums)[2 * q] = cos_sum(static_cast<std::int64_t>(q));
      (*sums)[2 * q + 1] = sin_sum(static_cast<std::int64_t>(q));
    }
    sum_table_ = std::move(sums);
#ifndef NDEBUG
    if (N * M <= 4'000'000) verify_weights();
#endif
  }

  /// Builds a dictionary of the given overall redundancy (total atoms / N, even).
  static TrigDictionary with_redundancy(std::size_t N, std::size_t redundancy) {
    if (redundancy < 2 || redundancy % 2 != 0) throw PreconditionError("TrigDictionary: redundancy must be even and >= 2");
    return TrigDictionary(N, redundancy / 2 * N);
  }

  std::size_t dimension() const noexcept { return N_; }
  std::size_t size() const noexcept { return 2 * M_; }
  std::size_t family_size() const noexcept { return M_; }
  const transforms::TransformPlan& plan() const noexcept { return *plan_; }
  double cos_weight(std::size_t n) const { return plan_->cos_weights()[n - 1]; }
  double sin_weight(std::size_t n) const { return plan_->sin_weights()[n - 1]; }

  /// Throws if any closed-form weight disagrees with the summed atom norm.  O(N*M).
  void verify_weights(double rel_tol = 1e-8) const {
    for (std::size_t n = 1; n <= M_; ++n) {
      const double bc = transforms::cos_weight_bruteforce(n, N_, M_);
      const double bs = transforms::sin_weight_bruteforce(n, N_, M_);
      if (std::abs(cos_weight(n) * cos_weight(n) - bc * bc) > rel_tol * bc * bc ||
          std::abs(sin_weight(n) * sin_weight(n) - bs * bs) > rel_tol * bs * bs) {
        throw std::logic_error("TrigDictionary: closed-form weight mismatch at n=" + std::to_string(n));
      }
    }
  }

  Signal atom(AtomIndex idx) const {
    std::vector<double> v(N_);
    fill_atom(idx, v);
    return Signal(std::move(v));
  }

  void fill_atom(AtomIndex idx, std::span<double> out) const {
    check_index(idx, size());
    if (out.size() != N_) throw PreconditionError("fill_atom: output length mismatch");
    const auto [is_cos, freq] = family(idx);
    const double w = is_cos ? cos_weight(idx.value()) : sin_weight(idx.value() - M_);
    const double inv = 1.0 / w;
    // Entry i is sin(pi p / 2M) with p = (2i-1) freq (+ M for cosines) mod 4M.
    const std::size_t period = 4 * M_;
    const auto f = static_cast<std::size_t>(freq);
    const std::size_t step = (2 * f) % period;
    std::size_t p = (f + (is_cos ? M_ : 0)) % period;
    const double* t = sine_table_->data();
    for (std::size_t i = 0; i < N_; ++i) {
      out[i] = t[p] * inv;
      p += step;
      if (p >= period) p -= period;
    }
  }

  std::vector<double> correlate_all(std::span<const double> r) const {
    if (r.size() != N_) throw PreconditionError("correlate_all: dimension mismatch");
    std::vector<double> out(2 * M_);
    plan_->both_banks(r, std::span<double>(out.data(), M_), std::span<double>(out.data() + M_, M_));
    return out;
  }

  /// O(N*M) reference evaluation, kept as the oracle of the fast path.
  std::vector<double> correlate_all_naive(std::span<const double> r) const {
    auto c = plan_->naive_cos_bank(r);
    const auto s = plan_->naive_sin_bank(r);
    c.insert(c.end(), s.begin(), s.end());
    return c;
  }

  std::vector<double> correlate_subset(std::span<const double> r, std::span<const AtomIndex> subset) const {
    if (r.size() != N_) throw PreconditionError("correlate_subset: dimension mismatch");
    for (AtomIndex a : subset) check_index(a, size());
    std::vector<double> out(subset.size());
    const double fft_len = static_cast<double>(plan_->fft_length());
    const double direct_cost = 5.0 * static_cast<double>(subset.size()) * static_cast<double>(N_);
    if (direct_cost < fft_len * std::log2(fft_len)) {
      std::vector<double> buf(N_);
      for (std::size_t i = 0; i < subset.size(); ++i) {
        fill_atom(subset[i], buf);
        out[i] = detail::dot(buf, r);
      }
    } else {
      const auto all = correlate_all(r);
      for (std::size_t i = 0; i < subset.size(); ++i) out[i] = all[subset[i].zero_based()];
    }
    return out;
  }

  /// Closed-form Gram entry from the sums
  ///   sum_i cos((2i-1)x) = sin(2Nx) / (2 sin x),  sum_i sin((2i-1)x) = sin^2(Nx) / sin x.
  double inner(AtomIndex a, AtomIndex b) const {
    check_index(a, size());
    check_index(b, size());
    const auto [ca, pa] = family(a);
    const auto [cb, pb] = family(b);
    const double wa = ca ? cos_weight(a.value()) : sin_weight(a.value() - M_);
    const double wb = cb ? cos_weight(b.value()) : sin_weight(b.value() - M_);
    double s = 0.0;
    if (ca && cb) {
      s = 0.5 * (tabulated_cos_sum(pa - pb) + tabulated_cos_sum(pa + pb));
    } else if (!ca && !cb) {
      s = 0.5 * (tabulated_cos_sum(pa - pb) - tabulated_cos_sum(pa + pb));
    } else {
      const std::int64_t pc = ca ? pa : pb;  // cosine frequency
      const std::int64_t ps = ca ? pb : pa;  // sine frequency
      s = 0.5 * (tabulated_sin_sum(ps + pc) + tabulated_sin_sum(ps - pc));
    }
    return s / (wa * wb);
  }

  /// Untabulated form of inner(), evaluating the trig sums directly.
  double inner_direct(AtomIndex a, AtomIndex b) const {
    check_index(a, size());
    check_index(b, size());
    const auto [ca, pa] = family(a);
    const auto [cb, pb] = family(b);
    const double wa = ca ? cos_weight(a.value()) : sin_weight(a.value() - M_);
    const double wb = cb ? cos_weight(b.value()) : sin_weight(b.value() - M_);
    double s = 0.0;
    if (ca && cb) {
      s = 0.5 * (cos_sum(pa - pb) + cos_sum(pa + pb));
    } else if (!ca && !cb) {
      s = 0.5 * (cos_sum(pa - pb) - cos_sum(pa + pb));
    } else {
      const std::int64_t pc = ca ? pa : pb;
      const std::int64_t ps = ca ? pb : pa;
      s = 0.5 * (sin_sum(ps + pc) + sin_sum(ps - pc));
    }
    return s / (wa * wb);
  }

 private:
  // (is cosine, integer frequency p) with atom entries trig(pi p (2i-1) / 2M)
  std::pair<bool, std::int64_t> family(AtomIndex idx) const {
    if (idx.value() <= M_) return {true, static_cast<std::int64_t>(idx.value() - 1)};
    return {false, static_cast<std::int64_t>(idx.value() - M_)};
  }

  // Frequencies lie in [0, M], so |q| <= 2M; cos_sum is even and sin_sum odd in q.
  double tabulated_cos_sum(std::int64_t q) const { return (*sum_table_)[2 * static_cast<std::size_t>(q < 0 ? -q : q)]; }
  double tabulated_sin_sum(std::int64_t q) const {
    const double v = (*sum_table_)[2 * static_cast<std::size_t>(q < 0 ? -q : q) + 1];
    return q < 0 ? -v : v;
  }

  // sum_{i=1}^N cos(pi q (2i-1) / 2M)
  double cos_sum(std::int64_t q) const {
    const auto den = static_cast<std::int64_t>(2 * M_);
    const auto n = static_cast<std::int64_t>(N_);
    const double sx = transforms::sin_pi_frac(q, den);
    if (sx == 0.0) {
      const std::int64_t s = q / den;  // x = s*pi
      return (s % 2 == 0) ? static_cast<double>(N_) : -static_cast<double>(N_);
    }
    return transforms::sin_pi_frac(n * q, static_cast<std::int64_t>(M_)) / (2.0 * sx);
  }

  // sum_{i=1}^N sin(pi q (2i-1) / 2M)
  double sin_sum(std::int64_t q) const {
    const auto den = static_cast<std::int64_t>(2 * M_);
    const double sx = transforms::sin_pi_frac(q, den);
    if (sx == 0.0) return 0.0;
    const double sn = transforms::sin_pi_frac(static_cast<std::int64_t>(N_) * q, den);
    return sn * sn / sx;
  }

  std::size_t N_;
  std::size_t M_;
  std::shared_ptr<const transforms::TransformPlan> plan_;
  std::shared_ptr<const std::vector<double>> sine_table_;  // sin(pi p / 2M), p = 0 .. 4M-1
  std::shared_ptr<const std::vector<double>> sum_table_;   // (cos_sum(q), sin_sum(q)), q = 0 .. 2M
};

static_assert(Dictionary<MatrixDictionary>);
static_assert(Dictionary<TrigDictionary>);

}  // namespace spmp
