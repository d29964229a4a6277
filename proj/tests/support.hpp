#pragma once

// Independent reference computations used by the tests.  Nothing here calls
// into the library's numerical kernels.

#include <spmp/dictionary.hpp>
#include <spmp/types.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace spmp::testing {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

inline MatrixDictionary gaussian_dictionary(std::size_t N, std::size_t M, std::mt19937_64& rng) {
  return MatrixDictionary::normalized(N, M, gaussian_vector(N * M, rng));
}

inline std::vector<AtomIndex> indices(std::initializer_list<std::size_t> one_based) {
  std::vector<AtomIndex> out;
  for (auto i : one_based) out.emplace_back(i);
  return out;
}

inline double rel_err(double got, double want, double scale) { return std::abs(got - want) / scale; }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l2(std::span<const double> v) {
  long double s = 0.0L;
  for (double x : v) s += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(s));
}

/// O(n^2) DFT in long double: X(m) = sum_t x(t) exp(-2 pi i t m / n).
inline std::vector<std::complex<double>> naive_dft(std::span<const std::complex<double>> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const long double pi = std::numbers::pi_v<long double>;
  for (std::size_t m = 0; m < n; ++m) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double a = -2.0L * pi * static_cast<long double>((t * m) % n) / static_cast<long double>(n);
      re += x[t].real() * std::cos(a) - x[t].imag() * std::sin(a);
      im += x[t].real() * std::sin(a) + x[t].imag() * std::cos(a);
    }
    out[m] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

/// Unnormalized trig atom evaluated with plain library cos/sin in long double.
inline std::vector<long double> raw_trig_atom(std::size_t N, std::size_t M, std::size_t idx) {
  const long double pi = std::numbers::pi_v<long double>;
  std::vector<long double> v(N);
  for (std::size_t i = 1; i <= N; ++i) {
    const long double twoi = 2.0L * static_cast<long double>(i) - 1.0L;
    if (idx <= M) {
      v[i - 1] = std::cos(pi * twoi * static_cast<long double>(idx - 1) / (2.0L * M));
    } else {
      v[i - 1] = std::sin(pi * twoi * static_cast<long double>(idx - M) / (2.0L * M));
    }
  }
  return v;
}

/// Full column-major N x 2M trig dictionary, normalized by summed norms.
inline std::vector<double> naive_trig_matrix(std::size_t N, std::size_t M) {
  std::vector<double> data(N * 2 * M);
  for (std::size_t j = 1; j <= 2 * M; ++j) {
    const auto v = raw_trig_atom(N, M, j);
    long double s = 0.0L;
    for (auto x : v) s += x * x;
    const long double w = std::sqrt(s);
    for (std::size_t i = 0; i < N; ++i) data[(j - 1) * N + i] = static_cast<double>(v[i] / w);
  }
  return data;
}

/// <d_j, r> for every atom j = 1..2M by the double loop.
inline std::vector<double> naive_trig_correlations(std::size_t N, std::size_t M, std::span<const double> r) {
  std::vector<double> out(2 * M);
  for (std::size_t j = 1; j <= 2 * M; ++j) {
    const auto v = raw_trig_atom(N, M, j);
    long double s = 0.0L, c = 0.0L;
    for (std::size_t i = 0; i < N; ++i) {
      s += v[i] * v[i];
      c += v[i] * r[i];
    }
    out[j - 1] = static_cast<double>(c / std::sqrt(s));
  }
  return out;
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; returns eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

/// Columns of the listed atoms.
template <class D>
Matrix atom_columns(const D& dict, std::span<const AtomIndex> sel) {
  Matrix cols;
  for (AtomIndex a : sel) {
    const Signal s = dict.atom(a);
    cols.emplace_back(s.values());
  }
  return cols;
}

template <class D>
Matrix gram_by_dots(const D& dict, std::span<const AtomIndex> sel) {
  const Matrix cols = atom_columns(dict, sel);
  Matrix g(sel.size(), std::vector<double>(sel.size()));
  for (std::size_t a = 0; a < sel.size(); ++a) {
    for (std::size_t b = 0; b < sel.size(); ++b) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < cols[a].size(); ++i) s += static_cast<long double>(cols[a][i]) * cols[b][i];
      g[a][b] = static_cast<double>(s);
    }
  }
  return g;
}

/// Twice-iterated modified Gram-Schmidt basis of the column span.
inline Matrix orthonormal_basis(const Matrix& cols) {
  Matrix q;
  for (const auto& c : cols) {
    std::vector<long double> v(c.begin(), c.end());
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : q) {
        long double d = 0.0L;
        for (std::size_t i = 0; i < v.size(); ++i) d += b[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * b[i];
      }
    }
    long double n = 0.0L;
    for (auto x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-10L) continue;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i] / n);
    q.push_back(std::move(out));
  }
  return q;
}

/// ||P g||^2 for the projector onto span(basis).
inline double projected_norm2(const Matrix& basis, std::span<const double> g) {
  long double s = 0.0L;
  for (const auto& b : basis) {
    long double d = 0.0L;
    for (std::size_t i = 0; i < g.size(); ++i) d += static_cast<long double>(b[i]) * g[i];
    s += d * d;
  }
  return static_cast<double>(s);
}

/// ||f - S c|| with c from the normal equations (S^T S) c = S^T f, Cholesky in long double.
inline double least_squares_residual(const Matrix& cols, std::span<const double> f) {
  const std::size_t k = cols.size();
  const std::size_t N = f.size();
  std::vector<std::vector<long double>> A(k, std::vector<long double>(k));
  std::vector<long double> b(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t c = 0; c < k; ++c) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < N; ++i) s += static_cast<long double>(cols[a][i]) * cols[c][i];
      A[a][c] = s;
    }
    long double s = 0.0L;
    for (std::size_t i = 0; i < N; ++i) s += static_cast<long double>(cols[a][i]) * f[i];
    b[a] = s;
  }
  for (std::size_t j = 0; j < k; ++j) {
    long double d = A[j][j];
    for (std::size_t p = 0; p < j; ++p) d -= A[j][p] * A[j][p];
    if (!(d > 0.0L)) throw std::runtime_error("least_squares_residual: singular normal equations");
    A[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < k; ++i) {
      long double s = A[i][j];
      for (std::size_t p = 0; p < j; ++p) s -= A[i][p] * A[j][p];
      A[i][j] = s / A[j][j];
    }
  }
  std::vector<long double> y(k), c(k);
  for (std::size_t i = 0; i < k; ++i) {
    long double s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= A[i][p] * y[p];
    y[i] = s / A[i][i];
  }
  for (std::size_t i = k; i-- > 0;) {
    long double s = y[i];
    for (std::size_t p = i + 1; p < k; ++p) s -= A[p][i] * c[p];
    c[i] = s / A[i][i];
  }
  long double r2 = 0.0L;
  for (std::size_t i = 0; i < N; ++i) {
    long double v = f[i];
    for (std::size_t a = 0; a < k; ++a) v -= c[a] * cols[a][i];
    r2 += v * v;
  }
  return static_cast<double>(std::sqrt(r2));
}

}  // namespace spmp::testing
