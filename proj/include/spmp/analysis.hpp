#pragma once

#include <spmp/dictionary.hpp>
#include <spmp/pursuit.hpp>
#include <spmp/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spmp {

/// Eigenvalues of the Gram matrix of k selected atoms, largest first.
struct GramSpectrum {
  std::size_t k = 0;
  std::vector<double> eigenvalues;

  double min() const { return eigenvalues.back(); }
  double max() const { return eigenvalues.front(); }
  double trace() const {
    double s = 0.0;
    for (double v : eigenvalues) s += v;
    return s;
  }
};

/// G(a, b) = <d_a, d_b> over the listed atoms.
template <Dictionary D>
Eigen::MatrixXd gram_matrix(const D& dict, std::span<const AtomIndex> selected) {
  const auto k = static_cast<Eigen::Index>(selected.size());
  Eigen::MatrixXd G(k, k);
  if constexpr (D::has_fast_inner) {
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = a; b < k; ++b) {
        G(a, b) = G(b, a) = dict.inner(selected[static_cast<std::size_t>(a)], selected[static_cast<std::size_t>(b)]);
      }
    }
  } else {
    Eigen::MatrixXd S(static_cast<Eigen::Index>(dict.dimension()), k);
    for (Eigen::Index a = 0; a < k; ++a) {
      dict.fill_atom(selected[static_cast<std::size_t>(a)], std::span<double>(S.col(a).data(), dict.dimension()));
    }
    G.noalias() = S.transpose() * S;
  }
  return G;
}

inline constexpr std::size_t kDefaultSpectrumCap = 2000;

template <Dictionary D>
GramSpectrum gram_spectrum(const D& dict, std::span<const AtomIndex> selected, std::size_t cap = kDefaultSpectrumCap) {
  if (selected.empty()) throw PreconditionError("gram_spectrum: empty selection");
  if (selected.size() > cap) {
    throw PreconditionError("gram_spectrum: k=" + std::to_string(selected.size()) + " exceeds cap " + std::to_string(cap));
  }
  for (AtomIndex a : selected) check_index(a, dict.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram_matrix(dict, selected), Eigen::EigenvaluesOnly);
  GramSpectrum out;
  out.k = selected.size();
  out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
  return out;
}

/// (1 - lambda_min / k)^j bounds ||P r^{k,j}||^2 / ||r^{k,0}||^2.
inline double projection_rate_bound(const GramSpectrum& spectrum, std::size_t j) {
  if (!(spectrum.min() > 0.0)) throw PreconditionError("projection_rate_bound: selected atoms are dependent");
  const double base = std::max(0.0, 1.0 - spectrum.min() / static_cast<double>(spectrum.k));
  if (j == 0) return 1.0;
  return std::pow(base, static_cast<double>(j));
}

struct RoundoffModel {
  double u = std::numeric_limits<double>::epsilon() / 2;
  std::size_t N = 0;

  /// The first-order model is only meaningful for N u << 1.
  bool first_order_valid() const { return static_cast<double>(N) * u < 1e-2; }

  static RoundoffModel single(std::size_t N) { return {std::ldexp(1.0, -24), N}; }
  static RoundoffModel double_precision(std::size_t N) { return {std::ldexp(1.0, -53), N}; }
};

/// (N + 3) j u ||r^{k,0}||.
inline double roundoff_bound(const RoundoffModel& model, std::size_t j, double r0norm) {
  if (!(model.u > 0.0)) throw PreconditionError("roundoff_bound: u must be > 0");
  return static_cast<double>(model.N + 3) * static_cast<double>(j) * model.u * r0norm;
}

/// 10 log10(||f||^2 / ||f - approx||^2); +inf when the residual is exactly zero.
inline double snr(std::span<const double> f, std::span<const double> approx) {
  if (f.size() != approx.size()) throw PreconditionError("snr: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += f[i] * f[i];
    const double e = f[i] - approx[i];
    den += e * e;
  }
  if (num == 0.0) throw PreconditionError("snr: zero signal");
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

/// SNR from energies, for block-wise runs where padding is excluded.
inline double snr_from_energy(double signal_energy, double residual_energy) {
  if (!(signal_energy > 0.0)) throw PreconditionError("snr: zero signal");
  if (residual_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_energy / residual_energy);
}

inline double sparsity_ratio(std::size_t N, std::size_t K) {
  if (K == 0) throw PreconditionError("sparsity_ratio: K must be >= 1");
  return static_cast<double>(N) / static_cast<double>(K);
}

struct IndependenceCheck {
  bool independent = false;
  double lambda_min = 0.0;
};

inline constexpr double kLemma2Tolerance = 1e-10;

template <Dictionary D>
IndependenceCheck lemma2_check(const D& dict, std::span<const AtomIndex> selected, double tol = kLemma2Tolerance) {
  const GramSpectrum s = gram_spectrum(dict, selected);
  return {s.min() > tol, s.min()};
}

/// Orthogonal projector onto span of selected atoms, from a thin QR factorization.
class ProjectorOracle {
 public:
  template <Dictionary D>
  ProjectorOracle(const D& dict, std::span<const AtomIndex> selected) {
    const auto N = static_cast<Eigen::Index>(dict.dimension());
    const auto k = static_cast<Eigen::Index>(selected.size());
    Eigen::MatrixXd S(N, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      dict.fill_atom(selected[static_cast<std::size_t>(a)], std::span<double>(S.col(a).data(), dict.dimension()));
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd Q = qr.householderQ();
    Q_ = Q.leftCols(rank);
  }

  std::vector<double> project(std::span<const double> g) const {
    const Eigen::Map<const Eigen::VectorXd> v(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::VectorXd p = Q_ * (Q_.transpose() * v);
    return {p.data(), p.data() + p.size()};
  }

  /// ||P g||^2.
  double projected_norm2(std::span<const double> g) const {
    const Eigen::Map<const Eigen::VectorXd> v(g.data(), static_cast<Eigen::Index>(g.size()));
    return (Q_.transpose() * v).squaredNorm();
  }

  Eigen::Index rank() const { return Q_.cols(); }

 private:
  Eigen::MatrixXd Q_;
};

/// Residual of a direct least-squares fit of g onto the selected atoms.
template <Dictionary D>
std::vector<double> direct_projection(const D& dict, std::span<const AtomIndex> selected, std::span<const double> g) {
  return ProjectorOracle(dict, selected).project(g);
}

/// Self-projection replayed in single precision next to an exact (long double)
/// application of the same rank-1 operators I - d d^T.
struct RoundoffTrace {
  std::size_t N = 0;
  double r0norm = 0.0;
  std::vector<AtomIndex> steps;   // atom used at inner step j (1-based j at position j-1)
  std::vector<double> error;      // ||r_single^{j} - r_exact^{j}|| for j = 1..steps
  std::vector<double> exact_norm;

  double budget(std::size_t j) const { return roundoff_bound(RoundoffModel::single(N), j, r0norm); }
};

/// Runs `steps` inner iterations in single precision; the single-precision
/// correlations choose the atom at each step.  Atoms and r0 are rounded to
/// single first, so only arithmetic error is measured.
template <Dictionary D>
RoundoffTrace roundoff_experiment(const D& dict, std::span<const AtomIndex> support, std::span<const double> r0,
                                  std::size_t steps) {
  if (support.empty()) throw PreconditionError("roundoff_experiment: empty support");
  if (r0.size() != dict.dimension()) throw PreconditionError("roundoff_experiment: length mismatch");
  const std::size_t N = dict.dimension();
  const std::size_t k = support.size();
  std::vector<std::vector<float>> atoms_f(k, std::vector<float>(N));
  std::vector<double> tmp(N);
  for (std::size_t a = 0; a < k; ++a) {
    dict.fill_atom(support[a], tmp);
    for (std::size_t i = 0; i < N; ++i) atoms_f[a][i] = static_cast<float>(tmp[i]);
  }
  std::vector<float> rf(N);
  std::vector<long double> rx(N);
  for (std::size_t i = 0; i < N; ++i) {
    rf[i] = static_cast<float>(r0[i]);
    rx[i] = rf[i];
  }

  // volatile keeps every product and sum a separately rounded float.
  const auto dot_f = [N](const std::vector<float>& a, const std::vector<float>& b) {
    volatile float s = 0.0f;
    for (std::size_t i = 0; i < N; ++i) {
      volatile float p = a[i] * b[i];
      s = s + p;
    }
    return static_cast<float>(s);
  };

  RoundoffTrace out;
  out.N = N;
  long double n0 = 0.0L;
  for (long double v : rx) n0 += v * v;
  out.r0norm = static_cast<double>(std::sqrt(n0));
  out.steps.reserve(steps);
  out.error.reserve(steps);
  for (std::size_t j = 1; j <= steps; ++j) {
    std::size_t p = 0;
    float best = -1.0f;
    float cp = 0.0f;
    for (std::size_t a = 0; a < k; ++a) {
      const float c = dot_f(atoms_f[a], rf);
      if (std::abs(c) > best) {
        best = std::abs(c);
        p = a;
        cp = c;
      }
    }
    const auto& d = atoms_f[p];
    for (std::size_t i = 0; i < N; ++i) {
      volatile float prod = cp * d[i];
      rf[i] = rf[i] - prod;
    }
    long double cx = 0.0L;
    for (std::size_t i = 0; i < N; ++i) cx += static_cast<long double>(d[i]) * rx[i];
    long double e2 = 0.0L, x2 = 0.0L;
    for (std::size_t i = 0; i < N; ++i) {
      rx[i] -= cx * static_cast<long double>(d[i]);
      const long double e = static_cast<long double>(rf[i]) - rx[i];
      e2 += e * e;
      x2 += rx[i] * rx[i];
    }
    out.steps.push_back(support[p]);
    out.error.push_back(static_cast<double>(std::sqrt(e2)));
    out.exact_norm.push_back(static_cast<double>(std::sqrt(x2)));
  }
  return out;
}

/// Per-outer-iteration diagnostics of a pursuit run.
struct DiagnosticRecord {
  std::size_t k;
  double residual_norm;
  double pre_projection_norm;
  std::optional<double> lambda_min;  // unset when k exceeds the spectrum cap
  std::size_t projection_iterations;
  bool projection_capped;
  std::optional<double> rate_bound;  // (1 - lambda_min / k)^j
  double roundoff_budget;            // (N + 3) j u ||r^{k,0}|| in double precision
};

struct DiagnosticsReport {
  std::size_t N = 0;
  double signal_norm = 0.0;
  std::vector<DiagnosticRecord> records;
};

/// Builds diagnostics from a finished run.  Spectra are computed only for
/// k <= spectrum_limit since each costs O(k^3).
template <Dictionary D>
DiagnosticsReport build_diagnostics(const D& dict, const PursuitState& state, std::size_t spectrum_limit = 256) {
  DiagnosticsReport rep;
  rep.N = dict.dimension();
  rep.signal_norm = state.signal_norm;
  const RoundoffModel model = RoundoffModel::double_precision(rep.N);
  std::vector<AtomIndex> distinct;
  for (const auto& h : state.history) {
    if (std::find(distinct.begin(), distinct.end(), h.atom) == distinct.end()) distinct.push_back(h.atom);
    DiagnosticRecord rec{h.k, h.residual_norm, h.pre_projection_norm, std::nullopt, h.projection_iterations,
                         h.projection_capped, std::nullopt,
                         roundoff_bound(model, h.projection_iterations, h.pre_projection_norm)};
    if (distinct.size() <= std::min(spectrum_limit, kDefaultSpectrumCap)) {
      const GramSpectrum s = gram_spectrum(dict, distinct);
      rec.lambda_min = s.min();
      if (s.min() > 0.0) rec.rate_bound = projection_rate_bound(s, h.projection_iterations);
    }
    rep.records.push_back(rec);
  }
  return rep;
}

}  // namespace spmp
