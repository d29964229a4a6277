#pragma once

#include <spmp/dictionary.hpp>
#include <spmp/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spmp {

enum class PursuitStatus {
  TargetReached,    // ||r|| < rho
  BudgetExhausted,  // k hit max_atoms first
  Stagnated,        // best |correlation| fell below 1e-14 ||f|| before rho
  ZeroSignal,
};

inline const char* to_string(PursuitStatus s) {
  switch (s) {
    case PursuitStatus::TargetReached: return "target_reached";
    case PursuitStatus::BudgetExhausted: return "budget_exhausted";
    case PursuitStatus::Stagnated: return "stagnated";
    case PursuitStatus::ZeroSignal: return "zero_signal";
  }
  return "unknown";
}

/// Stopping rules shared by all pursuit drivers.
struct StoppingConfig {
  double rho = 0.0;             // stop once ||r^k|| < rho
  std::size_t max_atoms = 0;    // cap on outer iterations k
  /// Self-projection tolerance; unset means 1e-10 * ||f||.
  std::optional<double> epsilon;
  /// Cap on inner self-projection iterations; unset means 1000 * k.
  std::optional<std::size_t> max_proj_iters;
  /// Keep a per-step trace (norms before/after every rank-1 update).
  bool record_trace = false;
  /// Eager gives one trace record per inner projection step.
  bool eager_projection = false;

  void validate() const {
    if (!(rho > 0.0)) throw PreconditionError("StoppingConfig: rho must be > 0");
    if (max_atoms < 1) throw PreconditionError("StoppingConfig: max_atoms must be >= 1");
    if (epsilon && !(*epsilon > 0.0)) throw PreconditionError("StoppingConfig: epsilon must be > 0");
    if (max_proj_iters && *max_proj_iters < 1) throw PreconditionError("StoppingConfig: max_proj_iters must be >= 1");
  }

  /// rho = ||f|| 10^(-snr/20), i.e. stop once the SNR exceeds `snr_db`.
  static StoppingConfig for_snr(std::span<const double> f, double snr_db, std::size_t max_atoms) {
    StoppingConfig c;
    c.rho = detail::norm(f) * std::pow(10.0, -snr_db / 20.0);
    if (!(c.rho > 0.0)) c.rho = std::numeric_limits<double>::min();
    c.max_atoms = max_atoms;
    return c;
  }
};

enum class StepKind { Selection, Projection, LeastSquares };

/// One update of the residual.  For Selection and Projection steps the
/// update is r <- r - coefficient * d_atom.
struct StepRecord {
  StepKind kind;
  std::size_t outer;  // k at which the step happened
  AtomIndex atom;
  double coefficient;
  double norm_before;
  double norm_after;
};

/// Summary of one outer iteration.
struct IterationRecord {
  std::size_t k;
  AtomIndex atom;
  double selected_correlation;
  double residual_norm;            // after the self-projection, if any
  double pre_projection_norm = 0;  // right after the selection step (the r^{k,0} of the projection)
  std::size_t projection_iterations = 0;
  bool projection_capped = false;
};

/// Selected atoms, coefficients, approximation and residual of a pursuit run.
struct PursuitState {
  std::vector<AtomIndex> selected;    // selection history; MP may repeat indices
  std::vector<AtomIndex> support;     // distinct atoms in first-selection order
  std::vector<double> coefficients;   // parallel to support
  std::vector<double> approximation;  // f^k
  std::vector<double> residual;       // r^k
  std::size_t k = 0;
  PursuitStatus status = PursuitStatus::BudgetExhausted;
  double signal_norm = 0.0;
  std::size_t projection_iterations = 0;  // summed over all self-projections
  std::size_t capped_projections = 0;     // self-projections that hit max_proj_iters
  double worst_capped_correlation = 0.0;
  std::size_t duplicate_selections = 0;
  std::vector<IterationRecord> history;
  std::vector<StepRecord> trace;

  static PursuitState start(std::span<const double> f) {
    PursuitState s;
    s.residual.assign(f.begin(), f.end());
    s.approximation.assign(f.size(), 0.0);
    s.signal_norm = detail::norm(f);
    return s;
  }

  double residual_norm() const { return detail::norm(residual); }

  /// Coefficient of an atom (0 when not in the support).
  double coefficient_of(AtomIndex a) const {
    const auto it = position_.find(a.value());
    return it == position_.end() ? 0.0 : coefficients[it->second];
  }

  bool contains(AtomIndex a) const { return position_.count(a.value()) != 0; }

  /// (atom, coefficient) pairs in first-selection order.
  std::vector<std::pair<AtomIndex, double>> coefficients_by_atom() const {
    std::vector<std::pair<AtomIndex, double>> out;
    out.reserve(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) out.emplace_back(support[i], coefficients[i]);
    return out;
  }

  /// Adds `c` to the coefficient of `a`, extending the support if needed.
  /// Returns the support position.
  std::size_t accumulate(AtomIndex a, double c) {
    const auto [it, inserted] = position_.try_emplace(a.value(), support.size());
    if (inserted) {
      support.push_back(a);
      coefficients.push_back(c);
    } else {
      coefficients[it->second] += c;
    }
    return it->second;
  }

  void clear_support() {
    support.clear();
    coefficients.clear();
    position_.clear();
  }

 private:
  std::unordered_map<std::size_t, std::size_t> position_;
};

/// Outcome of one self-projection.
struct ProjectionResult {
  std::size_t iterations = 0;
  bool capped = false;
  /// max |<d, r>| over the support when the loop stopped.
  double final_correlation = 0.0;
};

/// Called once with j = 0 before the first inner step (atom and coefficient
/// are then unset) and after each inner step j with the atom and coefficient used.
/// The residual is current; coefficients and approximation are brought up to
/// date only when the projection returns.
using ProjectionObserver = std::function<void(const PursuitState&, std::size_t j, AtomIndex, double)>;

namespace detail {

/// r <- r - c d, f^k <- f^k + c d with c = <d, r> computed directly.
template <Dictionary D>
double commit_atom(PursuitState& state, const D& dict, AtomIndex atom, std::vector<double>& scratch, StepKind kind,
                   bool record_trace) {
  scratch.resize(dict.dimension());
  dict.fill_atom(atom, scratch);
  const double before = record_trace ? norm(state.residual) : 0.0;
  const double c = dot(scratch, state.residual);
  axpy(-c, scratch, state.residual);
  axpy(c, scratch, state.approximation);
  state.accumulate(atom, c);
  if (record_trace) state.trace.push_back({kind, state.k, atom, c, before, norm(state.residual)});
  return c;
}

/// r <- r - c d with c = <d, r>; the caller owns the coefficient update.
template <Dictionary D>
double project_step(PursuitState& state, const D& dict, AtomIndex atom, std::vector<double>& scratch, bool record_trace) {
  scratch.resize(dict.dimension());
  dict.fill_atom(atom, scratch);
  const double before = record_trace ? norm(state.residual) : 0.0;
  const double c = dot(scratch, state.residual);
  axpy(-c, scratch, state.residual);
  if (record_trace) state.trace.push_back({StepKind::Projection, state.k, atom, c, before, norm(state.residual)});
  return c;
}

}  // namespace detail

/// How self_project applies its inner steps to the residual.
enum class ProjectionMode {
  /// Each step's coefficient is the tracked correlation; the residual is
  /// updated in one pass per refresh.  O(k) per step.
  Deferred,
  /// Each step subtracts c d from the residual right away with c = <d, r>
  /// computed directly.  O(N + k) per step; one trace record per step.
  Eager,
};

/// MP restricted to the current support: repeatedly subtracts the component
/// along the best-correlated selected atom until every selected correlation
/// is below `epsilon` or `max_iters` steps were taken.
///
/// Correlations are tracked incrementally, <d_i, r - c d_l> = <d_i, r> - c <d_i, d_l>,
/// and recomputed exactly from the residual periodically and before accepting a stop.
/// With a trace, Deferred mode records one Projection step per refresh using
/// exact norms, with coefficient sqrt(sum of c^2) over the steps it covers.
/// An observer forces Eager mode.
template <Dictionary D>
ProjectionResult self_project(PursuitState& state, const D& dict, double epsilon, std::size_t max_iters,
                              bool record_trace = false, const ProjectionObserver& observer = {},
                              ProjectionMode mode = ProjectionMode::Deferred) {
  if (state.support.empty()) throw PreconditionError("self_project: empty support");
  if (!(epsilon > 0.0)) throw PreconditionError("self_project: epsilon must be > 0");
  if (max_iters < 1) throw PreconditionError("self_project: max_iters must be >= 1");
  const bool eager = mode == ProjectionMode::Eager || static_cast<bool>(observer);

  const std::vector<AtomIndex> support = state.support;
  const std::size_t k = support.size();
  std::vector<double> corr = dict.correlate_subset(state.residual, support);

  // Only dictionaries without an O(1) inner product get a k x k Gram block.
  std::vector<double> gram;
  if constexpr (!D::has_fast_inner) {
    gram.resize(k * k);
    for (std::size_t a = 0; a < k; ++a) {
      gram[a * k + a] = dict.inner(support[a], support[a]);
      for (std::size_t b = a + 1; b < k; ++b) {
        gram[a * k + b] = gram[b * k + a] = dict.inner(support[a], support[b]);
      }
    }
  }

  const auto best_position = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      const double m = std::abs(corr[i]);
      const double b = std::abs(corr[best]);
      if (m > b || (m == b && support[i] < support[best])) best = i;
    }
    return best;
  };

  const std::size_t refresh_period = eager ? std::max<std::size_t>(k, 32) : std::max<std::size_t>(32 * k, 1024);
  std::size_t since_refresh = 0;
  std::vector<double> atom;
  std::vector<double> delta(k, 0.0);    // coefficient change over the whole call
  std::vector<double> pending(k, 0.0);  // Deferred: not yet subtracted from the residual
  double segment_energy = 0.0;
  double segment_start = record_trace && !eager ? detail::norm(state.residual) : 0.0;

  const auto apply_pending = [&] {
    if (eager) return;
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (pending[i] == 0.0) continue;
      atom.resize(dict.dimension());
      dict.fill_atom(support[i], atom);
      detail::axpy(-pending[i], atom, state.residual);
      pending[i] = 0.0;
      any = true;
    }
    if (record_trace && any) {
      const double now = detail::norm(state.residual);
      state.trace.push_back({StepKind::Projection, state.k, AtomIndex{}, std::sqrt(segment_energy), segment_start, now});
      segment_start = now;
      segment_energy = 0.0;
    }
  };

  ProjectionResult result;
  if (observer) observer(state, 0, AtomIndex{}, 0.0);
  for (;;) {
    std::size_t p = best_position();
    if (std::abs(corr[p]) < epsilon) {
      if (since_refresh == 0) {
        result.final_correlation = std::abs(corr[p]);
        break;
      }
      apply_pending();
      corr = dict.correlate_subset(state.residual, support);
      since_refresh = 0;
      continue;
    }
    if (result.iterations == max_iters) {
      result.capped = true;
      result.final_correlation = std::abs(corr[p]);
      break;
    }
    double c;
    if (eager) {
      c = detail::project_step(state, dict, support[p], atom, record_trace);
    } else {
      c = corr[p];
      pending[p] += c;
      segment_energy += c * c;
    }
    delta[p] += c;
    ++result.iterations;
    if (observer) observer(state, result.iterations, support[p], c);

    if (++since_refresh >= refresh_period) {
      apply_pending();
      corr = dict.correlate_subset(state.residual, support);
      since_refresh = 0;
    } else if constexpr (D::has_fast_inner) {
      for (std::size_t i = 0; i < k; ++i) corr[i] -= c * dict.inner(support[i], support[p]);
    } else {
      for (std::size_t i = 0; i < k; ++i) corr[i] -= c * gram[i * k + p];
    }
  }
  apply_pending();
  for (std::size_t i = 0; i < k; ++i) {
    if (delta[i] == 0.0) continue;
    atom.resize(dict.dimension());
    dict.fill_atom(support[i], atom);
    detail::axpy(delta[i], atom, state.approximation);
    state.coefficients[i] += delta[i];
  }
  state.projection_iterations += result.iterations;
  if (result.capped) {
    ++state.capped_projections;
    state.worst_capped_correlation = std::max(state.worst_capped_correlation, result.final_correlation);
  }
  return result;
}

namespace detail {

enum class Projection { None, Iterative };

template <Dictionary D>
PursuitState greedy_run(std::span<const double> f, const D& dict, const StoppingConfig& stop, Projection projection,
                        const ProjectionObserver& observer = {}) {
  stop.validate();
  if (f.size() != dict.dimension()) throw PreconditionError("pursuit: signal length does not match dictionary");
  for (double v : f) {
    if (!std::isfinite(v)) throw PreconditionError("pursuit: non-finite sample");
  }
  PursuitState state = PursuitState::start(f);
  if (state.signal_norm == 0.0) {
    state.status = PursuitStatus::ZeroSignal;
    return state;
  }
  const double epsilon = stop.epsilon.value_or(1e-10 * state.signal_norm);
  const double stagnation = 1e-14 * state.signal_norm;
  std::vector<double> scratch;
  double rnorm = state.signal_norm;
  for (;;) {
    if (rnorm < stop.rho) {
      state.status = PursuitStatus::TargetReached;
      break;
    }
    if (state.k == stop.max_atoms) {
      state.status = PursuitStatus::BudgetExhausted;
      break;
    }
    const Correlation best = max_correlation(dict, state.residual);
    if (best.magnitude() < stagnation) {
      state.status = PursuitStatus::Stagnated;
      break;
    }
    ++state.k;
    if (projection == Projection::Iterative && state.contains(best.index)) ++state.duplicate_selections;
    state.selected.push_back(best.index);
    commit_atom(state, dict, best.index, scratch, StepKind::Selection, stop.record_trace);

    IterationRecord rec{state.k, best.index, best.value, 0.0};
    rnorm = state.residual_norm();
    rec.pre_projection_norm = rnorm;
    if (projection == Projection::Iterative) {
      const std::size_t cap = stop.max_proj_iters.value_or(1000 * state.support.size());
      const auto pr = self_project(state, dict, epsilon, cap, stop.record_trace, observer,
                                   stop.eager_projection ? ProjectionMode::Eager : ProjectionMode::Deferred);
      rec.projection_iterations = pr.iterations;
      rec.projection_capped = pr.capped;
      rnorm = state.residual_norm();
    }
    rec.residual_norm = rnorm;
    state.history.push_back(rec);
  }
  return state;
}

}  // namespace detail

/// Matching Pursuit.  Repeated selections of one atom fold into one coefficient.
template <Dictionary D>
PursuitState mp_run(std::span<const double> f, const D& dict, const StoppingConfig& stop) {
  return detail::greedy_run(f, dict, stop, detail::Projection::None);
}

/// Self Projected Matching Pursuit: one MP selection per outer iteration,
/// followed by a self-projection of the residual onto the selected atoms.
template <Dictionary D>
PursuitState spmp_run(std::span<const double> f, const D& dict, const StoppingConfig& stop,
                      const ProjectionObserver& observer = {}) {
  return detail::greedy_run(f, dict, stop, detail::Projection::Iterative, observer);
}

/// Thrown by omp_direct when the selected atoms are numerically dependent.
class SingularSelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference OMP: MP selection, then the exact least-squares fit over the
/// selected atoms (column-pivoted Householder QR) at every k.  O(N k^2) per step.
template <Dictionary D>
PursuitState omp_direct(std::span<const double> f, const D& dict, const StoppingConfig& stop) {
  stop.validate();
  if (f.size() != dict.dimension()) throw PreconditionError("omp_direct: signal length does not match dictionary");
  PursuitState state = PursuitState::start(f);
  if (state.signal_norm == 0.0) {
    state.status = PursuitStatus::ZeroSignal;
    return state;
  }
  const auto N = static_cast<Eigen::Index>(f.size());
  const Eigen::Map<const Eigen::VectorXd> fv(f.data(), N);
  const double stagnation = 1e-14 * state.signal_norm;
  Eigen::MatrixXd S(N, 0);
  double rnorm = state.signal_norm;
  for (;;) {
    if (rnorm < stop.rho) {
      state.status = PursuitStatus::TargetReached;
      break;
    }
    if (state.k == stop.max_atoms) {
      state.status = PursuitStatus::BudgetExhausted;
      break;
    }
    const Correlation best = max_correlation(dict, state.residual);
    if (best.magnitude() < stagnation) {
      state.status = PursuitStatus::Stagnated;
      break;
    }
    ++state.k;
    state.selected.push_back(best.index);
    S.conservativeResize(N, S.cols() + 1);
    dict.fill_atom(best.index, std::span<double>(S.col(S.cols() - 1).data(), f.size()));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    if (qr.rank() < S.cols()) {
      throw SingularSelectionError("omp_direct: selected atoms are numerically dependent at k=" +
                                   std::to_string(state.k));
    }
    const Eigen::VectorXd c = qr.solve(fv);
    const Eigen::VectorXd approx = S * c;

    const double before = rnorm;
    state.clear_support();
    for (std::size_t i = 0; i < state.selected.size(); ++i) state.accumulate(state.selected[i], c(static_cast<Eigen::Index>(i)));
    for (Eigen::Index i = 0; i < N; ++i) {
      state.approximation[static_cast<std::size_t>(i)] = approx(i);
      state.residual[static_cast<std::size_t>(i)] = fv(i) - approx(i);
    }
    rnorm = state.residual_norm();
    if (stop.record_trace) state.trace.push_back({StepKind::LeastSquares, state.k, best.index, best.value, before, rnorm});
    state.history.push_back({state.k, best.index, best.value, rnorm, rnorm});
  }
  return state;
}

}  // namespace spmp
