#include "support.hpp"

#include <spmp/pursuit.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace spmp;
namespace st = spmp::testing;

namespace {

StoppingConfig stop_at(double rho, std::size_t max_atoms, std::optional<double> eps = std::nullopt) {
  StoppingConfig s;
  s.rho = rho;
  s.max_atoms = max_atoms;
  s.epsilon = eps;
  s.record_trace = true;
  return s;
}

// Pythagoras and monotonicity over every recorded rank-1 step.
void expect_trace_consistent(const PursuitState& s) {
  for (const auto& t : s.trace) {
    if (t.kind == StepKind::LeastSquares) continue;
    const double b2 = t.norm_before * t.norm_before;
    EXPECT_LE(std::abs(b2 - t.coefficient * t.coefficient - t.norm_after * t.norm_after), 1e-10 * b2 + 1e-300);
    EXPECT_LE(t.norm_after, t.norm_before * (1 + 1e-10));
  }
}

template <class D>
void expect_state_consistent(const PursuitState& s, const D& dict, std::span<const double> f) {
  const double fn = st::l2(f);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(s.approximation[i] + s.residual[i], f[i], 1e-10 * fn);
  std::vector<double> rebuilt(f.size(), 0.0);
  for (const auto& [a, c] : s.coefficients_by_atom()) {
    const Signal d = dict.atom(a);
    for (std::size_t i = 0; i < f.size(); ++i) rebuilt[i] += c * d[i];
  }
  EXPECT_LT(st::max_abs_diff(rebuilt, s.approximation), 1e-8 * fn);
}

// f = sum of `k` random atoms with random weights.
std::vector<double> sparse_signal(const MatrixDictionary& d, std::size_t k, std::mt19937_64& rng,
                                  std::vector<AtomIndex>* chosen = nullptr) {
  std::uniform_int_distribution<std::size_t> pick(1, d.size());
  std::normal_distribution<double> g;
  std::vector<double> f(d.dimension(), 0.0);
  std::vector<AtomIndex> used;
  while (used.size() < k) {
    const AtomIndex a(pick(rng));
    if (std::find(used.begin(), used.end(), a) != used.end()) continue;
    used.push_back(a);
    const Signal atom = d.atom(a);
    const double w = g(rng) + (g(rng) > 0 ? 2.0 : -2.0);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += w * atom[i];
  }
  if (chosen) *chosen = used;
  return f;
}

}  // namespace

TEST(StoppingConfig, Validation) {
  StoppingConfig s;
  EXPECT_THROW(s.validate(), PreconditionError);
  s.rho = 1.0;
  EXPECT_THROW(s.validate(), PreconditionError);
  s.max_atoms = 1;
  EXPECT_NO_THROW(s.validate());
  s.epsilon = 0.0;
  EXPECT_THROW(s.validate(), PreconditionError);
  s.epsilon = 1e-3;
  s.max_proj_iters = 0;
  EXPECT_THROW(s.validate(), PreconditionError);
}

TEST(StoppingConfig, SnrMapping) {
  const std::vector<double> f{3.0, 4.0};
  EXPECT_NEAR(StoppingConfig::for_snr(f, 20.0, 5).rho, 0.5, 1e-15);
}

TEST(Mp, OrthonormalCaseIsExactInTwoSteps) {
  const auto d = MatrixDictionary::identity(2);
  const std::vector<double> f{3.0, 4.0};
  const auto s = mp_run(f, d, stop_at(1e-9, 10));
  EXPECT_EQ(s.k, 2u);
  EXPECT_EQ(s.status, PursuitStatus::TargetReached);
  ASSERT_EQ(s.selected.size(), 2u);
  EXPECT_EQ(s.selected[0], AtomIndex(2));
  EXPECT_EQ(s.selected[1], AtomIndex(1));
  EXPECT_EQ(s.coefficient_of(AtomIndex(2)), 4.0);
  EXPECT_EQ(s.coefficient_of(AtomIndex(1)), 3.0);
  EXPECT_EQ(s.residual_norm(), 0.0);
}

TEST(Mp, SingleAtomSignal) {
  std::mt19937_64 rng(31);
  const auto d = st::gaussian_dictionary(10, 25, rng);
  const Signal f = d.atom(AtomIndex(7));
  const auto s = mp_run(f.span(), d, stop_at(1e-9, 10));
  EXPECT_EQ(s.k, 1u);
  EXPECT_EQ(s.selected[0], AtomIndex(7));
  EXPECT_NEAR(s.coefficient_of(AtomIndex(7)), 1.0, 1e-14);
  EXPECT_LT(s.residual_norm(), 1e-14);

  const TrigDictionary t(8);
  const Signal g = t.atom(AtomIndex(7));
  const auto u = mp_run(g.span(), t, stop_at(1e-9, 10));
  EXPECT_EQ(u.selected.at(0), AtomIndex(7));
  EXPECT_NEAR(u.coefficient_of(AtomIndex(7)), 1.0, 1e-12);
}

TEST(Mp, SixtyDegreePairFollowsScriptedRecursion) {
  const double th = std::numbers::pi / 3;
  const auto d = MatrixDictionary::normalized(2, 2, {1.0, 0.0, std::cos(th), std::sin(th)});
  const std::vector<double> f{0.0, 1.0};
  const auto s = mp_run(f, d, stop_at(1e-300, 3));
  ASSERT_EQ(s.history.size(), 3u);

  // Hand recursion in long double.
  long double r[2] = {0.0L, 1.0L};
  const long double atoms[2][2] = {{1.0L, 0.0L}, {std::cos(static_cast<long double>(th)), std::sin(static_cast<long double>(th))}};
  for (int step = 0; step < 3; ++step) {
    long double c[2];
    for (int a = 0; a < 2; ++a) c[a] = atoms[a][0] * r[0] + atoms[a][1] * r[1];
    const int p = std::abs(c[1]) > std::abs(c[0]) ? 1 : 0;
    r[0] -= c[p] * atoms[p][0];
    r[1] -= c[p] * atoms[p][1];
    EXPECT_EQ(s.history[step].atom, AtomIndex(p + 1));
    EXPECT_NEAR(s.history[step].residual_norm, static_cast<double>(std::sqrt(r[0] * r[0] + r[1] * r[1])), 1e-14);
  }
  EXPECT_NEAR(s.history[0].residual_norm, 0.5, 1e-15);
  expect_trace_consistent(s);
}

TEST(Mp, ZeroSignal) {
  const auto d = MatrixDictionary::identity(3);
  const std::vector<double> f(3, 0.0);
  const auto s = mp_run(f, d, stop_at(1e-9, 5));
  EXPECT_EQ(s.status, PursuitStatus::ZeroSignal);
  EXPECT_EQ(s.k, 0u);
  EXPECT_EQ(s.residual_norm(), 0.0);
}

TEST(Mp, StagnatesOnIncompleteDictionary) {
  const auto d = MatrixDictionary::normalized(3, 2, {1, 0, 0, 0, 1, 0});
  const std::vector<double> f{1.0, 2.0, 3.0};
  const auto s = mp_run(f, d, stop_at(1e-6, 50));
  EXPECT_EQ(s.status, PursuitStatus::Stagnated);
  EXPECT_NEAR(s.residual_norm(), 3.0, 1e-14);
}

TEST(Mp, BudgetExhausted) {
  std::mt19937_64 rng(32);
  const auto d = st::gaussian_dictionary(16, 40, rng);
  const auto f = st::gaussian_vector(16, rng);
  const auto s = mp_run(f, d, stop_at(1e-12, 3));
  EXPECT_EQ(s.status, PursuitStatus::BudgetExhausted);
  EXPECT_EQ(s.k, 3u);
}

TEST(Mp, ConvergesForSignalInSpan) {
  std::mt19937_64 rng(33);
  const auto d = st::gaussian_dictionary(12, 30, rng);
  const auto f = st::gaussian_vector(12, rng);
  const auto s = mp_run(f, d, stop_at(1e-6 * st::l2(f), 20000));
  EXPECT_EQ(s.status, PursuitStatus::TargetReached);
  expect_state_consistent(s, d, f);
  expect_trace_consistent(s);
}

TEST(Mp, RepeatedSelectionsFold) {
  std::mt19937_64 rng(34);
  const auto d = st::gaussian_dictionary(6, 12, rng);
  const auto f = st::gaussian_vector(6, rng);
  const auto s = mp_run(f, d, stop_at(1e-8, 200));
  EXPECT_GT(s.selected.size(), s.support.size());
  EXPECT_EQ(s.coefficients.size(), s.support.size());
  expect_state_consistent(s, d, f);
}

TEST(SelfProject, SingleAtomIsOneStep) {
  std::mt19937_64 rng(35);
  const auto d = st::gaussian_dictionary(8, 20, rng);
  const auto f = st::gaussian_vector(8, rng);
  auto s = PursuitState::start(f);
  s.accumulate(AtomIndex(4), 0.0);
  const auto pr = self_project(s, d, 1e-12, 10);
  EXPECT_EQ(pr.iterations, 1u);
  EXPECT_FALSE(pr.capped);
  const Signal a = d.atom(AtomIndex(4));
  EXPECT_LT(std::abs(detail::dot(a.span(), s.residual)), 1e-12);
}

TEST(SelfProject, OrthonormalSetTouchesEachAtomOnce) {
  const auto d = MatrixDictionary::identity(5);
  const std::vector<double> f{1.0, -2.0, 3.0, 0.5, 4.0};
  auto s = PursuitState::start(f);
  for (std::size_t i : {1u, 3u, 5u}) s.accumulate(AtomIndex(i), 0.0);
  const auto pr = self_project(s, d, 1e-12, 100);
  EXPECT_EQ(pr.iterations, 3u);
  EXPECT_EQ(s.residual[0], 0.0);
  EXPECT_EQ(s.residual[2], 0.0);
  EXPECT_EQ(s.residual[4], 0.0);
  EXPECT_EQ(s.residual[1], -2.0);
}

TEST(SelfProject, MatchesLeastSquaresOracle) {
  const double h = 1.0 / std::sqrt(2.0);
  const auto d = MatrixDictionary::normalized(3, 2, {1, 0, 0, h, h, 0});
  const std::vector<double> r{0.3, -1.2, 0.7};
  auto s = PursuitState::start(r);
  s.accumulate(AtomIndex(1), 0.0);
  s.accumulate(AtomIndex(2), 0.0);
  const auto pr = self_project(s, d, 1e-14, 10000);
  EXPECT_FALSE(pr.capped);
  // span{e1, e2}: the orthogonal residual is (0, 0, 0.7).
  const auto basis = st::orthonormal_basis(st::atom_columns(d, s.support));
  EXPECT_NEAR(st::projected_norm2(basis, s.residual), 0.0, 1e-20);
  EXPECT_NEAR(s.residual[0], 0.0, 1e-12);
  EXPECT_NEAR(s.residual[1], 0.0, 1e-12);
  EXPECT_NEAR(s.residual[2], 0.7, 1e-12);
  EXPECT_NEAR(st::l2(s.residual), st::least_squares_residual(st::atom_columns(d, s.support), r), 1e-8);
}

TEST(SelfProject, CapIsFlagged) {
  // Nearly parallel atoms converge slowly.
  const auto d = MatrixDictionary::normalized(2, 2, {1.0, 0.0, 1.0, 1e-3});
  const std::vector<double> r{0.0, 1.0};
  auto s = PursuitState::start(r);
  s.accumulate(AtomIndex(1), 0.0);
  s.accumulate(AtomIndex(2), 0.0);
  const auto pr = self_project(s, d, 1e-12, 5);
  EXPECT_TRUE(pr.capped);
  EXPECT_EQ(pr.iterations, 5u);
  EXPECT_GT(pr.final_correlation, 1e-12);
  EXPECT_EQ(s.capped_projections, 1u);
}

TEST(SelfProject, Preconditions) {
  const auto d = MatrixDictionary::identity(2);
  auto s = PursuitState::start(std::vector<double>{1.0, 1.0});
  EXPECT_THROW(self_project(s, d, 1e-12, 5), PreconditionError);
  s.accumulate(AtomIndex(1), 0.0);
  EXPECT_THROW(self_project(s, d, 0.0, 5), PreconditionError);
  EXPECT_THROW(self_project(s, d, 1e-12, 0), PreconditionError);
}

TEST(SelfProject, DeferredAndEagerAgree) {
  std::mt19937_64 rng(31);
  const TrigDictionary d(64);
  for (int t = 0; t < 5; ++t) {
    const auto f = st::gaussian_vector(64, rng);
    auto a = stop_at(1e-9, 30, 1e-12 * st::l2(f));
    auto b = a;
    b.eager_projection = true;
    const auto x = spmp_run(f, d, a);
    const auto y = spmp_run(f, d, b);
    ASSERT_EQ(x.selected, y.selected);
    ASSERT_EQ(x.history.size(), y.history.size());
    for (std::size_t k = 0; k < x.history.size(); ++k) {
      EXPECT_NEAR(x.history[k].residual_norm, y.history[k].residual_norm, 1e-12 * st::l2(f));
    }
    EXPECT_LT(st::max_abs_diff(x.residual, y.residual), 1e-11 * st::l2(f));
    expect_state_consistent(x, d, f);
    expect_trace_consistent(x);
    expect_trace_consistent(y);
    std::size_t ex = 0, ey = 0;
    for (const auto& r : x.trace) ex += r.kind == StepKind::Projection;
    for (const auto& r : y.trace) ey += r.kind == StepKind::Projection;
    EXPECT_EQ(ey, y.projection_iterations);
    EXPECT_LT(ex, ey);  // one record per refresh segment
  }
}

TEST(SelfProject, DeferredModeMatchesLeastSquares) {
  std::mt19937_64 rng(32);
  const auto d = st::gaussian_dictionary(40, 80, rng);
  const auto r = st::gaussian_vector(40, rng);
  auto s = PursuitState::start(r);
  for (std::size_t a : {3u, 9u, 14u, 27u, 40u, 66u}) s.accumulate(AtomIndex(a), 0.0);
  const auto pr = self_project(s, d, 1e-13, 100000);
  EXPECT_FALSE(pr.capped);
  EXPECT_NEAR(st::l2(s.residual), st::least_squares_residual(st::atom_columns(d, s.support), r), 1e-10);
  for (const auto& a : s.support) EXPECT_LT(std::abs(detail::dot(d.atom(a).span(), s.residual)), 1e-13);
  expect_state_consistent(s, d, r);
}

TEST(Spmp, IdentityDictionaryEqualsMp) {
  const auto d = MatrixDictionary::identity(6);
  const std::vector<double> f{0.5, -3.0, 2.0, 0.0, 1.0, -1.0};
  const auto a = mp_run(f, d, stop_at(1e-9, 10));
  const auto b = spmp_run(f, d, stop_at(1e-9, 10));
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.coefficients, b.coefficients);
}

TEST(Spmp, RecoversSparseSignalLikeDirectOmp) {
  std::mt19937_64 rng(36);
  const auto d = st::gaussian_dictionary(20, 50, rng);
  std::vector<AtomIndex> chosen;
  const auto f = sparse_signal(d, 5, rng, &chosen);
  const auto s = spmp_run(f, d, stop_at(1e-6, 20, 1e-10));
  const auto o = omp_direct(f, d, stop_at(1e-6, 20));
  EXPECT_EQ(s.status, PursuitStatus::TargetReached);
  EXPECT_LE(s.k, 5u);
  ASSERT_EQ(s.selected, o.selected);
  for (std::size_t k = 0; k < s.history.size(); ++k) {
    EXPECT_NEAR(s.history[k].residual_norm, o.history[k].residual_norm, 1e-7 * st::l2(f));
  }
  expect_state_consistent(s, d, f);
  expect_trace_consistent(s);
}

TEST(Spmp, ResidualIsEpsOrthogonalAfterEveryOuterStep) {
  std::mt19937_64 rng(37);
  const auto d = st::gaussian_dictionary(30, 90, rng);
  const auto f = st::gaussian_vector(30, rng);
  const double eps = 1e-10 * st::l2(f);
  std::size_t checked = 0;
  ProjectionObserver obs = [&](const PursuitState& s, std::size_t, AtomIndex, double) {
    (void)s;
    ++checked;
  };
  const auto s = spmp_run(f, d, stop_at(1e-8, 25, eps), obs);
  EXPECT_GT(checked, 0u);
  for (const auto& a : s.support) {
    EXPECT_LT(std::abs(detail::dot(d.atom(a).span(), s.residual)), eps);
  }
  EXPECT_EQ(s.duplicate_selections, 0u);
  EXPECT_EQ(s.support.size(), s.k);
  expect_state_consistent(s, d, f);
  expect_trace_consistent(s);
}

TEST(Spmp, TrigDictionaryMatchesDirectOmp) {
  std::mt19937_64 rng(38);
  const TrigDictionary d(32);
  const auto f = st::gaussian_vector(32, rng);
  const auto s = spmp_run(f, d, stop_at(1e-9, 15, 1e-12 * st::l2(f)));
  const auto o = omp_direct(f, d, stop_at(1e-9, 15));
  ASSERT_EQ(s.selected, o.selected);
  for (std::size_t k = 0; k < s.history.size(); ++k) {
    EXPECT_NEAR(s.history[k].residual_norm, o.history[k].residual_norm, 1e-7 * st::l2(f));
  }
  expect_trace_consistent(s);
}

TEST(Spmp, DeterministicSelections) {
  std::mt19937_64 rng(39);
  const TrigDictionary d(40);
  const auto f = st::gaussian_vector(40, rng);
  const auto a = spmp_run(f, d, stop_at(1e-3, 30));
  const auto b = spmp_run(f, d, stop_at(1e-3, 30));
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.coefficients, b.coefficients);
}

TEST(OmpDirect, IdentityEqualsMp) {
  const auto d = MatrixDictionary::identity(2);
  const std::vector<double> f{3.0, 4.0};
  const auto a = mp_run(f, d, stop_at(1e-9, 5));
  const auto b = omp_direct(f, d, stop_at(1e-9, 5));
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_NEAR(b.coefficient_of(AtomIndex(1)), 3.0, 1e-14);
  EXPECT_NEAR(b.coefficient_of(AtomIndex(2)), 4.0, 1e-14);
}

TEST(OmpDirect, FirstCoefficientIsInnerProduct) {
  std::mt19937_64 rng(40);
  const auto d = st::gaussian_dictionary(10, 30, rng);
  const auto f = st::gaussian_vector(10, rng);
  const auto o = omp_direct(f, d, stop_at(1e-12, 1));
  const auto a = o.selected.at(0);
  EXPECT_NEAR(o.coefficient_of(a), detail::dot(d.atom(a).span(), f), 1e-13);
}

TEST(OmpDirect, NeverWorseThanMpAndMatchesLeastSquares) {
  std::mt19937_64 rng(41);
  const auto d = st::gaussian_dictionary(30, 80, rng);
  const auto f = st::gaussian_vector(30, rng);
  const auto o = omp_direct(f, d, stop_at(1e-12, 20));
  const auto m = mp_run(f, d, stop_at(1e-12, 20));
  const auto s = spmp_run(f, d, stop_at(1e-12, 20, 1e-12 * st::l2(f)));
  ASSERT_EQ(o.selected, s.selected);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_LE(o.history[k].residual_norm, m.history[k].residual_norm * (1 + 1e-12));
    EXPECT_NEAR(o.history[k].residual_norm, s.history[k].residual_norm, 1e-7 * st::l2(f));
    const std::span<const AtomIndex> sel(o.selected.data(), k + 1);
    EXPECT_NEAR(o.history[k].residual_norm, st::least_squares_residual(st::atom_columns(d, sel), f), 1e-9);
  }
}

TEST(OmpDirect, ExactFitStopsBeforeTwinColumn) {
  const auto d = MatrixDictionary::normalized(2, 3, {1, 0, 1, 0, 0, 1});
  const std::vector<double> f{1.0, 0.0};
  const auto o = omp_direct(f, d, stop_at(1e-9, 3));
  EXPECT_EQ(o.k, 1u);
}
