#pragma once

// Hierarchized block-wise pursuit: a signal is cut into Q blocks that share
// one dictionary of dimension N_b, and atoms are committed one at a time to
// the block whose best candidate correlation is globally largest.

#include <spmp/dictionary.hpp>
#include <spmp/pursuit.hpp>
#include <spmp/types.hpp>

#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace spmp {

/// Contiguous blocks of equal length; the last block is zero-padded when the
/// block size does not divide the signal length.
struct BlockPartition {
  std::size_t block_size = 0;
  std::size_t signal_length = 0;
  std::vector<std::vector<double>> blocks;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> true_lengths;  // samples of the original signal in each block

  std::size_t count() const noexcept { return blocks.size(); }
};

inline BlockPartition partition_signal(std::span<const double> f, std::size_t block_size) {
  if (block_size < 1) throw PreconditionError("partition_signal: block size must be >= 1");
  if (f.empty()) throw PreconditionError("partition_signal: empty signal");
  BlockPartition p;
  p.block_size = block_size;
  p.signal_length = f.size();
  for (std::size_t off = 0; off < f.size(); off += block_size) {
    const std::size_t len = std::min(block_size, f.size() - off);
    std::vector<double> b(block_size, 0.0);
    std::copy(f.begin() + static_cast<std::ptrdiff_t>(off), f.begin() + static_cast<std::ptrdiff_t>(off + len), b.begin());
    p.blocks.push_back(std::move(b));
    p.offsets.push_back(off);
    p.true_lengths.push_back(len);
  }
  return p;
}

/// Concatenates per-block vectors laid out as `layout`, dropping the padding.
inline std::vector<double> assemble(const BlockPartition& layout, const std::vector<std::vector<double>>& block_values) {
  if (block_values.size() != layout.count()) throw PreconditionError("assemble: block count mismatch");
  std::vector<double> out(layout.signal_length, 0.0);
  for (std::size_t q = 0; q < layout.count(); ++q) {
    if (block_values[q].size() != layout.block_size) throw PreconditionError("assemble: block length mismatch");
    if (layout.offsets[q] + layout.true_lengths[q] > layout.signal_length) {
      throw PreconditionError("assemble: inconsistent offsets");
    }
    std::copy_n(block_values[q].begin(), layout.true_lengths[q], out.begin() + static_cast<std::ptrdiff_t>(layout.offsets[q]));
  }
  return out;
}

inline std::vector<double> assemble(const BlockPartition& partition) { return assemble(partition, partition.blocks); }

enum class BlockMethod { MP, SPMP };

/// Max-priority structure of block candidates, or a linear rescan; both must agree.
enum class Ranking { Ordered, LinearScan };

struct HbwConfig {
  std::size_t K = 0;                 // global budget on committed atoms
  std::optional<double> snr_db;      // optional global target; stops at first crossing
  std::optional<double> epsilon;     // per-block default 1e-10 * ||f_q||
  std::optional<std::size_t> max_proj_iters;  // default 1000 * k_q
  BlockMethod method = BlockMethod::SPMP;
  Ranking ranking = Ranking::Ordered;
  bool record_trace = false;
  bool eager_projection = false;
};

/// One audit-log entry: which block won, with what, and the runner-up magnitude.
struct CommitRecord {
  std::size_t commit;  // 1-based
  std::size_t block;   // 1-based q*
  AtomIndex atom;
  double candidate;    // signed candidate correlation that won the ranking
  double coefficient;  // coefficient added by the selection step
  double residual_norm;  // block residual norm after the commit (and projection)
  double runner_up;    // best |candidate| among the other blocks (0 if none)
};

enum class HbwStatus {
  BudgetReached,  // sum k_q == K
  TargetReached,  // global SNR target met first
  Exhausted,      // every block residual is numerically zero
};

inline const char* to_string(HbwStatus s) {
  switch (s) {
    case HbwStatus::BudgetReached: return "budget_reached";
    case HbwStatus::TargetReached: return "target_reached";
    case HbwStatus::Exhausted: return "exhausted";
  }
  return "unknown";
}

struct HbwResult {
  std::vector<PursuitState> blocks;
  std::vector<std::size_t> k_q;
  std::vector<CommitRecord> audit;
  HbwStatus status = HbwStatus::BudgetReached;
  std::size_t committed = 0;
  double signal_energy = 0.0;    // ||f||^2 over true samples
  double residual_energy = 0.0;  // sum_q ||r_q||^2 over true samples

  /// Distinct (block, atom) coefficients, the K of the sparsity ratio.
  std::size_t coefficient_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.support.size();
    return n;
  }
};

namespace detail {

inline double truncated_energy(std::span<const double> v, std::size_t len) { return norm2(v.first(len)); }

}  // namespace detail

template <Dictionary D>
HbwResult hbw_run(const BlockPartition& partition, const D& dict, const HbwConfig& cfg) {
  if (cfg.K < 1) throw PreconditionError("hbw_run: K must be >= 1");
  if (partition.count() == 0) throw PreconditionError("hbw_run: empty partition");
  if (partition.block_size != dict.dimension()) throw PreconditionError("hbw_run: block size does not match dictionary");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw PreconditionError("hbw_run: epsilon must be > 0");

  const std::size_t Q = partition.count();
  HbwResult out;
  out.blocks.reserve(Q);
  out.k_q.assign(Q, 0);
  std::vector<double> energy(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    out.blocks.push_back(PursuitState::start(partition.blocks[q]));
    energy[q] = detail::truncated_energy(partition.blocks[q], partition.true_lengths[q]);
    out.signal_energy += energy[q];
  }
  out.residual_energy = out.signal_energy;
  const double zero_level = 1e-14 * std::sqrt(out.signal_energy);
  const std::optional<double> target =
      cfg.snr_db ? std::optional<double>(out.signal_energy * std::pow(10.0, -*cfg.snr_db / 10.0)) : std::nullopt;

  // Step 1: a potential atom for every block.
  std::vector<Correlation> candidate(Q);
  std::vector<bool> active(Q, false);
  using Key = std::pair<double, std::size_t>;  // (-|corr|, q): begin() is the largest, smallest q on ties
  std::set<Key> ranking;
  const auto refresh = [&](std::size_t q) {
    if (cfg.ranking == Ranking::Ordered && active[q]) ranking.erase({-candidate[q].magnitude(), q});
    candidate[q] = max_correlation(dict, out.blocks[q].residual);
    active[q] = candidate[q].magnitude() >= zero_level && candidate[q].magnitude() > 0.0;
    if (cfg.ranking == Ranking::Ordered && active[q]) ranking.insert({-candidate[q].magnitude(), q});
  };
  for (std::size_t q = 0; q < Q; ++q) {
    if (out.blocks[q].signal_norm > 0.0) refresh(q);
  }

  const auto pick = [&]() -> std::pair<std::optional<std::size_t>, double> {
    if (cfg.ranking == Ranking::Ordered) {
      if (ranking.empty()) return {std::nullopt, 0.0};
      auto it = ranking.begin();
      const std::size_t best = it->second;
      ++it;
      return {best, it == ranking.end() ? 0.0 : -it->first};
    }
    std::optional<std::size_t> best;
    for (std::size_t q = 0; q < Q; ++q) {
      if (active[q] && (!best || candidate[q].magnitude() > candidate[*best].magnitude())) best = q;
    }
    double runner = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      if (active[q] && q != *best) runner = std::max(runner, candidate[q].magnitude());
    }
    return {best, runner};
  };

  std::vector<double> scratch;
  for (;;) {
    if (out.committed == cfg.K) {
      out.status = HbwStatus::BudgetReached;
      break;
    }
    if (target && out.residual_energy < *target) {
      out.status = HbwStatus::TargetReached;
      break;
    }
    const auto [winner, runner_up] = pick();
    if (!winner) {
      out.status = HbwStatus::Exhausted;
      break;
    }
    // Step 2: commit the winning block's candidate.
    const std::size_t q = *winner;
    PursuitState& st = out.blocks[q];
    const Correlation cand = candidate[q];
    ++out.k_q[q];
    ++out.committed;
    ++st.k;
    if (cfg.method == BlockMethod::SPMP && st.contains(cand.index)) ++st.duplicate_selections;
    st.selected.push_back(cand.index);
    const double c = detail::commit_atom(st, dict, cand.index, scratch, StepKind::Selection, cfg.record_trace);
    IterationRecord rec{st.k, cand.index, cand.value, 0.0};
    rec.pre_projection_norm = st.residual_norm();
    if (cfg.method == BlockMethod::SPMP && out.k_q[q] > 1) {
      const double eps = cfg.epsilon.value_or(1e-10 * st.signal_norm);
      const auto pr = self_project(st, dict, eps, cfg.max_proj_iters.value_or(1000 * st.support.size()), cfg.record_trace, {},
                                   cfg.eager_projection ? ProjectionMode::Eager : ProjectionMode::Deferred);
      rec.projection_iterations = pr.iterations;
      rec.projection_capped = pr.capped;
    }
    rec.residual_norm = st.residual_norm();
    st.history.push_back(rec);

    out.residual_energy -= energy[q];
    energy[q] = detail::truncated_energy(st.residual, partition.true_lengths[q]);
    out.residual_energy += energy[q];
    out.audit.push_back({out.committed, q + 1, cand.index, cand.value, c, rec.residual_norm, runner_up});

    // Step 3: a new potential atom for q*.
    refresh(q);
  }
  // Recompute from scratch so the reported energy carries no update drift.
  out.residual_energy = 0.0;
  for (std::size_t q = 0; q < Q; ++q) {
    out.residual_energy += detail::truncated_energy(out.blocks[q].residual, partition.true_lengths[q]);
    out.blocks[q].status = out.blocks[q].k == 0 && out.blocks[q].signal_norm == 0.0 ? PursuitStatus::ZeroSignal
                                                                                    : PursuitStatus::BudgetExhausted;
  }
  return out;
}

/// Independent per-block pursuit (no global ranking).
struct BlockwiseConfig {
  BlockMethod method = BlockMethod::SPMP;
  std::optional<double> snr_db;              // per-block target
  std::optional<std::size_t> atoms_per_block;  // per-block budget
  std::optional<double> epsilon;
  std::size_t max_atoms_per_block = 0;       // 0 means 1000 N_b
  bool record_trace = false;
  bool eager_projection = false;
};

struct BlockwiseResult {
  std::vector<PursuitState> blocks;
  double signal_energy = 0.0;
  double residual_energy = 0.0;

  std::size_t coefficient_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.support.size();
    return n;
  }
};

template <Dictionary D>
BlockwiseResult blockwise_run(const BlockPartition& partition, const D& dict, const BlockwiseConfig& cfg) {
  if (partition.block_size != dict.dimension()) throw PreconditionError("blockwise_run: block size does not match dictionary");
  if (!cfg.snr_db && !cfg.atoms_per_block) throw PreconditionError("blockwise_run: need a per-block target or budget");
  BlockwiseResult out;
  for (std::size_t q = 0; q < partition.count(); ++q) {
    const auto& fq = partition.blocks[q];
    std::size_t cap = cfg.atoms_per_block.value_or(cfg.max_atoms_per_block ? cfg.max_atoms_per_block : 1000 * dict.dimension());
    StoppingConfig stop = cfg.snr_db ? StoppingConfig::for_snr(fq, *cfg.snr_db, cap) : StoppingConfig{};
    if (!cfg.snr_db) {
      stop.rho = std::numeric_limits<double>::min();
      stop.max_atoms = cap;
    }
    stop.epsilon = cfg.epsilon;
    stop.record_trace = cfg.record_trace;
    stop.eager_projection = cfg.eager_projection;
    if (stop.max_atoms == 0) {
      out.blocks.push_back(PursuitState::start(fq));
      continue;
    }
    if (detail::norm(fq) == 0.0) {
      PursuitState zero = PursuitState::start(fq);
      zero.status = PursuitStatus::ZeroSignal;
      out.blocks.push_back(std::move(zero));
      continue;
    }
    out.blocks.push_back(cfg.method == BlockMethod::SPMP ? spmp_run(fq, dict, stop) : mp_run(fq, dict, stop));
  }
  for (std::size_t q = 0; q < partition.count(); ++q) {
    out.signal_energy += detail::truncated_energy(partition.blocks[q], partition.true_lengths[q]);
    out.residual_energy += detail::truncated_energy(out.blocks[q].residual, partition.true_lengths[q]);
  }
  return out;
}

/// Assembled approximation of a block-wise run.
inline std::vector<double> assemble_approximation(const BlockPartition& layout, const std::vector<PursuitState>& blocks) {
  std::vector<std::vector<double>> values;
  values.reserve(blocks.size());
  for (const auto& b : blocks) values.push_back(b.approximation);
  return assemble(layout, values);
}

}  // namespace spmp
