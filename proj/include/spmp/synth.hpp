#pragma once

// Seeded synthetic test signals.

#include <spmp/dictionary.hpp>
#include <spmp/types.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace spmp::synth {

inline std::vector<double> sine(std::size_t n, double rate, double freq, double amplitude = 0.5, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(2 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  return x;
}

inline std::vector<double> sum_of_sines(std::size_t n, double rate, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> f(50.0, rate / 4), ph(0.0, 2 * std::numbers::pi), a(0.2, 1.0);
  std::vector<double> x(n, 0.0);
  for (std::size_t c = 0; c < count; ++c) {
    const auto s = sine(n, rate, f(rng), a(rng), ph(rng));
    for (std::size_t i = 0; i < n; ++i) x[i] += s[i];
  }
  return x;
}

inline std::vector<double> noise(std::size_t n, std::uint64_t seed, double sigma = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

struct AtomMixture {
  std::vector<double> signal;
  std::vector<AtomIndex> atoms;
  std::vector<double> weights;
};

/// Sum of `count` distinct random atoms with weights bounded away from zero,
/// plus white noise of standard deviation `noise_sigma`.
template <Dictionary D>
AtomMixture atom_mixture(const D& dict, std::size_t count, std::uint64_t seed, double noise_sigma = 0.0) {
  if (count > dict.size()) throw PreconditionError("atom_mixture: more atoms than the dictionary holds");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(1, dict.size());
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution sign;
  std::normal_distribution<double> g(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  AtomMixture out;
  out.signal.assign(dict.dimension(), 0.0);
  std::vector<double> a(dict.dimension());
  while (out.atoms.size() < count) {
    const AtomIndex idx(pick(rng));
    if (std::find(out.atoms.begin(), out.atoms.end(), idx) != out.atoms.end()) continue;
    const double w = mag(rng) * (sign(rng) ? 1.0 : -1.0);
    dict.fill_atom(idx, a);
    for (std::size_t i = 0; i < a.size(); ++i) out.signal[i] += w * a[i];
    out.atoms.push_back(idx);
    out.weights.push_back(w);
  }
  if (noise_sigma > 0) {
    for (double& v : out.signal) v += g(rng);
  }
  return out;
}

/// Sequence of overlapping harmonic notes with decaying envelopes and
/// quiet gaps.  Local spectral content changes from note to note.
inline std::vector<double> nonstationary(std::size_t n, double rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dur(0.08, 0.6), gap(0.0, 0.25), ph(0.0, 2 * std::numbers::pi), amp(0.3, 1.0),
      decay(2.0, 12.0);
  std::uniform_int_distribution<int> semitone(-21, 21), partials(1, 6), rest(0, 3);
  std::vector<double> x(n, 0.0);
  double t = 0.0;
  const double total = static_cast<double>(n) / rate;
  while (t < total) {
    const double f0 = 440.0 * std::pow(2.0, semitone(rng) / 12.0);
    const double len = dur(rng);
    const int np = partials(rng);
    const double a0 = amp(rng);
    const double dk = decay(rng);
    const auto start = static_cast<std::size_t>(t * rate);
    const auto stop = std::min(n, static_cast<std::size_t>((t + len) * rate));
    std::vector<double> phases(np);
    for (double& p : phases) p = ph(rng);
    for (std::size_t i = start; i < stop; ++i) {
      const double tau = static_cast<double>(i - start) / rate;
      const double attack = std::min(1.0, tau / 0.005);
      const double env = a0 * attack * std::exp(-dk * tau);
      double s = 0.0;
      for (int p = 1; p <= np; ++p) {
        const double fp = f0 * p;
        if (fp >= rate / 2) break;
        s += std::sin(2 * std::numbers::pi * fp * tau + phases[p - 1]) / p;
      }
      x[i] += env * s;
    }
    // Notes overlap unless a rest follows.
    t += rest(rng) == 0 ? len + gap(rng) : 0.5 * len;
  }
  const double peak = *std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (peak != 0.0) {
    for (double& v : x) v *= 0.9 / std::abs(peak);
  }
  return x;
}

}  // namespace spmp::synth
