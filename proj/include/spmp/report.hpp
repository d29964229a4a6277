#pragma once

#include <spmp/analysis.hpp>
#include <spmp/hbw.hpp>
#include <spmp/pursuit.hpp>
#include <spmp/wav.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace spmp {

using Json = nlohmann::json;

/// Non-finite reals become the strings "inf", "-inf" or "nan".
inline Json real_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double real_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

inline Json coefficients_json(const PursuitState& state) {
  Json list = Json::array();
  for (const auto& [atom, c] : state.coefficients_by_atom()) list.push_back({{"atom", atom.value()}, {"value", c}});
  return list;
}

/// Reads back the per-atom coefficient list written by coefficients_json.
inline std::vector<std::pair<AtomIndex, double>> coefficients_from_json(const Json& list) {
  std::vector<std::pair<AtomIndex, double>> out;
  for (const auto& e : list) out.emplace_back(AtomIndex(e.at("atom").get<std::size_t>()), e.at("value").get<double>());
  return out;
}

/// Reconstruction sum_i c_i d_{a_i}.
template <Dictionary D>
std::vector<double> synthesize(const D& dict, const std::vector<std::pair<AtomIndex, double>>& coeffs) {
  std::vector<double> out(dict.dimension(), 0.0), atom(dict.dimension());
  for (const auto& [a, c] : coeffs) {
    dict.fill_atom(a, atom);
    detail::axpy(c, atom, out);
  }
  return out;
}

inline Json diagnostics_json(const DiagnosticsReport& rep) {
  Json records = Json::array();
  for (const auto& r : rep.records) {
    records.push_back({{"k", r.k},
                       {"residual_norm", r.residual_norm},
                       {"pre_projection_norm", r.pre_projection_norm},
                       {"lambda_min", r.lambda_min ? real_json(*r.lambda_min) : Json()},
                       {"projection_iterations", r.projection_iterations},
                       {"projection_capped", r.projection_capped},
                       {"rate_bound", r.rate_bound ? real_json(*r.rate_bound) : Json()},
                       {"roundoff_budget", r.roundoff_budget}});
  }
  return {{"N", rep.N}, {"signal_norm", rep.signal_norm}, {"records", records}};
}

namespace detail {

inline std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return Json(v).dump();  // shortest round-trip form
}

inline std::string csv_opt(const std::optional<double>& v) { return v ? csv_real(*v) : ""; }

}  // namespace detail

inline void write_diagnostics_csv(std::ostream& out, const DiagnosticsReport& rep) {
  out << "k,residual_norm,pre_projection_norm,lambda_min,projection_iterations,projection_capped,rate_bound,"
         "roundoff_budget\n";
  for (const auto& r : rep.records) {
    out << r.k << ',' << detail::csv_real(r.residual_norm) << ',' << detail::csv_real(r.pre_projection_norm) << ','
        << detail::csv_opt(r.lambda_min) << ',' << r.projection_iterations << ',' << (r.projection_capped ? 1 : 0)
        << ',' << detail::csv_opt(r.rate_bound) << ',' << detail::csv_real(r.roundoff_budget) << '\n';
  }
}

/// Per-iteration trace without spectra, for runs where only norms are wanted.
inline void write_history_csv(std::ostream& out, const PursuitState& state) {
  out << "k,atom,selected_correlation,pre_projection_norm,residual_norm,projection_iterations,projection_capped\n";
  for (const auto& h : state.history) {
    out << h.k << ',' << h.atom.value() << ',' << detail::csv_real(h.selected_correlation) << ','
        << detail::csv_real(h.pre_projection_norm) << ',' << detail::csv_real(h.residual_norm) << ','
        << h.projection_iterations << ',' << (h.projection_capped ? 1 : 0) << '\n';
  }
}

inline void write_audit_csv(std::ostream& out, const HbwResult& res) {
  out << "commit,block,atom,candidate,coefficient,residual_norm,runner_up\n";
  for (const auto& c : res.audit) {
    out << c.commit << ',' << c.block << ',' << c.atom.value() << ',' << detail::csv_real(c.candidate) << ','
        << detail::csv_real(c.coefficient) << ',' << detail::csv_real(c.residual_norm) << ','
        << detail::csv_real(c.runner_up) << '\n';
  }
}

inline Json hbw_coefficients_json(const BlockPartition& layout, const HbwResult& res) {
  Json blocks = Json::array();
  for (std::size_t q = 0; q < res.blocks.size(); ++q) {
    blocks.push_back({{"block", q + 1},
                      {"offset", layout.offsets[q]},
                      {"true_length", layout.true_lengths[q]},
                      {"coefficients", coefficients_json(res.blocks[q])}});
  }
  return blocks;
}

/// Counts of blocks per k_q value.
inline Json histogram_json(const std::vector<std::size_t>& k_q) {
  std::map<std::size_t, std::size_t> h;
  for (auto k : k_q) ++h[k];
  Json out = Json::array();
  for (const auto& [k, n] : h) out.push_back({{"k_q", k}, {"blocks", n}});
  return out;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace spmp
