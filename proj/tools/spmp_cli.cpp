// spmp: command-line front end for the pursuit library.
//
//   spmp run    --method spmp --dict trig:redundancy=4 --snr-db 35 --input clip.wav --out results/
//   spmp synth  --kind nonstationary --length 65536 --seed 3 --out fixture.wav
//   spmp sweep  --input clip.wav --snr-db 35
//
// Exit codes: 0 success, 1 usage or other error, 2 stagnation, 3 budget exhausted, 4 I/O error.

#include <spmp/spmp.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fs = std::filesystem;
using namespace spmp;

namespace {

enum Exit { kOk = 0, kError = 1, kStagnated = 2, kBudget = 3, kIo = 4 };

struct DictSpec {
  enum class Kind { Trig, Matrix } kind = Kind::Trig;
  std::size_t redundancy = 4;
  std::string path;
  std::string text;
};

DictSpec parse_dict(const std::string& s) {
  DictSpec d;
  d.text = s;
  if (s == "trig") return d;
  if (s.rfind("trig:", 0) == 0) {
    const std::string opt = s.substr(5);
    const std::string key = "redundancy=";
    if (opt.rfind(key, 0) != 0) throw CLI::ValidationError("--dict", "expected trig:redundancy=R");
    try {
      d.redundancy = std::stoul(opt.substr(key.size()));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--dict", "bad redundancy in '" + s + "'");
    }
    return d;
  }
  if (s.rfind("matrix:", 0) == 0 && s.size() > 7) {
    d.kind = DictSpec::Kind::Matrix;
    d.path = s.substr(7);
    return d;
  }
  throw CLI::ValidationError("--dict", "expected trig[:redundancy=R] or matrix:PATH");
}

using AnyDict = std::variant<TrigDictionary, MatrixDictionary>;

AnyDict make_dict(const DictSpec& spec, std::size_t N) {
  if (spec.kind == DictSpec::Kind::Trig) return TrigDictionary::with_redundancy(N, spec.redundancy);
  std::vector<std::string> warnings;
  MatrixDictionary m = [&] {
    try {
      return load_matrix_dictionary(spec.path, &warnings);
    } catch (const PreconditionError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
  }();
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (m.dimension() != N) {
    throw PreconditionError("dictionary dimension " + std::to_string(m.dimension()) + " does not match signal/block length " +
                            std::to_string(N));
  }
  return m;
}

struct Input {
  std::vector<double> samples;
  std::optional<std::uint32_t> rate;
};

/// WAV by extension, otherwise whitespace-separated reals.
Input read_input(const std::string& path) {
  Input in;
  fs::path p(path);
  std::string ext = p.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".wav") {
    auto w = read_wav(path);
    in.samples = w.signal.values();
    in.rate = w.sample_rate;
    return in;
  }
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  double v;
  while (f >> v) in.samples.push_back(v);
  if (!f.eof()) throw IoError("unparsable sample in " + path);
  if (in.samples.empty()) throw IoError("no samples in " + path);
  Signal check(in.samples);
  return in;
}

fs::path output_dir(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    if (const char* env = std::getenv("SPMP_OUT_DIR")) dir = env;
  }
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

struct RunOptions {
  std::string method = "spmp";
  std::string dict = "trig:redundancy=4";
  std::optional<double> snr_db;
  std::optional<double> rho;
  std::optional<std::size_t> max_atoms;
  std::optional<double> epsilon;
  std::optional<std::size_t> max_proj_iters;
  std::optional<std::size_t> block_size;
  std::string input;
  std::string out;
  bool diagnostics = false;
};

bool is_hbw(const std::string& m) { return m == "hbw-mp" || m == "hbw-spmp"; }

int exit_for(PursuitStatus s, bool budget_is_target) {
  switch (s) {
    case PursuitStatus::TargetReached:
    case PursuitStatus::ZeroSignal: return kOk;
    case PursuitStatus::Stagnated: return kStagnated;
    case PursuitStatus::BudgetExhausted: return budget_is_target ? kOk : kBudget;
  }
  return kError;
}

int run_single(const RunOptions& o, const Input& in, const fs::path& dir) {
  const std::size_t N = in.samples.size();
  const DictSpec spec = parse_dict(o.dict);
  const AnyDict dict = make_dict(spec, N);
  const bool budget_only = !o.snr_db && !o.rho;
  StoppingConfig stop;
  const std::size_t default_atoms = o.method == "mp" ? 64 * N : N;
  stop.max_atoms = o.max_atoms.value_or(default_atoms);
  if (o.snr_db) {
    stop = StoppingConfig::for_snr(in.samples, *o.snr_db, stop.max_atoms);
  } else {
    stop.rho = o.rho.value_or(std::numeric_limits<double>::min());
  }
  stop.epsilon = o.epsilon;
  stop.max_proj_iters = o.max_proj_iters;

  return std::visit(
      [&](const auto& d) {
        PursuitState st;
        if (o.method == "mp") {
          st = mp_run(in.samples, d, stop);
        } else if (o.method == "spmp") {
          st = spmp_run(in.samples, d, stop);
        } else {
          if (N > 4096) std::cerr << "warning: omp-direct is O(N k^2) per step\n";
          st = omp_direct(in.samples, d, stop);
        }
        const std::size_t K = st.support.size();
        const double s = st.signal_norm > 0 ? snr(in.samples, st.approximation) : 0.0;
        Json metrics = {{"method", o.method},
                        {"dictionary", spec.text},
                        {"N", N},
                        {"atoms_in_dictionary", d.size()},
                        {"K", K},
                        {"iterations", st.k},
                        {"snr_db", real_json(s)},
                        {"sr", K ? real_json(sparsity_ratio(N, K)) : Json()},
                        {"status", to_string(st.status)},
                        {"signal_norm", st.signal_norm},
                        {"residual_norm", st.residual_norm()},
                        {"projection_iterations", st.projection_iterations},
                        {"capped_projections", st.capped_projections},
                        {"duplicate_selections", st.duplicate_selections}};
        if (in.rate) metrics["sample_rate"] = *in.rate;
        Json coeffs = {{"method", o.method}, {"dictionary", spec.text}, {"N", N}, {"coefficients", coefficients_json(st)}};
        write_json_file((dir / "coefficients.json").string(), coeffs);
        write_json_file((dir / "metrics.json").string(), metrics);

        const auto rep = build_diagnostics(d, st, o.diagnostics ? kDefaultSpectrumCap : 0);
        std::ostringstream csv;
        write_diagnostics_csv(csv, rep);
        write_text(dir / "diagnostics.csv", csv.str());
        if (o.diagnostics) write_json_file((dir / "diagnostics.json").string(), diagnostics_json(rep));

        std::cout << o.method << ": K=" << K << " iterations=" << st.k << " SNR=" << (std::isinf(s) ? std::string("inf") : Json(s).dump())
                  << " dB status=" << to_string(st.status) << '\n';
        return exit_for(st.status, budget_only);
      },
      dict);
}

struct HbwSummary {
  HbwResult result;
  BlockPartition partition;
  double snr_db;
};

template <class D>
HbwSummary run_hbw_with(const D& d, const std::vector<double>& f, std::size_t Nb, BlockMethod method,
                        std::optional<double> snr_db, std::optional<std::size_t> K, std::optional<double> epsilon,
                        std::optional<std::size_t> max_proj) {
  HbwSummary s;
  s.partition = partition_signal(f, Nb);
  HbwConfig c;
  c.method = method;
  c.snr_db = snr_db;
  c.K = K.value_or(method == BlockMethod::MP ? 64 * f.size() : f.size());
  c.epsilon = epsilon;
  c.max_proj_iters = max_proj;
  s.result = hbw_run(s.partition, d, c);
  s.snr_db = snr_from_energy(s.result.signal_energy, s.result.residual_energy);
  return s;
}

int run_hbw(const RunOptions& o, const Input& in, const fs::path& dir) {
  if (!o.block_size) throw CLI::ValidationError("--block-size", "required for HBW methods");
  if (o.rho) throw CLI::ValidationError("--rho", "HBW methods take --snr-db or --max-atoms");
  if (!o.snr_db && !o.max_atoms) throw CLI::ValidationError("--max-atoms", "HBW needs --max-atoms or --snr-db");
  const std::size_t Nb = *o.block_size;
  const DictSpec spec = parse_dict(o.dict);
  const AnyDict dict = make_dict(spec, Nb);
  const BlockMethod method = o.method == "hbw-mp" ? BlockMethod::MP : BlockMethod::SPMP;
  return std::visit(
      [&](const auto& d) {
        const auto s = run_hbw_with(d, in.samples, Nb, method, o.snr_db, o.max_atoms, o.epsilon, o.max_proj_iters);
        const auto& r = s.result;
        const std::size_t K = r.coefficient_count();
        Json metrics = {{"method", o.method},
                        {"dictionary", spec.text},
                        {"N", in.samples.size()},
                        {"block_size", Nb},
                        {"Q", s.partition.count()},
                        {"K", K},
                        {"committed", r.committed},
                        {"snr_db", real_json(s.snr_db)},
                        {"sr", K ? real_json(sparsity_ratio(in.samples.size(), K)) : Json()},
                        {"status", to_string(r.status)},
                        {"k_q", r.k_q},
                        {"k_q_histogram", histogram_json(r.k_q)}};
        if (in.rate) metrics["sample_rate"] = *in.rate;
        Json coeffs = {{"method", o.method},
                       {"dictionary", spec.text},
                       {"N", in.samples.size()},
                       {"block_size", Nb},
                       {"blocks", hbw_coefficients_json(s.partition, r)}};
        write_json_file((dir / "coefficients.json").string(), coeffs);
        write_json_file((dir / "metrics.json").string(), metrics);
        std::ostringstream audit;
        write_audit_csv(audit, r);
        write_text(dir / "audit.csv", audit.str());

        std::ostringstream csv;
        csv << "block,k,atom,pre_projection_norm,residual_norm,projection_iterations,projection_capped\n";
        for (std::size_t q = 0; q < r.blocks.size(); ++q) {
          for (const auto& h : r.blocks[q].history) {
            csv << q + 1 << ',' << h.k << ',' << h.atom.value() << ',' << Json(h.pre_projection_norm).dump() << ','
                << Json(h.residual_norm).dump() << ',' << h.projection_iterations << ',' << (h.projection_capped ? 1 : 0)
                << '\n';
          }
        }
        write_text(dir / "diagnostics.csv", csv.str());

        std::cout << o.method << ": N_b=" << Nb << " Q=" << s.partition.count() << " K=" << K
                  << " SR=" << (K ? Json(sparsity_ratio(in.samples.size(), K)).dump() : std::string("-"))
                  << " SNR=" << (std::isinf(s.snr_db) ? std::string("inf") : Json(s.snr_db).dump())
                  << " dB status=" << to_string(r.status) << '\n';
        switch (r.status) {
          case HbwStatus::TargetReached: return int(kOk);
          case HbwStatus::BudgetReached: return int(o.snr_db ? kBudget : kOk);
          case HbwStatus::Exhausted: return int(o.snr_db ? kStagnated : kOk);
        }
        return int(kError);
      },
      dict);
}

int cmd_run(const RunOptions& o) {
  if (o.snr_db && o.rho) throw CLI::ValidationError("--snr-db", "give either --snr-db or --rho, not both");
  if (o.block_size && !is_hbw(o.method)) throw CLI::ValidationError("--block-size", "only valid for HBW methods");
  const Input in = read_input(o.input);
  const fs::path dir = output_dir(o.out);
  return is_hbw(o.method) ? run_hbw(o, in, dir) : run_single(o, in, dir);
}

struct SynthOptions {
  std::string kind = "sine";
  std::size_t length = 44100;
  double rate = 44100;
  std::uint64_t seed = 1;
  double freq = 1000;
  std::size_t count = 5;
  std::size_t redundancy = 4;
  double noise = 0.0;
  bool pcm16 = false;
  std::string out;
};

int cmd_synth(const SynthOptions& o) {
  std::vector<double> x;
  if (o.kind == "sine") {
    x = synth::sine(o.length, o.rate, o.freq);
  } else if (o.kind == "sines") {
    x = synth::sum_of_sines(o.length, o.rate, o.count, o.seed);
  } else if (o.kind == "noise") {
    x = synth::noise(o.length, o.seed);
  } else if (o.kind == "atoms") {
    const auto d = TrigDictionary::with_redundancy(o.length, o.redundancy);
    auto m = synth::atom_mixture(d, o.count, o.seed, o.noise);
    x = std::move(m.signal);
    std::cout << "atoms:";
    for (auto a : m.atoms) std::cout << ' ' << a.value();
    std::cout << '\n';
  } else if (o.kind == "nonstationary") {
    x = synth::nonstationary(o.length, o.rate, o.seed);
  }
  if (o.kind != "atoms" && o.noise > 0) {
    const auto n = synth::noise(o.length, o.seed ^ 0x9e3779b97f4a7c15ull, o.noise);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n[i];
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak >= 1.0) {
    for (double& v : x) v *= 0.9 / peak;
    std::cerr << "warning: scaled by " << 0.9 / peak << " to fit [-1, 1)\n";
  }
  write_wav(o.out, x, static_cast<std::uint32_t>(o.rate), o.pcm16 ? WavEncoding::Pcm16 : WavEncoding::Float32);
  std::cout << "wrote " << o.out << " (" << x.size() << " samples)\n";
  return kOk;
}

struct SweepOptions {
  std::string input;
  std::optional<std::uint64_t> seed;
  std::size_t length = 65536;
  double snr_db = 35.0;
  std::vector<std::size_t> block_sizes{1024, 2048, 4096, 8192};
  std::size_t redundancy = 4;
  bool baseline = false;
  std::string out;
};

int cmd_sweep(const SweepOptions& o) {
  Input in;
  if (!o.input.empty()) {
    in = read_input(o.input);
  } else {
    in.samples = synth::nonstationary(o.length, 44100, o.seed.value_or(1));
    in.rate = 44100;
  }
  const std::size_t N = in.samples.size();
  Json rows = Json::array();
  std::cout << "N=" << N << " SNR target " << o.snr_db << " dB\n";
  std::cout << std::setw(8) << "N_b" << std::setw(6) << "Q" << std::setw(12) << "SR hbw-spmp" << std::setw(12) << "SR hbw-mp";
  if (o.baseline) std::cout << std::setw(12) << "SR spmp" << std::setw(12) << "SR mp";
  std::cout << '\n';
  for (std::size_t Nb : o.block_sizes) {
    const auto d = TrigDictionary::with_redundancy(Nb, o.redundancy);
    const auto a = run_hbw_with(d, in.samples, Nb, BlockMethod::SPMP, o.snr_db, std::nullopt, std::nullopt, std::nullopt);
    const auto b = run_hbw_with(d, in.samples, Nb, BlockMethod::MP, o.snr_db, std::nullopt, std::nullopt, std::nullopt);
    const double sra = sparsity_ratio(N, a.result.coefficient_count());
    const double srb = sparsity_ratio(N, b.result.coefficient_count());
    Json row = {{"block_size", Nb},
                {"Q", a.partition.count()},
                {"hbw_spmp", {{"K", a.result.coefficient_count()}, {"sr", sra}, {"snr_db", real_json(a.snr_db)}}},
                {"hbw_mp", {{"K", b.result.coefficient_count()}, {"sr", srb}, {"snr_db", real_json(b.snr_db)}}}};
    std::cout << std::setw(8) << Nb << std::setw(6) << a.partition.count() << std::fixed << std::setprecision(2)
              << std::setw(12) << sra << std::setw(12) << srb;
    if (o.baseline) {
      for (auto m : {BlockMethod::SPMP, BlockMethod::MP}) {
        BlockwiseConfig c;
        c.method = m;
        c.snr_db = o.snr_db;
        const auto r = blockwise_run(a.partition, d, c);
        const double sr = sparsity_ratio(N, r.coefficient_count());
        row[m == BlockMethod::SPMP ? "blockwise_spmp" : "blockwise_mp"] = {{"K", r.coefficient_count()}, {"sr", sr}};
        std::cout << std::setw(12) << sr;
      }
    }
    std::cout << '\n' << std::defaultfloat;
    rows.push_back(row);
  }
  if (!o.out.empty() || std::getenv("SPMP_OUT_DIR")) {
    const fs::path dir = output_dir(o.out);
    write_json_file((dir / "sweep.json").string(), {{"N", N}, {"snr_db", o.snr_db}, {"rows", rows}});
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse signal approximation by matching pursuit variants"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Decompose a signal");
  run->add_option("--method", ro.method, "mp | spmp | omp-direct | hbw-mp | hbw-spmp")
      ->check(CLI::IsMember({"mp", "spmp", "omp-direct", "hbw-mp", "hbw-spmp"}))
      ->capture_default_str();
  run->add_option("--dict", ro.dict, "trig:redundancy=R or matrix:PATH")->capture_default_str();
  auto* snr_opt = run->add_option("--snr-db", ro.snr_db, "Stop once the SNR exceeds this (dB)");
  auto* rho_opt = run->add_option("--rho", ro.rho, "Stop once the residual norm drops below this")->check(CLI::PositiveNumber);
  snr_opt->excludes(rho_opt);
  run->add_option("--max-atoms", ro.max_atoms, "Iteration cap, or the global budget K for HBW")->check(CLI::PositiveNumber);
  run->add_option("--epsilon", ro.epsilon, "Self-projection tolerance (default 1e-10 * ||f||)")->check(CLI::PositiveNumber);
  run->add_option("--max-proj-iters", ro.max_proj_iters, "Inner iteration cap (default 1000 k)")->check(CLI::PositiveNumber);
  run->add_option("--block-size", ro.block_size, "Block length N_b (HBW only)")->check(CLI::PositiveNumber);
  run->add_option("--input", ro.input, "WAV file, or text file of samples")->required();
  run->add_option("--out", ro.out, "Output directory (default $SPMP_OUT_DIR or .)");
  run->add_flag("--diagnostics", ro.diagnostics, "Compute Gram spectra and write diagnostics.json");

  SynthOptions so;
  auto* syn = app.add_subcommand("synth", "Write a synthetic test signal as WAV");
  syn->add_option("--kind", so.kind, "sine | sines | noise | atoms | nonstationary")
      ->check(CLI::IsMember({"sine", "sines", "noise", "atoms", "nonstationary"}))
      ->capture_default_str();
  syn->add_option("--length", so.length, "Number of samples")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--rate", so.rate, "Sample rate (Hz)")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  syn->add_option("--freq", so.freq, "Frequency for --kind sine (Hz)")->capture_default_str();
  syn->add_option("--count", so.count, "Number of sines or atoms")->check(CLI::PositiveNumber)->capture_default_str();
  syn->add_option("--redundancy", so.redundancy, "Trig dictionary redundancy for --kind atoms")->capture_default_str();
  syn->add_option("--noise", so.noise, "Added white noise standard deviation")->capture_default_str();
  syn->add_flag("--pcm16", so.pcm16, "Write 16-bit PCM instead of float32");
  syn->add_option("--out", so.out, "Output WAV path")->required();

  SweepOptions wo;
  auto* sweep = app.add_subcommand("sweep", "Sparsity ratio against block size for HBW-SPMP and HBW-MP");
  sweep->add_option("--input", wo.input, "Input signal (default: seeded synthetic nonstationary signal)");
  sweep->add_option("--seed", wo.seed, "Seed of the synthetic signal");
  sweep->add_option("--length", wo.length, "Length of the synthetic signal")->capture_default_str();
  sweep->add_option("--snr-db", wo.snr_db, "SNR target (dB)")->capture_default_str();
  sweep->add_option("--block-sizes", wo.block_sizes, "Block sizes N_b")->capture_default_str();
  sweep->add_option("--redundancy", wo.redundancy, "Trig dictionary redundancy")->capture_default_str();
  sweep->add_flag("--baseline", wo.baseline, "Also run independent per-block SPMP and MP");
  sweep->add_option("--out", wo.out, "Directory for sweep.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*run) return cmd_run(ro);
    if (*syn) return cmd_synth(so);
    if (*sweep) return cmd_sweep(wo);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
