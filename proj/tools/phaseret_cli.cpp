#include "phaseret/baselines.hpp"
#include "phaseret/crb.hpp"
#include "phaseret/errors.hpp"
#include "phaseret/fpp.hpp"
#include "phaseret/harness.hpp"
#include "phaseret/io.hpp"
#include "phaseret/measurements.hpp"
#include "phaseret/rng.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace phaseret;

enum ExitCode { kOk = 0, kIoFailure = 1, kUsage = 2, kNumerical = 3 };

constexpr const char* kPresets[] = {"fig1", "fig2", "fig5", "fig6", "fig7", "fig8", "table1", "table2"};

// Defaults, then the overlay file, then the flags given on the command line.
Json resolve(Json config, const std::string& overlay_path, const Json& flags, std::string_view context) {
  if (!overlay_path.empty()) {
    const Json overlay = read_json_file(overlay_path);
    if (!overlay.is_object()) throw std::invalid_argument(std::string(context) + " config must be an object");
    for (const auto& [key, value] : overlay.items()) {
      if (!config.contains(key)) {
        throw std::invalid_argument("unknown key '" + key + "' in " + std::string(context) + " config");
      }
    }
    config.merge_patch(overlay);
  }
  config.merge_patch(flags);
  return config;
}

bool has(const Json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

void echo(std::string_view command, const Json& config) {
  std::cout << command << " config: " << config.dump() << "\n";
}

std::string format_db(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

Json pi_units(const RVector& w) {
  Json out = Json::array();
  for (double v : w) out.push_back(v / std::numbers::pi);
  return out;
}

RVector from_pi_units(const std::vector<double>& v) {
  RVector w(static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = v[static_cast<std::size_t>(i)] * std::numbers::pi;
  return w;
}

struct GenArgs {
  std::string config;
  std::string kind;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index k = 0;
  std::uint64_t seed = 0;
  std::string signal;
  std::vector<double> frequencies;
  double snr_db = 0.0;
  std::string output;
  std::string out_dir;
  Json flags = Json::object();
};

int cmd_gen(const GenArgs& args) {
  const Json defaults{{"kind", "gaussian"},  {"n", nullptr},       {"m", nullptr},
                      {"k", nullptr},        {"seed", nullptr},    {"signal", "reference"},
                      {"frequencies_pi", nullptr}, {"snr_db", nullptr}, {"output", "instance.json"},
                      {"out_dir", "."}};
  const Json cfg = resolve(defaults, args.config, args.flags, "gen");
  echo("gen", cfg);

  if (!has(cfg, "n")) throw std::invalid_argument("--n is required");
  if (!has(cfg, "seed")) throw std::invalid_argument("--seed is required");
  const auto n = cfg.at("n").get<Eigen::Index>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  if (n < 1) throw std::invalid_argument("--n must be positive");

  const EnsembleKind kind = ensemble_kind_from_string(cfg.at("kind").get<std::string>());
  if (kind == EnsembleKind::custom) throw std::invalid_argument("--kind must be gaussian or masked-fourier");
  Eigen::Index m = 0;
  if (has(cfg, "k")) {
    if (kind != EnsembleKind::masked_fourier) throw std::invalid_argument("--k applies to masked-fourier only");
    m = cfg.at("k").get<Eigen::Index>() * n;
    if (has(cfg, "m") && cfg.at("m").get<Eigen::Index>() != m) {
      throw std::invalid_argument("--m and --k disagree (M = K N)");
    }
  } else if (has(cfg, "m")) {
    m = cfg.at("m").get<Eigen::Index>();
  } else {
    throw std::invalid_argument("one of --m or --k is required");
  }
  if (m < 1) throw std::invalid_argument("--m must be positive");
  if (kind == EnsembleKind::masked_fourier && m % n != 0) {
    throw std::invalid_argument("masked-fourier needs M to be a multiple of N (got M=" + std::to_string(m) +
                                ", N=" + std::to_string(n) + ")");
  }

  EnsembleSpec ens_spec{kind, n, m};
  const MeasurementEnsemble ensemble = ens_spec.draw(seed);

  SignalSpec signal;
  signal.kind = signal_kind_from_string(cfg.at("signal").get<std::string>());
  switch (signal.kind) {
    case SignalKind::reference: break;
    case SignalKind::random: signal.seed = derive_seed(seed, "signal"); break;
    case SignalKind::harmonic:
      if (!has(cfg, "frequencies_pi")) throw std::invalid_argument("--signal harmonic needs --frequencies");
      signal.frequencies = from_pi_units(cfg.at("frequencies_pi").get<std::vector<double>>());
      break;
    case SignalKind::custom: throw std::invalid_argument("--signal must be reference, random or harmonic");
  }
  const ComplexSignal x = signal.make(n);

  InstanceFile file{RetrievalInstance{ensemble, measure(ensemble, x), 0.0, x}, std::nullopt, signal.harmonic(n)};
  if (has(cfg, "snr_db")) {
    const double snr_db = cfg.at("snr_db").get<double>();
    if (!std::isfinite(snr_db)) throw std::invalid_argument("--snr-db must be finite");
    const double sigma = sigma_from_snr(ensemble, x, db_to_linear(snr_db));
    file.instance.y = add_noise(file.instance.y, sigma, derive_seed(seed, "noise"));
    file.instance.sigma_n = sigma;
    file.snr_db = snr_db;
  }

  const fs::path path = fs::path(cfg.at("out_dir").get<std::string>()) / cfg.at("output").get<std::string>();
  write_json_file(path, to_json(file));
  std::cout << "wrote " << path.string() << ": kind=" << to_string(kind) << " N=" << n << " M=" << m
            << " sigma_n=" << format_sci(file.instance.sigma_n) << "\n";
  return kOk;
}

struct SolveArgs {
  std::string config;
  std::string instance;
  std::string out_dir;
  Json flags = Json::object();
  // Bound targets for CLI11; only options that were given reach `flags`.
  std::string algorithm, init;
  double lambda = 0, epsilon = 0, lambda1 = 0, lambda2 = 0, outer_tol = 0, tol = 0, mu_max = 0, tau0 = 0;
  int max_outer = 0, restarts = 0, max_iter = 0;
  std::uint64_t seed = 0;
  Eigen::Index dictionary_size = 0;
  std::vector<double> band;
};

struct SolveOutput {
  CVector estimate;
  std::optional<CVector> coefficients;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
  std::string trace_jsonl;
};

SolveOutput run_solver(Algorithm algorithm, const RetrievalInstance& inst, const FppConfig& fpp,
                       const BaselineConfig& baseline, const DictionarySpec& dictionary) {
  SolveOutput out;
  std::ostringstream trace;
  auto take_fpp_trace = [&](const FppTrace& t) {
    t.write_jsonl(trace);
    out.iterations = t.iterations;
    out.converged = t.converged;
    out.warnings = t.warnings;
  };
  auto take_costs = [&](const BaselineResult& r) {
    for (std::size_t k = 0; k < r.costs.size(); ++k) {
      trace << Json{{"iteration", k}, {"cost", r.costs[k]}}.dump() << "\n";
    }
    out.estimate = r.estimate.values();
    out.iterations = r.iterations;
    out.converged = r.converged;
  };
  switch (algorithm) {
    case Algorithm::bfpp:
    case Algorithm::lsfpp: {
      FppResult r = algorithm == Algorithm::bfpp ? run_bfpp(inst, fpp) : run_lsfpp(inst, fpp);
      take_fpp_trace(r.trace);
      out.estimate = r.estimate.values();
      break;
    }
    case Algorithm::sparse_bfpp:
    case Algorithm::sparse_lsfpp: {
      const Dictionary dict = dictionary.build(inst.ensemble.n());
      const CMatrix projected = project_dictionary(inst.ensemble, dict);
      FppConfig c = fpp;
      if (!c.epsilon) c.epsilon = inst.sigma_n;
      SparseFppResult r = algorithm == Algorithm::sparse_bfpp ? run_sparse_bfpp(projected, inst.y, dict, c)
                                                              : run_sparse_lsfpp(projected, inst.y, dict, c);
      take_fpp_trace(r.trace);
      out.estimate = dict.matrix() * r.coefficients;
      out.coefficients = std::move(r.coefficients);
      break;
    }
    case Algorithm::wf: take_costs(wirtinger_flow(inst, baseline)); break;
    case Algorithm::gs: take_costs(gerchberg_saxton(inst, baseline)); break;
  }
  out.trace_jsonl = trace.str();
  return out;
}

int cmd_solve(const SolveArgs& args) {
  const Json defaults{{"instance", nullptr},
                      {"algorithm", nullptr},
                      {"seed", nullptr},
                      {"fpp", to_json(FppConfig{})},
                      {"baseline", to_json(BaselineConfig{})},
                      {"dictionary", {{"size", DictionarySpec{}.size}, {"band_pi", {-0.5, 0.5}}}},
                      {"out_dir", "."}};
  Json cfg = resolve(defaults, args.config, args.flags, "solve");
  if (!has(cfg, "instance")) throw std::invalid_argument("an instance file is required");
  if (!has(cfg, "algorithm")) throw std::invalid_argument("--algo is required");
  const Algorithm algorithm = algorithm_from_string(cfg.at("algorithm").get<std::string>());

  FppConfig fpp;
  update_from_json(fpp, cfg.at("fpp"));
  BaselineConfig baseline;
  update_from_json(baseline, cfg.at("baseline"));
  const bool stochastic = fpp.init == InitKind::random || fpp.restarts > 0 || baseline.init == InitKind::random;
  if (has(cfg, "seed")) {
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    fpp.init_seed = derive_seed(seed, to_string(algorithm));
    baseline.init_seed = fpp.init_seed;
  } else if (stochastic) {
    throw std::invalid_argument("--seed is required for random starts");
  }
  cfg["fpp"] = to_json(fpp);
  cfg["baseline"] = to_json(baseline);
  const Json dict_json = cfg.at("dictionary");
  check_keys(dict_json, {"size", "band_pi"}, "dictionary");
  DictionarySpec dictionary;
  read_if(dict_json, "size", dictionary.size);
  if (dict_json.contains("band_pi")) {
    const auto band = dict_json.at("band_pi").get<std::vector<double>>();
    if (band.size() != 2) throw std::invalid_argument("dictionary band needs two entries");
    dictionary.lo = band[0] * std::numbers::pi;
    dictionary.hi = band[1] * std::numbers::pi;
  }
  echo("solve", cfg);

  const InstanceFile file = instance_from_json(read_json_file(cfg.at("instance").get<std::string>()));
  const RetrievalInstance& inst = file.instance;
  SolveOutput out = run_solver(algorithm, inst, fpp, baseline, dictionary);

  const ComplexSignal estimate(out.estimate);
  const double cost = ls_cost(inst.ensemble, inst.y, out.estimate);
  Json result{{"algorithm", to_string(algorithm)},
              {"instance", cfg.at("instance")},
              {"estimate", to_json(estimate)},
              {"iterations", out.iterations},
              {"converged", out.converged},
              {"ls_cost", cost},
              {"warnings", out.warnings}};
  std::string summary = "algorithm=" + std::string(to_string(algorithm)) +
                        " iterations=" + std::to_string(out.iterations) +
                        " converged=" + (out.converged ? "true" : "false") + " ls_cost=" + format_sci(cost);
  if (out.coefficients) {
    result["coefficients"] = to_json(*out.coefficients);
    if (file.harmonic) {
      const Dictionary dict = dictionary.build(inst.ensemble.n());
      const RVector peaks = refine_frequencies(*out.coefficients, dict, file.harmonic->order());
      result["peaks_pi"] = pi_units(peaks);
      summary += " peaks_pi=" + result["peaks_pi"].dump();
    }
  }
  if (inst.truth) {
    const ErrorReport e = error_report(estimate, *inst.truth);
    result["errors"] = {{"mse_signal_db", e.mse_signal_db},
                        {"mse_amplitude_db", e.mse_amplitude_db},
                        {"mse_phase_db", e.mse_phase_db},
                        {"aligned_phase", e.aligned_phase},
                        {"outage", e.is_outage}};
    summary += " mse_db=" + format_db(e.mse_signal_db);
  }

  const fs::path dir = cfg.at("out_dir").get<std::string>();
  write_json_file(dir / "estimate.json", result);
  write_text_file(dir / "trace.jsonl", out.trace_jsonl);
  std::cout << summary << "\n";
  return kOk;
}

struct CrbArgs {
  std::string config;
  std::string instance;
  std::string param;
  double sigma = 0.0;
  double snr_db = 0.0;
  double rank_tol = 0.0;
  std::string out_dir;
  Json flags = Json::object();
};

int cmd_crb(const CrbArgs& args) {
  const Json defaults{{"instance", nullptr}, {"parametrization", "complex"}, {"sigma", nullptr},
                      {"snr_db", nullptr},   {"rank_tol", kDefaultRankTol},  {"out_dir", "."}};
  const Json cfg = resolve(defaults, args.config, args.flags, "crb");
  echo("crb", cfg);
  if (!has(cfg, "instance")) throw std::invalid_argument("an instance file is required");
  if (has(cfg, "sigma") && has(cfg, "snr_db")) throw std::invalid_argument("give at most one of --sigma, --snr-db");

  std::string param_name = cfg.at("parametrization").get<std::string>();
  const Parametrization param = param_name == "complex" ? Parametrization::complex_reim
                                                        : parametrization_from_string(param_name);
  const double rank_tol = cfg.at("rank_tol").get<double>();

  const InstanceFile file = instance_from_json(read_json_file(cfg.at("instance").get<std::string>()));
  const RetrievalInstance& inst = file.instance;
  if (!inst.truth) throw std::invalid_argument("the instance has no ground-truth signal");
  double sigma = inst.sigma_n;
  if (has(cfg, "sigma")) sigma = cfg.at("sigma").get<double>();
  if (has(cfg, "snr_db")) sigma = sigma_from_snr(inst.ensemble, *inst.truth, db_to_linear(cfg.at("snr_db").get<double>()));
  if (!(sigma > 0.0)) throw std::invalid_argument("noise level must be positive; pass --sigma or --snr-db");

  FimResult fim;
  switch (param) {
    case Parametrization::complex_reim: fim = fim_complex(inst.ensemble, *inst.truth, sigma, rank_tol); break;
    case Parametrization::amp_phase: fim = fim_amp_phase(inst.ensemble, *inst.truth, sigma, rank_tol); break;
    case Parametrization::real: {
      const CVector& v = inst.truth->values();
      if (v.imag().norm() > 1e-12 * v.norm()) throw std::invalid_argument("--param real needs a real signal");
      fim = fim_real(inst.ensemble, v.real(), sigma, rank_tol);
      break;
    }
    case Parametrization::harmonic:
      if (!file.harmonic) throw std::invalid_argument("--param harmonic needs an instance with a harmonic model");
      fim = fim_harmonic(inst.ensemble, *file.harmonic, sigma, rank_tol);
      break;
  }

  const fs::path path = fs::path(cfg.at("out_dir").get<std::string>()) / "crb.json";
  write_json_file(path, to_json(fim));
  std::cout << "parametrization=" << to_string(param) << " sigma_n=" << format_sci(sigma) << " rank=" << fim.rank
            << " dimension=" << fim.fim.rows() << " crb_trace_db=" << format_db(to_db(fim.trace())) << "\n";
  return kOk;
}

struct BenchArgs {
  std::string config;
  std::string preset;
  std::string spec;
  std::string preset_dir;
  bool full = false;
  int trials = 0;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out_dir;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

fs::path preset_directory(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PHASERET_PRESET_DIR")) return env;
  return PHASERET_PRESET_DIR;
}

std::string preset_list() {
  std::string s;
  for (const char* p : kPresets) s += (s.empty() ? "" : ", ") + std::string(p);
  return s;
}

void set_count(Json& spec, const char* key, int count) {
  if (spec.is_object()) spec[key] = count;
}

void print_rows(const FigureData& data) {
  std::string line;
  for (const auto& c : data.columns) line += (line.empty() ? "" : "  ") + c.name;
  std::cout << line << "\n";
  for (const auto& row : data.rows) {
    line.clear();
    for (const auto& v : row) line += (line.empty() ? "" : "  ") + v;
    std::cout << line << "\n";
  }
}

int cmd_bench(const BenchArgs& args) {
  Json preset;
  std::string stem;
  if (!args.preset.empty()) {
    bool known = false;
    for (const char* p : kPresets) known = known || args.preset == p;
    if (!known) throw std::invalid_argument("unknown preset '" + args.preset + "'; presets: " + preset_list());
    preset = read_json_file(preset_directory(args.preset_dir) / (args.preset + ".json"));
    stem = args.preset;
  } else {
    preset = read_json_file(args.spec);
  }
  check_keys(preset, {"figure", "description", "trials", "full_trials", "spec", "experiments"}, "bench");
  if (!args.config.empty()) {
    const Json overlay = read_json_file(args.config);
    if (!overlay.is_object()) throw std::invalid_argument("bench config must be an object");
    preset.merge_patch(overlay);
    check_keys(preset, {"figure", "description", "trials", "full_trials", "spec", "experiments"}, "bench");
  }
  const FigureId figure = figure_id_from_string(preset.at("figure").get<std::string>());
  if (stem.empty()) stem = to_string(figure);

  int trials = preset.value("trials", 0);
  if (args.full && preset.contains("full_trials")) trials = preset.at("full_trials").get<int>();
  if (*args.trials_opt) trials = args.trials;
  const bool uses_instances = figure == FigureId::fig2 || figure == FigureId::fig7;
  const char* count_key = uses_instances ? "instances" : "trials";
  const bool tabular = figure == FigureId::table1 || figure == FigureId::table2 || figure == FigureId::fig3_4;
  auto adjust = [&](Json& spec) {
    if (trials > 0) set_count(spec, count_key, trials);
    if (*args.seed_opt) spec["base_seed"] = args.seed;
  };
  if (tabular) {
    if (!preset.contains("experiments")) throw std::invalid_argument("table presets need an experiments list");
    for (Json& e : preset.at("experiments")) adjust(e);
  } else {
    if (!preset.contains("spec")) throw std::invalid_argument("figure presets need a spec object");
    adjust(preset.at("spec"));
  }
  preset["trials"] = trials;
  echo("bench", Json{{"preset", preset}, {"jobs", args.jobs}, {"out_dir", args.out_dir}, {"full", args.full}});

  const fs::path out_dir = args.out_dir;
  std::vector<FigureData> outputs;
  std::vector<std::string> stems;
  switch (figure) {
    case FigureId::fig1:
      outputs.push_back(fig1_data(epsilon_sweep(epsilon_sweep_spec_from_json(preset.at("spec")), args.jobs)));
      break;
    case FigureId::fig2:
      outputs.push_back(fig2_data(crb_sweep(crb_sweep_spec_from_json(preset.at("spec")), args.jobs)));
      break;
    case FigureId::fig5_6:
      outputs.push_back(fig5_6_data(run_experiment(experiment_spec_from_json(preset.at("spec")), args.jobs)));
      break;
    case FigureId::fig7:
      outputs.push_back(fig7_data(harmonic_crb_curve(harmonic_crb_spec_from_json(preset.at("spec")), args.jobs)));
      break;
    case FigureId::fig8:
      outputs.push_back(
          fig8_data(harmonic_recovery(harmonic_recovery_spec_from_json(preset.at("spec")), args.jobs)));
      break;
    case FigureId::table1:
    case FigureId::table2:
    case FigureId::fig3_4: {
      std::vector<ExperimentResult> results;
      for (const Json& e : preset.at("experiments")) {
        results.push_back(run_experiment(experiment_spec_from_json(e), args.jobs));
      }
      if (figure != FigureId::fig3_4) {
        outputs.push_back(figure == FigureId::table1 ? table1_data(results) : table2_data(results));
        stems.push_back(stem);
      }
      outputs.push_back(fig3_4_data(results));
      stems.push_back("fig3_4");
      break;
    }
  }
  if (stems.empty()) stems.push_back(stem);

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (const fs::path& p : emit_figure_data(outputs[i], out_dir, stems[i])) std::cout << "wrote " << p.string() << "\n";
  }
  if (figure != FigureId::fig3_4) print_rows(outputs.front());
  return kOk;
}

// Copies the value of every given option into `flags` at `pointer` once parsing is done.
struct FlagBinding {
  CLI::Option* option;
  Json::json_pointer pointer;
  std::function<Json()> value;
};

void collect(const std::vector<FlagBinding>& bindings, Json& flags) {
  for (const auto& b : bindings) {
    if (b.option->count() > 0) flags[b.pointer] = b.value();
  }
}

template <typename T>
FlagBinding bind_flag(CLI::App* app, const std::string& name, T& target, const std::string& pointer,
                 const std::string& description) {
  CLI::Option* opt = app->add_option(name, target, description);
  return {opt, Json::json_pointer(pointer), [&target] { return Json(target); }};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase retrieval with feasible point pursuit: instance generation, solvers, bounds, benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(code_version()));

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Draw an ensemble, a signal and measurements into an instance file");
  std::vector<FlagBinding> gen_flags{
      bind_flag(gen_cmd, "--kind", gen.kind, "/kind", "gaussian or masked-fourier"),
      bind_flag(gen_cmd, "--n", gen.n, "/n", "Signal length N"),
      bind_flag(gen_cmd, "--m", gen.m, "/m", "Number of measurements M"),
      bind_flag(gen_cmd, "--k", gen.k, "/k", "Number of masks (masked-fourier, M = K N)"),
      bind_flag(gen_cmd, "--seed", gen.seed, "/seed", "Seed of the ensemble, signal and noise streams"),
      bind_flag(gen_cmd, "--signal", gen.signal, "/signal", "reference, random or harmonic"),
      bind_flag(gen_cmd, "--frequencies", gen.frequencies, "/frequencies_pi", "Harmonic frequencies in units of pi"),
      bind_flag(gen_cmd, "--snr-db", gen.snr_db, "/snr_db", "Add noise at this SNR (noiseless when absent)"),
      bind_flag(gen_cmd, "-o,--output", gen.output, "/output", "Instance file name"),
      bind_flag(gen_cmd, "--out-dir", gen.out_dir, "/out_dir", "Output directory"),
  };
  gen_flags[6].option->delimiter(',')->allow_extra_args();
  gen_cmd->add_option("--config", gen.config, "JSON overlay; flags take precedence");

  SolveArgs solve;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Run one algorithm on an instance file");
  std::vector<FlagBinding> solve_flags{
      bind_flag(solve_cmd, "instance", solve.instance, "/instance", "Instance file written by gen"),
      bind_flag(solve_cmd, "--algo", solve.algorithm, "/algorithm", "bfpp, lsfpp, sparse-bfpp, sparse-lsfpp, wf or gs"),
      bind_flag(solve_cmd, "--lambda", solve.lambda, "/fpp/lambda", "Slack penalty of B-FPP / LS-FPP"),
      bind_flag(solve_cmd, "--epsilon", solve.epsilon, "/fpp/epsilon", "B-FPP interval half-width (default sigma_n)"),
      bind_flag(solve_cmd, "--lambda1", solve.lambda1, "/fpp/lambda1", "Sparse variants: first weight"),
      bind_flag(solve_cmd, "--lambda2", solve.lambda2, "/fpp/lambda2", "Sparse LS-FPP: slack penalty"),
      bind_flag(solve_cmd, "--max-outer", solve.max_outer, "/fpp/max_outer", "FPP outer iteration cap"),
      bind_flag(solve_cmd, "--outer-tol", solve.outer_tol, "/fpp/outer_tol", "FPP relative objective decrease to stop"),
      bind_flag(solve_cmd, "--restarts", solve.restarts, "/fpp/restarts", "Additional random FPP starts"),
      bind_flag(solve_cmd, "--max-iter", solve.max_iter, "/baseline/max_iter", "WF / GS iteration cap"),
      bind_flag(solve_cmd, "--tol", solve.tol, "/baseline/tol", "WF / GS relative cost decrease to stop"),
      bind_flag(solve_cmd, "--mu-max", solve.mu_max, "/baseline/mu_max", "WF step-size cap"),
      bind_flag(solve_cmd, "--tau0", solve.tau0, "/baseline/tau0", "WF step-size time constant"),
      bind_flag(solve_cmd, "--seed", solve.seed, "/seed", "Seed of random starts"),
      bind_flag(solve_cmd, "--dictionary-size", solve.dictionary_size, "/dictionary/size", "Sparse variants: grid size P"),
      bind_flag(solve_cmd, "--band", solve.band, "/dictionary/band_pi", "Sparse variants: grid band in units of pi"),
      bind_flag(solve_cmd, "--out-dir", solve.out_dir, "/out_dir", "Directory for estimate.json and trace.jsonl"),
  };
  solve_flags[15].option->expected(2)->delimiter(',');
  CLI::Option* init_opt =
      solve_cmd->add_option("--init", solve.init, "spectral or random")->check(CLI::IsMember({"spectral", "random"}));
  solve_cmd->add_option("--config", solve.config, "JSON overlay; flags take precedence");

  CrbArgs crb;
  CLI::App* crb_cmd = app.add_subcommand("crb", "Fisher information and Cramer-Rao bound at the instance's signal");
  std::vector<FlagBinding> crb_flags{
      bind_flag(crb_cmd, "instance", crb.instance, "/instance", "Instance file written by gen"),
      bind_flag(crb_cmd, "--param", crb.param, "/parametrization", "complex, real, amp-phase or harmonic"),
      bind_flag(crb_cmd, "--sigma", crb.sigma, "/sigma", "Noise standard deviation (default: the instance's)"),
      bind_flag(crb_cmd, "--snr-db", crb.snr_db, "/snr_db", "Noise level from an SNR instead"),
      bind_flag(crb_cmd, "--rank-tol", crb.rank_tol, "/rank_tol", "Relative eigenvalue cutoff of the pseudo-inverse"),
      bind_flag(crb_cmd, "--out-dir", crb.out_dir, "/out_dir", "Directory for crb.json"),
  };
  crb_cmd->add_option("--config", crb.config, "JSON overlay; flags take precedence");

  BenchArgs bench;
  bench.out_dir = ".";
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a benchmark preset or spec file and write figure data");
  CLI::Option* preset_opt = bench_cmd->add_option("--preset", bench.preset, "One of: " + preset_list());
  CLI::Option* spec_opt = bench_cmd->add_option("--spec", bench.spec, "Benchmark file in preset format");
  preset_opt->excludes(spec_opt);
  bench_cmd->add_option("--preset-dir", bench.preset_dir, "Directory holding the preset files");
  bench_cmd->add_option("--config", bench.config, "JSON merge patch applied to the preset");
  bench_cmd->add_flag("--full", bench.full, "Use the full trial counts");
  bench.trials_opt = bench_cmd->add_option("--trials", bench.trials, "Trials (or CRB instances) per point");
  bench.seed_opt = bench_cmd->add_option("--seed", bench.seed, "Base seed of every experiment");
  bench_cmd->add_option("--jobs", bench.jobs, "Worker threads (0: all cores)");
  bench_cmd->add_option("--out-dir", bench.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      collect(gen_flags, gen.flags);
      return cmd_gen(gen);
    }
    if (solve_cmd->parsed()) {
      collect(solve_flags, solve.flags);
      if (init_opt->count() > 0) {
        solve.flags["fpp"]["init"] = solve.init;
        solve.flags["baseline"]["init"] = solve.init;
      }
      return cmd_solve(solve);
    }
    if (crb_cmd->parsed()) {
      collect(crb_flags, crb.flags);
      return cmd_crb(crb);
    }
    if (preset_opt->count() == 0 && spec_opt->count() == 0) {
      std::cerr << "error: bench needs --preset or --spec\n";
      return kUsage;
    }
    return cmd_bench(bench);
  } catch (const NumericalFailure& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Json::exception& e) {
    std::cerr << "error: bad config value: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  }
}
