#include "phaseret/harness.hpp"

#include "phaseret/crb.hpp"
#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef PHASERET_GIT_DESCRIBE
#define PHASERET_GIT_DESCRIBE "unknown"
#endif

namespace phaseret {

namespace {

using phaseret::to_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr Algorithm kAllAlgorithms[] = {Algorithm::bfpp,         Algorithm::lsfpp, Algorithm::sparse_bfpp,
                                        Algorithm::sparse_lsfpp, Algorithm::wf,    Algorithm::gs};
// Table column order, PhaseLift and PhaseCut sit between LS-FPP and WF.
constexpr Algorithm kTableAlgorithms[] = {Algorithm::bfpp, Algorithm::lsfpp, Algorithm::wf, Algorithm::gs};

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

double sigma_for(const MeasurementEnsemble& ens, const ComplexSignal& x, double snr_db) {
  return std::isinf(snr_db) ? 0.0 : sigma_from_snr(ens, x, db_to_linear(snr_db));
}

RVector noisy(const MeasurementEnsemble& ens, const ComplexSignal& x, double sigma, std::uint64_t seed) {
  RVector y = measure(ens, x);
  return sigma > 0.0 ? add_noise(y, sigma, seed) : y;
}

double mean_fourth_power(const MeasurementEnsemble& ens, const ComplexSignal& x) {
  return measure(ens, x).array().square().mean();
}

std::size_t index_of(const std::vector<Algorithm>& list, Algorithm a) {
  return static_cast<std::size_t>(std::find(list.begin(), list.end(), a) - list.begin());
}

bool contains(const std::vector<Algorithm>& list, Algorithm a) { return index_of(list, a) < list.size(); }

bool is_sparse(Algorithm a) { return a == Algorithm::sparse_bfpp || a == Algorithm::sparse_lsfpp; }

std::string setting_label(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gaussian: return "Gaussian";
    case EnsembleKind::masked_fourier: return "Masked Fourier";
    case EnsembleKind::custom: return "Custom";
  }
  return "Custom";
}

struct Estimate {
  CVector x;
  int iterations = 0;
};

Estimate run_algorithm(Algorithm a, const RetrievalInstance& inst, const Dictionary* dict, const CMatrix* projected,
                       const FppConfig& fpp, const BaselineConfig& baseline) {
  switch (a) {
    case Algorithm::bfpp: {
      FppResult r = run_bfpp(inst, fpp);
      return {r.estimate.values(), r.trace.iterations};
    }
    case Algorithm::lsfpp: {
      FppResult r = run_lsfpp(inst, fpp);
      return {r.estimate.values(), r.trace.iterations};
    }
    case Algorithm::sparse_bfpp:
    case Algorithm::sparse_lsfpp: {
      FppConfig c = fpp;
      if (!c.epsilon) c.epsilon = inst.sigma_n;
      SparseFppResult r = a == Algorithm::sparse_bfpp ? run_sparse_bfpp(*projected, inst.y, *dict, c)
                                                      : run_sparse_lsfpp(*projected, inst.y, *dict, c);
      return {dict->matrix() * r.coefficients, r.trace.iterations};
    }
    case Algorithm::wf: {
      BaselineResult r = wirtinger_flow(inst, baseline);
      return {r.estimate.values(), r.iterations};
    }
    case Algorithm::gs: {
      BaselineResult r = gerchberg_saxton(inst, baseline);
      return {r.estimate.values(), r.iterations};
    }
  }
  throw std::logic_error("unhandled algorithm");
}

struct CrbTraces {
  double signal = kNaN;
  double amplitude = kNaN;
  double phase = kNaN;
};

CrbTraces instance_crb(const MeasurementEnsemble& ens, const ComplexSignal& x, double sigma) {
  CrbTraces t;
  if (!(sigma > 0.0)) return t;
  t.signal = fim_complex(ens, x, sigma).trace();
  try {
    const FimResult ap = fim_amp_phase(ens, x, sigma);
    t.amplitude = ap.crb_b->trace();
    t.phase = ap.crb_theta->trace();
  } catch (const std::invalid_argument&) {
    // zero-amplitude entries: the amplitude/phase bound is undefined
  }
  return t;
}

double mean_db(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double e : v) s += e;
  return to_db(s / static_cast<double>(v.size()));
}

// JSON numbers cannot hold infinity; the noiseless SNR is written as "inf".
Json snr_to_json(double snr_db) { return std::isinf(snr_db) ? Json("inf") : Json(snr_db); }

double snr_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "noiseless") return kNoiselessSnrDb;
    throw std::invalid_argument("snr value must be a number or \"inf\"");
  }
  return j.get<double>();
}

Json pi_units(const RVector& radians) {
  Json out = Json::array();
  for (double w : radians) out.push_back(w / std::numbers::pi);
  return out;
}

RVector from_pi_units(const Json& j) { return rvector_from_json(j) * std::numbers::pi; }

Json algorithms_to_json(const std::vector<Algorithm>& list) {
  Json out = Json::array();
  for (Algorithm a : list) out.push_back(to_string(a));
  return out;
}

std::vector<Algorithm> algorithms_from_json(const Json& j) {
  std::vector<Algorithm> out;
  for (const auto& e : j) out.push_back(algorithm_from_string(e.get<std::string>()));
  return out;
}

Json to_json(const EnsembleSpec& e) { return Json{{"kind", to_string(e.kind)}, {"n", e.n}, {"m", e.m}}; }

EnsembleSpec ensemble_spec_from_json(const Json& j) {
  check_keys(j, {"kind", "n", "m", "k"}, "ensemble");
  EnsembleSpec e;
  if (j.contains("kind")) e.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
  read_if(j, "n", e.n);
  read_if(j, "m", e.m);
  if (j.contains("k")) e.m = j.at("k").get<Eigen::Index>() * e.n;
  return e;
}

Json to_json(const SignalSpec& s) {
  Json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case SignalKind::reference: break;
    case SignalKind::harmonic:
      j["frequencies_pi"] = pi_units(s.frequencies);
      if (s.amplitudes.size() > 0) j["amplitudes"] = to_json(s.amplitudes);
      break;
    case SignalKind::random: j["seed"] = s.seed; break;
    case SignalKind::custom: j["values"] = to_json(s.values); break;
  }
  return j;
}

SignalSpec signal_spec_from_json(const Json& j) {
  check_keys(j, {"kind", "frequencies_pi", "amplitudes", "values", "seed"}, "signal");
  SignalSpec s;
  if (j.contains("kind")) s.kind = signal_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("frequencies_pi")) s.frequencies = from_pi_units(j.at("frequencies_pi"));
  if (j.contains("amplitudes")) s.amplitudes = cvector_from_json(j.at("amplitudes"));
  if (j.contains("values")) s.values = cvector_from_json(j.at("values"));
  read_if(j, "seed", s.seed);
  return s;
}

Json to_json(const DictionarySpec& d) {
  return Json{{"size", d.size}, {"band_pi", {d.lo / std::numbers::pi, d.hi / std::numbers::pi}}};
}

DictionarySpec dictionary_spec_from_json(const Json& j) {
  check_keys(j, {"size", "band_pi"}, "dictionary");
  DictionarySpec d;
  read_if(j, "size", d.size);
  if (j.contains("band_pi")) {
    const RVector band = from_pi_units(j.at("band_pi"));
    if (band.size() != 2) throw std::invalid_argument("dictionary.band_pi must have two entries");
    d.lo = band[0];
    d.hi = band[1];
  }
  return d;
}

Json snr_grid_to_json(const std::vector<double>& grid) {
  Json out = Json::array();
  for (double s : grid) out.push_back(snr_to_json(s));
  return out;
}

std::vector<double> snr_grid_from_json(const Json& j) {
  std::vector<double> out;
  for (const auto& e : j) out.push_back(snr_from_json(e));
  return out;
}

void validate_snr_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("snr grid must be nonempty");
  for (double s : grid) {
    if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("snr grid entries must be finite or +inf");
    }
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::bfpp: return "bfpp";
    case Algorithm::lsfpp: return "lsfpp";
    case Algorithm::sparse_bfpp: return "sparse-bfpp";
    case Algorithm::sparse_lsfpp: return "sparse-lsfpp";
    case Algorithm::wf: return "wf";
    case Algorithm::gs: return "gs";
  }
  return "lsfpp";
}

Algorithm algorithm_from_string(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '_', '-');
  for (Algorithm a : kAllAlgorithms) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected bfpp, lsfpp, sparse-bfpp, sparse-lsfpp, wf or gs)");
}

std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::bfpp: return "B-FPP";
    case Algorithm::lsfpp: return "LS-FPP";
    case Algorithm::sparse_bfpp: return "Sparse B-FPP";
    case Algorithm::sparse_lsfpp: return "Sparse LS-FPP";
    case Algorithm::wf: return "WF";
    case Algorithm::gs: return "GS";
  }
  return "LS-FPP";
}

std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::reference: return "reference";
    case SignalKind::harmonic: return "harmonic";
    case SignalKind::random: return "random";
    case SignalKind::custom: return "custom";
  }
  return "reference";
}

SignalKind signal_kind_from_string(std::string_view name) {
  if (name == "reference") return SignalKind::reference;
  if (name == "harmonic") return SignalKind::harmonic;
  if (name == "random") return SignalKind::random;
  if (name == "custom") return SignalKind::custom;
  throw std::invalid_argument("unknown signal kind '" + std::string(name) + "'");
}

std::string_view to_string(TrialOutcome o) {
  switch (o) {
    case TrialOutcome::success: return "success";
    case TrialOutcome::outage: return "outage";
    case TrialOutcome::failure: return "failure";
  }
  return "failure";
}

void EnsembleSpec::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("ensemble needs n >= 1 and m >= 1");
  if (kind == EnsembleKind::custom) throw std::invalid_argument("experiments draw gaussian or masked-fourier ensembles");
  if (kind == EnsembleKind::masked_fourier && m % n != 0) {
    throw std::invalid_argument("masked-fourier needs m to be a multiple of n (m=" + std::to_string(m) +
                                ", n=" + std::to_string(n) + ")");
  }
}

MeasurementEnsemble EnsembleSpec::draw(std::uint64_t seed) const {
  validate();
  return kind == EnsembleKind::gaussian ? gaussian_ensemble(n, m, seed) : masked_fourier_ensemble(n, m / n, seed);
}

ComplexSignal SignalSpec::make(Eigen::Index n) const {
  switch (kind) {
    case SignalKind::reference: return reference_signal(n);
    case SignalKind::harmonic: return harmonic_signal(*harmonic(n));
    case SignalKind::random: return ComplexSignal(random_init(n, seed));
    case SignalKind::custom:
      if (values.size() != n) {
        throw DimensionMismatch("custom signal has length " + std::to_string(values.size()) + ", expected " +
                                std::to_string(n));
      }
      return ComplexSignal(values);
  }
  throw std::logic_error("unhandled signal kind");
}

std::optional<HarmonicModel> SignalSpec::harmonic(Eigen::Index n) const {
  if (kind != SignalKind::harmonic) return std::nullopt;
  HarmonicModel model{frequencies, amplitudes.size() > 0 ? amplitudes : CVector(CVector::Ones(frequencies.size())), n};
  model.validate();
  return model;
}

Dictionary DictionarySpec::build(Eigen::Index n) const { return build_dictionary(n, size, {lo, hi}); }

void ExperimentSpec::validate() const {
  ensemble.validate();
  validate_snr_grid(snr_grid_db);
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  if (std::set<Algorithm>(algorithms.begin(), algorithms.end()).size() != algorithms.size()) {
    throw std::invalid_argument("algorithms must not repeat");
  }
  if (init == InitKind::given) throw std::invalid_argument("experiments use spectral or random starts");
  signal.make(ensemble.n);
  FppConfig f = fpp;
  f.init = init;
  f.validate();
  BaselineConfig b = baseline;
  b.init = init;
  b.validate();
  if (std::any_of(algorithms.begin(), algorithms.end(), is_sparse)) dictionary.build(ensemble.n);
}

const CellSummary& ExperimentResult::cell(Algorithm a, double snr_db) const {
  for (const auto& c : cells) {
    if (c.algorithm == a && c.snr_db == snr_db) return c;
  }
  throw std::out_of_range("no cell for " + std::string(to_string(a)) + " at " + format_number(snr_db) + " dB");
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view label, double snr_db, int trial) {
  return derive_seed(derive_seed(base_seed, label, std::bit_cast<std::uint64_t>(snr_db)), "trial",
                     static_cast<std::uint64_t>(trial));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  spec.validate();
  const auto n_snr = static_cast<int>(spec.snr_grid_db.size());
  const auto n_alg = spec.algorithms.size();
  const ComplexSignal x = spec.signal.make(spec.ensemble.n);
  const bool sparse = std::any_of(spec.algorithms.begin(), spec.algorithms.end(), is_sparse);
  const std::optional<Dictionary> dict = sparse ? std::optional(spec.dictionary.build(spec.ensemble.n)) : std::nullopt;
  const std::optional<MeasurementEnsemble> shared =
      spec.redraw_ensemble ? std::nullopt : std::optional(spec.ensemble.draw(derive_seed(spec.base_seed, "ensemble")));

  const int tasks = n_snr * spec.trials;
  std::vector<std::vector<TrialRecord>> records(static_cast<std::size_t>(tasks));
  std::vector<CrbTraces> bounds(static_cast<std::size_t>(tasks));

  parallel_for(tasks, jobs, [&](int task) {
    const int k = task / spec.trials;
    const int t = task % spec.trials;
    const double snr = spec.snr_grid_db[static_cast<std::size_t>(k)];
    MeasurementEnsemble ens =
        shared ? *shared : spec.ensemble.draw(derive_seed(spec.base_seed, "ensemble", static_cast<std::uint64_t>(t)));
    const double sigma = sigma_for(ens, x, snr);
    RVector y = noisy(ens, x, sigma, trial_seed(spec.base_seed, "noise", snr, t));
    const RetrievalInstance inst{std::move(ens), std::move(y), sigma, x};
    if (spec.compute_crb && (spec.redraw_ensemble || t == 0)) {
      bounds[static_cast<std::size_t>(task)] = instance_crb(inst.ensemble, x, sigma);
    }
    const std::optional<CMatrix> projected =
        dict ? std::optional(project_dictionary(inst.ensemble, *dict)) : std::nullopt;

    auto& out = records[static_cast<std::size_t>(task)];
    out.reserve(n_alg);
    for (Algorithm a : spec.algorithms) {
      FppConfig fpp = spec.fpp;
      BaselineConfig baseline = spec.baseline;
      fpp.init = baseline.init = spec.init;
      fpp.init_seed = baseline.init_seed = trial_seed(spec.base_seed, to_string(a), snr, t);
      TrialRecord rec{a, snr, t, TrialOutcome::success, {}, 0, 0.0, {}};
      try {
        const Estimate e = run_algorithm(a, inst, dict ? &*dict : nullptr, projected ? &*projected : nullptr, fpp,
                                         baseline);
        rec.iterations = e.iterations;
        rec.ls_cost = ls_cost(inst.ensemble, inst.y, e.x);
        rec.errors = error_report(ComplexSignal(e.x), x);
        if (rec.errors.is_outage) rec.outcome = TrialOutcome::outage;
      } catch (const std::exception& ex) {
        rec.outcome = TrialOutcome::failure;
        rec.message = ex.what();
      }
      out.push_back(std::move(rec));
    }
  });

  ExperimentResult result;
  result.spec = spec;
  for (auto& r : records) std::move(r.begin(), r.end(), std::back_inserter(result.records));

  std::vector<CellSummary> crb(static_cast<std::size_t>(n_snr));
  if (spec.compute_crb) {
    for (int k = 0; k < n_snr; ++k) {
      std::vector<double> s, a, p;
      for (int t = 0; t < spec.trials; ++t) {
        if (!spec.redraw_ensemble && t > 0) break;
        const CrbTraces& b = bounds[static_cast<std::size_t>(k * spec.trials + t)];
        if (!std::isnan(b.signal)) s.push_back(b.signal);
        if (!std::isnan(b.amplitude)) a.push_back(b.amplitude);
        if (!std::isnan(b.phase)) p.push_back(b.phase);
      }
      crb[static_cast<std::size_t>(k)].crb_signal_db = mean_db(s);
      crb[static_cast<std::size_t>(k)].crb_amplitude_db = mean_db(a);
      crb[static_cast<std::size_t>(k)].crb_phase_db = mean_db(p);
    }
  }
  result.cells = summarize(spec, result.records, crb);
  return result;
}

std::vector<CellSummary> summarize(const ExperimentSpec& spec, const std::vector<TrialRecord>& records,
                                   const std::vector<CellSummary>& crb) {
  std::vector<CellSummary> cells;
  for (std::size_t k = 0; k < spec.snr_grid_db.size(); ++k) {
    for (Algorithm a : spec.algorithms) {
      CellSummary c;
      c.algorithm = a;
      c.snr_db = spec.snr_grid_db[k];
      std::vector<double> sig, amp, ph;
      for (const auto& r : records) {
        if (r.algorithm != a || r.snr_db != c.snr_db) continue;
        ++c.trials;
        switch (r.outcome) {
          case TrialOutcome::success:
            ++c.successes;
            sig.push_back(r.errors.sq_error_signal);
            amp.push_back(r.errors.sq_error_amplitude);
            ph.push_back(r.errors.sq_error_phase);
            break;
          case TrialOutcome::outage: ++c.outages; break;
          case TrialOutcome::failure: ++c.failures; break;
        }
      }
      c.mse_signal_db = mean_db(sig);
      c.mse_amplitude_db = mean_db(amp);
      c.mse_phase_db = mean_db(ph);
      if (sig.size() >= 2) {
        double mean = 0.0;
        for (double e : sig) mean += e;
        mean /= static_cast<double>(sig.size());
        double var = 0.0;
        for (double e : sig) var += (e - mean) * (e - mean);
        var /= static_cast<double>(sig.size() - 1);
        c.mse_signal_stderr = std::sqrt(var / static_cast<double>(sig.size()));
      }
      if (k < crb.size()) {
        c.crb_signal_db = crb[k].crb_signal_db;
        c.crb_amplitude_db = crb[k].crb_amplitude_db;
        c.crb_phase_db = crb[k].crb_phase_db;
      }
      cells.push_back(c);
    }
  }
  return cells;
}

void EpsilonSweepSpec::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("epsilon sweep needs n >= 1 and m >= 1");
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("sigma_n must be nonnegative");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (eps_grid.empty()) throw std::invalid_argument("eps_grid must be nonempty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0)) throw std::invalid_argument("eps_grid entries must be positive");
    if (i > 0 && !(eps_grid[i] > eps_grid[i - 1])) throw std::invalid_argument("eps_grid must be ascending");
  }
  FppConfig f = fpp;
  f.epsilon = eps_grid.front();
  f.validate();
}

EpsilonCurve epsilon_sweep(const EpsilonSweepSpec& spec, int jobs) {
  spec.validate();
  const MeasurementEnsemble ens = gaussian_ensemble(spec.n, spec.m, derive_seed(spec.base_seed, "ensemble"));
  const ComplexSignal x(random_init(spec.n, derive_seed(spec.base_seed, "signal")));
  const std::size_t n_eps = spec.eps_grid.size();

  // errors[t][e]: squared error, NaN for a failed solve
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(spec.trials), std::vector<double>(n_eps, kNaN));
  parallel_for(spec.trials, jobs, [&](int t) {
    RVector y = noisy(ens, x, spec.sigma_n, derive_seed(spec.base_seed, "noise", static_cast<std::uint64_t>(t)));
    const RetrievalInstance inst{ens, std::move(y), spec.sigma_n, x};
    for (std::size_t e = 0; e < n_eps; ++e) {
      FppConfig c = spec.fpp;
      c.epsilon = spec.eps_grid[e];
      c.init_seed = derive_seed(spec.base_seed, "bfpp", static_cast<std::uint64_t>(t));
      try {
        errors[static_cast<std::size_t>(t)][e] = error_report(run_bfpp(inst, c).estimate, x).sq_error_signal;
      } catch (const std::exception&) {
        // counted as a failure below
      }
    }
  });

  EpsilonCurve curve{spec, {}};
  for (std::size_t e = 0; e < n_eps; ++e) {
    EpsilonPoint p;
    p.epsilon = spec.eps_grid[e];
    p.trials = spec.trials;
    std::vector<double> all, kept;
    for (const auto& row : errors) {
      const double v = row[e];
      if (std::isnan(v)) {
        ++p.failures;
        continue;
      }
      all.push_back(v);
      if (to_db(v) > 0.0) {
        ++p.outages;
      } else {
        kept.push_back(v);
      }
    }
    p.mse_db = mean_db(all);
    p.mse_db_without_outages = mean_db(kept);
    curve.points.push_back(p);
  }
  return curve;
}

void CrbSweepSpec::validate() const {
  if (n < 1) throw std::invalid_argument("crb sweep needs n >= 1");
  if (m_values.empty()) throw std::invalid_argument("m_values must be nonempty");
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    EnsembleSpec{kind, n, m_values[i]}.validate();
    if (i > 0 && m_values[i] <= m_values[i - 1]) throw std::invalid_argument("m_values must be increasing");
  }
  validate_snr_grid(snr_grid_db);
  for (double s : snr_grid_db) {
    if (std::isinf(s)) throw std::invalid_argument("the bound is unbounded below at infinite SNR");
  }
  if (instances < 1) throw std::invalid_argument("instances must be at least 1");
  signal.make(n);
}

CrbSweep crb_sweep(const CrbSweepSpec& spec, int jobs) {
  spec.validate();
  const ComplexSignal x = spec.signal.make(spec.n);
  const std::size_t n_m = spec.m_values.size();
  const std::size_t n_snr = spec.snr_grid_db.size();
  const EnsembleSpec largest{spec.kind, spec.n, spec.m_values.back()};

  // Bounds scale with sigma^2, so each instance is evaluated once at sigma = 1.
  struct Unit {
    CrbTraces traces;
    double fourth = 0.0;
  };
  std::vector<std::vector<Unit>> unit(static_cast<std::size_t>(spec.instances), std::vector<Unit>(n_m));
  parallel_for(spec.instances, jobs, [&](int i) {
    const MeasurementEnsemble full = largest.draw(derive_seed(spec.base_seed, "ensemble", static_cast<std::uint64_t>(i)));
    for (std::size_t j = 0; j < n_m; ++j) {
      const MeasurementEnsemble ens = full.leading_columns(spec.m_values[j]);
      unit[static_cast<std::size_t>(i)][j] = {instance_crb(ens, x, 1.0), mean_fourth_power(ens, x)};
    }
  });

  CrbSweep out{spec, {}};
  for (std::size_t j = 0; j < n_m; ++j) {
    for (std::size_t k = 0; k < n_snr; ++k) {
      const double snr = db_to_linear(spec.snr_grid_db[k]);
      double s = 0.0, a = 0.0, p = 0.0;
      for (const auto& row : unit) {
        const double var = row[j].fourth / snr;
        s += var * row[j].traces.signal;
        a += var * row[j].traces.amplitude;
        p += var * row[j].traces.phase;
      }
      const double inv = 1.0 / spec.instances;
      out.points.push_back({spec.m_values[j], spec.snr_grid_db[k], to_db(s * inv), to_db(a * inv), to_db(p * inv)});
    }
  }
  return out;
}

void HarmonicCrbSpec::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("harmonic crb needs n >= 1 and m >= 1");
  if (frequency_sets.empty()) throw std::invalid_argument("frequency_sets must be nonempty");
  for (const auto& set : frequency_sets) {
    HarmonicModel model{Eigen::Map<const RVector>(set.data(), static_cast<Eigen::Index>(set.size())),
                        CVector::Ones(static_cast<Eigen::Index>(set.size())), n};
    model.validate();
  }
  validate_snr_grid(snr_grid_db);
  for (double s : snr_grid_db) {
    if (std::isinf(s)) throw std::invalid_argument("the bound is unbounded below at infinite SNR");
  }
  if (instances < 1) throw std::invalid_argument("instances must be at least 1");
}

HarmonicCrbCurve harmonic_crb_curve(const HarmonicCrbSpec& spec, int jobs) {
  spec.validate();
  const std::size_t n_sets = spec.frequency_sets.size();
  std::vector<HarmonicModel> models;
  for (const auto& set : spec.frequency_sets) {
    const auto l = static_cast<Eigen::Index>(set.size());
    models.push_back({Eigen::Map<const RVector>(set.data(), l), CVector::Ones(l), spec.n});
  }

  // unit[i][s] = (omega-block trace at sigma = 1, mean |a^H x|^4)
  std::vector<std::vector<std::pair<double, double>>> unit(static_cast<std::size_t>(spec.instances),
                                                           std::vector<std::pair<double, double>>(n_sets));
  parallel_for(spec.instances, jobs, [&](int i) {
    const MeasurementEnsemble ens =
        gaussian_ensemble(spec.n, spec.m, derive_seed(spec.base_seed, "ensemble", static_cast<std::uint64_t>(i)));
    for (std::size_t s = 0; s < n_sets; ++s) {
      const FimResult f = fim_harmonic(ens, models[s], 1.0);
      const Eigen::Index l = models[s].order();
      unit[static_cast<std::size_t>(i)][s] = {f.crb.topLeftCorner(l, l).trace(),
                                              mean_fourth_power(ens, harmonic_signal(models[s]))};
    }
  });

  HarmonicCrbCurve out{spec, std::vector<std::vector<double>>(n_sets)};
  for (std::size_t s = 0; s < n_sets; ++s) {
    for (double snr_db : spec.snr_grid_db) {
      double acc = 0.0;
      for (const auto& row : unit) acc += row[s].first * row[s].second / db_to_linear(snr_db);
      out.omega_trace_db[s].push_back(to_db(acc / spec.instances));
    }
  }
  return out;
}

void HarmonicRecoverySpec::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("harmonic recovery needs n >= 1 and m >= 1");
  HarmonicModel{frequencies, amplitudes.size() > 0 ? amplitudes : CVector(CVector::Ones(frequencies.size())), n}
      .validate();
  validate_snr_grid({snr_db});
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  for (Algorithm a : algorithms) {
    if (!is_sparse(a)) throw std::invalid_argument("harmonic recovery runs sparse-bfpp or sparse-lsfpp only");
  }
  dictionary.build(n);
  fpp.validate();
}

HarmonicRecoveryResult harmonic_recovery(const HarmonicRecoverySpec& spec, int jobs) {
  spec.validate();
  const HarmonicModel model{spec.frequencies,
                            spec.amplitudes.size() > 0 ? spec.amplitudes : CVector(CVector::Ones(spec.frequencies.size())),
                            spec.n};
  const ComplexSignal x = harmonic_signal(model);
  const Dictionary dict = spec.dictionary.build(spec.n);
  RVector truth = spec.frequencies;
  std::sort(truth.begin(), truth.end());
  const double step = dict.spacing() * (1.0 + 1e-9);
  const std::size_t n_alg = spec.algorithms.size();

  std::vector<std::vector<HarmonicTrial>> trials(static_cast<std::size_t>(spec.trials));
  std::vector<std::vector<RVector>> spectra(static_cast<std::size_t>(spec.trials));
  parallel_for(spec.trials, jobs, [&](int t) {
    const auto tu = static_cast<std::uint64_t>(t);
    const MeasurementEnsemble ens = gaussian_ensemble(spec.n, spec.m, derive_seed(spec.base_seed, "ensemble", tu));
    const double sigma = sigma_for(ens, x, spec.snr_db);
    const RVector y = noisy(ens, x, sigma, derive_seed(spec.base_seed, "noise", tu));
    const CMatrix projected = project_dictionary(ens, dict);
    for (Algorithm a : spec.algorithms) {
      HarmonicTrial rec{a, t, false, false, RVector(), {}};
      RVector spectrum;
      FppConfig c = spec.fpp;
      if (!c.epsilon) c.epsilon = sigma;
      c.init_seed = derive_seed(spec.base_seed, to_string(a), tu);
      try {
        const SparseFppResult r = a == Algorithm::sparse_bfpp ? run_sparse_bfpp(projected, y, dict, c)
                                                              : run_sparse_lsfpp(projected, y, dict, c);
        spectrum = r.coefficients.cwiseAbs();
        try {
          rec.peaks = refine_frequencies(r.coefficients, dict, model.order());
          rec.resolved = true;
          for (Eigen::Index l = 0; l < truth.size(); ++l) {
            rec.resolved = rec.resolved && std::abs(rec.peaks[l] - truth[l]) <= step;
          }
        } catch (const std::invalid_argument& ex) {
          rec.message = ex.what();
        }
      } catch (const std::exception& ex) {
        rec.failed = true;
        rec.message = ex.what();
      }
      trials[static_cast<std::size_t>(t)].push_back(std::move(rec));
      spectra[static_cast<std::size_t>(t)].push_back(std::move(spectrum));
    }
  });

  HarmonicRecoveryResult out{spec, {}, std::vector<RVector>(n_alg, RVector::Zero(dict.size())),
                             std::vector<int>(n_alg, 0)};
  std::vector<int> used(n_alg, 0);
  for (std::size_t t = 0; t < trials.size(); ++t) {
    for (std::size_t a = 0; a < n_alg; ++a) {
      const HarmonicTrial& rec = trials[t][a];
      if (!rec.failed) {
        out.mean_spectrum[a] += spectra[t][a];
        ++used[a];
      }
      if (rec.resolved) ++out.resolved_count[a];
      out.trials.push_back(rec);
    }
  }
  for (std::size_t a = 0; a < n_alg; ++a) {
    if (used[a] > 0) out.mean_spectrum[a] /= used[a];
  }
  return out;
}

int HistogramBins::count() const {
  if (!(width > 0.0) || !(hi > lo)) throw std::invalid_argument("histogram needs width > 0 and hi > lo");
  return static_cast<int>(std::ceil((hi - lo) / width - 1e-9));
}

int HistogramBins::index(double value) const {
  const int n = count();
  if (!(value >= lo)) return 0;
  return std::min(n - 1, static_cast<int>(std::floor((value - lo) / width)));
}

OutageTable outage_table(const ExperimentResult& result, const HistogramBins& bins) {
  OutageTable table{bins, {}, {}};
  const int n_bins = bins.count();
  for (const auto& c : result.cells) {
    table.rows.push_back({c.algorithm, result.spec.ensemble.kind, result.spec.init, c.snr_db, c.trials, c.outages,
                          c.failures});
    HistogramRow h{c.algorithm, c.snr_db, std::vector<int>(static_cast<std::size_t>(n_bins), 0)};
    for (const auto& r : result.records) {
      if (r.algorithm != c.algorithm || r.snr_db != c.snr_db || r.outcome == TrialOutcome::failure) continue;
      ++h.counts[static_cast<std::size_t>(bins.index(r.errors.mse_signal_db))];
    }
    table.histograms.push_back(std::move(h));
  }
  return table;
}

std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::fig1: return "fig1";
    case FigureId::fig2: return "fig2";
    case FigureId::fig3_4: return "fig3_4";
    case FigureId::fig5_6: return "fig5_6";
    case FigureId::fig7: return "fig7";
    case FigureId::fig8: return "fig8";
    case FigureId::table1: return "table1";
    case FigureId::table2: return "table2";
  }
  return "fig1";
}

FigureId figure_id_from_string(std::string_view name) {
  for (FigureId id : {FigureId::fig1, FigureId::fig2, FigureId::fig3_4, FigureId::fig5_6, FigureId::fig7,
                      FigureId::fig8, FigureId::table1, FigureId::table2}) {
    if (name == to_string(id)) return id;
  }
  throw std::invalid_argument("unknown figure id '" + std::string(name) +
                              "' (expected fig1, fig2, fig3_4, fig5_6, fig7, fig8, table1 or table2)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FigureData fig1_data(const EpsilonCurve& curve) {
  FigureData d{FigureId::fig1,
               {{"epsilon", "B-FPP interval half-width"},
                {"mse_db", "mean squared error over all completed trials, dB"},
                {"mse_db_without_outages", "mean squared error excluding trials above 0 dB, dB"},
                {"outage_fraction", "fraction of trials above 0 dB"},
                {"failure_fraction", "fraction of trials where the solver failed"},
                {"trials", "Monte-Carlo trials"}},
               {},
               Json{{"spec", to_json(curve.spec)}}};
  for (const auto& p : curve.points) {
    d.rows.push_back({format_number(p.epsilon), format_number(p.mse_db), format_number(p.mse_db_without_outages),
                      format_number(static_cast<double>(p.outages) / p.trials),
                      format_number(static_cast<double>(p.failures) / p.trials), std::to_string(p.trials)});
  }
  return d;
}

FigureData fig2_data(const CrbSweep& sweep) {
  FigureData d{FigureId::fig2,
               {{"m", "number of measurements; one block of rows per value"},
                {"snr_db", "signal-to-noise ratio, dB"},
                {"crb_amp_db", "trace of the amplitude bound, dB"},
                {"crb_phase_db", "trace of the phase bound, dB"},
                {"crb_signal_db", "trace of the complex-signal bound, dB"}},
               {},
               Json{{"spec", to_json(sweep.spec)}}};
  for (const auto& p : sweep.points) {
    d.rows.push_back({std::to_string(p.m), format_number(p.snr_db), format_number(p.crb_amplitude_db),
                      format_number(p.crb_phase_db), format_number(p.crb_signal_db)});
  }
  return d;
}

FigureData fig3_4_data(const std::vector<ExperimentResult>& results, const HistogramBins& bins) {
  FigureData d{FigureId::fig3_4,
               {{"setting", "measurement ensemble"},
                {"init", "starting point"},
                {"algorithm", "algorithm"},
                {"snr_db", "signal-to-noise ratio, dB"},
                {"bin_lo_db", "lower edge of the MSE bin, dB (first bin also holds lower values)"},
                {"bin_hi_db", "upper edge of the MSE bin, dB (last bin also holds higher values)"},
                {"count", "trials in the bin"}},
               {},
               Json{{"specs", Json::array()}, {"bins", {{"lo", bins.lo}, {"hi", bins.hi}, {"width", bins.width}}}}};
  for (const auto& r : results) {
    d.metadata["specs"].push_back(to_json(r.spec));
    const OutageTable t = outage_table(r, bins);
    for (const auto& h : t.histograms) {
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double lo = bins.lo + static_cast<double>(b) * bins.width;
        d.rows.push_back({setting_label(r.spec.ensemble.kind), std::string(to_string(r.spec.init)),
                          std::string(to_string(h.algorithm)), format_number(h.snr_db), format_number(lo),
                          format_number(std::min(lo + bins.width, bins.hi)), std::to_string(h.counts[b])});
      }
    }
  }
  return d;
}

FigureData fig5_6_data(const ExperimentResult& result) {
  FigureData d{FigureId::fig5_6,
               {{"setting", "measurement ensemble"},
                {"snr_db", "signal-to-noise ratio, dB"},
                {"algorithm", "algorithm"},
                {"mse_amp_db", "mean amplitude squared error after outage removal, dB"},
                {"mse_phase_db", "mean phase squared error after outage removal, dB"},
                {"mse_signal_db", "mean signal squared error after outage removal, dB"},
                {"crb_amp_db", "trace of the amplitude bound averaged over instances, dB"},
                {"crb_phase_db", "trace of the phase bound averaged over instances, dB"},
                {"crb_signal_db", "trace of the complex-signal bound averaged over instances, dB"},
                {"outage_fraction", "fraction of trials above 0 dB"},
                {"failure_fraction", "fraction of trials where the solver failed"},
                {"trials", "Monte-Carlo trials"}},
               {},
               Json{{"spec", to_json(result.spec)}}};
  for (const auto& c : result.cells) {
    d.rows.push_back({setting_label(result.spec.ensemble.kind), format_number(c.snr_db),
                      std::string(to_string(c.algorithm)), format_number(c.mse_amplitude_db),
                      format_number(c.mse_phase_db), format_number(c.mse_signal_db), format_number(c.crb_amplitude_db),
                      format_number(c.crb_phase_db), format_number(c.crb_signal_db),
                      format_number(c.outage_fraction()), format_number(c.failure_fraction()),
                      std::to_string(c.trials)});
  }
  return d;
}

FigureData fig7_data(const HarmonicCrbCurve& curve) {
  FigureData d{FigureId::fig7, {{"snr_db", "signal-to-noise ratio, dB"}}, {}, Json{{"spec", to_json(curve.spec)}}};
  for (std::size_t s = 0; s < curve.spec.frequency_sets.size(); ++s) {
    std::string freqs;
    for (double w : curve.spec.frequency_sets[s]) {
      freqs += (freqs.empty() ? "" : ", ") + format_number(w / std::numbers::pi) + " pi";
    }
    d.columns.push_back({"crb_omega_db_set" + std::to_string(s),
                         "trace of the frequency bound for omega = {" + freqs + "}, dB"});
  }
  for (std::size_t k = 0; k < curve.spec.snr_grid_db.size(); ++k) {
    std::vector<std::string> row{format_number(curve.spec.snr_grid_db[k])};
    for (const auto& set : curve.omega_trace_db) row.push_back(format_number(set[k]));
    d.rows.push_back(std::move(row));
  }
  return d;
}

FigureData fig8_data(const HarmonicRecoveryResult& result) {
  FigureData d{FigureId::fig8,
               {{"omega", "dictionary grid frequency, radians/sample"},
                {"omega_pi", "dictionary grid frequency in units of pi"}},
               {},
               Json{{"spec", to_json(result.spec)}, {"resolved", Json::object()}}};
  for (std::size_t a = 0; a < result.spec.algorithms.size(); ++a) {
    const std::string name(to_string(result.spec.algorithms[a]));
    d.columns.push_back({name + "_magnitude", "mean |coefficient| of " + name + " over completed trials"});
    d.metadata["resolved"][name] = result.resolved_count[a];
  }
  const Dictionary dict = result.spec.dictionary.build(result.spec.n);
  for (Eigen::Index p = 0; p < dict.size(); ++p) {
    std::vector<std::string> row{format_number(dict.grid()[p]), format_number(dict.grid()[p] / std::numbers::pi)};
    for (const auto& s : result.mean_spectrum) row.push_back(format_number(s[p]));
    d.rows.push_back(std::move(row));
  }
  return d;
}

namespace {

FigureData table_data(FigureId id, const std::vector<ExperimentResult>& results) {
  const bool mse = id == FigureId::table1;
  FigureData d{id,
               {{"setting", "measurement ensemble"}, {"init", "starting point"}, {"snr_db", "signal-to-noise ratio, dB"}},
               {},
               Json{{"specs", Json::array()}}};
  const std::string what = mse ? "mean signal squared error after outage removal, dB" : "outage percentage";
  if (mse) d.columns.push_back({"CRB", "trace of the complex-signal bound averaged over instances, dB"});
  auto add_column = [&](std::string name) { d.columns.push_back({name, what + " (" + name + ")"}); };
  add_column("B-FPP");
  add_column("LS-FPP");
  d.columns.push_back({"PhaseLift", "not implemented, always n/a"});
  d.columns.push_back({"PhaseCut", "not implemented, always n/a"});
  add_column("WF");
  add_column("GS");
  for (Algorithm a : kTableAlgorithms) {
    const std::string name(display_name(a));
    d.columns.push_back({name + " failed", "percentage of trials where " + name + " failed"});
  }
  for (const auto& r : results) {
    d.metadata["specs"].push_back(to_json(r.spec));
    for (double snr : r.spec.snr_grid_db) {
      std::vector<std::string> row{setting_label(r.spec.ensemble.kind), std::string(to_string(r.spec.init)),
                                   format_number(snr)};
      if (mse) row.push_back(format_number(r.cells.empty() ? kNaN : r.cell(r.spec.algorithms.front(), snr).crb_signal_db));
      auto value = [&](Algorithm a) {
        if (!contains(r.spec.algorithms, a)) return std::string("n/a");
        const CellSummary& c = r.cell(a, snr);
        return format_number(mse ? c.mse_signal_db : 100.0 * c.outage_fraction());
      };
      row.push_back(value(Algorithm::bfpp));
      row.push_back(value(Algorithm::lsfpp));
      row.push_back("n/a");
      row.push_back("n/a");
      row.push_back(value(Algorithm::wf));
      row.push_back(value(Algorithm::gs));
      for (Algorithm a : kTableAlgorithms) {
        row.push_back(contains(r.spec.algorithms, a) ? format_number(100.0 * r.cell(a, snr).failure_fraction())
                                                     : std::string("n/a"));
      }
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

FigureData table1_data(const std::vector<ExperimentResult>& results) { return table_data(FigureId::table1, results); }

FigureData table2_data(const std::vector<ExperimentResult>& results) { return table_data(FigureId::table2, results); }

FigureData figure_data(const ExperimentResult& result, FigureId id) {
  switch (id) {
    case FigureId::fig3_4: return fig3_4_data({result});
    case FigureId::fig5_6: return fig5_6_data(result);
    case FigureId::table1: return table1_data({result});
    case FigureId::table2: return table2_data({result});
    default:
      throw std::invalid_argument("figure " + std::string(to_string(id)) + " is not built from a single experiment");
  }
}

std::string to_csv(const FigureData& data) {
  std::ostringstream os;
  for (std::size_t i = 0; i < data.columns.size(); ++i) os << (i ? "," : "") << csv_field(data.columns[i].name);
  os << "\r\n";
  for (const auto& row : data.rows) {
    if (row.size() != data.columns.size()) throw std::logic_error("figure row width does not match its header");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << "\r\n";
  }
  return os.str();
}

std::vector<std::filesystem::path> emit_figure_data(const FigureData& data, const std::filesystem::path& out_dir,
                                                    std::string_view stem) {
  const std::string id(to_string(data.id));
  const std::string base = stem.empty() ? id : std::string(stem);
  const auto csv_path = out_dir / (base + ".csv");
  const auto json_path = out_dir / (base + ".json");
  Json meta = data.metadata;
  meta["figure"] = id;
  meta["code_version"] = code_version();
  meta["data_file"] = csv_path.filename().string();
  meta["float_format"] = "%.17g";
  meta["rows"] = data.rows.size();
  Json cols = Json::array();
  for (const auto& c : data.columns) cols.push_back({{"name", c.name}, {"description", c.description}});
  meta["columns"] = std::move(cols);
  write_text_file(csv_path, to_csv(data));
  write_json_file(json_path, meta);
  return {csv_path, json_path};
}

std::string_view code_version() { return PHASERET_GIT_DESCRIBE; }

Json to_json(const ExperimentSpec& spec) {
  return Json{{"ensemble", to_json(spec.ensemble)},
              {"signal", to_json(spec.signal)},
              {"snr_grid_db", snr_grid_to_json(spec.snr_grid_db)},
              {"trials", spec.trials},
              {"algorithms", algorithms_to_json(spec.algorithms)},
              {"init", to_string(spec.init)},
              {"base_seed", spec.base_seed},
              {"redraw_ensemble", spec.redraw_ensemble},
              {"compute_crb", spec.compute_crb},
              {"fpp", to_json(spec.fpp)},
              {"baseline", to_json(spec.baseline)},
              {"dictionary", to_json(spec.dictionary)}};
}

ExperimentSpec experiment_spec_from_json(const Json& j) {
  check_keys(j,
             {"ensemble", "signal", "snr_grid_db", "trials", "algorithms", "init", "base_seed", "redraw_ensemble",
              "compute_crb", "fpp", "baseline", "dictionary"},
             "experiment");
  ExperimentSpec s;
  if (j.contains("ensemble")) s.ensemble = ensemble_spec_from_json(j.at("ensemble"));
  if (j.contains("signal")) s.signal = signal_spec_from_json(j.at("signal"));
  if (j.contains("snr_grid_db")) s.snr_grid_db = snr_grid_from_json(j.at("snr_grid_db"));
  read_if(j, "trials", s.trials);
  if (j.contains("algorithms")) s.algorithms = algorithms_from_json(j.at("algorithms"));
  if (j.contains("init")) s.init = init_kind_from_string(j.at("init").get<std::string>());
  read_if(j, "base_seed", s.base_seed);
  read_if(j, "redraw_ensemble", s.redraw_ensemble);
  read_if(j, "compute_crb", s.compute_crb);
  if (j.contains("fpp")) update_from_json(s.fpp, j.at("fpp"));
  if (j.contains("baseline")) update_from_json(s.baseline, j.at("baseline"));
  if (j.contains("dictionary")) s.dictionary = dictionary_spec_from_json(j.at("dictionary"));
  return s;
}

Json to_json(const EpsilonSweepSpec& spec) {
  return Json{{"n", spec.n},         {"m", spec.m},           {"sigma_n", spec.sigma_n},
              {"eps_grid", spec.eps_grid}, {"trials", spec.trials}, {"base_seed", spec.base_seed},
              {"fpp", to_json(spec.fpp)}};
}

EpsilonSweepSpec epsilon_sweep_spec_from_json(const Json& j) {
  check_keys(j, {"n", "m", "sigma_n", "eps_grid", "trials", "base_seed", "fpp"}, "epsilon sweep");
  EpsilonSweepSpec s;
  read_if(j, "n", s.n);
  read_if(j, "m", s.m);
  read_if(j, "sigma_n", s.sigma_n);
  read_if(j, "eps_grid", s.eps_grid);
  read_if(j, "trials", s.trials);
  read_if(j, "base_seed", s.base_seed);
  if (j.contains("fpp")) update_from_json(s.fpp, j.at("fpp"));
  return s;
}

Json to_json(const CrbSweepSpec& spec) {
  return Json{{"kind", to_string(spec.kind)},
              {"n", spec.n},
              {"m_values", spec.m_values},
              {"snr_grid_db", snr_grid_to_json(spec.snr_grid_db)},
              {"signal", to_json(spec.signal)},
              {"instances", spec.instances},
              {"base_seed", spec.base_seed}};
}

CrbSweepSpec crb_sweep_spec_from_json(const Json& j) {
  check_keys(j, {"kind", "n", "m_values", "m_multiples", "snr_grid_db", "signal", "instances", "base_seed"},
             "crb sweep");
  CrbSweepSpec s;
  if (j.contains("kind")) s.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
  read_if(j, "n", s.n);
  read_if(j, "m_values", s.m_values);
  if (j.contains("m_multiples")) {
    s.m_values.clear();
    for (const auto& k : j.at("m_multiples")) s.m_values.push_back(k.get<Eigen::Index>() * s.n);
  }
  if (j.contains("snr_grid_db")) s.snr_grid_db = snr_grid_from_json(j.at("snr_grid_db"));
  if (j.contains("signal")) s.signal = signal_spec_from_json(j.at("signal"));
  read_if(j, "instances", s.instances);
  read_if(j, "base_seed", s.base_seed);
  return s;
}

Json to_json(const HarmonicCrbSpec& spec) {
  Json sets = Json::array();
  for (const auto& set : spec.frequency_sets) {
    sets.push_back(pi_units(Eigen::Map<const RVector>(set.data(), static_cast<Eigen::Index>(set.size()))));
  }
  return Json{{"n", spec.n},
              {"m", spec.m},
              {"frequency_sets_pi", sets},
              {"snr_grid_db", snr_grid_to_json(spec.snr_grid_db)},
              {"instances", spec.instances},
              {"base_seed", spec.base_seed}};
}

HarmonicCrbSpec harmonic_crb_spec_from_json(const Json& j) {
  check_keys(j, {"n", "m", "frequency_sets_pi", "snr_grid_db", "instances", "base_seed"}, "harmonic crb");
  HarmonicCrbSpec s;
  read_if(j, "n", s.n);
  read_if(j, "m", s.m);
  if (j.contains("frequency_sets_pi")) {
    for (const auto& set : j.at("frequency_sets_pi")) {
      const RVector w = from_pi_units(set);
      s.frequency_sets.emplace_back(w.begin(), w.end());
    }
  }
  if (j.contains("snr_grid_db")) s.snr_grid_db = snr_grid_from_json(j.at("snr_grid_db"));
  read_if(j, "instances", s.instances);
  read_if(j, "base_seed", s.base_seed);
  return s;
}

Json to_json(const HarmonicRecoverySpec& spec) {
  Json j{{"n", spec.n},
         {"m", spec.m},
         {"frequencies_pi", pi_units(spec.frequencies)},
         {"snr_db", snr_to_json(spec.snr_db)},
         {"dictionary", to_json(spec.dictionary)},
         {"trials", spec.trials},
         {"base_seed", spec.base_seed},
         {"algorithms", algorithms_to_json(spec.algorithms)},
         {"fpp", to_json(spec.fpp)}};
  if (spec.amplitudes.size() > 0) j["amplitudes"] = to_json(spec.amplitudes);
  return j;
}

HarmonicRecoverySpec harmonic_recovery_spec_from_json(const Json& j) {
  check_keys(j,
             {"n", "m", "frequencies_pi", "amplitudes", "snr_db", "dictionary", "trials", "base_seed", "algorithms",
              "fpp"},
             "harmonic recovery");
  HarmonicRecoverySpec s;
  read_if(j, "n", s.n);
  read_if(j, "m", s.m);
  if (j.contains("frequencies_pi")) s.frequencies = from_pi_units(j.at("frequencies_pi"));
  if (j.contains("amplitudes")) s.amplitudes = cvector_from_json(j.at("amplitudes"));
  if (j.contains("snr_db")) s.snr_db = snr_from_json(j.at("snr_db"));
  if (j.contains("dictionary")) s.dictionary = dictionary_spec_from_json(j.at("dictionary"));
  read_if(j, "trials", s.trials);
  read_if(j, "base_seed", s.base_seed);
  if (j.contains("algorithms")) s.algorithms = algorithms_from_json(j.at("algorithms"));
  if (j.contains("fpp")) update_from_json(s.fpp, j.at("fpp"));
  return s;
}

}  // namespace phaseret
