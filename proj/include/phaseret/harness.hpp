#pragma once

#include "phaseret/baselines.hpp"
#include "phaseret/core.hpp"
#include "phaseret/fpp.hpp"
#include "phaseret/io.hpp"
#include "phaseret/measurements.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace phaseret {

enum class Algorithm { bfpp, lsfpp, sparse_bfpp, sparse_lsfpp, wf, gs };

/// "bfpp", "lsfpp", "sparse-bfpp", "sparse-lsfpp", "wf", "gs".
std::string_view to_string(Algorithm a);
/// Accepts '-' or '_' as separator.
Algorithm algorithm_from_string(std::string_view name);
/// Column label used in tables ("B-FPP", "LS-FPP", ...).
std::string_view display_name(Algorithm a);

/// Marks the noiseless cell of an SNR grid.
inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gaussian;
  Eigen::Index n = 16;
  Eigen::Index m = 64;  // masked Fourier: K = m / n masks

  void validate() const;
  MeasurementEnsemble draw(std::uint64_t seed) const;
};

enum class SignalKind { reference, harmonic, random, custom };

std::string_view to_string(SignalKind k);
SignalKind signal_kind_from_string(std::string_view name);

struct SignalSpec {
  SignalKind kind = SignalKind::reference;
  RVector frequencies;  // harmonic, radians/sample
  CVector amplitudes;   // harmonic; all ones when empty
  CVector values;       // custom
  std::uint64_t seed = 0;  // random: CN(0, 1) entries drawn once

  ComplexSignal make(Eigen::Index n) const;
  /// The harmonic model behind a harmonic signal, empty otherwise.
  std::optional<HarmonicModel> harmonic(Eigen::Index n) const;
};

struct DictionarySpec {
  Eigen::Index size = 51;
  double lo = -std::numbers::pi / 2.0;
  double hi = std::numbers::pi / 2.0;

  Dictionary build(Eigen::Index n) const;
};

struct ExperimentSpec {
  EnsembleSpec ensemble;
  SignalSpec signal;
  std::vector<double> snr_grid_db{25.0};
  int trials = 100;
  std::vector<Algorithm> algorithms{Algorithm::bfpp, Algorithm::lsfpp, Algorithm::wf, Algorithm::gs};
  InitKind init = InitKind::spectral;
  std::uint64_t base_seed = 1;
  /// Draw a fresh ensemble per trial; otherwise one ensemble serves every trial.
  bool redraw_ensemble = true;
  bool compute_crb = true;
  /// B-FPP uses epsilon = sigma_n of the cell when fpp.epsilon is unset.
  FppConfig fpp;
  BaselineConfig baseline;
  DictionarySpec dictionary;

  /// Throws std::invalid_argument.
  void validate() const;
};

enum class TrialOutcome { success, outage, failure };

std::string_view to_string(TrialOutcome o);

struct TrialRecord {
  Algorithm algorithm = Algorithm::lsfpp;
  double snr_db = 0.0;
  int trial = 0;
  TrialOutcome outcome = TrialOutcome::success;
  ErrorReport errors;  // meaningless for failures
  int iterations = 0;
  double ls_cost = 0.0;
  std::string message;  // failure reason
};

struct CellSummary {
  Algorithm algorithm = Algorithm::lsfpp;
  double snr_db = 0.0;
  int trials = 0;
  int successes = 0;
  int outages = 0;
  int failures = 0;
  // Means over successful trials, in dB; NaN when there are none.
  double mse_signal_db = std::numeric_limits<double>::quiet_NaN();
  double mse_amplitude_db = std::numeric_limits<double>::quiet_NaN();
  double mse_phase_db = std::numeric_limits<double>::quiet_NaN();
  /// Standard error of the linear signal MSE mean.
  double mse_signal_stderr = std::numeric_limits<double>::quiet_NaN();
  // Traces of the complex and amplitude/phase bounds, averaged over the
  // cell's instances; NaN when not computed.
  double crb_signal_db = std::numeric_limits<double>::quiet_NaN();
  double crb_amplitude_db = std::numeric_limits<double>::quiet_NaN();
  double crb_phase_db = std::numeric_limits<double>::quiet_NaN();

  double outage_fraction() const { return trials > 0 ? static_cast<double>(outages) / trials : 0.0; }
  double failure_fraction() const { return trials > 0 ? static_cast<double>(failures) / trials : 0.0; }
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<CellSummary> cells;    // SNR-major, algorithms in spec order
  std::vector<TrialRecord> records;  // sorted by (snr, trial, algorithm)

  /// Throws std::out_of_range.
  const CellSummary& cell(Algorithm a, double snr_db) const;
};

/// Seed of the stream labelled `label` for trial t at a given SNR.
std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view label, double snr_db, int trial);

/// Runs every (snr, trial) instance on `jobs` threads (0: hardware
/// concurrency). The ensemble and noise of an instance depend only on
/// (base_seed, snr, trial), so every algorithm sees the same data; random
/// starts draw from a per-algorithm stream. Solver exceptions become failure
/// records. The result does not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// Summaries recomputed from trial records; `crb` supplies the bound columns
/// (indexed like spec.snr_grid_db).
std::vector<CellSummary> summarize(const ExperimentSpec& spec, const std::vector<TrialRecord>& records,
                                   const std::vector<CellSummary>& crb = {});

struct EpsilonSweepSpec {
  Eigen::Index n = 16;
  Eigen::Index m = 80;
  double sigma_n = 0.4;
  std::vector<double> eps_grid{0.1, 0.2, 0.4, 0.8, 1.2, 1.6, 2.0};
  int trials = 50;
  std::uint64_t base_seed = 1;
  FppConfig fpp;

  void validate() const;
};

struct EpsilonPoint {
  double epsilon = 0.0;
  int trials = 0;
  int outages = 0;
  int failures = 0;
  /// Mean over all non-failed trials.
  double mse_db = std::numeric_limits<double>::quiet_NaN();
  /// Mean over trials that are neither outages nor failures.
  double mse_db_without_outages = std::numeric_limits<double>::quiet_NaN();
};

struct EpsilonCurve {
  EpsilonSweepSpec spec;
  std::vector<EpsilonPoint> points;
};

/// B-FPP on one Gaussian instance (ensemble and signal x ~ CN(0, I) fixed)
/// with fresh noise per trial; trial t uses the same noise for every epsilon.
EpsilonCurve epsilon_sweep(const EpsilonSweepSpec& spec, int jobs = 1);

struct CrbSweepSpec {
  EnsembleKind kind = EnsembleKind::gaussian;
  Eigen::Index n = 16;
  std::vector<Eigen::Index> m_values{32, 64, 128};
  std::vector<double> snr_grid_db;
  SignalSpec signal;
  int instances = 100;
  std::uint64_t base_seed = 1;

  void validate() const;
};

struct CrbPoint {
  Eigen::Index m = 0;
  double snr_db = 0.0;
  double crb_signal_db = 0.0;
  double crb_amplitude_db = 0.0;
  double crb_phase_db = 0.0;
};

struct CrbSweep {
  CrbSweepSpec spec;
  std::vector<CrbPoint> points;  // m-major
};

/// Bound traces averaged over `instances` ensembles per (m, snr).
CrbSweep crb_sweep(const CrbSweepSpec& spec, int jobs = 1);

struct HarmonicCrbSpec {
  Eigen::Index n = 8;
  Eigen::Index m = 40;
  /// One curve per frequency set; amplitudes are 1.
  std::vector<std::vector<double>> frequency_sets;
  std::vector<double> snr_grid_db;
  int instances = 20;
  std::uint64_t base_seed = 1;

  void validate() const;
};

struct HarmonicCrbCurve {
  HarmonicCrbSpec spec;
  /// omega_trace_db[s][k]: trace of the frequency block for set s at snr k.
  std::vector<std::vector<double>> omega_trace_db;
};

/// Frequency-block CRB traces averaged over Gaussian ensembles; every set
/// sees the same ensembles.
HarmonicCrbCurve harmonic_crb_curve(const HarmonicCrbSpec& spec, int jobs = 1);

struct HarmonicRecoverySpec {
  Eigen::Index n = 8;
  Eigen::Index m = 16;
  RVector frequencies;
  CVector amplitudes;  // all ones when empty
  double snr_db = 30.0;
  DictionarySpec dictionary;
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::sparse_lsfpp, Algorithm::sparse_bfpp};
  FppConfig fpp;

  void validate() const;
};

struct HarmonicTrial {
  Algorithm algorithm = Algorithm::sparse_lsfpp;
  int trial = 0;
  bool failed = false;
  bool resolved = false;  // every true frequency has a peak within one grid step
  RVector peaks;          // ascending
  std::string message;
};

struct HarmonicRecoveryResult {
  HarmonicRecoverySpec spec;
  std::vector<HarmonicTrial> trials;  // sorted by (trial, algorithm)
  /// Per algorithm: mean |x~| over non-failed trials, one entry per grid point.
  std::vector<RVector> mean_spectrum;
  std::vector<int> resolved_count;
};

/// Sparse FPP on two-sided harmonic mixtures with a fresh Gaussian ensemble
/// and noise per trial. Peaks are the `L` largest separated bins.
HarmonicRecoveryResult harmonic_recovery(const HarmonicRecoverySpec& spec, int jobs = 1);

struct HistogramBins {
  double lo = -40.0;
  double hi = 20.0;
  double width = 2.0;

  int count() const;
  /// Values below lo or above hi land in the first / last bin.
  int index(double value) const;
};

struct OutageRow {
  Algorithm algorithm = Algorithm::lsfpp;
  EnsembleKind ensemble = EnsembleKind::gaussian;
  InitKind init = InitKind::spectral;
  double snr_db = 0.0;
  int trials = 0;
  int outages = 0;
  int failures = 0;

  double outage_percent() const { return trials > 0 ? 100.0 * outages / trials : 0.0; }
  double failure_percent() const { return trials > 0 ? 100.0 * failures / trials : 0.0; }
};

struct HistogramRow {
  Algorithm algorithm = Algorithm::lsfpp;
  double snr_db = 0.0;
  std::vector<int> counts;  // signal MSE in dB of non-failed trials
};

struct OutageTable {
  HistogramBins bins;
  std::vector<OutageRow> rows;
  std::vector<HistogramRow> histograms;
};

OutageTable outage_table(const ExperimentResult& result, const HistogramBins& bins = {});

enum class FigureId { fig1, fig2, fig3_4, fig5_6, fig7, fig8, table1, table2 };

std::string_view to_string(FigureId id);
/// Throws std::invalid_argument listing the known ids.
FigureId figure_id_from_string(std::string_view name);

struct FigureColumn {
  std::string name;
  std::string description;
};

struct FigureData {
  FigureId id = FigureId::fig1;
  std::vector<FigureColumn> columns;
  std::vector<std::vector<std::string>> rows;
  /// Echo of the generating spec(s) and seeds.
  Json metadata = Json::object();
};

/// %.17g; NaN becomes "n/a".
std::string format_number(double v);

FigureData fig1_data(const EpsilonCurve& curve);
FigureData fig2_data(const CrbSweep& sweep);
FigureData fig3_4_data(const std::vector<ExperimentResult>& results, const HistogramBins& bins = {});
FigureData fig5_6_data(const ExperimentResult& result);
FigureData fig7_data(const HarmonicCrbCurve& curve);
FigureData fig8_data(const HarmonicRecoveryResult& result);
/// One row per (setting, init); CRB column, then one column per algorithm
/// in table order with PhaseLift and PhaseCut reported as n/a.
FigureData table1_data(const std::vector<ExperimentResult>& results);
FigureData table2_data(const std::vector<ExperimentResult>& results);

/// Builders for the ids that derive from a single experiment (fig3_4,
/// fig5_6, table1, table2). Throws std::invalid_argument otherwise.
FigureData figure_data(const ExperimentResult& result, FigureId id);

/// RFC-4180 text with CRLF line endings.
std::string to_csv(const FigureData& data);

/// Writes <stem>.csv and <stem>.json (metadata plus column docs and code
/// version) into `out_dir` and returns both paths. The stem defaults to the
/// figure id.
std::vector<std::filesystem::path> emit_figure_data(const FigureData& data, const std::filesystem::path& out_dir,
                                                    std::string_view stem = {});

/// `git describe` of the build.
std::string_view code_version();

Json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const Json& j);
Json to_json(const EpsilonSweepSpec& spec);
EpsilonSweepSpec epsilon_sweep_spec_from_json(const Json& j);
Json to_json(const CrbSweepSpec& spec);
CrbSweepSpec crb_sweep_spec_from_json(const Json& j);
Json to_json(const HarmonicCrbSpec& spec);
HarmonicCrbSpec harmonic_crb_spec_from_json(const Json& j);
Json to_json(const HarmonicRecoverySpec& spec);
HarmonicRecoverySpec harmonic_recovery_spec_from_json(const Json& j);

}  // namespace phaseret
