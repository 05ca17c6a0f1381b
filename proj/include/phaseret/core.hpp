#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace phaseret {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Reported in place of 10*log10(0).
inline constexpr double kMseFloorDb = -320.0;

/// A complex N-vector: the unknown signal or one of its estimates.
/// Amplitude and phase are derived views (b_i = |x_i|, theta_i = arg x_i).
class ComplexSignal {
 public:
  /// Throws std::invalid_argument when empty or non-finite.
  explicit ComplexSignal(CVector values);

  const CVector& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  Complex operator[](Eigen::Index i) const { return values_[i]; }

  RVector amplitudes() const { return values_.cwiseAbs(); }
  RVector phases() const;
  double norm() const { return values_.norm(); }

 private:
  CVector values_;
};

enum class EnsembleKind { gaussian, masked_fourier, custom };

std::string_view to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(std::string_view name);

/// Known measurement vectors a_i stored as the columns of an N x M matrix.
/// The rank-one matrices a_i a_i^H are never formed; everything works
/// through the scalars a_i^H x.
class MeasurementEnsemble {
 public:
  /// Throws std::invalid_argument when M < 1, N < 1, entries are non-finite,
  /// or a masked-Fourier ensemble has M not a multiple of N.
  MeasurementEnsemble(CMatrix columns, EnsembleKind kind, std::uint64_t seed);

  const CMatrix& columns() const noexcept { return columns_; }
  auto column(Eigen::Index i) const { return columns_.col(i); }
  Eigen::Index n() const noexcept { return columns_.rows(); }
  Eigen::Index m() const noexcept { return columns_.cols(); }
  EnsembleKind kind() const noexcept { return kind_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// A^H x, i.e. the vector of inner products a_i^H x.
  CVector project(const CVector& x) const;

  /// First `m` columns, relabelled as a custom ensemble.
  MeasurementEnsemble leading_columns(Eigen::Index m) const;

 private:
  CMatrix columns_;
  EnsembleKind kind_;
  std::uint64_t seed_;
};

/// Everything a solver needs: the ensemble, the (noisy) data, the noise
/// level and, for simulations, the ground truth.
struct RetrievalInstance {
  MeasurementEnsemble ensemble;
  RVector y;
  double sigma_n = 0.0;
  std::optional<ComplexSignal> truth;

  /// Throws DimensionMismatch / std::invalid_argument on broken invariants.
  void validate() const;
};

struct ErrorReport {
  double mse_signal_db = kMseFloorDb;
  double mse_amplitude_db = kMseFloorDb;
  double mse_phase_db = kMseFloorDb;
  double aligned_phase = 0.0;  // radians, applied to the estimate
  bool is_outage = false;

  // Linear-scale squared errors behind the dB figures.
  double sq_error_signal = 0.0;
  double sq_error_amplitude = 0.0;
  double sq_error_phase = 0.0;
};

/// y_i = |a_i^H x|^2.
RVector measure(const MeasurementEnsemble& ensemble, const ComplexSignal& x);

/// y + n with n ~ N(0, sigma_n^2) i.i.d., drawn from a stream keyed by `seed`.
RVector add_noise(const RVector& y, double sigma_n, std::uint64_t seed);

/// Noise standard deviation giving SNR = sum |a_i^H x|^4 / (M sigma^2).
double sigma_from_snr(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double snr_linear);

/// Inverse of sigma_from_snr.
double snr_from_sigma(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n);

double db_to_linear(double db);

/// 10 log10(v), or kMseFloorDb when v is zero.
double to_db(double value);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);

struct PhaseAlignment {
  ComplexSignal aligned;
  double phase;  // e^{j phase} * estimate is closest to truth
};

/// Removes the global-phase ambiguity: returns e^{j phi*} estimate with phi*
/// minimizing || e^{j phi} estimate - truth ||_2.
PhaseAlignment align_global_phase(const ComplexSignal& estimate, const ComplexSignal& truth);

/// Signal, amplitude and phase errors after global-phase alignment.
ErrorReport error_report(const ComplexSignal& estimate, const ComplexSignal& truth);

/// sum_i (y_i - |a_i^H x|^2)^2.
double ls_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x);

}  // namespace phaseret
