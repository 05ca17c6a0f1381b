#include "phaseret/core.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phaseret {

ComplexSignal::ComplexSignal(CVector values) : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw std::invalid_argument("ComplexSignal: length must be at least 1");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("ComplexSignal: entries must be finite");
  }
}

RVector ComplexSignal::phases() const {
  RVector out(values_.size());
  for (Eigen::Index i = 0; i < values_.size(); ++i) out[i] = std::arg(values_[i]);
  return out;
}

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::gaussian: return "gaussian";
    case EnsembleKind::masked_fourier: return "masked_fourier";
    case EnsembleKind::custom: return "custom";
  }
  return "custom";
}

EnsembleKind ensemble_kind_from_string(std::string_view name) {
  if (name == "gaussian") return EnsembleKind::gaussian;
  if (name == "masked_fourier" || name == "masked-fourier") return EnsembleKind::masked_fourier;
  if (name == "custom") return EnsembleKind::custom;
  throw std::invalid_argument("unknown ensemble kind '" + std::string(name) + "'");
}

MeasurementEnsemble::MeasurementEnsemble(CMatrix columns, EnsembleKind kind, std::uint64_t seed)
    : columns_(std::move(columns)), kind_(kind), seed_(seed) {
  if (columns_.rows() < 1 || columns_.cols() < 1) {
    throw std::invalid_argument("MeasurementEnsemble: need N >= 1 and M >= 1");
  }
  if (!columns_.allFinite()) {
    throw std::invalid_argument("MeasurementEnsemble: entries must be finite");
  }
  if (kind_ == EnsembleKind::masked_fourier && columns_.cols() % columns_.rows() != 0) {
    throw std::invalid_argument("MeasurementEnsemble: masked Fourier ensembles need M to be a multiple of N");
  }
}

CVector MeasurementEnsemble::project(const CVector& x) const {
  if (x.size() != n()) {
    throw DimensionMismatch("signal length " + std::to_string(x.size()) + " does not match ensemble N=" +
                            std::to_string(n()));
  }
  return columns_.adjoint() * x;
}

MeasurementEnsemble MeasurementEnsemble::leading_columns(Eigen::Index m) const {
  if (m < 1 || m > this->m()) throw std::invalid_argument("leading_columns: m out of range");
  return MeasurementEnsemble(columns_.leftCols(m), EnsembleKind::custom, seed_);
}

void RetrievalInstance::validate() const {
  if (y.size() != ensemble.m()) {
    throw DimensionMismatch("measurement vector has length " + std::to_string(y.size()) + ", ensemble has M=" +
                            std::to_string(ensemble.m()));
  }
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("sigma_n must be nonnegative");
  if (truth && truth->size() != ensemble.n()) {
    throw DimensionMismatch("truth length does not match ensemble N");
  }
}

RVector measure(const MeasurementEnsemble& ensemble, const ComplexSignal& x) {
  return ensemble.project(x.values()).cwiseAbs2();
}

RVector add_noise(const RVector& y, double sigma_n, std::uint64_t seed) {
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("add_noise: sigma_n must be nonnegative");
  if (sigma_n == 0.0) return y;
  CounterRng rng(seed);
  RVector out = y;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sigma_n * rng.normal();
  return out;
}

namespace {

double fourth_moment_sum(const MeasurementEnsemble& ensemble, const ComplexSignal& x) {
  const RVector y = measure(ensemble, x);
  return y.squaredNorm();
}

}  // namespace

double sigma_from_snr(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double snr_linear) {
  if (!(snr_linear > 0.0)) throw std::invalid_argument("sigma_from_snr: SNR must be positive");
  const double power = fourth_moment_sum(ensemble, x);
  if (power == 0.0) throw std::invalid_argument("sigma_from_snr: SNR undefined for a zero signal");
  return std::sqrt(power / (static_cast<double>(ensemble.m()) * snr_linear));
}

double snr_from_sigma(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n) {
  if (!(sigma_n > 0.0)) throw std::invalid_argument("snr_from_sigma: sigma_n must be positive");
  return fourth_moment_sum(ensemble, x) / (static_cast<double>(ensemble.m()) * sigma_n * sigma_n);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double to_db(double value) {
  if (value <= 0.0) return kMseFloorDb;
  return std::max(10.0 * std::log10(value), kMseFloorDb);
}

double wrap_phase(double angle) {
  constexpr double pi = std::numbers::pi;
  double r = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

PhaseAlignment align_global_phase(const ComplexSignal& estimate, const ComplexSignal& truth) {
  if (estimate.size() != truth.size()) throw DimensionMismatch("align_global_phase: length mismatch");
  if (truth.values().squaredNorm() == 0.0) throw std::invalid_argument("align_global_phase: zero truth vector");
  const Complex inner = truth.values().dot(estimate.values());  // truth^H estimate
  const double phase = inner == Complex(0.0, 0.0) ? 0.0 : wrap_phase(-std::arg(inner));
  return {ComplexSignal(std::polar(1.0, phase) * estimate.values()), phase};
}

ErrorReport error_report(const ComplexSignal& estimate, const ComplexSignal& truth) {
  const PhaseAlignment al = align_global_phase(estimate, truth);
  const CVector& xa = al.aligned.values();
  const CVector& xt = truth.values();

  ErrorReport r;
  r.aligned_phase = al.phase;
  r.sq_error_signal = (xa - xt).squaredNorm();
  r.sq_error_amplitude = (xa.cwiseAbs() - xt.cwiseAbs()).squaredNorm();
  double phase_err = 0.0;
  for (Eigen::Index i = 0; i < xt.size(); ++i) {
    const double d = wrap_phase(std::arg(xa[i]) - std::arg(xt[i]));
    phase_err += d * d;
  }
  r.sq_error_phase = phase_err;
  r.mse_signal_db = to_db(r.sq_error_signal);
  r.mse_amplitude_db = to_db(r.sq_error_amplitude);
  r.mse_phase_db = to_db(r.sq_error_phase);
  r.is_outage = r.mse_signal_db > 0.0;
  return r;
}

double ls_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x) {
  if (y.size() != ensemble.m()) throw DimensionMismatch("ls_cost: y length mismatch");
  return (y - ensemble.project(x).cwiseAbs2()).squaredNorm();
}

}  // namespace phaseret
