#include "phaseret/baselines.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace phaseret {

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::spectral: return "spectral";
    case InitKind::random: return "random";
    case InitKind::given: return "given";
  }
  return "spectral";
}

InitKind init_kind_from_string(std::string_view name) {
  if (name == "spectral") return InitKind::spectral;
  if (name == "random") return InitKind::random;
  if (name == "given") return InitKind::given;
  throw std::invalid_argument("unknown init kind '" + std::string(name) + "'");
}

CVector spectral_init(const CMatrix& columns, const RVector& y) {
  if (y.size() != columns.cols()) throw DimensionMismatch("spectral_init: y length does not match column count");
  if (y.size() == 0 || y.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("spectral_init: measurements are all zero");
  }
  const Eigen::Index n = columns.rows();
  const CMatrix weighted = columns * y.cast<Complex>().asDiagonal();
  const CMatrix s = weighted * columns.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalFailure("spectral_init: eigensolver failed", 0);
  CVector v = eig.eigenvectors().col(n - 1);

  Eigen::Index lead = 0;
  v.cwiseAbs().maxCoeff(&lead);
  v *= std::conj(v[lead]) / std::abs(v[lead]);
  v[lead] = std::abs(v[lead]);

  const double mean_y = y.mean();
  const double mean_col = columns.colwise().squaredNorm().mean() / static_cast<double>(n);
  const double power = mean_y > 0.0 ? mean_y : y.cwiseAbs().mean();
  return v * std::sqrt(power / mean_col);
}

ComplexSignal spectral_init(const RetrievalInstance& instance) {
  instance.validate();
  return ComplexSignal(spectral_init(instance.ensemble.columns(), instance.y));
}

CVector random_init(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng(seed);
  CVector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.complex_normal() * std::sqrt(0.5);
  return z;
}

void BaselineConfig::validate() const {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(schedule.mu_max > 0.0) || !(schedule.tau0 > 0.0)) {
    throw std::invalid_argument("step schedule constants must be positive");
  }
  if (init == InitKind::given && !initial_point) throw std::invalid_argument("init=given needs an initial point");
}

double wf_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x) {
  return ls_cost(ensemble, y, x);
}

CVector wf_gradient(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x) {
  const CVector ax = ensemble.project(x);
  const CVector weights = 2.0 * (ax.cwiseAbs2() - y).cast<Complex>().cwiseProduct(ax);
  return ensemble.columns() * weights;
}

double gs_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x) {
  const CVector ax = ensemble.project(x);
  double cost = 0.0;
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    const double mag = std::abs(ax[i]);
    const Complex u = mag > 0.0 ? ax[i] / mag : Complex(1.0, 0.0);
    cost += std::norm(std::sqrt(std::max(y[i], 0.0)) * u - ax[i]);
  }
  return cost;
}

namespace {

CVector starting_point(const RetrievalInstance& instance, const BaselineConfig& config) {
  switch (config.init) {
    case InitKind::spectral: return spectral_init(instance).values();
    case InitKind::random: return random_init(instance.ensemble.n(), config.init_seed);
    case InitKind::given:
      if (config.initial_point->size() != instance.ensemble.n()) {
        throw DimensionMismatch("initial point length does not match ensemble N");
      }
      return *config.initial_point;
  }
  return {};
}

// Relative change small enough to stop, or the cost is exactly consistent.
bool settled(double previous, double current, double tol, double scale) {
  if (current <= 1e-30 * scale) return true;
  return std::abs(previous - current) <= tol * previous;
}

}  // namespace

BaselineResult wirtinger_flow(const RetrievalInstance& instance, const BaselineConfig& config) {
  instance.validate();
  config.validate();
  const auto& ens = instance.ensemble;
  const double m = static_cast<double>(ens.m());
  CVector x = starting_point(instance, config);
  const double norm0 = x.squaredNorm();
  if (!(norm0 > 0.0)) throw std::invalid_argument("wirtinger_flow: initial point is zero");
  // The recipe assumes E[a a^H] = I; rescale for other column energies.
  const double nu2 = ens.columns().colwise().squaredNorm().mean() / static_cast<double>(ens.n());
  const double scale = instance.y.squaredNorm();

  BaselineResult out{ComplexSignal(x), {}, 0, false};
  out.costs.push_back(wf_cost(ens, instance.y, x));
  for (int k = 1; k <= config.max_iter; ++k) {
    const double mu = std::min(1.0 - std::exp(-k / config.schedule.tau0), config.schedule.mu_max);
    const CVector grad = wf_gradient(ens, instance.y, x) / (2.0 * m);
    x -= (mu / (nu2 * nu2 * norm0)) * grad;
    const double cost = wf_cost(ens, instance.y, x);
    if (!x.allFinite() || !std::isfinite(cost)) throw NumericalFailure("wirtinger_flow: iterate is not finite", k);
    out.costs.push_back(cost);
    out.iterations = k;
    if (settled(out.costs[out.costs.size() - 2], cost, config.tol, scale)) {
      out.converged = true;
      break;
    }
  }
  out.estimate = ComplexSignal(x);
  return out;
}

BaselineResult gerchberg_saxton(const RetrievalInstance& instance, const BaselineConfig& config) {
  instance.validate();
  config.validate();
  const auto& ens = instance.ensemble;
  const CMatrix ah = ens.columns().adjoint();
  Eigen::ColPivHouseholderQR<CMatrix> qr(ah);
  if (qr.rank() < ens.n()) throw std::invalid_argument("gerchberg_saxton: A^H is rank deficient");
  const RVector amp = instance.y.cwiseMax(0.0).cwiseSqrt();
  const double scale = instance.y.squaredNorm();

  CVector x = starting_point(instance, config);
  BaselineResult out{ComplexSignal(x), {}, 0, false};
  out.costs.push_back(wf_cost(ens, instance.y, x));
  CVector target(ens.m());
  for (int k = 1; k <= config.max_iter; ++k) {
    const CVector ax = ah * x;
    for (Eigen::Index i = 0; i < ax.size(); ++i) {
      const double mag = std::abs(ax[i]);
      target[i] = amp[i] * (mag > 0.0 ? ax[i] / mag : Complex(1.0, 0.0));
    }
    x = qr.solve(target);
    const double cost = wf_cost(ens, instance.y, x);
    if (!x.allFinite()) throw NumericalFailure("gerchberg_saxton: iterate is not finite", k);
    out.costs.push_back(cost);
    out.iterations = k;
    if (settled(out.costs[out.costs.size() - 2], cost, config.tol, scale)) {
      out.converged = true;
      break;
    }
  }
  out.estimate = ComplexSignal(x);
  return out;
}

}  // namespace phaseret
