#pragma once

#include "phaseret/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace phaseret {

enum class InitKind { spectral, random, given };

std::string_view to_string(InitKind kind);
InitKind init_kind_from_string(std::string_view name);

/// Leading eigenvector of sum_i y_i c_i c_i^H for the columns c_i of
/// `columns`, scaled so that ||z||^2 = mean(y) / mean(||c_i||^2 / n).
/// The largest-magnitude entry is made real-positive so the output is
/// deterministic. Throws std::invalid_argument when y is all zero.
CVector spectral_init(const CMatrix& columns, const RVector& y);

ComplexSignal spectral_init(const RetrievalInstance& instance);

/// n i.i.d. CN(0, 1) entries.
CVector random_init(Eigen::Index n, std::uint64_t seed);

struct WfSchedule {
  double mu_max = 0.2;
  double tau0 = 330.0;
};

struct BaselineConfig {
  int max_iter = 2500;
  double tol = 1e-7;  // relative cost improvement
  WfSchedule schedule;
  InitKind init = InitKind::spectral;
  std::optional<CVector> initial_point;
  std::uint64_t init_seed = 0;

  void validate() const;
};

struct BaselineResult {
  ComplexSignal estimate;
  std::vector<double> costs;  // one entry per iteration, starting at the initial point
  int iterations = 0;
  bool converged = false;
};

/// f(x) = sum_i (y_i - |a_i^H x|^2)^2.
double wf_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x);

/// df/d(conj x) = 2 sum_i (|a_i^H x|^2 - y_i) a_i (a_i^H x). The real
/// directional derivative along d is 2 Re{grad^H d}.
CVector wf_gradient(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x);

/// Gradient descent on f / (2M) with step mu_k / (nu^4 ||x_0||^2), where
/// mu_k = min(1 - e^{-k/tau0}, mu_max) and nu^2 = mean ||a_i||^2 / N.
/// Throws NumericalFailure when an iterate stops being finite.
BaselineResult wirtinger_flow(const RetrievalInstance& instance, const BaselineConfig& config);

/// ||sqrt(y+) o u - A^H x||^2 with u = phase(A^H x).
double gs_cost(const MeasurementEnsemble& ensemble, const RVector& y, const CVector& x);

/// Alternates u <- phase(A^H x) and x <- (A^H)^+ (sqrt(y+) o u).
/// Throws std::invalid_argument when A^H is rank deficient.
BaselineResult gerchberg_saxton(const RetrievalInstance& instance, const BaselineConfig& config);

}  // namespace phaseret
