#pragma once

#include "phaseret/core.hpp"
#include "phaseret/measurements.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace phaseret {

enum class Parametrization { complex_reim, real, amp_phase, harmonic };

std::string_view to_string(Parametrization p);
Parametrization parametrization_from_string(std::string_view name);

/// Fisher information of y = |A^H x|^2 + n under one parametrization.
///
/// Parameter orderings: complex_reim is (Re x; Im x), amp_phase is (b; theta)
/// with x_i = b_i e^{j theta_i}, harmonic is (omega; Re gamma; Im gamma).
struct FimResult {
  Parametrization parametrization = Parametrization::complex_reim;
  RMatrix fim;
  int rank = 0;
  RMatrix null_basis;  // columns span the numerically dropped eigenspace
  RMatrix crb;         // pseudo-inverse of fim
  RVector eigenvalues;  // ascending
  double sigma_n = 0.0;

  /// amp_phase only: Schur-complement bounds on theta and b.
  std::optional<RMatrix> crb_theta;
  std::optional<RMatrix> crb_b;
  /// Set when F_bb was rank deficient and its inverse was replaced by a pseudo-inverse.
  bool schur_used_pinv = false;

  double trace() const { return crb.trace(); }
};

struct PseudoInverse {
  RMatrix inverse;
  int rank = 0;
  RMatrix null_basis;
  RVector eigenvalues;  // ascending
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Eigendecomposition pseudo-inverse of a symmetric matrix. Eigenvalues with
/// |lambda| <= rank_tol * max|lambda| are dropped. Throws std::invalid_argument
/// when the input is not symmetric to 1e-12 relative.
PseudoInverse pseudo_inverse_psd(const RMatrix& fim, double rank_tol = kDefaultRankTol);

/// Columns g_i = [Re(a_i a_i^H x); Im(a_i a_i^H x)], so F_c = (4 / sigma^2) G G^T.
RMatrix complex_jacobian(const MeasurementEnsemble& ensemble, const CVector& x);

/// Throws std::invalid_argument when x is zero or sigma_n is not positive.
FimResult fim_complex(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n,
                      double rank_tol = kDefaultRankTol);

/// N x N information for real x. Throws std::invalid_argument when x has a
/// nonzero imaginary part and NumericalFailure when F_r is singular.
FimResult fim_real(const MeasurementEnsemble& ensemble, const RVector& x, double sigma_n,
                   double rank_tol = kDefaultRankTol);

/// Columns are the stacked gradients [d/db; d/dtheta] of |a_i^H x|^2 (up to a factor 2).
RMatrix amp_phase_jacobian(const MeasurementEnsemble& ensemble, const CVector& x);

/// Information accumulated block by block from per-measurement derivative
/// products; equals (4 / sigma^2) G G^T with G = amp_phase_jacobian.
RMatrix amp_phase_fim_blocks(const MeasurementEnsemble& ensemble, const CVector& x, double sigma_n);

/// Throws std::invalid_argument when some |x_i| = 0.
FimResult fim_amp_phase(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n,
                        double rank_tol = kDefaultRankTol);

RMatrix harmonic_jacobian(const MeasurementEnsemble& ensemble, const HarmonicModel& model);

/// Element-by-element sums over measurements, independent of harmonic_jacobian.
RMatrix harmonic_fim_elements(const MeasurementEnsemble& ensemble, const HarmonicModel& model, double sigma_n);

FimResult fim_harmonic(const MeasurementEnsemble& ensemble, const HarmonicModel& model, double sigma_n,
                       double rank_tol = kDefaultRankTol);

struct MonotonicityStep {
  Eigen::Index m_from = 0;
  Eigen::Index m_to = 0;
  double min_eigenvalue = 0.0;  // of CRB(m_from) - CRB(m_to)
  double trace_from = 0.0;
  double trace_to = 0.0;
};

struct MonotonicityReport {
  std::vector<MonotonicityStep> steps;
  /// max over appended columns of ||F(M+1) - F(M) - (4/sigma^2) g g^T||_max / ||F(M+1)||_max.
  double max_update_residual = 0.0;
  bool monotone = true;
};

/// Compares amp_phase CRBs on the leading m columns for consecutive m in
/// `m_values` (increasing, each >= N).
MonotonicityReport crb_monotonicity_check(const MeasurementEnsemble& ensemble, const ComplexSignal& x,
                                          double sigma_n, const std::vector<Eigen::Index>& m_values,
                                          double tolerance = 1e-9);

}  // namespace phaseret
