#pragma once

#include "phaseret/baselines.hpp"
#include "phaseret/conic.hpp"
#include "phaseret/core.hpp"
#include "phaseret/measurements.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace phaseret {

/// Parameters shared by B-FPP, LS-FPP and their sparse variants.
///
/// Sparse B-FPP minimizes ||x||_1 + lambda1 sum s_i; sparse LS-FPP minimizes
/// ||w||^2 + lambda1 ||x||_1 + lambda2 sum s_i. The dense variants use lambda.
struct FppConfig {
  double lambda = 10.0;
  /// Half-width of the B-FPP interval; the noise standard deviation when unset.
  std::optional<double> epsilon;
  double lambda1 = 1.0;
  double lambda2 = 10.0;
  /// Stop once f_{k-1} - f_k <= outer_tol |f_{k-1}| + outer_abs_tol.
  double outer_tol = 1e-7;
  double outer_abs_tol = 1e-12;
  int max_outer = 100;
  InitKind init = InitKind::spectral;
  std::optional<CVector> initial_point;
  std::uint64_t init_seed = 0;
  /// Additional random starts; the run with the lowest final objective is kept.
  int restarts = 0;
  conic::SolverSettings inner = default_inner_settings();

  static conic::SolverSettings default_inner_settings();
  /// Throws std::invalid_argument.
  void validate() const;
  /// Slack of the monotonicity check: 10 * inner tolerance, relative above 1.
  double monotonicity_slack(double objective) const;
};

struct FppIteration {
  int index = 0;
  double objective = 0.0;
  double slack_sum = 0.0;
  double max_slack = 0.0;
  double estimate_norm = 0.0;
  /// Largest constraint violation of the previous iterate in this subproblem.
  double inheritance_residual = 0.0;
  conic::SolveStatus inner_status = conic::SolveStatus::optimal;
  int inner_iterations = 0;
  bool reduced_accuracy = false;
};

struct FppTrace {
  std::vector<FppIteration> records;
  bool converged = false;
  int iterations = 0;
  std::string init;
  double init_norm = 0.0;
  std::vector<std::string> warnings;

  /// One JSON object per outer iteration.
  void write_jsonl(std::ostream& os) const;
};

struct FppResult {
  ComplexSignal estimate;
  FppTrace trace;
};

struct SparseFppResult {
  CVector coefficients;  // x~, one entry per dictionary column
  FppTrace trace;
};

/// Handles of the blocks in an FPP subproblem. `w` is absent for B-FPP.
struct FppBlocks {
  conic::BlockId x;
  std::optional<conic::BlockId> w;
  conic::BlockId s;
};

struct FppSubproblem {
  conic::ConicProgram program;
  FppBlocks blocks;
  /// Constraints whose upper bound y_i + epsilon was negative and clipped to 0.
  int clipped = 0;
  /// For B-FPP with clipped bounds, |a_i^H x|^2 <= 0 is imposed exactly by
  /// writing x = basis * xi with the columns of `basis` spanning the null
  /// space of those a_i^H; the x block then holds xi.
  std::optional<CMatrix> basis;

  /// The signal encoded by the x block of `values`.
  CVector signal(const conic::BlockValues& values) const;
};

/// min ||x||^2 + lambda sum s_i
/// s.t. |a_i^H x|^2 <= y_i + eps,
///      2 Re{(a_i^H z)^* (a_i^H x)} + s_i >= |a_i^H z|^2 + y_i - eps, s >= 0.
FppSubproblem build_bfpp_subproblem(const RetrievalInstance& instance, const CVector& z, const FppConfig& config);

/// min ||w||^2 + lambda sum s_i
/// s.t. 2 Re{(a_i^H z)^* (a_i^H x)} + w_i + s_i >= y_i + |a_i^H z|^2,
///      |a_i^H x|^2 + w_i <= y_i, s >= 0.
FppSubproblem build_lsfpp_subproblem(const RetrievalInstance& instance, const CVector& z, const FppConfig& config);

/// B-FPP in dictionary coordinates: columns of `projected` are b_i = V^H a_i
/// and the objective is ||x~||_1 + lambda1 sum s_i.
FppSubproblem build_sparse_bfpp_subproblem(const CMatrix& projected, const RVector& y, const CVector& z,
                                           const FppConfig& config);

/// LS-FPP in dictionary coordinates with objective ||w||^2 + lambda1 ||x~||_1 + lambda2 sum s_i.
FppSubproblem build_sparse_lsfpp_subproblem(const CMatrix& projected, const RVector& y, const CVector& z,
                                            const FppConfig& config);

/// Throw NumericalFailure (with the outer iteration) when an inner solve fails.
FppResult run_bfpp(const RetrievalInstance& instance, const FppConfig& config);
FppResult run_lsfpp(const RetrievalInstance& instance, const FppConfig& config);

/// The spectral start is computed on the projected columns directly.
SparseFppResult run_sparse_bfpp(const CMatrix& projected, const RVector& y, const Dictionary& dict,
                                const FppConfig& config);
SparseFppResult run_sparse_lsfpp(const CMatrix& projected, const RVector& y, const Dictionary& dict,
                                 const FppConfig& config);

/// Grid frequencies of the `count` largest-magnitude coefficients, skipping
/// bins adjacent to an already chosen bin. Ties go to the lower frequency.
/// Returned in ascending order. Throws std::invalid_argument when fewer than
/// `count` nonzero bins remain.
RVector refine_frequencies(const CVector& coefficients, const Dictionary& dict, Eigen::Index count);

}  // namespace phaseret
