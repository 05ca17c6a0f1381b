#include "phaseret/fpp.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include "json.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace phaseret {

using conic::AffineExpr;
using conic::BlockId;
using conic::LinearIneq;
using conic::Rank1Soc;

conic::SolverSettings FppConfig::default_inner_settings() { return conic::SolverSettings{}; }

void FppConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::invalid_argument("lambda1 and lambda2 must be positive");
  if (epsilon && !(*epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (!(outer_tol > 0.0)) throw std::invalid_argument("outer_tol must be positive");
  if (!(outer_abs_tol >= 0.0)) throw std::invalid_argument("outer_abs_tol must be nonnegative");
  if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  if (restarts < 0) throw std::invalid_argument("restarts must be nonnegative");
  if (init == InitKind::given && !initial_point) throw std::invalid_argument("init=given needs an initial point");
}

double FppConfig::monotonicity_slack(double objective) const {
  const double tol = std::max({inner.feastol, inner.abstol, inner.reltol});
  return 10.0 * tol * std::max(1.0, std::abs(objective));
}

CVector FppSubproblem::signal(const conic::BlockValues& values) const {
  const CVector& x = values.complex_block(blocks.x);
  return basis ? CVector(*basis * x) : x;
}

void FppTrace::write_jsonl(std::ostream& os) const {
  for (const auto& r : records) {
    nlohmann::json j = {
        {"iteration", r.index},
        {"objective", r.objective},
        {"slack_sum", r.slack_sum},
        {"max_slack", r.max_slack},
        {"estimate_norm", r.estimate_norm},
        {"inheritance_residual", r.inheritance_residual},
        {"inner_status", conic::to_string(r.inner_status)},
        {"inner_iterations", r.inner_iterations},
        {"reduced_accuracy", r.reduced_accuracy},
    };
    os << j.dump() << '\n';
  }
}

namespace {

enum class Variant { bfpp, lsfpp, sparse_bfpp, sparse_lsfpp };

bool has_w(Variant v) { return v == Variant::lsfpp || v == Variant::sparse_lsfpp; }
bool is_bounded(Variant v) { return v == Variant::bfpp || v == Variant::sparse_bfpp; }

const char* name(Variant v) {
  switch (v) {
    case Variant::bfpp: return "bfpp";
    case Variant::lsfpp: return "lsfpp";
    case Variant::sparse_bfpp: return "sparse_bfpp";
    case Variant::sparse_lsfpp: return "sparse_lsfpp";
  }
  return "";
}

// Data of one linearization shared by the builder and the feasibility repair.
struct Linearization {
  CMatrix cols;      // a_i, or B^H a_i when a null-space basis B is in use
  CVector az;        // a_i^H z
  RVector cap;       // y_i + eps for the interval form, y_i otherwise
  std::vector<bool> pinned;  // a_i^H x = 0 imposed through the basis
  std::optional<CMatrix> basis;
  int clipped = 0;
};

Linearization linearize(Variant variant, const CMatrix& cols, const RVector& y, const CVector& z, double eps) {
  if (y.size() != cols.cols()) throw DimensionMismatch("measurement vector length does not match column count");
  if (z.size() != cols.rows()) throw DimensionMismatch("linearization point length does not match signal length");
  const Eigen::Index m = cols.cols();
  Linearization lin;
  lin.az = cols.adjoint() * z;
  lin.cap = is_bounded(variant) ? (y.array() + eps).matrix() : y;
  lin.pinned.assign(static_cast<std::size_t>(m), false);
  std::vector<Eigen::Index> zero_cap;
  if (is_bounded(variant)) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (lin.cap[i] < 0.0) {
        lin.cap[i] = 0.0;
        ++lin.clipped;
      }
      if (lin.cap[i] == 0.0) zero_cap.push_back(i);
    }
  }
  // A zero cap leaves the cone constraint without interior; for the dense
  // form it is eliminated instead.
  const auto pins = static_cast<Eigen::Index>(zero_cap.size());
  if (variant == Variant::bfpp && pins > 0 && pins < cols.rows()) {
    CMatrix c(cols.rows(), pins);
    for (Eigen::Index k = 0; k < pins; ++k) c.col(k) = cols.col(zero_cap[static_cast<std::size_t>(k)]);
    Eigen::HouseholderQR<CMatrix> qr(c);
    const CMatrix q = qr.householderQ();
    lin.basis = q.rightCols(cols.rows() - pins);
    lin.cols = lin.basis->adjoint() * cols;
    for (Eigen::Index i : zero_cap) lin.pinned[static_cast<std::size_t>(i)] = true;
  } else {
    lin.cols = cols;
  }
  return lin;
}

FppSubproblem build(Variant variant, const Linearization& lin, const RVector& y, double eps, const FppConfig& config) {
  const Eigen::Index m = lin.cols.cols();
  FppSubproblem out;
  out.clipped = lin.clipped;
  out.basis = lin.basis;
  auto& prog = out.program;
  auto& blocks = out.blocks;
  blocks.x = prog.add_complex_block("x", lin.cols.rows());
  if (has_w(variant)) blocks.w = prog.add_real_block("w", m);
  blocks.s = prog.add_real_block("s", m, true);

  switch (variant) {
    case Variant::bfpp:
      prog.add_squared_norm(blocks.x);
      prog.add_linear(blocks.s, RVector::Constant(m, config.lambda));
      break;
    case Variant::lsfpp:
      prog.add_squared_norm(*blocks.w);
      prog.add_linear(blocks.s, RVector::Constant(m, config.lambda));
      break;
    case Variant::sparse_bfpp:
      prog.add_l1_norm(blocks.x);
      prog.add_linear(blocks.s, RVector::Constant(m, config.lambda1));
      break;
    case Variant::sparse_lsfpp:
      prog.add_squared_norm(*blocks.w);
      prog.add_l1_norm(blocks.x, config.lambda1);
      prog.add_linear(blocks.s, RVector::Constant(m, config.lambda2));
      break;
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const CVector a = lin.cols.col(i);
    const double az2 = std::norm(lin.az[i]);
    if (!lin.pinned[static_cast<std::size_t>(i)]) {
      AffineExpr rhs{lin.cap[i], {}, {}};
      if (has_w(variant)) rhs.add(*blocks.w, i, -1.0);
      prog.add_constraint(Rank1Soc{blocks.x, a, std::move(rhs)});
    }
    AffineExpr expr;
    expr.add(blocks.x, (2.0 * lin.az[i]) * a).add(blocks.s, i, 1.0);
    if (is_bounded(variant)) {
      expr.constant = -(az2 + y[i] - eps);
    } else {
      expr.constant = -(y[i] + az2);
      expr.add(*blocks.w, i, 1.0);
    }
    prog.add_constraint(LinearIneq{std::move(expr)});
  }
  return out;
}

FppSubproblem build(Variant variant, const CMatrix& cols, const RVector& y, const CVector& z, const FppConfig& config,
                    double eps) {
  return build(variant, linearize(variant, cols, y, z, eps), y, eps, config);
}

// Moves a slightly infeasible interior-point answer onto the feasible set:
// the rank-one constraints are enforced first (through w, or by shrinking x
// for the interval form), then the slacks absorb the linearized constraints.
void repair(Variant variant, const Linearization& lin, const RVector& y, double eps, const FppBlocks& blocks,
            conic::BlockValues& values) {
  CVector& x = values.complex_block(blocks.x);
  RVector& s = values.real_block(blocks.s);
  if (is_bounded(variant)) {
    const RVector q = (lin.cols.adjoint() * x).cwiseAbs2();
    double shrink = 1.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      if (lin.cap[i] > 0.0 && q[i] > lin.cap[i]) shrink = std::min(shrink, std::sqrt(lin.cap[i] / q[i]));
    }
    x *= shrink;
  }
  const CVector ax = lin.cols.adjoint() * x;
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    double expr = 2.0 * (std::conj(lin.az[i]) * ax[i]).real();
    if (is_bounded(variant)) {
      expr -= std::norm(lin.az[i]) + y[i] - eps;
    } else {
      double& w = values.real_block(*blocks.w)[i];
      w = std::min(w, y[i] - std::norm(ax[i]));
      expr += w - y[i] - std::norm(lin.az[i]);
    }
    s[i] = std::max({s[i], 0.0, -expr});
  }
}

struct Start {
  CVector z;
  std::string label;
};

Start starting_point(const CMatrix& cols, const RVector& y, const FppConfig& config) {
  switch (config.init) {
    case InitKind::spectral: return {spectral_init(cols, y), "spectral"};
    case InitKind::random: return {random_init(cols.rows(), config.init_seed), "random"};
    case InitKind::given:
      if (config.initial_point->size() != cols.rows()) {
        throw DimensionMismatch("initial point length does not match signal length");
      }
      return {*config.initial_point, "given"};
  }
  return {};
}

struct Outcome {
  CVector estimate;
  FppTrace trace;
};

Outcome run_from(Variant variant, const CMatrix& cols, const RVector& y, double eps, const FppConfig& config,
                 Start start) {
  Outcome out;
  out.trace.init = start.label;
  out.trace.init_norm = start.z.norm();

  CVector z = std::move(start.z);
  std::optional<conic::BlockValues> previous;
  double f_prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.max_outer; ++k) {
    const Linearization lin = linearize(variant, cols, y, z, eps);
    FppSubproblem sub = build(variant, lin, y, eps, config);
    if (k == 0 && sub.clipped > 0) {
      out.trace.warnings.push_back(std::to_string(sub.clipped) +
                                   " interval constraints had y_i + epsilon < 0 and were clipped to 0");
    }
    FppIteration rec;
    rec.index = k;
    if (previous) rec.inheritance_residual = sub.program.residuals(*previous).max_violation();

    conic::ConicSolution sol = conic::solve(sub.program, config.inner);
    if (sol.status != conic::SolveStatus::optimal) {
      throw NumericalFailure(std::string(name(variant)) + ": inner solve ended with status " +
                                 conic::to_string(sol.status),
                             k);
    }
    if (!sol.primal.complex_block(sub.blocks.x).allFinite()) {
      throw NumericalFailure(std::string(name(variant)) + ": estimate is not finite", k);
    }
    repair(variant, lin, y, eps, sub.blocks, sol.primal);
    const CVector x = sub.signal(sol.primal);
    const RVector& s = sol.primal.real_block(sub.blocks.s);
    rec.objective = sub.program.objective(sol.primal);
    rec.slack_sum = s.sum();
    rec.max_slack = s.maxCoeff();
    rec.estimate_norm = x.norm();
    rec.inner_status = sol.status;
    rec.inner_iterations = sol.iterations;
    rec.reduced_accuracy = sol.reduced_accuracy;
    if (previous && rec.objective > f_prev + config.monotonicity_slack(f_prev)) {
      out.trace.warnings.push_back("objective increased at iteration " + std::to_string(k));
    }
    out.trace.records.push_back(rec);
    out.trace.iterations = k + 1;
    z = x;
    previous = std::move(sol.primal);
    if (k > 0 && f_prev - rec.objective <= config.outer_tol * std::abs(f_prev) + config.outer_abs_tol) {
      out.trace.converged = true;
      break;
    }
    f_prev = rec.objective;
  }
  out.estimate = std::move(z);
  return out;
}

double final_objective(const Outcome& o) {
  return o.trace.records.empty() ? std::numeric_limits<double>::infinity() : o.trace.records.back().objective;
}

// Extra starts are random directions scaled to the norm of the primary start.
// A failed start is skipped as long as another one succeeds.
Outcome run(Variant variant, const CMatrix& cols, const RVector& y, double eps, const FppConfig& config) {
  config.validate();
  Start primary = starting_point(cols, y, config);
  const double norm = primary.z.norm();
  std::optional<Outcome> best;
  std::optional<NumericalFailure> first_failure;
  std::vector<std::string> failures;
  for (int r = 0; r <= config.restarts; ++r) {
    Start start = std::move(primary);
    if (r > 0) {
      start.z = random_init(cols.rows(), derive_seed(config.init_seed, "fpp-restart", static_cast<std::uint64_t>(r)));
      if (norm > 0.0) start.z *= norm / start.z.norm();
      start.label = "restart " + std::to_string(r);
    }
    const std::string label = start.label;
    try {
      Outcome o = run_from(variant, cols, y, eps, config, std::move(start));
      if (!best || final_objective(o) < final_objective(*best)) best = std::move(o);
    } catch (const NumericalFailure& e) {
      if (config.restarts == 0) throw;
      if (!first_failure) first_failure = e;
      failures.push_back("start '" + label + "' failed: " + e.what());
    }
  }
  if (!best) throw *first_failure;
  best->trace.warnings.insert(best->trace.warnings.end(), failures.begin(), failures.end());
  return std::move(*best);
}

double default_epsilon(const RetrievalInstance& instance, const FppConfig& config) {
  return config.epsilon.value_or(instance.sigma_n);
}

void check_dictionary(const CMatrix& projected, const Dictionary& dict) {
  if (projected.rows() != dict.size()) {
    throw DimensionMismatch("projected matrix has " + std::to_string(projected.rows()) + " rows, dictionary has " +
                            std::to_string(dict.size()) + " columns");
  }
}

}  // namespace

FppSubproblem build_bfpp_subproblem(const RetrievalInstance& instance, const CVector& z, const FppConfig& config) {
  instance.validate();
  return build(Variant::bfpp, instance.ensemble.columns(), instance.y, z, config, default_epsilon(instance, config));
}

FppSubproblem build_lsfpp_subproblem(const RetrievalInstance& instance, const CVector& z, const FppConfig& config) {
  instance.validate();
  return build(Variant::lsfpp, instance.ensemble.columns(), instance.y, z, config, 0.0);
}

FppSubproblem build_sparse_bfpp_subproblem(const CMatrix& projected, const RVector& y, const CVector& z,
                                           const FppConfig& config) {
  return build(Variant::sparse_bfpp, projected, y, z, config, config.epsilon.value_or(0.0));
}

FppSubproblem build_sparse_lsfpp_subproblem(const CMatrix& projected, const RVector& y, const CVector& z,
                                            const FppConfig& config) {
  return build(Variant::sparse_lsfpp, projected, y, z, config, 0.0);
}

FppResult run_bfpp(const RetrievalInstance& instance, const FppConfig& config) {
  instance.validate();
  Outcome o = run(Variant::bfpp, instance.ensemble.columns(), instance.y, default_epsilon(instance, config), config);
  return {ComplexSignal(std::move(o.estimate)), std::move(o.trace)};
}

FppResult run_lsfpp(const RetrievalInstance& instance, const FppConfig& config) {
  instance.validate();
  Outcome o = run(Variant::lsfpp, instance.ensemble.columns(), instance.y, 0.0, config);
  return {ComplexSignal(std::move(o.estimate)), std::move(o.trace)};
}

SparseFppResult run_sparse_bfpp(const CMatrix& projected, const RVector& y, const Dictionary& dict,
                                const FppConfig& config) {
  check_dictionary(projected, dict);
  Outcome o = run(Variant::sparse_bfpp, projected, y, config.epsilon.value_or(0.0), config);
  return {std::move(o.estimate), std::move(o.trace)};
}

SparseFppResult run_sparse_lsfpp(const CMatrix& projected, const RVector& y, const Dictionary& dict,
                                 const FppConfig& config) {
  check_dictionary(projected, dict);
  Outcome o = run(Variant::sparse_lsfpp, projected, y, 0.0, config);
  return {std::move(o.estimate), std::move(o.trace)};
}

RVector refine_frequencies(const CVector& coefficients, const Dictionary& dict, Eigen::Index count) {
  if (count < 1) throw std::invalid_argument("refine_frequencies: count must be at least 1");
  if (coefficients.size() != dict.size()) throw DimensionMismatch("coefficient vector does not match dictionary");
  const Eigen::Index p = coefficients.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  const RVector mag = coefficients.cwiseAbs();
  const RVector& grid = dict.grid();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (mag[a] != mag[b]) return mag[a] > mag[b];
    return grid[a] < grid[b];
  });

  std::vector<Eigen::Index> chosen;
  std::vector<bool> blocked(static_cast<std::size_t>(p), false);
  for (Eigen::Index idx : order) {
    if (static_cast<Eigen::Index>(chosen.size()) == count) break;
    if (mag[idx] == 0.0) break;
    if (blocked[static_cast<std::size_t>(idx)]) continue;
    chosen.push_back(idx);
    for (Eigen::Index d = -1; d <= 1; ++d) {
      const Eigen::Index j = idx + d;
      if (j >= 0 && j < p) blocked[static_cast<std::size_t>(j)] = true;
    }
  }
  if (static_cast<Eigen::Index>(chosen.size()) < count) {
    throw std::invalid_argument("refine_frequencies: only " + std::to_string(chosen.size()) +
                                " separated nonzero bins, asked for " + std::to_string(count));
  }
  RVector out(count);
  for (Eigen::Index i = 0; i < count; ++i) out[i] = grid[chosen[static_cast<std::size_t>(i)]];
  std::sort(out.data(), out.data() + out.size());
  return out;
}

}  // namespace phaseret
