#include "phaseret/conic.hpp"
#include "phaseret/cones.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <vector>

namespace phaseret::conic {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "numerical_failure";
}

namespace {

using cones::SocScaling;
using SpMat = Eigen::SparseMatrix<double>;  // column-major, lower triangle

// A stalled run still reports optimal when its best iterate is this close.
constexpr double kReducedAccuracyFactor = 100.0;

struct Cone {
  Eigen::Index offset;
  Eigen::Index dim;
  std::vector<int> scatter;  // positions of the lower triangle of the cone's W^2 block
};

// Scaling state for the whole cone product.
struct Scaling {
  RVector w;  // orthant part
  std::vector<SocScaling> soc;
};

// Factorizes the regularized quasi-definite system
//   [P + d I      G^T      ]
//   [G        -(W^2 + d I) ]
// and solves it with iterative refinement against the unregularized matrix.
class Workspace {
 public:
  explicit Workspace(const StandardForm& form) : form_(form) {
    n_ = form.n;
    m_ = form.rows();
    l_ = form.nonneg_dim;
    gt_ = form.g.transpose();
    build_structure();
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index nonneg() const { return l_; }
  const std::vector<Cone>& socs() const { return socs_; }
  Eigen::Index degree() const { return l_ + static_cast<Eigen::Index>(socs_.size()); }

  RVector g_times(const RVector& x) const { return form_.g * x; }
  RVector gt_times(const RVector& z) const { return gt_ * z; }

  // out = W^{power} v for power in {-2, -1, 1, 2}.
  void apply_w(const Scaling& sc, const RVector& v, RVector& out, int power) const {
    out.resize(m_);
    switch (power) {
      case 1: out.head(l_) = v.head(l_).cwiseProduct(sc.w); break;
      case -1: out.head(l_) = v.head(l_).cwiseQuotient(sc.w); break;
      case 2: out.head(l_) = v.head(l_).cwiseProduct(sc.w).cwiseProduct(sc.w); break;
      default: out.head(l_) = v.head(l_).cwiseQuotient(sc.w).cwiseQuotient(sc.w); break;
    }
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      const auto& cone = socs_[k];
      auto seg_in = v.segment(cone.offset, cone.dim);
      auto seg_out = out.segment(cone.offset, cone.dim);
      const bool inverse = power < 0;
      sc.soc[k].apply(seg_in, seg_out, inverse);
      if (std::abs(power) == 2) sc.soc[k].apply(seg_out, seg_out, inverse);
    }
  }

  bool factor(const Scaling& sc) {
    double* val = k_.valuePtr();
    double max_diag = form_.p_diag.size() > 0 ? form_.p_diag.maxCoeff() : 0.0;
    wsq_diag_.resize(m_);
    for (Eigen::Index r = 0; r < l_; ++r) wsq_diag_[r] = sc.w[r] * sc.w[r];
    RMatrix& block = block_buf_;
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      const auto& cone = socs_[k];
      block.setIdentity(cone.dim, cone.dim);
      for (Eigen::Index j = 0; j < cone.dim; ++j) {
        sc.soc[k].apply(block.col(j), block.col(j), false);
        sc.soc[k].apply(block.col(j), block.col(j), false);
      }
      for (Eigen::Index j = 0; j < cone.dim; ++j) wsq_diag_[cone.offset + j] = block(j, j);
    }
    const double reg_x = static_reg_x() * std::max(1.0, max_diag);
    const double rel_z = static_reg_z();
    for (Eigen::Index j = 0; j < n_; ++j) val[diag_[static_cast<std::size_t>(j)]] = form_.p_diag[j] + reg_x;
    for (Eigen::Index r = 0; r < l_; ++r) val[diag_[static_cast<std::size_t>(n_ + r)]] = -wsq_diag_[r] * (1.0 + rel_z);
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      const auto& cone = socs_[k];
      block.setIdentity(cone.dim, cone.dim);
      for (Eigen::Index j = 0; j < cone.dim; ++j) {
        sc.soc[k].apply(block.col(j), block.col(j), false);
        sc.soc[k].apply(block.col(j), block.col(j), false);
      }
      const double shift = rel_z * block.diagonal().maxCoeff();
      std::size_t p = 0;
      for (Eigen::Index b = 0; b < cone.dim; ++b)
        for (Eigen::Index a = b; a < cone.dim; ++a) val[cone.scatter[p++]] = -block(a, b) - (a == b ? shift : 0.0);
    }
    ldlt_.factorize(k_);
    return ldlt_.info() == Eigen::Success;
  }

  // Solves [P G^T; G -W^2] [dx; dz] = [r1; r2].
  void solve_kkt(const Scaling& sc, const RVector& r1, const RVector& r2, RVector& dx, RVector& dz) {
    rhs_.resize(n_ + m_);
    rhs_.head(n_) = r1;
    rhs_.tail(m_) = r2;
    sol_ = ldlt_.solve(rhs_);
    const double scale = 1e-13 * (1.0 + rhs_.lpNorm<Eigen::Infinity>());
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10; ++it) {
      const auto x = sol_.head(n_);
      const auto z = sol_.tail(m_);
      res_.resize(n_ + m_);
      res_.head(n_) = r1 - form_.p_diag.cwiseProduct(x) - gt_ * z;
      apply_w(sc, z, tmp_m_, 2);
      res_.tail(m_) = r2 - form_.g * x + tmp_m_;
      const double err = res_.lpNorm<Eigen::Infinity>();
      if (err <= scale || err >= 0.2 * prev) break;
      prev = err;
      sol_ += ldlt_.solve(res_);
    }
    dx = sol_.head(n_);
    dz = sol_.tail(m_);
  }

 private:
  void build_structure() {
    const Eigen::Index dim = n_ + m_;
    std::vector<Eigen::Triplet<double>> pattern;
    for (Eigen::Index j = 0; j < dim; ++j) pattern.emplace_back(static_cast<int>(j), static_cast<int>(j), 0.0);
    const auto& g = form_.g;
    for (Eigen::Index r = 0; r < m_; ++r)
      for (std::remove_cvref_t<decltype(g)>::InnerIterator it(g, r); it; ++it)
        pattern.emplace_back(static_cast<int>(n_ + r), static_cast<int>(it.col()), it.value());
    Eigen::Index offset = l_;
    for (Eigen::Index q : form_.soc_dims) {
      for (Eigen::Index b = 0; b < q; ++b)
        for (Eigen::Index a = b + 1; a < q; ++a)
          pattern.emplace_back(static_cast<int>(n_ + offset + a), static_cast<int>(n_ + offset + b), 0.0);
      socs_.push_back({offset, q, {}});
      offset += q;
    }
    k_.resize(dim, dim);
    k_.setFromTriplets(pattern.begin(), pattern.end());
    k_.makeCompressed();

    auto position = [&](Eigen::Index i, Eigen::Index j) {
      const int* inner = k_.innerIndexPtr();
      const int* begin = inner + k_.outerIndexPtr()[j];
      const int* end = inner + k_.outerIndexPtr()[j + 1];
      return static_cast<int>(std::lower_bound(begin, end, static_cast<int>(i)) - inner);
    };
    diag_.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) diag_[static_cast<std::size_t>(j)] = position(j, j);
    for (auto& cone : socs_) {
      for (Eigen::Index b = 0; b < cone.dim; ++b)
        for (Eigen::Index a = b; a < cone.dim; ++a) cone.scatter.push_back(position(n_ + cone.offset + a, n_ + cone.offset + b));
    }
    ldlt_.analyzePattern(k_);
  }

  const StandardForm& form_;
  Eigen::Index n_ = 0, m_ = 0, l_ = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> gt_;
  std::vector<Cone> socs_;
  SpMat k_;
  std::vector<int> diag_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  static constexpr double static_reg_x() { return 1e-10; }
  static constexpr double static_reg_z() { return 1e-14; }
  RMatrix block_buf_;
  RVector wsq_diag_, rhs_, sol_, res_, tmp_m_;
};

// Shifts v into the interior of the cone product when it is not already there.
void shift_interior(const Workspace& ws, RVector& v) {
  double min_eig = std::numeric_limits<double>::infinity();
  if (ws.nonneg() > 0) min_eig = v.head(ws.nonneg()).minCoeff();
  for (const auto& cone : ws.socs()) {
    const auto seg = v.segment(cone.offset, cone.dim);
    min_eig = std::min(min_eig, seg[0] - seg.tail(cone.dim - 1).norm());
  }
  if (min_eig > 0.0) return;
  const double shift = 1.0 - min_eig;
  v.head(ws.nonneg()).array() += shift;
  for (const auto& cone : ws.socs()) v[cone.offset] += shift;
}

Scaling compute_scaling(const Workspace& ws, const RVector& s, const RVector& z, RVector& lambda) {
  Scaling sc;
  const Eigen::Index l = ws.nonneg();
  sc.w = (s.head(l).array() / z.head(l).array()).sqrt();
  lambda.resize(s.size());
  lambda.head(l) = (s.head(l).array() * z.head(l).array()).sqrt();
  for (const auto& cone : ws.socs()) {
    sc.soc.push_back(SocScaling::compute(s.segment(cone.offset, cone.dim), z.segment(cone.offset, cone.dim)));
    sc.soc.back().apply(z.segment(cone.offset, cone.dim), lambda.segment(cone.offset, cone.dim), false);
  }
  return sc;
}

void cone_product(const Workspace& ws, const RVector& u, const RVector& v, RVector& out) {
  out.resize(u.size());
  const Eigen::Index l = ws.nonneg();
  out.head(l) = u.head(l).cwiseProduct(v.head(l));
  for (const auto& cone : ws.socs()) {
    cones::soc_product(u.segment(cone.offset, cone.dim), v.segment(cone.offset, cone.dim),
                       out.segment(cone.offset, cone.dim));
  }
}

void cone_division(const Workspace& ws, const RVector& lambda, const RVector& d, RVector& out) {
  out.resize(d.size());
  const Eigen::Index l = ws.nonneg();
  out.head(l) = d.head(l).cwiseQuotient(lambda.head(l));
  for (const auto& cone : ws.socs()) {
    cones::soc_division(lambda.segment(cone.offset, cone.dim), d.segment(cone.offset, cone.dim),
                        out.segment(cone.offset, cone.dim));
  }
}

void add_identity(const Workspace& ws, double value, RVector& v) {
  v.head(ws.nonneg()).array() += value;
  for (const auto& cone : ws.socs()) v[cone.offset] += value;
}

double max_step(const Workspace& ws, const RVector& v, const RVector& dv) {
  const Eigen::Index l = ws.nonneg();
  double alpha = cones::orthant_step(v.head(l), dv.head(l));
  for (const auto& cone : ws.socs()) {
    alpha = std::min(alpha, cones::soc_step(v.segment(cone.offset, cone.dim), dv.segment(cone.offset, cone.dim)));
  }
  return alpha;
}

struct Direction {
  RVector dx, dz, ds;
  double dtau = 0.0;
  double dkappa = 0.0;
};

}  // namespace

StandardSolution InteriorPointSolver::solve(const StandardForm& form) {
  Workspace ws(form);
  const Eigen::Index n = ws.n();
  const Eigen::Index m = ws.m();
  const RVector& p = form.p_diag;
  const RVector& c = form.c;
  const RVector& h = form.h;
  const double h_scale = std::max(1.0, h.norm());
  const double c_scale = std::max(1.0, c.norm());

  StandardSolution out;

  // Initial point from the two regularized least-squares problems with W = I.
  Scaling unit;
  unit.w = RVector::Ones(ws.nonneg());
  for (const auto& cone : ws.socs()) {
    SocScaling sc;
    sc.eta = 1.0;
    sc.w = RVector::Zero(cone.dim);
    sc.w[0] = 1.0;
    unit.soc.push_back(sc);
  }
  if (!ws.factor(unit)) {
    out.status = SolveStatus::numerical_failure;
    return out;
  }
  RVector x, z, s, tmp;
  ws.solve_kkt(unit, RVector::Zero(n), h, x, tmp);
  s = -tmp;
  RVector xd;
  ws.solve_kkt(unit, -c, RVector::Zero(m), xd, z);
  shift_interior(ws, s);
  shift_interior(ws, z);
  double tau = 1.0;
  double kappa = 1.0;

  RVector lambda, rx, rz, ds_rhs, ds_div, rhs2, wtmp, x1, z1, x2, z2;
  auto finish = [&](SolveStatus status, int iter) {
    out.u = x / tau;
    out.s = s / tau;
    out.z = z / tau;
    out.status = status;
    out.iterations = iter;
    return out;
  };

  // Best iterate so far, measured in multiples of the requested tolerances.
  StandardSolution best;
  double best_merit = std::numeric_limits<double>::infinity();
  auto fall_back = [&](SolveStatus status, int iter) {
    if (best_merit == std::numeric_limits<double>::infinity()) return finish(status, iter);
    const SolveStatus outcome = best_merit <= kReducedAccuracyFactor ? SolveStatus::optimal : status;
    out = best;
    out.status = outcome;
    out.reduced_accuracy = outcome == SolveStatus::optimal;
    out.iterations = iter;
    return out;
  };

  for (int iter = 0;; ++iter) {
    const RVector px = p.cwiseProduct(x);
    const double xpx = x.dot(px);
    rx = px + ws.gt_times(z) + c * tau;
    rz = ws.g_times(x) + s - h * tau;
    const double rtau = kappa + c.dot(x) + h.dot(z) + xpx / tau;

    out.primal_residual = rz.norm() / tau / h_scale;
    out.dual_residual = rx.norm() / tau / c_scale;
    out.primal_objective = 0.5 * xpx / (tau * tau) + c.dot(x) / tau + form.constant;
    out.dual_objective = -0.5 * xpx / (tau * tau) - h.dot(z) / tau + form.constant;
    out.gap = s.dot(z) / (tau * tau);
    const double scale = std::min(std::abs(out.primal_objective), std::abs(out.dual_objective));

    if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !std::isfinite(tau)) {
      return fall_back(SolveStatus::numerical_failure, iter);
    }
    const double merit = std::max({out.primal_residual / settings_.feastol, out.dual_residual / settings_.feastol,
                                   std::min(out.gap / settings_.abstol,
                                            scale > 0.0 ? out.gap / scale / settings_.reltol
                                                        : std::numeric_limits<double>::infinity())});
    if (merit < best_merit) {
      best_merit = merit;
      best = out;
      best.u = x / tau;
      best.s = s / tau;
      best.z = z / tau;
    }
    const bool feasible = out.primal_residual <= settings_.feastol && out.dual_residual <= settings_.feastol;
    if (feasible && (out.gap <= settings_.abstol || (scale > 0.0 && out.gap / scale <= settings_.reltol))) {
      return finish(SolveStatus::optimal, iter);
    }
    if (tau < kappa) {
      const double hz = h.dot(z);
      const double cx = c.dot(x);
      if (hz < 0.0 && ws.gt_times(z).norm() <= settings_.feastol * -hz) return finish(SolveStatus::infeasible, iter);
      if (cx < 0.0 && px.norm() <= settings_.feastol * -cx &&
          (ws.g_times(x) + s).norm() <= settings_.feastol * -cx) {
        return finish(SolveStatus::unbounded, iter);
      }
    }
    if (iter >= settings_.max_iter) return fall_back(SolveStatus::max_iter, iter);

    const Scaling sc = compute_scaling(ws, s, z, lambda);
    if (!sc.w.allFinite() || !lambda.allFinite() || !ws.factor(sc)) {
      return fall_back(SolveStatus::numerical_failure, iter);
    }
    ws.solve_kkt(sc, -c, h, x1, z1);
    const RVector xi = c + 2.0 * px / tau;
    const double denom = -kappa / tau + xi.dot(x1) + h.dot(z1) - xpx / (tau * tau);

    auto direction = [&](double frac, const RVector& ds_vec, double dkappa_rhs) {
      Direction d;
      cone_division(ws, lambda, ds_vec, ds_div);
      ws.apply_w(sc, ds_div, wtmp, 1);
      rhs2 = -frac * rz + wtmp;
      ws.solve_kkt(sc, -frac * rx, rhs2, x2, z2);
      d.dtau = (-frac * rtau + dkappa_rhs / tau - xi.dot(x2) - h.dot(z2)) / denom;
      d.dx = x2 + d.dtau * x1;
      d.dz = z2 + d.dtau * z1;
      ws.apply_w(sc, d.dz, wtmp, 1);
      RVector inner = ds_div + wtmp;
      ws.apply_w(sc, inner, d.ds, 1);
      d.ds = -d.ds;
      d.dkappa = -(dkappa_rhs + kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double alpha = std::min(max_step(ws, s, d.ds), max_step(ws, z, d.dz));
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    // Affine (predictor) direction.
    cone_product(ws, lambda, lambda, ds_rhs);
    const Direction aff = direction(1.0, ds_rhs, tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const double mu = (s.dot(z) + tau * kappa) / static_cast<double>(ws.degree() + 1);

    // Combined direction with Mehrotra correction.
    RVector ws_aff, wz_aff, corr;
    ws.apply_w(sc, aff.ds, ws_aff, -1);
    ws.apply_w(sc, aff.dz, wz_aff, 1);
    cone_product(ws, ws_aff, wz_aff, corr);
    ds_rhs += corr;
    add_identity(ws, -sigma * mu, ds_rhs);
    const Direction comb = direction(1.0 - sigma, ds_rhs, tau * kappa + aff.dtau * aff.dkappa - sigma * mu);
    const double alpha = std::min(1.0, settings_.step_fraction * step_length(comb));
    if (!(alpha > 1e-14)) return fall_back(SolveStatus::numerical_failure, iter);

    x += alpha * comb.dx;
    s += alpha * comb.ds;
    z += alpha * comb.dz;
    tau += alpha * comb.dtau;
    kappa += alpha * comb.dkappa;
  }
}

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings) {
  const StandardForm form = canonicalize(program);
  InteriorPointSolver solver(settings);
  const StandardSolution raw = solver.solve(form);
  ConicSolution out;
  out.status = raw.status;
  out.iterations = raw.iterations;
  out.gap = raw.gap;
  out.primal_residual = raw.primal_residual;
  out.dual_residual = raw.dual_residual;
  out.reduced_accuracy = raw.reduced_accuracy;
  if (raw.u.size() == form.n) {
    out.primal = form.back_map(raw.u);
    out.objective_value = program.objective(out.primal);
  }
  return out;
}

}  // namespace phaseret::conic
