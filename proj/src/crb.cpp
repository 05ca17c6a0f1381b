#include "phaseret/crb.hpp"

#include "phaseret/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace phaseret {

std::string_view to_string(Parametrization p) {
  switch (p) {
    case Parametrization::complex_reim: return "complex";
    case Parametrization::real: return "real";
    case Parametrization::amp_phase: return "amp-phase";
    case Parametrization::harmonic: return "harmonic";
  }
  return "complex";
}

Parametrization parametrization_from_string(std::string_view name) {
  if (name == "complex") return Parametrization::complex_reim;
  if (name == "real") return Parametrization::real;
  if (name == "amp-phase" || name == "amp_phase") return Parametrization::amp_phase;
  if (name == "harmonic") return Parametrization::harmonic;
  throw std::invalid_argument("unknown parametrization '" + std::string(name) + "'");
}

PseudoInverse pseudo_inverse_psd(const RMatrix& fim, double rank_tol) {
  if (fim.rows() != fim.cols()) throw DimensionMismatch("pseudo_inverse_psd: matrix is not square");
  const double scale = fim.cwiseAbs().maxCoeff();
  if ((fim - fim.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("pseudo_inverse_psd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(fim);
  if (eig.info() != Eigen::Success) throw NumericalFailure("pseudo_inverse_psd: eigensolver failed", 0);
  const RVector& lambda = eig.eigenvalues();
  const RMatrix& u = eig.eigenvectors();
  const Eigen::Index n = fim.rows();
  const double cutoff = rank_tol * (n > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0);

  PseudoInverse out;
  out.eigenvalues = lambda;
  out.inverse = RMatrix::Zero(n, n);
  std::vector<Eigen::Index> dropped;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(lambda[k]) <= cutoff || lambda[k] == 0.0) {
      dropped.push_back(k);
      continue;
    }
    out.inverse.noalias() += (1.0 / lambda[k]) * u.col(k) * u.col(k).transpose();
    ++out.rank;
  }
  out.inverse = (0.5 * (out.inverse + out.inverse.transpose())).eval();
  out.null_basis.resize(n, static_cast<Eigen::Index>(dropped.size()));
  for (std::size_t j = 0; j < dropped.size(); ++j) out.null_basis.col(static_cast<Eigen::Index>(j)) = u.col(dropped[j]);
  return out;
}

namespace {

void check_sigma(double sigma_n) {
  if (!(sigma_n > 0.0) || !std::isfinite(sigma_n)) throw std::invalid_argument("sigma_n must be positive");
}

void check_length(const MeasurementEnsemble& ensemble, Eigen::Index n) {
  if (n != ensemble.n()) throw DimensionMismatch("signal length does not match ensemble N");
}

RMatrix gram(const RMatrix& g, double sigma_n) {
  RMatrix f = (4.0 / (sigma_n * sigma_n)) * g * g.transpose();
  return 0.5 * (f + f.transpose());
}

FimResult finish(Parametrization p, RMatrix fim, double sigma_n, double rank_tol) {
  FimResult out;
  out.parametrization = p;
  out.sigma_n = sigma_n;
  PseudoInverse pinv = pseudo_inverse_psd(fim, rank_tol);
  out.fim = std::move(fim);
  out.crb = std::move(pinv.inverse);
  out.rank = pinv.rank;
  out.null_basis = std::move(pinv.null_basis);
  out.eigenvalues = std::move(pinv.eigenvalues);
  return out;
}

// a_i (a_i^H x) for every i, as the columns of an N x M matrix.
CMatrix weighted_columns(const MeasurementEnsemble& ensemble, const CVector& x) {
  return ensemble.columns() * ensemble.project(x).asDiagonal();
}

}  // namespace

RMatrix complex_jacobian(const MeasurementEnsemble& ensemble, const CVector& x) {
  check_length(ensemble, x.size());
  const CMatrix w = weighted_columns(ensemble, x);
  RMatrix g(2 * x.size(), ensemble.m());
  g.topRows(x.size()) = w.real();
  g.bottomRows(x.size()) = w.imag();
  return g;
}

FimResult fim_complex(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n,
                      double rank_tol) {
  check_sigma(sigma_n);
  if (x.norm() == 0.0) throw std::invalid_argument("fim_complex: x is zero");
  return finish(Parametrization::complex_reim, gram(complex_jacobian(ensemble, x.values()), sigma_n), sigma_n,
                rank_tol);
}

FimResult fim_real(const MeasurementEnsemble& ensemble, const RVector& x, double sigma_n, double rank_tol) {
  check_sigma(sigma_n);
  check_length(ensemble, x.size());
  if (x.norm() == 0.0) throw std::invalid_argument("fim_real: x is zero");
  const RMatrix g = weighted_columns(ensemble, x.cast<Complex>()).real();
  FimResult out = finish(Parametrization::real, gram(g, sigma_n), sigma_n, rank_tol);
  if (out.rank < x.size()) throw NumericalFailure("fim_real: F_r is singular", 0);
  return out;
}

RMatrix amp_phase_jacobian(const MeasurementEnsemble& ensemble, const CVector& x) {
  check_length(ensemble, x.size());
  const Eigen::Index n = x.size();
  const CMatrix w = weighted_columns(ensemble, x);
  CVector unit(n);
  for (Eigen::Index k = 0; k < n; ++k) unit[k] = std::conj(x[k]) / std::abs(x[k]);
  RMatrix g(2 * n, ensemble.m());
  g.topRows(n) = (unit.asDiagonal() * w).real();
  g.bottomRows(n) = (x.conjugate().asDiagonal() * w).imag();
  return g;
}

RMatrix amp_phase_fim_blocks(const MeasurementEnsemble& ensemble, const CVector& x, double sigma_n) {
  check_sigma(sigma_n);
  check_length(ensemble, x.size());
  const Eigen::Index n = x.size();
  RMatrix f_bb = RMatrix::Zero(n, n);
  RMatrix f_tt = RMatrix::Zero(n, n);
  RMatrix f_tb = RMatrix::Zero(n, n);
  RVector d_b(n), d_t(n);
  for (Eigen::Index i = 0; i < ensemble.m(); ++i) {
    const auto a = ensemble.column(i);
    const Complex s = a.dot(x);  // a_i^H x
    for (Eigen::Index k = 0; k < n; ++k) {
      const double theta = std::arg(x[k]);
      const Complex as = a[k] * s;
      // Derivatives of |a_i^H x|^2 with respect to b_k and theta_k.
      d_b[k] = 2.0 * (std::polar(1.0, -theta) * as).real();
      d_t[k] = 2.0 * (Complex(0.0, -1.0) * std::conj(x[k]) * as).real();
    }
    f_bb.noalias() += d_b * d_b.transpose();
    f_tt.noalias() += d_t * d_t.transpose();
    f_tb.noalias() += d_t * d_b.transpose();
  }
  const double inv = 1.0 / (sigma_n * sigma_n);
  RMatrix f(2 * n, 2 * n);
  f.topLeftCorner(n, n) = inv * f_bb;
  f.bottomRightCorner(n, n) = inv * f_tt;
  f.bottomLeftCorner(n, n) = inv * f_tb;
  f.topRightCorner(n, n) = inv * f_tb.transpose();
  return 0.5 * (f + f.transpose());
}

FimResult fim_amp_phase(const MeasurementEnsemble& ensemble, const ComplexSignal& x, double sigma_n,
                        double rank_tol) {
  check_sigma(sigma_n);
  check_length(ensemble, x.size());
  if ((x.amplitudes().array() == 0.0).any()) {
    throw std::invalid_argument("fim_amp_phase: phase is undefined where |x_i| = 0");
  }
  const Eigen::Index n = x.size();
  FimResult out =
      finish(Parametrization::amp_phase, gram(amp_phase_jacobian(ensemble, x.values()), sigma_n), sigma_n, rank_tol);

  const RMatrix f_bb = out.fim.topLeftCorner(n, n);
  const RMatrix f_tt = out.fim.bottomRightCorner(n, n);
  const RMatrix f_tb = out.fim.bottomLeftCorner(n, n);
  const PseudoInverse bb = pseudo_inverse_psd(f_bb, rank_tol);
  const PseudoInverse tt = pseudo_inverse_psd(f_tt, rank_tol);
  out.schur_used_pinv = bb.rank < n;
  RMatrix schur_t = f_tt - f_tb * bb.inverse * f_tb.transpose();
  RMatrix schur_b = f_bb - f_tb.transpose() * tt.inverse * f_tb;
  schur_t = (0.5 * (schur_t + schur_t.transpose())).eval();
  schur_b = (0.5 * (schur_b + schur_b.transpose())).eval();
  out.crb_theta = pseudo_inverse_psd(schur_t, rank_tol).inverse;
  out.crb_b = pseudo_inverse_psd(schur_b, rank_tol).inverse;
  return out;
}

namespace {

void check_model(const MeasurementEnsemble& ensemble, const HarmonicModel& model) {
  model.validate();
  check_length(ensemble, model.n);
}

// d v(omega) / d omega, entries j t e^{j t omega} for t = 1..n.
CVector vandermonde_derivative(double omega, Eigen::Index n) {
  CVector d = vandermonde(omega, n);
  for (Eigen::Index t = 0; t < n; ++t) d[t] *= Complex(0.0, static_cast<double>(t + 1));
  return d;
}

}  // namespace

RMatrix harmonic_jacobian(const MeasurementEnsemble& ensemble, const HarmonicModel& model) {
  check_model(ensemble, model);
  const Eigen::Index l = model.order();
  const Eigen::Index n = model.n;
  CMatrix xd(n, l), v(n, l);
  for (Eigen::Index k = 0; k < l; ++k) {
    v.col(k) = vandermonde(model.frequencies[k], n);
    xd.col(k) = model.amplitudes[k] * vandermonde_derivative(model.frequencies[k], n);
  }
  const CMatrix w = weighted_columns(ensemble, harmonic_signal(model).values());
  const CMatrix gx = xd.adjoint() * w;
  const CMatrix gv = v.adjoint() * w;
  RMatrix g(3 * l, ensemble.m());
  g.topRows(l) = gx.real();
  g.middleRows(l, l) = gv.real();
  g.bottomRows(l) = gv.imag();
  return g;
}

RMatrix harmonic_fim_elements(const MeasurementEnsemble& ensemble, const HarmonicModel& model, double sigma_n) {
  check_sigma(sigma_n);
  check_model(ensemble, model);
  const Eigen::Index l = model.order();
  const Eigen::Index n = model.n;
  const CVector x = harmonic_signal(model).values();
  std::vector<CVector> v, dv;
  for (Eigen::Index k = 0; k < l; ++k) {
    v.push_back(vandermonde(model.frequencies[k], n));
    dv.push_back(vandermonde_derivative(model.frequencies[k], n));
  }
  RMatrix f = RMatrix::Zero(3 * l, 3 * l);
  for (Eigen::Index i = 0; i < ensemble.m(); ++i) {
    const auto a = ensemble.column(i);
    const Complex s = a.dot(x);
    RVector w_om(l), re(l), im(l);
    for (Eigen::Index k = 0; k < l; ++k) {
      // v^H A_i x = (v^H a_i)(a_i^H x)
      const Complex vax = v[k].dot(a) * s;
      w_om[k] = (std::conj(model.amplitudes[k]) * dv[k].dot(a) * s).real();
      re[k] = vax.real();
      im[k] = vax.imag();
    }
    for (Eigen::Index p = 0; p < l; ++p) {
      for (Eigen::Index q = 0; q < l; ++q) {
        f(p, q) += w_om[p] * w_om[q];
        f(p, l + q) += w_om[p] * re[q];
        f(p, 2 * l + q) += w_om[p] * im[q];
        f(l + p, l + q) += re[p] * re[q];
        f(l + p, 2 * l + q) += re[p] * im[q];
        f(2 * l + p, 2 * l + q) += im[p] * im[q];
      }
    }
  }
  f *= 4.0 / (sigma_n * sigma_n);
  return RMatrix(f.selfadjointView<Eigen::Upper>());
}

FimResult fim_harmonic(const MeasurementEnsemble& ensemble, const HarmonicModel& model, double sigma_n,
                       double rank_tol) {
  check_sigma(sigma_n);
  return finish(Parametrization::harmonic, gram(harmonic_jacobian(ensemble, model), sigma_n), sigma_n, rank_tol);
}

MonotonicityReport crb_monotonicity_check(const MeasurementEnsemble& ensemble, const ComplexSignal& x,
                                          double sigma_n, const std::vector<Eigen::Index>& m_values,
                                          double tolerance) {
  check_sigma(sigma_n);
  for (std::size_t k = 0; k < m_values.size(); ++k) {
    if (m_values[k] < ensemble.n() || m_values[k] > ensemble.m()) {
      throw std::invalid_argument("crb_monotonicity_check: M values must lie in [N, total M]");
    }
    if (k > 0 && m_values[k] <= m_values[k - 1]) {
      throw std::invalid_argument("crb_monotonicity_check: M values must be increasing");
    }
  }
  const RMatrix g_all = amp_phase_jacobian(ensemble, x.values());
  const double scale = 4.0 / (sigma_n * sigma_n);
  MonotonicityReport report;
  for (std::size_t k = 0; k + 1 < m_values.size(); ++k) {
    const Eigen::Index m0 = m_values[k];
    const Eigen::Index m1 = m_values[k + 1];
    const FimResult f0 = fim_amp_phase(ensemble.leading_columns(m0), x, sigma_n);
    const FimResult f1 = fim_amp_phase(ensemble.leading_columns(m1), x, sigma_n);
    RMatrix diff = f0.crb - f1.crb;
    diff = (0.5 * (diff + diff.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(diff, Eigen::EigenvaluesOnly);
    MonotonicityStep step{m0, m1, eig.eigenvalues().minCoeff(), f0.trace(), f1.trace()};
    if (step.min_eigenvalue < -tolerance) report.monotone = false;
    report.steps.push_back(step);

    const FimResult next = m0 + 1 == m1 ? f1 : fim_amp_phase(ensemble.leading_columns(m0 + 1), x, sigma_n);
    const RVector g = g_all.col(m0);
    const RMatrix updated = f0.fim + scale * g * g.transpose();
    const double residual = (next.fim - updated).cwiseAbs().maxCoeff() / next.fim.cwiseAbs().maxCoeff();
    report.max_update_residual = std::max(report.max_update_residual, residual);
  }
  return report;
}

}  // namespace phaseret
