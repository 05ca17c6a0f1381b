#include "phaseret/baselines.hpp"
#include "phaseret/crb.hpp"
#include "phaseret/errors.hpp"
#include "phaseret/measurements.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace phaseret;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexSignal random_signal(Eigen::Index n, std::uint64_t seed) { return ComplexSignal(random_init(n, seed)); }

double max_abs(const RMatrix& m) { return m.cwiseAbs().maxCoeff(); }

HarmonicModel two_tones(double spread) {
  return HarmonicModel{(RVector(2) << -spread, spread).finished(), (CVector(2) << Complex(1.0, 0.3), Complex(-0.4, 0.8)).finished(), 8};
}

}  // namespace

TEST(PseudoInverse, IdentityIsItsOwnInverse) {
  const PseudoInverse p = pseudo_inverse_psd(RMatrix::Identity(4, 4));
  EXPECT_EQ(p.rank, 4);
  EXPECT_EQ(p.null_basis.cols(), 0);
  EXPECT_LT(max_abs(p.inverse - RMatrix::Identity(4, 4)), 1e-15);
}

TEST(PseudoInverse, DropsZeroEigenvalue) {
  RMatrix m = RMatrix::Zero(2, 2);
  m(0, 0) = 2.0;
  const PseudoInverse p = pseudo_inverse_psd(m);
  EXPECT_EQ(p.rank, 1);
  EXPECT_NEAR(p.inverse(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p.inverse(1, 1), 0.0, 1e-15);
  ASSERT_EQ(p.null_basis.cols(), 1);
  EXPECT_NEAR(std::abs(p.null_basis(1, 0)), 1.0, 1e-15);
}

TEST(PseudoInverse, RejectsNonSymmetricInput) {
  RMatrix m = RMatrix::Identity(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(pseudo_inverse_psd(m), std::invalid_argument);
}

TEST(PseudoInverse, SatisfiesPenroseIdentitiesOnComplexFim) {
  const auto ens = gaussian_ensemble(8, 32, 11);
  const FimResult r = fim_complex(ens, random_signal(8, 12), 0.3);
  const RMatrix& f = r.fim;
  const RMatrix& c = r.crb;
  EXPECT_LT(max_abs(f * c * f - f), 1e-8 * max_abs(f));
  EXPECT_LT(max_abs(c * f * c - c), 1e-8 * max_abs(c));
}

TEST(FimComplex, NullDirectionIsGlobalPhase) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ens = gaussian_ensemble(8, 32, 100 + seed);
    const ComplexSignal x = random_signal(8, 200 + seed);
    const FimResult r = fim_complex(ens, x, 0.5);
    RVector v(16);
    v << -x.values().imag(), x.values().real();
    EXPECT_LT((r.fim * v).norm(), 1e-10 * r.fim.norm() * v.norm());
    EXPECT_EQ(r.rank, 15);
    EXPECT_GE(r.eigenvalues.minCoeff(), -1e-10 * r.fim.norm());
  }
}

TEST(FimComplex, ScalesWithNoiseVariance) {
  const auto ens = gaussian_ensemble(6, 24, 3);
  const ComplexSignal x = random_signal(6, 4);
  const FimResult a = fim_complex(ens, x, 0.2);
  const FimResult b = fim_complex(ens, x, 0.4);
  EXPECT_LT(max_abs(b.crb - 4.0 * a.crb), 1e-10 * max_abs(b.crb));
}

TEST(FimComplex, RejectsZeroSignalAndBadSigma) {
  const auto ens = gaussian_ensemble(4, 16, 3);
  EXPECT_THROW(fim_complex(ens, ComplexSignal(CVector::Zero(4)), 0.1), std::invalid_argument);
  EXPECT_THROW(fim_complex(ens, random_signal(4, 1), 0.0), std::invalid_argument);
}

TEST(FimReal, IsNonsingularForRealSignals) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ens = gaussian_ensemble(8, 32, 300 + seed);
    const RVector x = random_init(8, 400 + seed).real();
    const FimResult r = fim_real(ens, x, 0.5);
    EXPECT_EQ(r.rank, 8);
    EXPECT_GT(r.eigenvalues.minCoeff(), 0.0);
    EXPECT_LT(max_abs(r.crb * r.fim - RMatrix::Identity(8, 8)), 1e-8);
  }
}

TEST(FimReal, BoundIsBelowRealBlockOfComplexBound) {
  const auto ens = gaussian_ensemble(8, 32, 5);
  const RVector x = random_init(8, 6).real();
  const FimResult r = fim_real(ens, x, 0.5);
  const FimResult c = fim_complex(ens, ComplexSignal(x.cast<Complex>()), 0.5);
  EXPECT_LT(max_abs(r.fim - c.fim.topLeftCorner(8, 8)), 1e-10 * max_abs(r.fim));
  EXPECT_LE(r.crb.trace(), c.crb.topLeftCorner(8, 8).trace() * (1.0 + 1e-9));
}

TEST(FimReal, RejectsComplexLengthMismatch) {
  const auto ens = gaussian_ensemble(4, 16, 3);
  EXPECT_THROW(fim_real(ens, RVector::Ones(5), 0.1), DimensionMismatch);
}

TEST(FimAmpPhase, NullDirectionIsCommonPhaseShift) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ens = gaussian_ensemble(8, 32, 500 + seed);
    const FimResult r = fim_amp_phase(ens, random_signal(8, 600 + seed), 0.5);
    RVector v(16);
    v << RVector::Zero(8), RVector::Constant(8, 3.7);
    EXPECT_LT((r.fim * v).norm(), 1e-10 * r.fim.norm() * v.norm());
    EXPECT_EQ(r.rank, 15);
  }
}

TEST(FimAmpPhase, BlockAssemblyMatchesStackedJacobian) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ens = gaussian_ensemble(8, 32, 700 + seed);
    const ComplexSignal x = random_signal(8, 800 + seed);
    const FimResult r = fim_amp_phase(ens, x, 0.7);
    const RMatrix blocks = amp_phase_fim_blocks(ens, x.values(), 0.7);
    EXPECT_LT(max_abs(blocks - r.fim), 1e-10 * max_abs(r.fim));
  }
}

TEST(FimAmpPhase, SchurBoundsMatchDiagonalBlocksOfFullBound) {
  const auto ens = gaussian_ensemble(6, 30, 9);
  const FimResult r = fim_amp_phase(ens, random_signal(6, 10), 0.5);
  ASSERT_TRUE(r.crb_theta && r.crb_b);
  EXPECT_FALSE(r.schur_used_pinv);
  EXPECT_LT(max_abs(*r.crb_b - r.crb.topLeftCorner(6, 6)), 1e-8 * max_abs(*r.crb_b));
  EXPECT_LT(max_abs(*r.crb_theta - r.crb.bottomRightCorner(6, 6)), 1e-8 * max_abs(*r.crb_theta));
}

TEST(FimAmpPhase, AmplitudeAndPhaseBoundsAreAReparametrizationOfComplexBound) {
  // F = J^T F_c J with J = d(Re x, Im x) / d(b, theta).
  const auto ens = gaussian_ensemble(5, 20, 13);
  const ComplexSignal x = random_signal(5, 14);
  const FimResult c = fim_complex(ens, x, 0.3);
  const FimResult p = fim_amp_phase(ens, x, 0.3);
  RMatrix j = RMatrix::Zero(10, 10);
  for (Eigen::Index k = 0; k < 5; ++k) {
    const double b = std::abs(x[k]);
    const double t = std::arg(x[k]);
    j(k, k) = std::cos(t);
    j(5 + k, k) = std::sin(t);
    j(k, 5 + k) = -b * std::sin(t);
    j(5 + k, 5 + k) = b * std::cos(t);
  }
  EXPECT_LT(max_abs(j.transpose() * c.fim * j - p.fim), 1e-10 * max_abs(p.fim));
}

TEST(FimAmpPhase, RejectsZeroAmplitude) {
  const auto ens = gaussian_ensemble(4, 16, 3);
  CVector x = random_init(4, 2);
  x[2] = 0.0;
  EXPECT_THROW(fim_amp_phase(ens, ComplexSignal(x), 0.1), std::invalid_argument);
}

TEST(FimHarmonic, ElementSumsMatchMatrixProduct) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ens = gaussian_ensemble(8, 40, 900 + seed);
    const HarmonicModel model = two_tones(0.15 * kPi);
    const FimResult r = fim_harmonic(ens, model, 0.4);
    EXPECT_LT(max_abs(harmonic_fim_elements(ens, model, 0.4) - r.fim), 1e-10 * max_abs(r.fim));
  }
}

TEST(FimHarmonic, RankDeficitIsOne) {
  const auto ens = gaussian_ensemble(8, 40, 17);
  const HarmonicModel model = two_tones(0.15 * kPi);
  const FimResult r = fim_harmonic(ens, model, 0.4);
  EXPECT_EQ(r.rank, 5);
  RVector v(6);
  v << 0.0, 0.0, -model.amplitudes.imag(), model.amplitudes.real();
  EXPECT_LT((r.fim * v).norm(), 1e-10 * r.fim.norm() * v.norm());
}

TEST(FimHarmonic, ClosePairHasLargerFrequencyBound) {
  const auto ens = gaussian_ensemble(8, 40, 23);
  for (double sigma : {1.0, 0.1, 0.01}) {
    const FimResult close = fim_harmonic(ens, two_tones(0.05 * kPi), sigma);
    const FimResult wide = fim_harmonic(ens, two_tones(0.15 * kPi), sigma);
    EXPECT_GT(close.crb.topLeftCorner(2, 2).trace(), wide.crb.topLeftCorner(2, 2).trace());
  }
}

TEST(Crb, ScaleLawHoldsForAllParametrizations) {
  const auto ens = gaussian_ensemble(8, 40, 29);
  const ComplexSignal x = random_signal(8, 30);
  const double c = 2.5;
  auto check = [&](const FimResult& a, const FimResult& b) {
    EXPECT_LT(max_abs(b.crb - c * c * a.crb), 1e-9 * max_abs(b.crb));
  };
  check(fim_complex(ens, x, 0.1), fim_complex(ens, x, 0.1 * c));
  check(fim_real(ens, x.values().real(), 0.1), fim_real(ens, x.values().real(), 0.1 * c));
  check(fim_amp_phase(ens, x, 0.1), fim_amp_phase(ens, x, 0.1 * c));
  check(fim_harmonic(ens, two_tones(0.1 * kPi), 0.1), fim_harmonic(ens, two_tones(0.1 * kPi), 0.1 * c));
}

TEST(Monotonicity, BoundShrinksAsColumnsAreAdded) {
  const auto ens = gaussian_ensemble(16, 128, 31);
  const ComplexSignal x = random_signal(16, 32);
  const MonotonicityReport rep = crb_monotonicity_check(ens, x, 0.2, {32, 64, 128});
  ASSERT_EQ(rep.steps.size(), 2u);
  EXPECT_TRUE(rep.monotone);
  EXPECT_GT(rep.steps[0].trace_from, rep.steps[0].trace_to);
  EXPECT_GT(rep.steps[1].trace_from, rep.steps[1].trace_to);
  EXPECT_LT(rep.max_update_residual, 1e-12);
}

TEST(Monotonicity, ZeroColumnLeavesBoundUnchanged) {
  const auto base = gaussian_ensemble(6, 24, 33);
  CMatrix cols(6, 25);
  cols.leftCols(24) = base.columns();
  cols.col(24).setZero();
  const MeasurementEnsemble ens(cols, EnsembleKind::custom, 0);
  const ComplexSignal x = random_signal(6, 34);
  const MonotonicityReport rep = crb_monotonicity_check(ens, x, 0.3, {24, 25});
  EXPECT_NEAR(rep.steps[0].trace_from, rep.steps[0].trace_to, 1e-10 * rep.steps[0].trace_from);
}

TEST(Monotonicity, RejectsBadMValues) {
  const auto ens = gaussian_ensemble(6, 24, 33);
  const ComplexSignal x = random_signal(6, 34);
  EXPECT_THROW(crb_monotonicity_check(ens, x, 0.3, {12, 10}), std::invalid_argument);
  EXPECT_THROW(crb_monotonicity_check(ens, x, 0.3, {4, 10}), std::invalid_argument);
}

TEST(Monotonicity, HoldsWheneverTheRankIsUnchanged) {
  const auto ens = gaussian_ensemble(8, 32, 35);
  const ComplexSignal x = random_signal(8, 36);
  std::vector<Eigen::Index> ms;
  for (Eigen::Index m = 8; m <= 32; ++m) ms.push_back(m);
  const MonotonicityReport rep = crb_monotonicity_check(ens, x, 0.5, ms);
  ASSERT_EQ(rep.steps.size(), 24u);
  EXPECT_LT(rep.max_update_residual, 1e-12);
  int rank_growth = 0;
  for (const auto& step : rep.steps) {
    const int r0 = fim_amp_phase(ens.leading_columns(step.m_from), x, 0.5).rank;
    const int r1 = fim_amp_phase(ens.leading_columns(step.m_to), x, 0.5).rank;
    if (r0 == r1) {
      EXPECT_GE(step.min_eigenvalue, -1e-9) << "M = " << step.m_from;
    } else {
      // A new direction enters the range: the pseudo-inverse grows there.
      EXPECT_LT(step.min_eigenvalue, 0.0) << "M = " << step.m_from;
      ++rank_growth;
    }
  }
  EXPECT_EQ(rank_growth, 7);  // ranks 8, 9, ..., 15 = 2N - 1
  const FimResult f = fim_amp_phase(ens.leading_columns(8), x, 0.5);
  EXPECT_EQ(*f.crb_theta, f.crb_theta->transpose());
  EXPECT_EQ(*f.crb_b, f.crb_b->transpose());
}
