#include "phaseret/baselines.hpp"
#include "phaseret/errors.hpp"
#include "phaseret/measurements.hpp"

#include <Eigen/QR>
#include <gtest/gtest.h>

using namespace phaseret;

namespace {

RetrievalInstance noiseless(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  auto ens = gaussian_ensemble(n, m, seed);
  ComplexSignal x(random_init(n, seed + 1000));
  RVector y = measure(ens, x);
  return RetrievalInstance{std::move(ens), std::move(y), 0.0, std::move(x)};
}

double aligned_relative_error(const ComplexSignal& estimate, const ComplexSignal& truth) {
  return (align_global_phase(estimate, truth).aligned.values() - truth.values()).norm() / truth.norm();
}

double abs_cos(const CVector& a, const CVector& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

}  // namespace

TEST(InitKind, RoundTripsThroughStrings) {
  for (InitKind k : {InitKind::spectral, InitKind::random, InitKind::given}) {
    EXPECT_EQ(init_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(init_kind_from_string("sdr"), std::invalid_argument);
}

TEST(SpectralInit, DominantMeasurementPicksItsVector) {
  const auto ens = gaussian_ensemble(4, 12, 1);
  RVector y = RVector::Constant(12, 1e-3);
  y[5] = 1e6;
  const CVector z = spectral_init(ens.columns(), y);
  EXPECT_GT(abs_cos(z, ens.column(5)), std::cos(1e-6));
}

TEST(SpectralInit, AlignsWithTruthAtHighOversampling) {
  const RetrievalInstance inst = noiseless(4, 256, 2);
  EXPECT_GT(abs_cos(spectral_init(inst).values(), inst.truth->values()), 0.9);
}

TEST(SpectralInit, ScaleMatchesMeanMeasurement) {
  const RetrievalInstance inst = noiseless(8, 64, 3);
  const CVector z = spectral_init(inst).values();
  const double col = inst.ensemble.columns().colwise().squaredNorm().mean() / 8.0;
  EXPECT_NEAR(z.squaredNorm() * col, inst.y.mean(), 1e-10 * inst.y.mean());
}

TEST(SpectralInit, IsDeterministicAndRejectsZeroData) {
  const RetrievalInstance inst = noiseless(6, 30, 4);
  EXPECT_EQ(spectral_init(inst).values(), spectral_init(inst).values());
  EXPECT_THROW(spectral_init(inst.ensemble.columns(), RVector::Zero(30)), std::invalid_argument);
  EXPECT_THROW(spectral_init(inst.ensemble.columns(), RVector::Ones(29)), DimensionMismatch);
}

TEST(RandomInit, IsSeededComplexNormal) {
  EXPECT_EQ(random_init(5, 9), random_init(5, 9));
  const CVector z = random_init(100000, 10);
  EXPECT_NEAR(z.squaredNorm() / 100000.0, 1.0, 0.02);
}

TEST(BaselineConfig, Validation) {
  BaselineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iter = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = BaselineConfig{};
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = BaselineConfig{};
  c.init = InitKind::given;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(WfGradient, MatchesCentralDifferences) {
  const auto ens = gaussian_ensemble(6, 30, 5);
  const RVector y = measure(ens, ComplexSignal(random_init(6, 6)));
  for (int trial = 0; trial < 20; ++trial) {
    const CVector x = random_init(6, 100 + trial);
    const CVector d = random_init(6, 200 + trial);
    const double h = 1e-6;
    const double fd = (wf_cost(ens, y, x + h * d) - wf_cost(ens, y, x - h * d)) / (2.0 * h);
    const double analytic = 2.0 * wf_gradient(ens, y, x).dot(d).real();
    EXPECT_NEAR(fd, analytic, 1e-5 * std::abs(analytic));
  }
}

TEST(WfGradient, VanishesAtTruth) {
  const RetrievalInstance inst = noiseless(8, 48, 8);
  EXPECT_LT(wf_gradient(inst.ensemble, inst.y, inst.truth->values()).norm(), 1e-10 * inst.y.squaredNorm());
}

TEST(WirtingerFlow, StartsAtTruthAndStops) {
  const RetrievalInstance inst = noiseless(8, 48, 9);
  BaselineConfig cfg;
  cfg.init = InitKind::given;
  cfg.initial_point = inst.truth->values();
  const BaselineResult r = wirtinger_flow(inst, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 1);
  EXPECT_LT(aligned_relative_error(r.estimate, *inst.truth), 1e-12);
}

TEST(WirtingerFlow, RecoversNoiselessSignal) {
  const RetrievalInstance inst = noiseless(16, 128, 10);
  const BaselineResult r = wirtinger_flow(inst, BaselineConfig{});
  EXPECT_LT(aligned_relative_error(r.estimate, *inst.truth), 1e-3);
  EXPECT_EQ(r.costs.size(), static_cast<std::size_t>(r.iterations) + 1);
}

TEST(WirtingerFlow, FailsLoudlyOnDivergence) {
  const RetrievalInstance inst = noiseless(8, 48, 11);
  BaselineConfig cfg;
  cfg.schedule.mu_max = 1e6;
  cfg.schedule.tau0 = 1e-3;
  EXPECT_THROW(wirtinger_flow(inst, cfg), NumericalFailure);
}

TEST(GerchbergSaxton, FixedPointAtConsistentSignal) {
  const RetrievalInstance inst = noiseless(8, 48, 12);
  BaselineConfig cfg;
  cfg.init = InitKind::given;
  cfg.initial_point = inst.truth->values();
  const BaselineResult r = gerchberg_saxton(inst, cfg);
  EXPECT_LT(r.costs.back(), 1e-20 * inst.y.squaredNorm());
  EXPECT_LT(aligned_relative_error(r.estimate, *inst.truth), 1e-12);
}

TEST(GerchbergSaxton, AlternatingCostIsNonIncreasing) {
  RetrievalInstance inst = noiseless(8, 40, 13);
  inst.y = add_noise(inst.y, 0.5, 14);
  BaselineConfig cfg;
  cfg.init = InitKind::random;
  cfg.init_seed = 15;
  cfg.max_iter = 50;
  cfg.tol = 1e-300;
  const MeasurementEnsemble& ens = inst.ensemble;
  const CMatrix ah = ens.columns().adjoint();
  Eigen::ColPivHouseholderQR<CMatrix> qr(ah);
  const RVector amp = inst.y.cwiseMax(0.0).cwiseSqrt();
  CVector x = random_init(8, 15);
  double prev = gs_cost(ens, inst.y, x);
  for (int k = 0; k < 50; ++k) {
    const CVector ax = ah * x;
    CVector target(ax.size());
    for (Eigen::Index i = 0; i < ax.size(); ++i) target[i] = amp[i] * ax[i] / std::abs(ax[i]);
    x = qr.solve(target);
    const double cost = gs_cost(ens, inst.y, x);
    EXPECT_LE(cost, prev * (1.0 + 1e-12));
    prev = cost;
  }
  const BaselineResult r = gerchberg_saxton(inst, cfg);
  EXPECT_LT((r.estimate.values() - x).norm(), 1e-9 * x.norm());
}

TEST(GerchbergSaxton, RecoversNoiselessSignal) {
  const RetrievalInstance inst = noiseless(8, 64, 16);
  const BaselineResult r = gerchberg_saxton(inst, BaselineConfig{});
  EXPECT_LT(aligned_relative_error(r.estimate, *inst.truth), 1e-3);
}

TEST(GerchbergSaxton, RejectsRankDeficientEnsemble) {
  CMatrix cols = gaussian_ensemble(4, 8, 17).columns();
  cols.row(3).setZero();
  const MeasurementEnsemble ens(cols, EnsembleKind::custom, 0);
  const RetrievalInstance inst{ens, RVector::Ones(8), 0.0, std::nullopt};
  BaselineConfig cfg;
  cfg.init = InitKind::random;
  EXPECT_THROW(gerchberg_saxton(inst, cfg), std::invalid_argument);
}
