#include "phaseret/measurements.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phaseret {

void HarmonicModel::validate() const {
  if (order() < 1) throw std::invalid_argument("HarmonicModel: need at least one frequency");
  if (amplitudes.size() != frequencies.size()) {
    throw DimensionMismatch("HarmonicModel: frequencies and amplitudes differ in length");
  }
  if (n < 1) throw std::invalid_argument("HarmonicModel: signal length must be positive");
  for (Eigen::Index i = 0; i < order(); ++i) {
    if (!std::isfinite(frequencies[i])) throw std::invalid_argument("HarmonicModel: non-finite frequency");
    for (Eigen::Index j = i + 1; j < order(); ++j) {
      if (frequencies[i] == frequencies[j]) throw std::invalid_argument("HarmonicModel: repeated frequency");
    }
  }
}

CVector vandermonde(double omega, Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index t = 0; t < n; ++t) v[t] = std::polar(1.0, omega * static_cast<double>(t + 1));
  return v;
}

Dictionary Dictionary::from_grid(Eigen::Index n, RVector grid) {
  if (n < 1 || grid.size() < 1) throw std::invalid_argument("Dictionary: empty grid or signal length");
  CMatrix matrix(n, grid.size());
  for (Eigen::Index p = 0; p < grid.size(); ++p) matrix.col(p) = vandermonde(grid[p], n);
  return Dictionary(std::move(grid), std::move(matrix));
}

double Dictionary::spacing() const noexcept {
  return grid_.size() > 1 ? (grid_[grid_.size() - 1] - grid_[0]) / static_cast<double>(grid_.size() - 1) : 0.0;
}

MeasurementEnsemble gaussian_ensemble(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("gaussian_ensemble: need N, M >= 1");
  CounterRng rng(seed);
  CMatrix a(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = rng.complex_normal();
  return MeasurementEnsemble(std::move(a), EnsembleKind::gaussian, seed);
}

CMatrix masked_fourier_masks(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  if (n < 1 || k < 1) throw std::invalid_argument("masked_fourier_ensemble: need N, K >= 1");
  static const Complex kPhases[4] = {{1, 0}, {-1, 0}, {0, -1}, {0, 1}};
  const double small = std::sqrt(2.0) / 2.0;
  const double large = std::sqrt(3.0);
  CounterRng rng(seed);
  CMatrix masks(n, k);
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto b1 = kPhases[rng() >> 62];
      const double b2 = rng.uniform() < 0.8 ? small : large;
      masks(i, kk) = b1 * b2;
    }
  }
  return masks;
}

MeasurementEnsemble masked_fourier_ensemble(Eigen::Index n, Eigen::Index k, std::uint64_t seed,
                                            MaskedFourierOptions options) {
  CMatrix masks = options.unit_masks ? CMatrix::Ones(n, k) : masked_fourier_masks(n, k, seed);
  // Row (k*N + m) of A^H is F[m, :] D_k, so column a_i = conj(D_k) conj(F[m, :])^T.
  const double two_pi = 2.0 * std::numbers::pi;
  CMatrix a(n, n * k);
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    for (Eigen::Index row = 0; row < n; ++row) {
      const Eigen::Index col = kk * n + row;
      for (Eigen::Index t = 0; t < n; ++t) {
        const double angle = two_pi * static_cast<double>((row * t) % n) / static_cast<double>(n);
        a(t, col) = std::conj(masks(t, kk)) * std::polar(1.0, angle);
      }
    }
  }
  return MeasurementEnsemble(std::move(a), EnsembleKind::masked_fourier, seed);
}

ComplexSignal harmonic_signal(const HarmonicModel& model) {
  model.validate();
  CVector x = CVector::Zero(model.n);
  for (Eigen::Index l = 0; l < model.order(); ++l) {
    x += model.amplitudes[l] * vandermonde(model.frequencies[l], model.n);
  }
  return ComplexSignal(std::move(x));
}

ComplexSignal reference_signal(Eigen::Index n) {
  HarmonicModel model{RVector::Constant(1, 0.16 * std::numbers::pi), CVector::Ones(1), n};
  return harmonic_signal(model);
}

Dictionary build_dictionary(Eigen::Index n, Eigen::Index p, std::pair<double, double> band) {
  const auto [lo, hi] = band;
  if (!(lo < hi)) throw std::invalid_argument("build_dictionary: degenerate band");
  if (p <= n) throw std::invalid_argument("build_dictionary: dictionary must be overcomplete (P > N)");
  RVector grid(p);
  const double step = (hi - lo) / static_cast<double>(p - 1);
  for (Eigen::Index i = 0; i < p; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid[p - 1] = hi;
  return Dictionary::from_grid(n, std::move(grid));
}

CMatrix project_dictionary(const MeasurementEnsemble& ensemble, const Dictionary& dict) {
  if (ensemble.n() != dict.n()) throw DimensionMismatch("project_dictionary: ensemble and dictionary N differ");
  return dict.matrix().adjoint() * ensemble.columns();
}

}  // namespace phaseret
