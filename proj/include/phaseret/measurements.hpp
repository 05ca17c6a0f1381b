#pragma once

#include "phaseret/core.hpp"

#include <cstdint>
#include <utility>

namespace phaseret {

/// x = sum_l gamma_l v(omega_l), with v(omega) = [e^{j omega}, ..., e^{j N omega}]^T.
struct HarmonicModel {
  RVector frequencies;  // radians/sample, each in (-pi, pi]
  CVector amplitudes;
  Eigen::Index n = 0;

  Eigen::Index order() const noexcept { return frequencies.size(); }
  /// Throws std::invalid_argument when L < 1, sizes differ, or frequencies repeat.
  void validate() const;
};

/// Overcomplete Vandermonde dictionary: column p is v(grid[p]).
class Dictionary {
 public:
  /// No overcompleteness check; build_dictionary is the checked entry point.
  static Dictionary from_grid(Eigen::Index n, RVector grid);

  const RVector& grid() const noexcept { return grid_; }
  const CMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index n() const noexcept { return matrix_.rows(); }
  Eigen::Index size() const noexcept { return matrix_.cols(); }
  /// Grid spacing (0 for a single-point grid).
  double spacing() const noexcept;

 private:
  Dictionary(RVector grid, CMatrix matrix) : grid_(std::move(grid)), matrix_(std::move(matrix)) {}
  RVector grid_;
  CMatrix matrix_;
};

/// Vandermonde vector v(omega) of length n, indices 1..n.
CVector vandermonde(double omega, Eigen::Index n);

/// i.i.d. entries, real and imaginary parts standard normal.
MeasurementEnsemble gaussian_ensemble(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

struct MaskedFourierOptions {
  /// Forces every mask entry to 1 so that A^H = [F; ...; F]. Test hook.
  bool unit_masks = false;
};

/// A^H = [F D_1; ...; F D_K] with F[m, n] = exp(-j 2 pi m n / N) (0-based,
/// unnormalized) and D_k diagonal with entries b1*b2, b1 uniform on
/// {1, -1, -j, j}, b2 = sqrt(2)/2 w.p. 0.8 and sqrt(3) w.p. 0.2.
MeasurementEnsemble masked_fourier_ensemble(Eigen::Index n, Eigen::Index k, std::uint64_t seed,
                                            MaskedFourierOptions options = {});

/// The mask diagonals drawn by masked_fourier_ensemble for the same seed (N x K).
CMatrix masked_fourier_masks(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

ComplexSignal harmonic_signal(const HarmonicModel& model);

/// The fixed test signal exp(j 0.16 pi t), t = 1..n.
ComplexSignal reference_signal(Eigen::Index n);

/// P uniformly spaced grid points on [lo, hi] inclusive; requires P > N.
Dictionary build_dictionary(Eigen::Index n, Eigen::Index p, std::pair<double, double> band);

/// Column i is V^H a_i (P x M).
CMatrix project_dictionary(const MeasurementEnsemble& ensemble, const Dictionary& dict);

}  // namespace phaseret
