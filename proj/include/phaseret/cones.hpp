#pragma once

// Cone primitives used by the interior-point solver. Exposed for testing.

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace phaseret::conic::cones {

using Vec = Eigen::VectorXd;
using Seg = Eigen::Ref<Eigen::VectorXd>;
using CSeg = Eigen::Ref<const Eigen::VectorXd>;

/// u0^2 - ||u1||^2.
inline double soc_residual(CSeg u) { return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm(); }

/// Nesterov-Todd scaling of one second-order cone:
/// W = eta [[w0, w1^T], [w1, I + w1 w1^T / (1 + w0)]], with W z = W^{-1} s.
struct SocScaling {
  double eta = 1.0;
  Vec w;  // normalized: w0^2 - ||w1||^2 = 1

  static SocScaling compute(CSeg s, CSeg z);

  /// out = W v (inverse: out = W^{-1} v). Aliasing allowed.
  void apply(CSeg v, Seg out, bool inverse = false) const;
};

/// Jordan product (u^T v, u0 v1 + v0 u1).
void soc_product(CSeg u, CSeg v, Seg out);

/// Solves lambda o x = d.
void soc_division(CSeg lambda, CSeg d, Seg out);

/// Largest alpha with u + alpha d in the cone (u interior); +inf if unbounded.
double soc_step(CSeg u, CSeg d);

/// Largest alpha with u + alpha d >= 0 componentwise (u > 0).
inline double orthant_step(CSeg u, CSeg d) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (d[i] < 0.0) alpha = std::min(alpha, -u[i] / d[i]);
  }
  return alpha;
}

}  // namespace phaseret::conic::cones
