#include "phaseret/cones.hpp"

#include <cmath>

namespace phaseret::conic::cones {

SocScaling SocScaling::compute(CSeg s, CSeg z) {
  const Eigen::Index q = s.size();
  const double s_norm = std::sqrt(std::max(soc_residual(s), 0.0));
  const double z_norm = std::sqrt(std::max(soc_residual(z), 0.0));
  const Vec sh = s / s_norm;
  const Vec zh = z / z_norm;
  const double gamma = std::sqrt(std::max((1.0 + sh.dot(zh)) / 2.0, 0.0));

  SocScaling out;
  out.eta = std::sqrt(s_norm / z_norm);
  out.w.resize(q);
  out.w[0] = (sh[0] + zh[0]) / (2.0 * gamma);
  out.w.tail(q - 1) = (sh.tail(q - 1) - zh.tail(q - 1)) / (2.0 * gamma);
  return out;
}

void SocScaling::apply(CSeg v, Seg out, bool inverse) const {
  const Eigen::Index q = v.size();
  const double w0 = w[0];
  const auto w1 = w.tail(q - 1);
  const double sign = inverse ? -1.0 : 1.0;
  const double scale = inverse ? 1.0 / eta : eta;
  const double v0 = v[0];
  const double w1v1 = w1.dot(v.tail(q - 1));
  // Second block: sign*w1 v0 + v1 + w1 (w1^T v1) / (1 + w0).
  const double coef = sign * v0 + w1v1 / (1.0 + w0);
  const double first = w0 * v0 + sign * w1v1;
  out.tail(q - 1) = scale * (v.tail(q - 1) + coef * w1);
  out[0] = scale * first;
}

void soc_product(CSeg u, CSeg v, Seg out) {
  const Eigen::Index q = u.size();
  const double first = u.dot(v);
  out.tail(q - 1) = u[0] * v.tail(q - 1) + v[0] * u.tail(q - 1);
  out[0] = first;
}

void soc_division(CSeg lambda, CSeg d, Seg out) {
  const Eigen::Index q = lambda.size();
  const double l0 = lambda[0];
  const auto l1 = lambda.tail(q - 1);
  const double x0 = (l0 * d[0] - l1.dot(d.tail(q - 1))) / (l0 * l0 - l1.squaredNorm());
  out.tail(q - 1) = (d.tail(q - 1) - x0 * l1) / l0;
  out[0] = x0;
}

double soc_step(CSeg u, CSeg d) {
  const Eigen::Index q = u.size();
  const double a = d[0] * d[0] - d.tail(q - 1).squaredNorm();
  const double b = u[0] * d[0] - u.tail(q - 1).dot(d.tail(q - 1));
  const double c = std::max(soc_residual(u), 0.0);
  const double disc = b * b - a * c;
  double alpha = std::numeric_limits<double>::infinity();
  if (a < 0.0 || (b < 0.0 && disc >= 0.0)) {
    const double denom = -b + std::sqrt(std::max(disc, 0.0));
    alpha = denom > 0.0 ? c / denom : 0.0;
  }
  // Keep the first coordinate positive as well (guards against crossing into -K).
  if (d[0] < 0.0) alpha = std::min(alpha, -u[0] / d[0]);
  return alpha;
}

}  // namespace phaseret::conic::cones
