#include "divergence/moore.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace divergence::interval {

MooreCertificate moore_certify(const BoxFunction& f, const BoxJacobian& jacobian, std::span<const double> center,
                               double radius, const Eigen::MatrixXd& preconditioner) {
  if (center.empty()) throw std::invalid_argument("moore_certify: empty center");
  return moore_certify(f(IntervalVector::from_point(center)), jacobian, center, radius, preconditioner);
}

MooreCertificate moore_certify(const IntervalVector& f_center, const BoxJacobian& jacobian,
                               std::span<const double> center, double radius, const Eigen::MatrixXd& preconditioner) {
  const std::size_t n = center.size();
  if (n == 0) throw std::invalid_argument("moore_certify: empty center");
  if (!(radius > 0.0)) throw std::invalid_argument("moore_certify: radius must be positive");
  if (preconditioner.rows() != static_cast<Eigen::Index>(n) || preconditioner.cols() != static_cast<Eigen::Index>(n))
    throw std::invalid_argument("moore_certify: preconditioner dimension mismatch");

  MooreCertificate cert;
  cert.center.assign(center.begin(), center.end());
  cert.radius = radius;

  const IntervalVector box = box_around(center, radius);
  const IntervalMatrix jac = jacobian(box);
  if (f_center.size() != n || jac.rows() != n || jac.cols() != n)
    throw std::invalid_argument("moore_certify: system is not square in the center dimension");

  // a: rows of (J A) - I in the 1-norm, J = rows of gradients.
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    IntervalVector v(n);
    for (std::size_t j = 0; j < n; ++j) {
      Interval s;
      for (std::size_t l = 0; l < n; ++l) s += Interval(preconditioner(l, j)) * jac(i, l);
      v[j] = (i == j) ? s - Interval(1.0) : s;
    }
    a = std::max(a, norm_1(v).hi());
  }

  double row_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Interval s;
    for (std::size_t j = 0; j < n; ++j) s += Interval(std::abs(preconditioner(i, j)));
    row_norm = std::max(row_norm, s.hi());
  }
  const double b = (Interval(row_norm) * Interval(norm_inf(f_center).hi())).hi();

  cert.a_bound = a;
  cert.b_bound = b;
  if (a >= 1.0) {
    cert.solution_radius = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "contraction bound a = " << a << " is not below 1";
    cert.failure = os.str();
    return cert;
  }
  const Interval one_minus_a = Interval(1.0) - Interval(a);
  cert.solution_radius = (Interval(b) / one_minus_a).hi();
  const double capacity = (Interval(radius) * one_minus_a).lo();
  if (!(b < capacity)) {
    std::ostringstream os;
    os << "residual bound b = " << b << " is not below r(1 - a) = " << capacity;
    cert.failure = os.str();
    return cert;
  }
  cert.certified = true;
  return cert;
}

}  // namespace divergence::interval
