#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divergence/interval.hpp"
#include "divergence/jet.hpp"

namespace divergence::interval {

struct MooreCertificate {
  std::vector<double> center;
  double radius = 0.0;
  double a_bound = 0.0;
  double b_bound = 0.0;
  double solution_radius = 0.0;  // b/(1-a), +inf when a >= 1
  bool certified = false;
  std::string failure;  // names the violated bound when not certified
};

using BoxFunction = std::function<IntervalVector(const IntervalVector&)>;
// Row i encloses the gradient of f_i over the box.
using BoxJacobian = std::function<IntervalMatrix(const IntervalVector&)>;

// Existence test for a root of f near center. With the preconditioner A
// (an approximate inverse Jacobian), define over the box of the given radius
//   a = sup_i sup_x || A^t grad f_i(x) - e_i ||_1
//   b = max_i || A^t e_i ||_1 * || f(center) ||_inf.
// If a < 1 and b < radius * (1 - a), the chord iteration x <- x - A f(x)
// stays in the box and converges, so a root lies within b / (1 - a) of the
// center in the infinity norm.
MooreCertificate moore_certify(const BoxFunction& f, const BoxJacobian& jacobian, std::span<const double> center,
                               double radius, const Eigen::MatrixXd& preconditioner);

// Same test with f(center) enclosed by the caller, for systems whose point
// evaluation needs more precision than double intervals give.
MooreCertificate moore_certify(const IntervalVector& f_center, const BoxJacobian& jacobian,
                               std::span<const double> center, double radius, const Eigen::MatrixXd& preconditioner);

// Convenience for systems written once as a template over the scalar type:
// `system(std::vector<T>) -> std::vector<T>`, instantiated with Interval for
// values and Jet<Interval> for gradients.
template <class System>
BoxJacobian jet_jacobian(const System& system) {
  return [&system](const IntervalVector& box) {
    const std::size_t n = box.size();
    std::vector<Jet<Interval>> vars;
    vars.reserve(n);
    for (std::size_t i = 0; i < n; ++i) vars.push_back(Jet<Interval>::variable(box[i], n, i));
    const std::vector<Jet<Interval>> out = system(vars);
    IntervalMatrix j(out.size(), n);
    for (std::size_t i = 0; i < out.size(); ++i)
      for (std::size_t k = 0; k < n; ++k) j(i, k) = out[i].derivative(k);
    return j;
  };
}

template <class System>
MooreCertificate certify_system(const System& system, std::span<const double> center, double radius,
                                const Eigen::MatrixXd& preconditioner) {
  BoxFunction f = [&](const IntervalVector& box) {
    return IntervalVector(system(box.values()));
  };
  return moore_certify(f, jet_jacobian(system), center, radius, preconditioner);
}

}  // namespace divergence::interval
