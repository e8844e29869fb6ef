#include "divergence/optimizer.hpp"

#include <charconv>
#include <ostream>

namespace divergence::replay {

std::string method_name(Method m) {
  switch (m) {
    case Method::SteepestDescent:
      return "steepest_descent";
    case Method::Newton:
      return "newton";
    case Method::Bfgs:
      return "bfgs";
    case Method::GaussNewton:
      return "gauss_newton";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::SteepestDescent, Method::Newton, Method::Bfgs, Method::GaussNewton})
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

namespace {

void put(std::ostream& os, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

}  // namespace

void write_trace_csv(std::ostream& os, const ReplayTrace& trace, int dimension) {
  os << "k";
  for (int i = 0; i < dimension; ++i) os << ",x" << i;
  os << ",f,grad_norm,alpha,step_residual\n";
  for (const auto& e : trace.entries) {
    os << e.k;
    for (double v : e.x) {
      os << ',';
      put(os, v);
    }
    for (double v : {e.f, e.grad_norm, e.alpha, e.step_residual}) {
      os << ',';
      put(os, v);
    }
    os << '\n';
  }
}

}  // namespace divergence::replay
