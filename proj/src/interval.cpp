#include "divergence/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace divergence::interval {

namespace rounding {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below this magnitude FMA residuals may be inexact; widen symmetrically.
constexpr double kTiny = 0x1p-960;

double next_up(double x) { return std::nextafter(x, kInf); }
double next_down(double x) { return std::nextafter(x, -kInf); }

void require_finite(double x) {
  if (std::isnan(x)) throw std::domain_error("interval arithmetic produced NaN");
  if (std::isinf(x)) throw std::overflow_error("interval arithmetic overflowed");
}

// r is (computed - exact) up to a positive factor.
Bounds from_residual(double value, double r) {
  if (r > 0.0) return {next_down(value), value};
  if (r < 0.0) return {value, next_up(value)};
  return {value, value};
}

Bounds widen_tiny(double value) {
  return {next_down(value) - kTiny, next_up(value) + kTiny};
}

}  // namespace

Bounds add(double a, double b) {
  const double s = a + b;
  require_finite(s);
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);  // exact = s + err
  return from_residual(s, -err);
}

Bounds sub(double a, double b) { return add(a, -b); }

Bounds mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return {0.0, 0.0};
  const double p = a * b;
  require_finite(p);
  if (std::abs(p) < kTiny) return widen_tiny(p);
  return from_residual(p, -std::fma(a, b, -p));
}

Bounds div(double a, double b) {
  if (b == 0.0) throw DivisionByZeroInterval("division by zero");
  if (a == 0.0) return {0.0, 0.0};
  const double q = a / b;
  require_finite(q);
  if (std::abs(q) < kTiny || std::abs(a) < kTiny) return widen_tiny(q);
  // q*b - a has the sign of (q - a/b) times the sign of b.
  const double r = std::fma(q, b, -a);
  return from_residual(q, b > 0.0 ? r : -r);
}

Bounds sqrt(double a) {
  if (a < 0.0) throw std::domain_error("sqrt of negative number");
  if (a == 0.0) return {0.0, 0.0};
  const double s = std::sqrt(a);
  if (a < kTiny) return {std::max(0.0, next_down(s) - kTiny), next_up(s) + kTiny};
  return from_residual(s, std::fma(s, s, -a));
}

}  // namespace rounding

Interval::Interval(double value) : lo_(value), hi_(value) {
  if (std::isnan(value)) throw std::domain_error("NaN interval endpoint");
}

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi)) throw std::domain_error("NaN interval endpoint");
  if (lo > hi) throw std::invalid_argument("interval with lo > hi");
}

double Interval::mid() const noexcept { return 0.5 * lo_ + 0.5 * hi_; }

double Interval::rad() const noexcept {
  const double m = mid();
  return std::max(rounding::sub(hi_, m).up, rounding::sub(m, lo_).up);
}

double Interval::width() const noexcept { return rounding::sub(hi_, lo_).up; }

double Interval::mag() const noexcept { return std::max(std::abs(lo_), std::abs(hi_)); }

double Interval::mig() const noexcept {
  if (contains_zero()) return 0.0;
  return std::min(std::abs(lo_), std::abs(hi_));
}

Interval& Interval::operator+=(const Interval& y) { return *this = *this + y; }
Interval& Interval::operator-=(const Interval& y) { return *this = *this - y; }
Interval& Interval::operator*=(const Interval& y) { return *this = *this * y; }
Interval& Interval::operator/=(const Interval& y) { return *this = *this / y; }

Interval operator-(const Interval& x) { return {-x.hi(), -x.lo()}; }

Interval operator+(const Interval& x, const Interval& y) {
  return {rounding::add(x.lo(), y.lo()).down, rounding::add(x.hi(), y.hi()).up};
}

Interval operator-(const Interval& x, const Interval& y) {
  return {rounding::sub(x.lo(), y.hi()).down, rounding::sub(x.hi(), y.lo()).up};
}

Interval operator*(const Interval& x, const Interval& y) {
  const rounding::Bounds p[4] = {rounding::mul(x.lo(), y.lo()), rounding::mul(x.lo(), y.hi()),
                                 rounding::mul(x.hi(), y.lo()), rounding::mul(x.hi(), y.hi())};
  double lo = p[0].down, hi = p[0].up;
  for (const auto& b : p) {
    lo = std::min(lo, b.down);
    hi = std::max(hi, b.up);
  }
  return {lo, hi};
}

Interval operator/(const Interval& x, const Interval& y) {
  if (y.contains_zero()) throw DivisionByZeroInterval("divisor interval contains zero");
  const rounding::Bounds q[4] = {rounding::div(x.lo(), y.lo()), rounding::div(x.lo(), y.hi()),
                                 rounding::div(x.hi(), y.lo()), rounding::div(x.hi(), y.hi())};
  double lo = q[0].down, hi = q[0].up;
  for (const auto& b : q) {
    lo = std::min(lo, b.down);
    hi = std::max(hi, b.up);
  }
  return {lo, hi};
}

Interval sqrt(const Interval& x) {
  if (x.lo() < 0.0) throw std::domain_error("sqrt of interval with negative part");
  return {rounding::sqrt(x.lo()).down, rounding::sqrt(x.hi()).up};
}

Interval abs(const Interval& x) {
  if (x.lo() >= 0.0) return x;
  if (x.hi() <= 0.0) return -x;
  return {0.0, x.mag()};
}

Interval sqr(const Interval& x) {
  const Interval a = abs(x);
  return {rounding::mul(a.lo(), a.lo()).down, rounding::mul(a.hi(), a.hi()).up};
}

Interval pow(const Interval& x, int n) {
  if (n < 0) return Interval(1.0) / pow(x, -n);
  if (n == 0) return Interval(1.0);
  if (n == 1) return x;
  // Even powers go through |x|; odd powers are x times an even power, which
  // is monotone and therefore tight for intervals straddling zero.
  const Interval half = pow(sqr(x), n / 2);
  return n % 2 == 0 ? half : x * half;
}

Interval hull(const Interval& x, const Interval& y) {
  return {std::min(x.lo(), y.lo()), std::max(x.hi(), y.hi())};
}

bool operator==(const Interval& x, const Interval& y) { return x.lo() == y.lo() && x.hi() == y.hi(); }

std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo() << ", " << x.hi() << ']';
}

IntervalVector IntervalVector::from_point(std::span<const double> x) {
  IntervalVector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = Interval(x[i]);
  return v;
}

IntervalMatrix IntervalMatrix::from_point(std::size_t rows, std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) throw std::invalid_argument("IntervalMatrix::from_point: size mismatch");
  IntervalMatrix m(rows, cols);
  for (std::size_t i = 0; i < values.size(); ++i) m.data_[i] = Interval(values[i]);
  return m;
}

IntervalMatrix IntervalMatrix::identity(std::size_t n) {
  IntervalMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Interval(1.0);
  return m;
}

IntervalVector IntervalMatrix::row(std::size_t i) const {
  IntervalVector r(cols_);
  for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
  return r;
}

IntervalMatrix IntervalMatrix::transpose() const {
  IntervalMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

IntervalVector operator+(const IntervalVector& x, const IntervalVector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector size mismatch");
  IntervalVector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

IntervalVector operator-(const IntervalVector& x, const IntervalVector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector size mismatch");
  IntervalVector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

IntervalVector operator*(const IntervalMatrix& a, const IntervalVector& x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector size mismatch");
  IntervalVector r(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Interval s;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix-matrix size mismatch");
  IntervalMatrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      Interval s;
      for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      r(i, j) = s;
    }
  return r;
}

Interval dot(const IntervalVector& x, const IntervalVector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("vector size mismatch");
  Interval s;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

Interval norm_1(const IntervalVector& v) {
  if (v.empty()) throw std::invalid_argument("norm of empty vector");
  Interval s;
  for (const auto& x : v) s += abs(x);
  return s;
}

Interval norm_inf(const IntervalVector& v) {
  if (v.empty()) throw std::invalid_argument("norm of empty vector");
  double lo = 0.0, hi = 0.0;
  for (const auto& x : v) {
    lo = std::max(lo, x.mig());
    hi = std::max(hi, x.mag());
  }
  return {lo, hi};
}

IntervalVector box_around(std::span<const double> center, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("box radius must be non-negative");
  IntervalVector box(center.size());
  for (std::size_t i = 0; i < center.size(); ++i)
    box[i] = Interval(rounding::sub(center[i], radius).down, rounding::add(center[i], radius).up);
  return box;
}

}  // namespace divergence::interval
