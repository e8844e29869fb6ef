#pragma once

// Intervals over the extended-precision Real. Every operation rounds to
// nearest and is then widened outward by a few ulps of the result, which
// covers the rounding error of the underlying operation. Used where double
// intervals lose too much to cancellation.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "divergence/interval.hpp"
#include "divergence/real.hpp"

namespace divergence::interval {

class RealInterval {
 public:
  RealInterval() : lo_(0), hi_(0) {}
  RealInterval(double v) : lo_(v), hi_(v) {}  // NOLINT: doubles are exact in Real
  RealInterval(int v) : lo_(v), hi_(v) {}     // NOLINT
  explicit RealInterval(const Real& v) : lo_(v), hi_(v) {}
  RealInterval(const Real& lo, const Real& hi) : lo_(lo), hi_(hi) {
    if (lo > hi) throw std::invalid_argument("interval with lo > hi");
  }

  const Real& lo() const { return lo_; }
  const Real& hi() const { return hi_; }
  Real mag() const { return std::max(abs(lo_), abs(hi_)); }
  bool contains_zero() const { return lo_ <= 0 && 0 <= hi_; }
  bool contains(const Real& x) const { return lo_ <= x && x <= hi_; }

  // Outward rounding to a double interval.
  Interval to_interval() const { return {down(lo_), up(hi_)}; }

  static RealInterval widened(const Real& lo, const Real& hi) { return {lo - slack(lo), hi + slack(hi)}; }

  friend RealInterval operator-(const RealInterval& x) { return {-x.hi_, -x.lo_}; }
  friend RealInterval operator+(const RealInterval& x, const RealInterval& y) {
    return widened(x.lo_ + y.lo_, x.hi_ + y.hi_);
  }
  friend RealInterval operator-(const RealInterval& x, const RealInterval& y) {
    return widened(x.lo_ - y.hi_, x.hi_ - y.lo_);
  }
  friend RealInterval operator*(const RealInterval& x, const RealInterval& y) {
    const Real p[4] = {x.lo_ * y.lo_, x.lo_ * y.hi_, x.hi_ * y.lo_, x.hi_ * y.hi_};
    Real lo = p[0], hi = p[0];
    for (const Real& v : p) lo = std::min(lo, v), hi = std::max(hi, v);
    return widened(lo, hi);
  }
  friend RealInterval operator/(const RealInterval& x, const RealInterval& y) {
    if (y.contains_zero()) throw DivisionByZeroInterval("divisor interval contains zero");
    const Real q[4] = {x.lo_ / y.lo_, x.lo_ / y.hi_, x.hi_ / y.lo_, x.hi_ / y.hi_};
    Real lo = q[0], hi = q[0];
    for (const Real& v : q) lo = std::min(lo, v), hi = std::max(hi, v);
    return widened(lo, hi);
  }
  friend RealInterval sqrt(const RealInterval& x) {
    if (x.lo_ < 0) throw std::domain_error("sqrt of interval with negative part");
    return widened(sqrt(x.lo_), sqrt(x.hi_));
  }

 private:
  // Eight ulps of |v|: rounding to nearest is off by at most half of one.
  static Real slack(const Real& v) {
    static const Real scale = ldexp(Real(1), 3 - std::numeric_limits<Real>::digits);
    return abs(v) * scale;
  }
  static double down(const Real& v) {
    double d = static_cast<double>(v);
    if (Real(d) > v) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
    return d;
  }
  static double up(const Real& v) {
    double d = static_cast<double>(v);
    if (Real(d) < v) d = std::nextafter(d, std::numeric_limits<double>::infinity());
    return d;
  }

  Real lo_;
  Real hi_;
};

}  // namespace divergence::interval
