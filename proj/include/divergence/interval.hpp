#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace divergence::interval {

// Raised when a divisor interval contains zero.
class DivisionByZeroInterval : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace rounding {

// Lower and upper floating-point bounds of an exact real result.
struct Bounds {
  double down;
  double up;
};

// Each operation rounds to nearest, recovers the exact error with an
// error-free transformation and widens by one ulp only in the direction the
// exact result lies. Exact operations come back as a single point.
Bounds add(double a, double b);
Bounds sub(double a, double b);
Bounds mul(double a, double b);
Bounds div(double a, double b);
Bounds sqrt(double a);

}  // namespace rounding

class Interval {
 public:
  constexpr Interval() = default;
  Interval(double value);  // NOLINT: degenerate intervals convert implicitly
  Interval(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double mid() const noexcept;
  // Upper bound on the radius, so that [mid - rad, mid + rad] covers *this.
  double rad() const noexcept;
  double width() const noexcept;
  double mag() const noexcept;  // max |x|
  double mig() const noexcept;  // min |x|

  bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
  bool contains(const Interval& other) const noexcept {
    return lo_ <= other.lo_ && other.hi_ <= hi_;
  }
  bool contains_zero() const noexcept { return lo_ <= 0.0 && 0.0 <= hi_; }
  bool is_point() const noexcept { return lo_ == hi_; }

  Interval& operator+=(const Interval& y);
  Interval& operator-=(const Interval& y);
  Interval& operator*=(const Interval& y);
  Interval& operator/=(const Interval& y);

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

Interval operator-(const Interval& x);
Interval operator+(const Interval& x, const Interval& y);
Interval operator-(const Interval& x, const Interval& y);
Interval operator*(const Interval& x, const Interval& y);
Interval operator/(const Interval& x, const Interval& y);

Interval sqrt(const Interval& x);
Interval sqr(const Interval& x);
Interval abs(const Interval& x);
Interval pow(const Interval& x, int n);
Interval hull(const Interval& x, const Interval& y);

// Certain comparisons: true only when every pair of members satisfies them.
inline bool certainly_less(const Interval& x, const Interval& y) { return x.hi() < y.lo(); }
inline bool certainly_positive(const Interval& x) { return x.lo() > 0.0; }

bool operator==(const Interval& x, const Interval& y);
std::ostream& operator<<(std::ostream& os, const Interval& x);

class IntervalVector {
 public:
  IntervalVector() = default;
  explicit IntervalVector(std::size_t n) : data_(n) {}
  IntervalVector(std::initializer_list<Interval> values) : data_(values) {}
  explicit IntervalVector(std::vector<Interval> values) : data_(std::move(values)) {}
  static IntervalVector from_point(std::span<const double> x);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  Interval& operator[](std::size_t i) { return data_[i]; }
  const Interval& operator[](std::size_t i) const { return data_[i]; }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }
  const std::vector<Interval>& values() const noexcept { return data_; }

 private:
  std::vector<Interval> data_;
};

class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  IntervalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  // Row-major point matrix.
  static IntervalMatrix from_point(std::size_t rows, std::size_t cols, std::span<const double> values);
  static IntervalMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Interval& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Interval& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  IntervalVector row(std::size_t i) const;
  IntervalMatrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Interval> data_;
};

IntervalVector operator+(const IntervalVector& x, const IntervalVector& y);
IntervalVector operator-(const IntervalVector& x, const IntervalVector& y);
IntervalVector operator*(const IntervalMatrix& a, const IntervalVector& x);
IntervalMatrix operator*(const IntervalMatrix& a, const IntervalMatrix& b);
Interval dot(const IntervalVector& x, const IntervalVector& y);

// Enclosures of the exact 1- and infinity-norms. Both throw on empty input.
Interval norm_1(const IntervalVector& v);
Interval norm_inf(const IntervalVector& v);

// Box [c - r, c + r] in every coordinate, rounded outward.
IntervalVector box_around(std::span<const double> center, double radius);

}  // namespace divergence::interval
