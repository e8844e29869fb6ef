#pragma once

// Forward-mode first derivatives: a value together with its gradient with
// respect to a fixed set of variables. An empty gradient means "constant".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace divergence {

template <class T>
class Jet {
 public:
  Jet() : value_(0) {}
  Jet(T value) : value_(std::move(value)) {}  // NOLINT: constants convert implicitly
  Jet(T value, std::vector<T> gradient) : value_(std::move(value)), grad_(std::move(gradient)) {}

  static Jet variable(T value, std::size_t n, std::size_t index) {
    std::vector<T> g(n, T(0));
    g[index] = T(1);
    return Jet(std::move(value), std::move(g));
  }

  const T& value() const { return value_; }
  const std::vector<T>& gradient() const { return grad_; }
  T derivative(std::size_t i) const { return i < grad_.size() ? grad_[i] : T(0); }

  Jet& operator+=(const Jet& y) { return *this = *this + y; }
  Jet& operator-=(const Jet& y) { return *this = *this - y; }
  Jet& operator*=(const Jet& y) { return *this = *this * y; }
  Jet& operator/=(const Jet& y) { return *this = *this / y; }

  // d(result) = a*d(x) + b*d(y)
  static Jet combine(T value, const T& a, const Jet& x, const T& b, const Jet& y) {
    const std::size_t n = std::max(x.grad_.size(), y.grad_.size());
    std::vector<T> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < x.grad_.size() && i < y.grad_.size())
        g[i] = a * x.grad_[i] + b * y.grad_[i];
      else if (i < x.grad_.size())
        g[i] = a * x.grad_[i];
      else
        g[i] = b * y.grad_[i];
    }
    return Jet(std::move(value), std::move(g));
  }

  static Jet scale(T value, const T& a, const Jet& x) {
    std::vector<T> g(x.grad_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = a * x.grad_[i];
    return Jet(std::move(value), std::move(g));
  }

  friend Jet operator+(const Jet& x, const Jet& y) { return combine(x.value_ + y.value_, T(1), x, T(1), y); }
  friend Jet operator-(const Jet& x, const Jet& y) { return combine(x.value_ - y.value_, T(1), x, T(-1), y); }
  friend Jet operator-(const Jet& x) { return scale(-x.value_, T(-1), x); }
  friend Jet operator*(const Jet& x, const Jet& y) { return combine(x.value_ * y.value_, y.value_, x, x.value_, y); }
  friend Jet operator/(const Jet& x, const Jet& y) {
    const T q = x.value_ / y.value_;
    const T inv = T(1) / y.value_;
    return combine(q, inv, x, T(-(q * inv)), y);
  }
  friend Jet sqrt(const Jet& x) {
    using std::sqrt;
    const T s = sqrt(x.value_);
    return scale(s, T(1) / (T(2) * s), x);
  }
  friend Jet sin(const Jet& x) {
    using std::cos;
    using std::sin;
    return scale(sin(x.value_), cos(x.value_), x);
  }
  friend Jet cos(const Jet& x) {
    using std::cos;
    using std::sin;
    return scale(cos(x.value_), T(-sin(x.value_)), x);
  }
  friend Jet exp(const Jet& x) {
    using std::exp;
    const T e = exp(x.value_);
    return scale(e, e, x);
  }

 private:
  T value_;
  std::vector<T> grad_;
};

}  // namespace divergence
