#pragma once

// Scalar-generic algebra of the BFGS example: the rho sequence over one
// 36-step cycle, the companion-like factors Phi(rho), their product Psi and
// characteristic polynomials. Written over any field-like T so the same code
// runs in double, extended precision, intervals and jets.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "divergence/jet.hpp"

namespace divergence::bfgs {

inline constexpr int kN = 9;
inline constexpr int kCycle = 36;
inline constexpr int kRepeats = 16;
inline constexpr int kPeriod = kCycle * kRepeats;
inline constexpr int kExponent = 4;
inline constexpr int kFree = 11;  // rho_0..rho_9 and rho_18

template <class T>
struct Square9 {
  std::array<T, kN * kN> a{};

  T& operator()(int i, int j) { return a[i * kN + j]; }
  const T& operator()(int i, int j) const { return a[i * kN + j]; }

  static Square9 zero() {
    Square9 m;
    m.a.fill(T(0));
    return m;
  }
  static Square9 identity() {
    Square9 m = zero();
    for (int i = 0; i < kN; ++i) m(i, i) = T(1);
    return m;
  }
  Square9 transpose() const {
    Square9 t;
    for (int i = 0; i < kN; ++i)
      for (int j = 0; j < kN; ++j) t(i, j) = (*this)(j, i);
    return t;
  }
  T trace() const {
    T t = a[0];
    for (int i = 1; i < kN; ++i) t = t + (*this)(i, i);
    return t;
  }
};

template <class T>
Square9<T> operator*(const Square9<T>& x, const Square9<T>& y) {
  Square9<T> r;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) {
      T acc = x(i, 0) * y(0, j);
      for (int k = 1; k < kN; ++k) acc = acc + x(i, k) * y(k, j);
      r(i, j) = acc;
    }
  return r;
}

// Phi(rho): ones on the subdiagonal and last column (-rho, rho, 0, ..., 0).
template <class T>
Square9<T> phi_matrix(const T& rho) {
  Square9<T> m = Square9<T>::zero();
  for (int i = 1; i < kN; ++i) m(i, i - 1) = T(1);
  m(0, kN - 1) = -rho;
  m(1, kN - 1) = rho;
  return m;
}

// Product with the sparse factor Phi(rho) on the right, O(n^2).
template <class T>
Square9<T> times_phi(const Square9<T>& x, const T& rho) {
  Square9<T> r;
  for (int i = 0; i < kN; ++i) {
    for (int j = 0; j + 1 < kN; ++j) r(i, j) = x(i, j + 1);
    r(i, kN - 1) = (x(i, 1) - x(i, 0)) * rho;
  }
  return r;
}

// Constants of the example in the scalar type: s = sqrt(2 + sqrt 2) and
// u^2 = lam^72 = 1 / (1 + s).
template <class T>
struct Constants {
  T s;
  T u2;
};

template <class T>
struct is_jet : std::false_type {};
template <class U>
struct is_jet<Jet<U>> : std::true_type {};

template <class T>
Constants<T> constants() {
  if constexpr (is_jet<T>::value) {
    using U = std::decay_t<decltype(std::declval<T>().value())>;
    const auto c = constants<U>();
    return {T(c.s), T(c.u2)};
  } else {
    using std::sqrt;
    const T two(2);
    const T s = sqrt(T(two + sqrt(two)));
    return {s, T(T(1) / T(T(1) + s))};
  }
}

// Full cycle rho_0..rho_35 from the free values (rho_0..rho_9, rho_18):
// rho_10..17 = rho_9, rho_19..26 = rho_18 and
// rho_{27+j} = +-u^2 / (rho_j rho_9 rho_18), + for j < 4, - otherwise.
template <class T>
std::array<T, kCycle> expand_rho(const std::vector<T>& free, const T& u2) {
  if (free.size() != kFree) throw std::invalid_argument("expand_rho: need 11 free values");
  std::array<T, kCycle> r;
  for (int k = 0; k < 10; ++k) r[k] = free[k];
  for (int k = 10; k < 18; ++k) r[k] = free[9];
  r[18] = free[10];
  for (int k = 19; k < 27; ++k) r[k] = free[10];
  const T tail = free[9] * free[10];
  for (int j = 0; j < 9; ++j) {
    const T v = u2 / (free[j] * tail);
    r[27 + j] = j < 4 ? v : T(-v);
  }
  return r;
}

// Psi = Phi(rho_0) Phi(rho_1) ... Phi(rho_35).
template <class T>
Square9<T> psi_product(const std::array<T, kCycle>& rho) {
  Square9<T> m = phi_matrix(rho[0]);
  for (int k = 1; k < kCycle; ++k) m = times_phi(m, rho[k]);
  return m;
}

// det(x I - A) = x^9 + c[1] x^8 + ... + c[9], c[0] = 1 (Faddeev-LeVerrier).
template <class T>
std::array<T, kN + 1> charpoly(const Square9<T>& a) {
  std::array<T, kN + 1> c;
  c[0] = T(1);
  Square9<T> m = Square9<T>::identity();
  for (int k = 1; k <= kN; ++k) {
    const Square9<T> am = a * m;
    c[k] = T(-am.trace()) / T(double(k));
    if (k < kN) {
      m = am;
      for (int i = 0; i < kN; ++i) m(i, i) = m(i, i) + c[k];
    }
  }
  return c;
}

namespace detail {

template <class T>
std::vector<T> poly_mul(const std::vector<T>& p, const std::vector<T>& q) {
  std::vector<T> r(p.size() + q.size() - 1, T(0));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] = r[i + j] + p[i] * q[j];
  return r;
}

}  // namespace detail

// Monic polynomial with roots -u^4, u^4 e^(+-7 i pi/8), +-u^3 i and the four
// primitive 8th roots of unity:
//   (x + u^4)(x^2 + s u^4 x + u^8)(x^2 + u^6)(x^4 + 1),
// coefficients from the highest degree down, built from u^2 and s only.
template <class T>
std::array<T, kN + 1> target_charpoly(const Constants<T>& c) {
  const T u4 = c.u2 * c.u2;
  const T u6 = u4 * c.u2;
  const T u8 = u4 * u4;
  using detail::poly_mul;
  std::vector<T> p = {T(1), u4};
  p = poly_mul(p, std::vector<T>{T(1), T(c.s * u4), u8});
  p = poly_mul(p, std::vector<T>{T(1), T(0), u6});
  p = poly_mul(p, std::vector<T>{T(1), T(0), T(0), T(0), T(1)});
  std::array<T, kN + 1> out;
  for (int i = 0; i <= kN; ++i) out[i] = p[i];
  return out;
}

// Residuals c_i(Psi(rho)) - target_i for i = 1..9.
template <class T>
std::vector<T> charpoly_residuals(const std::vector<T>& free) {
  const auto k = constants<T>();
  const auto c = charpoly(psi_product(expand_rho(free, k.u2)));
  const auto t = target_charpoly(k);
  std::vector<T> r;
  for (int i = 1; i <= kN; ++i) r.push_back(T(c[i] - t[i]));
  return r;
}

// The square system certified with the Moore test: unknowns are the free
// slots not in `fixed`, equations are c_2..c_8 (c_1 and c_9 hold identically
// along the parametrisation).
struct ReducedSystem {
  std::array<int, 4> fixed_slots{};
  std::array<double, 4> fixed_values{};

  std::vector<int> unknown_slots() const {
    std::vector<int> out;
    for (int i = 0; i < kFree; ++i) {
      bool f = false;
      for (int s : fixed_slots) f = f || s == i;
      if (!f) out.push_back(i);
    }
    return out;
  }

  template <class T>
  std::vector<T> full(const std::vector<T>& unknowns) const {
    std::vector<T> free(kFree);
    const auto slots = unknown_slots();
    for (std::size_t i = 0; i < slots.size(); ++i) free[slots[i]] = unknowns[i];
    for (int i = 0; i < 4; ++i) free[fixed_slots[i]] = T(fixed_values[i]);
    return free;
  }

  template <class T>
  std::vector<T> operator()(const std::vector<T>& unknowns) const {
    const auto r = charpoly_residuals(full(unknowns));
    return std::vector<T>(r.begin() + 1, r.begin() + 8);
  }
};

}  // namespace divergence::bfgs
