#pragma once

// cos and sin of integer multiples of pi/24 from nested square roots. Works
// for any number type with sqrt found by ADL (double, Interval, multiprecision).

#include <array>
#include <cmath>

namespace divergence {

template <class T>
T cos_pi24(int k) {
  using std::sqrt;
  k = ((k % 48) + 48) % 48;
  if (k > 24) k = 48 - k;  // cos(2pi - x) = cos x
  bool negate = false;
  if (k > 12) {  // cos(pi - x) = -cos x
    k = 24 - k;
    negate = true;
  }
  const T two(2);
  const T r2 = sqrt(two);
  const T r3 = sqrt(T(3));
  T v;
  switch (k) {
    case 0: v = T(1); break;
    case 1: v = sqrt(two + sqrt(two + r3)) / two; break;
    case 2: v = sqrt(two + r3) / two; break;
    case 3: v = sqrt(two + r2) / two; break;
    case 4: v = r3 / two; break;
    case 5: v = sqrt(two + sqrt(two - r3)) / two; break;
    case 6: v = r2 / two; break;
    case 7: v = sqrt(two - sqrt(two - r3)) / two; break;
    case 8: v = T(1) / two; break;
    case 9: v = sqrt(two - r2) / two; break;
    case 10: v = sqrt(two - r3) / two; break;
    case 11: v = sqrt(two - sqrt(two + r3)) / two; break;
    default: v = T(0); break;
  }
  return negate ? T(-v) : v;
}

template <class T>
T sin_pi24(int k) {
  return cos_pi24<T>(12 - k);
}

// Counterclockwise rotation by k*pi/24, row-major {c, -s, s, c}.
template <class T>
std::array<T, 4> rotation_pi24(int k) {
  const T c = cos_pi24<T>(k);
  const T s = sin_pi24<T>(k);
  return {c, T(-s), s, c};
}

}  // namespace divergence
