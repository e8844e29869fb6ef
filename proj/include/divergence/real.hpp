#pragma once

// Extended-precision scalar for computations that amplify rounding errors.

#include <ios>
#include <limits>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace divergence {

using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<120>,
                                           boost::multiprecision::et_off>;

inline std::string to_string_exact(const Real& x) { return x.str(std::numeric_limits<Real>::max_digits10, std::ios::scientific); }

}  // namespace divergence
