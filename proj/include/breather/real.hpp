#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>
#include <cmath>
#include <limits>

namespace breather {

using quad = boost::multiprecision::float128;

// pi to the precision of R
template <class R>
inline R pi_v() {
    if constexpr (std::is_same_v<R, double>) return 3.141592653589793238462643383279502884;
    else return boost::math::constants::pi<R>();
}

template <class R>
inline double to_d(const R& x) { return static_cast<double>(x); }

template <class R>
inline bool finite(const R& x) {
    using std::isfinite;
    using boost::multiprecision::isfinite;
    return isfinite(x);
}

}  // namespace breather
