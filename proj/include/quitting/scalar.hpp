#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <boost/multiprecision/cpp_int.hpp>

namespace quitting {

using rational = boost::multiprecision::cpp_rational;

template <class T>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static double from_double(double x) { return x; }
  static double to_double(double x) { return x; }
  // Exact arithmetic works with zero tolerances; floating point needs slack.
  static double tol(double t) { return t; }
  static std::string to_string(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
  }
};

template <>
struct scalar_traits<rational> {
  static constexpr bool exact = true;
  static rational from_double(double x) { return rational(x); }
  static double to_double(const rational& x) { return x.template convert_to<double>(); }
  static rational tol(double) { return rational(0); }
  static std::string to_string(const rational& x) {
    return boost::multiprecision::numerator(x).str() + "/" +
           boost::multiprecision::denominator(x).str();
  }
};

inline double abs_val(double x) { return std::fabs(x); }

inline rational abs_val(const rational& x) { return x < 0 ? rational(-x) : x; }

template <class T>
T tol_v(double t) {
  return scalar_traits<T>::tol(t);
}

}  // namespace quitting
