#pragma once

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mflab {

using Rational = boost::multiprecision::cpp_rational;

// 0.3 -> 3/10: goes through the shortest round-trip decimal so user-facing
// probabilities stay the fractions they were written as.
Rational decimal_to_rational(double x);

std::string rational_to_string(const Rational& r);  // "num/den" or "num"
// log2 of a positive rational without overflowing doubles
double log2_rational(const Rational& r);

// shortest round-trip text; stable across runs
std::string format_double(double x);

// log-sum-exp accumulator in base-2 exponent space
class Log2Sum {
 public:
  void add(double log2_term);
  void add_scaled(double log2_term, double log2_count) { add(log2_term + log2_count); }
  bool empty() const { return empty_; }
  double value() const;  // -inf when empty

 private:
  double max_ = 0.0;
  double acc_ = 0.0;
  bool empty_ = true;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mflab
