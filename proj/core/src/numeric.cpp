#include "mflab/numeric.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <limits>

#include "mflab/errors.hpp"

namespace mflab {

Rational decimal_to_rational(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot convert a non-finite value to a fraction");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  std::string s(buf, res.ptr);
  const auto epos = s.find('e');
  std::string mant = s.substr(0, epos);
  int exp10 = std::stoi(s.substr(epos + 1));
  bool neg = false;
  if (!mant.empty() && mant[0] == '-') {
    neg = true;
    mant.erase(0, 1);
  }
  std::string digits;
  for (char c : mant) {
    if (c == '.') continue;
    digits.push_back(c);
  }
  const auto dot = mant.find('.');
  if (dot != std::string::npos) exp10 -= static_cast<int>(mant.size() - dot - 1);
  boost::multiprecision::cpp_int num(digits);
  boost::multiprecision::cpp_int ten_pow = boost::multiprecision::pow(boost::multiprecision::cpp_int(10),
                                                                      static_cast<unsigned>(std::abs(exp10)));
  Rational r = exp10 >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
  return neg ? Rational(-r) : r;
}

double log2_rational(const Rational& r) {
  using boost::multiprecision::cpp_int;
  if (r <= 0) throw std::domain_error("log2 of a nonpositive rational");
  auto log2_int = [](const cpp_int& n) {
    const long bits = static_cast<long>(boost::multiprecision::msb(n));
    if (bits < 60) return std::log2(n.convert_to<double>());
    const cpp_int top = n >> static_cast<unsigned>(bits - 60);
    return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 60);
  };
  return log2_int(boost::multiprecision::numerator(r)) - log2_int(boost::multiprecision::denominator(r));
}

std::string rational_to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void Log2Sum::add(double t) {
  if (t == -std::numeric_limits<double>::infinity()) return;
  if (empty_) {
    max_ = t;
    acc_ = 1.0;
    empty_ = false;
    return;
  }
  if (t <= max_) {
    acc_ += std::exp2(t - max_);
  } else {
    acc_ = acc_ * std::exp2(max_ - t) + 1.0;
    max_ = t;
  }
}

double Log2Sum::value() const {
  if (empty_) return -std::numeric_limits<double>::infinity();
  return max_ + std::log2(acc_);
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DegenerateFit("need at least two points to fit a line");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw DegenerateFit("all abscissae coincide");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace mflab
