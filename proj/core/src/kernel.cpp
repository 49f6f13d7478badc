#include "mflab/kernel.hpp"

#include <cmath>
#include <numeric>

#include "mflab/errors.hpp"

namespace mflab {

double ParamVector::sum() const { return std::accumulate(q.begin(), q.end(), 0.0); }

std::string ParamVector::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (i) s += ",";
    s += format_double(q[i]);
  }
  return s + ")";
}

std::string to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::Olsen: return "olsen";
    case KernelVariant::Product: return "product";
    case KernelVariant::PerturbedProduct: return "perturbed";
  }
  return "?";
}

KernelVariant kernel_variant_from_string(const std::string& s) {
  if (s == "olsen") return KernelVariant::Olsen;
  if (s == "product") return KernelVariant::Product;
  if (s == "perturbed") return KernelVariant::PerturbedProduct;
  throw ParamError("variant", "unknown kernel variant '" + s + "' (olsen | product | perturbed)");
}

Kernel::Kernel(KernelVariant variant, std::shared_ptr<const CascadeMeasure> measure, double lambda_c)
    : variant_(variant), measure_(std::move(measure)), lambda_c_(lambda_c) {
  if (!measure_) throw InvalidArgument("kernel needs a measure");
  if (variant_ != KernelVariant::PerturbedProduct && lambda_c_ != 0.0)
    throw ParamError("lambda_c", "only the perturbed kernel takes a lambda profile");
}

double Kernel::weight(const ParamVector& q) const {
  if (q.dim() != dim())
    throw InvalidArgument("parameter vector of dimension " + std::to_string(q.dim()) + " for a " +
                          std::to_string(dim()) + "-dimensional kernel");
  return variant_ == KernelVariant::Olsen ? q.q[0] : q.q[0] + q.q[1];
}

double Kernel::chi_at(double w, double log2_mass, int depth) const {
  const double base = w == 0.0 ? 0.0 : w * log2_mass * std::log(2.0);
  if (variant_ != KernelVariant::PerturbedProduct) return base;
  return base + ((depth % 2 == 0) ? lambda_c_ : -lambda_c_);
}

double Kernel::chi_at(const ParamVector& q, double log2_mass, int depth) const {
  return chi_at(weight(q), log2_mass, depth);
}

double Kernel::chi_cylinder(const ParamVector& q, const Word& c) const {
  return chi_at(q, measure_->log2_mass(c), c.length());
}

double Kernel::chi_pair(const ParamVector& q, const Point& x, const DyadicRadius& r) const {
  return chi_cylinder(q, ball_of(x, r).word());
}

double Kernel::lambda_at(int depth) const {
  if (variant_ != KernelVariant::PerturbedProduct || depth <= 0) return 0.0;
  return std::abs(lambda_c_) / (depth * std::log(2.0));
}

double alpha_pair(const AlphaForm& alpha, const ParamVector& q) { return alpha.a * q.sum(); }

}  // namespace mflab
