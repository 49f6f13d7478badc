#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mflab/cascade_measure.hpp"

namespace mflab {

struct ParamVector {
  std::vector<double> q;

  ParamVector() = default;
  ParamVector(std::initializer_list<double> v) : q(v) {}
  explicit ParamVector(std::vector<double> v) : q(std::move(v)) {}

  std::size_t dim() const { return q.size(); }
  double sum() const;
  // q1 + q2 >= 0
  bool in_admissible_region() const { return sum() >= 0.0; }
  std::string to_string() const;
};

enum class KernelVariant { Olsen, Product, PerturbedProduct };
std::string to_string(KernelVariant v);
KernelVariant kernel_variant_from_string(const std::string& s);

// Evaluates <q, chi(x, r)> for balls of the symbolic space.  Olsen: q log mu;
// Product: (q1+q2) log mu; PerturbedProduct adds an alternating +-c shift,
// i.e. a sandwich width lambda(r) = c / log(1/r).
class Kernel {
 public:
  Kernel(KernelVariant variant, std::shared_ptr<const CascadeMeasure> measure, double lambda_c = 0.0);

  KernelVariant variant() const { return variant_; }
  const CascadeMeasure& measure() const { return *measure_; }
  std::shared_ptr<const CascadeMeasure> measure_ptr() const { return measure_; }
  double lambda_c() const { return lambda_c_; }
  std::size_t dim() const { return variant_ == KernelVariant::Olsen ? 1 : 2; }

  // scalar multiplying log mu: q for Olsen, q1+q2 otherwise
  double weight(const ParamVector& q) const;

  // core evaluator: natural-log value on a ball of the given depth and mass
  double chi_at(const ParamVector& q, double log2_mass, int depth) const;
  double chi_at(double weight, double log2_mass, int depth) const;

  double chi_pair(const ParamVector& q, const Point& x, const DyadicRadius& r) const;
  double chi_cylinder(const ParamVector& q, const Word& c) const;

  // sandwich width lambda(r) at r = 2^-depth (0 for the exact variants)
  double lambda_at(int depth) const;

 private:
  KernelVariant variant_;
  std::shared_ptr<const CascadeMeasure> measure_;
  double lambda_c_;
};

struct AlphaForm {
  double a = 1.0;
};

// <q, alpha> = a q (scalar) or a (q1+q2)
double alpha_pair(const AlphaForm& alpha, const ParamVector& q);

}  // namespace mflab
