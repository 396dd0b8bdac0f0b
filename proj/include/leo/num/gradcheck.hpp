#pragma once

#include <functional>
#include <string>
#include <vector>

#include "leo/num/tensor.hpp"

namespace leo::num {

// A named parameter buffer for gradient checking; the checker perturbs the
// data in place and restores it.
struct NamedParam {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

// Builds a scalar loss from leaves mounted on the given tape; leaves[i]
// corresponds to params[i]. Must be deterministic.
using LossFn =
    std::function<Tensor(Tape&, const std::vector<Tensor>& leaves)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t n_entries = 0;
};

// Compares reverse-mode gradients of f against central finite differences
// (f(p+eps e) - f(p-eps e)) / (2 eps) over every entry of every parameter.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
// Throws ContractError if two evaluations of f at the same point disagree.
GradCheckReport finite_diff_check(const LossFn& f,
                                  std::vector<NamedParam>& params,
                                  double eps);

}  // namespace leo::num
