#include "leo/num/gradcheck.hpp"

#include <cmath>

namespace leo::num {

namespace {

double eval_value(const LossFn& f, const std::vector<NamedParam>& params) {
  Tape tape(/*grad_enabled=*/false);
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (const NamedParam& p : params) {
    leaves.push_back(tape.leaf(p.shape, p.data, /*requires_grad=*/false));
  }
  return f(tape, leaves).item();
}

}  // namespace

GradCheckReport finite_diff_check(const LossFn& f,
                                  std::vector<NamedParam>& params,
                                  double eps) {
  if (!(eps > 0.0)) {
    throw ContractError("finite_diff_check: eps must be positive");
  }

  // Analytic pass. Run the function twice at the base point: an f that is
  // not deterministic invalidates the whole comparison.
  std::vector<std::vector<double>> analytic;
  double base_value = 0.0;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(params.size());
    for (const NamedParam& p : params) {
      leaves.push_back(tape.leaf(p.shape, p.data, /*requires_grad=*/true));
    }
    const Tensor loss = f(tape, leaves);
    base_value = loss.item();
    tape.backward(loss);
    for (const Tensor& leaf : leaves) {
      const auto g = leaf.grad();
      analytic.emplace_back(g.begin(), g.end());
    }
  }
  if (eval_value(f, params) != base_value) {
    throw ContractError(
        "finite_diff_check: f is not deterministic (two evaluations at the "
        "same point disagree)");
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    NamedParam& p = params[pi];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + eps;
      const double up = eval_value(f, params);
      p.data[i] = saved - eps;
      const double down = eval_value(f, params);
      p.data[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.n_entries;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace leo::num
