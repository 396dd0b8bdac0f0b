#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "leo/num/gradcheck.hpp"
#include "leo/num/tensor.hpp"
#include "leo/rng.hpp"

using namespace leo;
using namespace leo::num;

namespace {

std::vector<double> randu(Rng& rng, std::size_t n, double lo = -1.0,
                          double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Scalar-izes an op output against fixed random weights so every output
// entry contributes to the checked gradient.
Tensor weighted_total(Tape& tape, const Tensor& y,
                      const std::vector<double>& w) {
  const Tensor wt = tape.leaf(Shape::vec(w.size()), w, false);
  if (y.shape().rank() == 1) return dot(y, wt);
  // rank-2: flatten via per-row dot and sum
  Tensor acc = tape.scalar(0.0);
  const std::size_t c = y.shape().cols();
  for (std::size_t r = 0; r < y.shape().rows(); ++r) {
    const Tensor wr =
        tape.leaf(Shape::vec(c),
                  std::span<const double>(w.data() + r * c, c), false);
    acc = add(acc, dot(row(y, r), wr));
  }
  return acc;
}

}  // namespace

TEST_CASE("matmul identity and 1x2 * 2x1") {
  Tape tape(false);
  const std::vector<double> eye{1, 0, 0, 1};
  const std::vector<double> m{2, 3, 4, 5};
  const Tensor a = tape.leaf(Shape::mat(2, 2), eye);
  const Tensor b = tape.leaf(Shape::mat(2, 2), m);
  const Tensor c = matmul(a, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(c.values()[i] == m[i]);

  const Tensor r = tape.leaf(Shape::mat(1, 2), std::vector<double>{1, 2});
  const Tensor col = tape.leaf(Shape::mat(2, 1), std::vector<double>{3, 4});
  CHECK(matmul(r, col).values()[0] == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul shape error names both shapes") {
  Tape tape(false);
  const Tensor a = tape.zeros(Shape::mat(2, 3));
  const Tensor b = tape.zeros(Shape::mat(2, 2));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x2]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient vs finite differences (3x4 * 4x2)") {
  Rng rng(42);
  std::vector<NamedParam> params;
  params.push_back({"A", Shape::mat(3, 4), randu(rng, 12)});
  params.push_back({"B", Shape::mat(4, 2), randu(rng, 8)});
  const auto f = [](Tape&, const std::vector<Tensor>& leaves) {
    return sum(matmul(leaves[0], leaves[1]));
  };
  const auto report = finite_diff_check(f, params, 1e-5);
  CHECK(report.max_rel_err <= 1e-5);
}

TEST_CASE("masked_softmax spec examples") {
  Tape tape(false);
  const Tensor a = tape.leaf(Shape::vec(2), std::vector<double>{0, 0});
  const auto pa = softmax(a).values();
  CHECK(pa[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pa[1] == doctest::Approx(0.5).epsilon(1e-15));

  const Tensor b = tape.leaf(Shape::vec(3), std::vector<double>{1, 1, 1});
  const std::vector<std::uint8_t> mask{1, 1, 0};
  const auto pb = masked_softmax(b, mask).values();
  CHECK(pb[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb[2] == 0.0);

  const Tensor c =
      tape.leaf(Shape::vec(2), std::vector<double>{std::log(2.0), 0.0});
  const auto pc = softmax(c).values();
  CHECK(pc[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pc[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("masked_softmax domain error when all masked") {
  Tape tape(false);
  const Tensor v = tape.leaf(Shape::vec(2), std::vector<double>{1, 2});
  const std::vector<std::uint8_t> mask{0, 0};
  CHECK_THROWS_AS(masked_softmax(v, mask), DomainError);
}

TEST_CASE("masked_softmax sums to one and shift invariance") {
  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<std::uint8_t> mask(n, 0);
    std::size_t kept = 0;
    for (auto& m : mask) kept += (m = rng.bernoulli(0.7) ? 1 : 0);
    if (kept == 0) mask[rng.uniform_index(n)] = 1;

    const auto logits = randu(rng, n, -30.0, 30.0);
    Tape tape(false);
    const Tensor v = tape.leaf(Shape::vec(n), logits);
    const auto pspan = masked_softmax(v, mask).values();
    const std::vector<double> p(pspan.begin(), pspan.end());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) {
        CHECK(p[i] > 0.0);
        s += p[i];
      } else {
        CHECK(p[i] == 0.0);
      }
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);

    auto shifted = logits;
    const double c = rng.uniform(-50.0, 50.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) shifted[i] += c;
    }
    const Tensor v2 = tape.leaf(Shape::vec(n), shifted);
    const auto p2 = masked_softmax(v2, mask).values();
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(p[i] - p2[i]) <= 1e-10);
    }
  }
}

TEST_CASE("lstm_cell zero weights") {
  const std::size_t h = 3, in = 2;
  Tape tape(false);
  const LstmWeights w{tape.zeros(Shape::mat(4 * h, in)),
                      tape.zeros(Shape::mat(4 * h, h)),
                      tape.zeros(Shape::vec(4 * h))};
  const Tensor x = tape.leaf(Shape::vec(in), std::vector<double>{1.0, -2.0});
  const LstmState s0{tape.zeros(Shape::vec(h)), tape.zeros(Shape::vec(h))};
  const LstmState s1 = lstm_cell(x, s0, w);
  for (double v : s1.h.values()) CHECK(v == 0.0);
  for (double v : s1.c.values()) CHECK(v == 0.0);
}

TEST_CASE("lstm_cell zero weights with nonzero cell state") {
  Tape tape(false);
  const LstmWeights w{tape.zeros(Shape::mat(4, 1)),
                      tape.zeros(Shape::mat(4, 1)),
                      tape.zeros(Shape::vec(4))};
  const Tensor x = tape.leaf(Shape::vec(1), std::vector<double>{0.3});
  const LstmState s0{tape.zeros(Shape::vec(1)),
                     tape.leaf(Shape::vec(1), std::vector<double>{2.0})};
  const LstmState s1 = lstm_cell(x, s0, w);
  CHECK(s1.c.values()[0] == doctest::Approx(1.0).epsilon(1e-15));
  const double expect_h = 0.5 * std::tanh(1.0);
  CHECK(s1.h.values()[0] == doctest::Approx(expect_h).epsilon(1e-12));
  CHECK(s1.h.values()[0] == doctest::Approx(0.380797).epsilon(1e-5));
}

TEST_CASE("lstm_cell gradient of sum(h) vs finite differences") {
  Rng rng(11);
  const std::size_t h = 3, in = 2;
  std::vector<NamedParam> params;
  params.push_back({"w_x", Shape::mat(4 * h, in), randu(rng, 4 * h * in)});
  params.push_back({"w_h", Shape::mat(4 * h, h), randu(rng, 4 * h * h)});
  params.push_back({"b", Shape::vec(4 * h), randu(rng, 4 * h)});
  const auto x_data = randu(rng, in);
  const auto h_data = randu(rng, h);
  const auto c_data = randu(rng, h);
  const auto f = [&](Tape& tape, const std::vector<Tensor>& leaves) {
    const Tensor x = tape.leaf(Shape::vec(in), x_data);
    const LstmState s0{tape.leaf(Shape::vec(h), h_data),
                       tape.leaf(Shape::vec(h), c_data)};
    const LstmWeights w{leaves[0], leaves[1], leaves[2]};
    return sum(lstm_cell(x, s0, w).h);
  };
  const auto report = finite_diff_check(f, params, 1e-5);
  CHECK(report.max_rel_err <= 1e-4);
}

TEST_CASE("backward on sum of squares") {
  Tape tape;
  const Tensor w =
      tape.leaf(Shape::vec(3), std::vector<double>{1, 2, 3}, true);
  const Tensor loss = dot(w, w);
  tape.backward(loss);
  const auto g = w.grad();
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
  CHECK(g[2] == 6.0);
}

TEST_CASE("backward with constant loss leaves grads zero") {
  Tape tape;
  const Tensor w = tape.leaf(Shape::vec(2), std::vector<double>{1, 2}, true);
  const Tensor c = tape.scalar(5.0);
  const Tensor loss = mul(c, c);
  tape.backward(loss);
  CHECK(w.grad()[0] == 0.0);
  CHECK(w.grad()[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  const Tensor w = tape.leaf(Shape::vec(2), std::vector<double>{1, 2}, true);
  const Tensor y = add(w, w);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("backward is deterministic across reruns") {
  Rng rng(3);
  Tape tape;
  const Tensor w = tape.leaf(Shape::vec(6), randu(rng, 6), true);
  const Tensor m = tape.leaf(Shape::mat(4, 6), randu(rng, 24), true);
  const Tensor y = sigmoid(matvec(m, w));
  const Tensor loss = dot(y, y);
  tape.backward(loss);
  std::vector<double> g1(w.grad().begin(), w.grad().end());
  std::vector<double> gm1(m.grad().begin(), m.grad().end());
  tape.backward(loss);
  CHECK(std::memcmp(g1.data(), w.grad().data(),
                    g1.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(gm1.data(), m.grad().data(),
                    gm1.size() * sizeof(double)) == 0);
}

TEST_CASE("gradient accumulation for repeated use") {
  Tape tape;
  const Tensor w =
      tape.leaf(Shape::vec(4), std::vector<double>{0.5, -1.25, 3.0, 7.5},
                true);
  tape.backward(dot(w, w));
  const auto g = w.grad();
  const auto v = w.values();
  for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == 2.0 * v[i]);
}

TEST_CASE("finite_diff_check on linear and tanh functions") {
  Rng rng(5);
  const auto a = randu(rng, 6);
  std::vector<NamedParam> params;
  params.push_back({"w", Shape::vec(6), randu(rng, 6)});
  const auto linear = [&](Tape& tape, const std::vector<Tensor>& leaves) {
    return dot(leaves[0], tape.leaf(Shape::vec(6), a));
  };
  CHECK(finite_diff_check(linear, params, 1e-5).max_rel_err <= 1e-9);

  std::vector<NamedParam> p2;
  p2.push_back({"w", Shape::vec(3), {0.3, -0.8, 1.7}});
  const auto tanh_fn = [](Tape&, const std::vector<Tensor>& leaves) {
    return pick(num::tanh(leaves[0]), 0);
  };
  CHECK(finite_diff_check(tanh_fn, p2, 1e-5).max_rel_err <= 1e-6);
}

TEST_CASE("finite_diff_check flags corrupted gradients") {
  // Value is 2*w0 but the recorded graph only carries gradient 1 (the
  // second addend is detached), emulating a doubled-value / halved-grad bug.
  std::vector<NamedParam> params;
  params.push_back({"w", Shape::vec(1), {0.7}});
  const auto f = [](Tape& tape, const std::vector<Tensor>& leaves) {
    const Tensor detached =
        tape.leaf(Shape::vec(1), leaves[0].values(), false);
    return sum(add(leaves[0], detached));
  };
  const auto report = finite_diff_check(f, params, 1e-5);
  CHECK(report.max_rel_err > 1e-3);
  CHECK(report.max_rel_err == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("every primitive op passes randomized gradient checks") {
  Rng rng(2024);
  std::size_t instances = 0;

  const auto check = [&](const char* name,
                         std::vector<NamedParam> params,
                         const LossFn& f) {
    const auto report = finite_diff_check(f, params, 1e-5);
    INFO(name << " worst " << report.worst_param << "["
              << report.worst_index << "] rel err " << report.max_rel_err);
    CHECK(report.max_rel_err <= 1e-4);
    ++instances;
  };

  for (int it = 0; it < 8; ++it) {
    const std::size_t n = 1 + rng.uniform_index(5);
    const std::size_t m = 1 + rng.uniform_index(5);
    const std::size_t k = 1 + rng.uniform_index(5);

    const auto wn = randu(rng, n);
    const auto wm = randu(rng, m);
    const auto wmn = randu(rng, m * n);

    check("add", {{"a", Shape::vec(n), randu(rng, n)},
                  {"b", Shape::vec(n), randu(rng, n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, add(l[0], l[1]), wn);
          });

    check("mul", {{"a", Shape::vec(n), randu(rng, n)},
                  {"b", Shape::vec(n), randu(rng, n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, mul(l[0], l[1]), wn);
          });

    const double c = rng.uniform(-2.0, 2.0);
    check("scale", {{"a", Shape::vec(n), randu(rng, n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, scale(l[0], c), wn);
          });

    check("sigmoid", {{"a", Shape::vec(n), randu(rng, n, -3, 3)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, sigmoid(l[0]), wn);
          });

    check("tanh", {{"a", Shape::vec(n), randu(rng, n, -3, 3)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, num::tanh(l[0]), wn);
          });

    check("log", {{"a", Shape::vec(n), randu(rng, n, 0.5, 2.0)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, num::log(l[0]), wn);
          });

    check("matmul", {{"a", Shape::mat(m, k), randu(rng, m * k)},
                     {"b", Shape::mat(k, n), randu(rng, k * n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, matmul(l[0], l[1]), wmn);
          });

    check("matvec", {{"w", Shape::mat(m, n), randu(rng, m * n)},
                     {"x", Shape::vec(n), randu(rng, n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, matvec(l[0], l[1]), wm);
          });

    check("vecmat", {{"v", Shape::vec(m), randu(rng, m)},
                     {"m", Shape::mat(m, n), randu(rng, m * n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, vecmat(l[0], l[1]), wn);
          });

    check("dot", {{"a", Shape::vec(n), randu(rng, n)},
                  {"b", Shape::vec(n), randu(rng, n)}},
          [&](Tape&, const std::vector<Tensor>& l) {
            return dot(l[0], l[1]);
          });

    check("sum", {{"a", Shape::vec(n), randu(rng, n)}},
          [&](Tape&, const std::vector<Tensor>& l) { return sum(l[0]); });

    const auto wcat = randu(rng, n + m);
    check("concat", {{"a", Shape::vec(n), randu(rng, n)},
                     {"b", Shape::vec(m), randu(rng, m)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            const std::vector<Tensor> xs{l[0], l[1]};
            return weighted_total(t, concat(xs), wcat);
          });

    const std::size_t whole = n + 2;
    const std::size_t lo = rng.uniform_index(whole - n + 1);
    check("slice", {{"a", Shape::vec(whole), randu(rng, whole)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, slice(l[0], lo, n), wn);
          });

    const std::size_t idx = rng.uniform_index(n);
    check("pick", {{"a", Shape::vec(n), randu(rng, n)}},
          [&](Tape&, const std::vector<Tensor>& l) {
            return pick(l[0], idx);
          });

    const std::size_t r = rng.uniform_index(m);
    check("row", {{"m", Shape::mat(m, n), randu(rng, m * n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, row(l[0], r), wn);
          });

    const auto wstack = randu(rng, 2 * n);
    check("stack_rows", {{"a", Shape::vec(n), randu(rng, n)},
                         {"b", Shape::vec(n), randu(rng, n)}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            const std::vector<Tensor> xs{l[0], l[1]};
            return weighted_total(t, stack_rows(xs), wstack);
          });

    // keep operands separated so the max kink stays away from the
    // finite-difference step
    auto pa = randu(rng, n);
    auto pb = pa;
    for (double& x : pb) x += (rng.bernoulli(0.5) ? 1 : -1) * 0.2;
    check("pair_max", {{"a", Shape::vec(n), pa}, {"b", Shape::vec(n), pb}},
          [&](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, pair_max(l[0], l[1]), wn);
          });

    std::vector<std::uint8_t> mask(n, 1);
    if (n > 1) mask[rng.uniform_index(n)] = 0;
    bool any = false;
    for (auto b : mask) any = any || b;
    if (!any) mask[0] = 1;
    check("masked_softmax", {{"v", Shape::vec(n), randu(rng, n, -2, 2)}},
          [&, mask](Tape& t, const std::vector<Tensor>& l) {
            return weighted_total(t, masked_softmax(l[0], mask), wn);
          });
  }
  CHECK(instances >= 100);
}

TEST_CASE("tensors from different tapes are rejected") {
  Tape t1(false), t2(false);
  const Tensor a = t1.zeros(Shape::vec(2));
  const Tensor b = t2.zeros(Shape::vec(2));
  CHECK_THROWS_AS(add(a, b), ContractError);
}

TEST_CASE("all_finite detects NaN and Inf") {
  Tape tape(false);
  const Tensor ok = tape.leaf(Shape::vec(2), std::vector<double>{1.0, 2.0});
  CHECK(ok.all_finite());
  const Tensor bad = tape.leaf(
      Shape::vec(2),
      std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_FALSE(bad.all_finite());
}
