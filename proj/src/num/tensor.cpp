#include "leo/num/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace leo::num {

std::string Shape::str() const {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) ss << 'x';
    ss << dim_[i];
  }
  ss << ']';
  return ss.str();
}

// Internal bridge: primitive ops live in this TU and need tape internals.
struct TapeAccess {
  using Op = Tape::Op;
  using Node = Tape::Node;

  static Tape* tape(const Tensor& t) { return t.tape_; }
  static std::uint32_t id(const Tensor& t) { return t.id_; }
  static Tensor make(Tape* tp, std::uint32_t id) { return Tensor(tp, id); }

  static std::uint32_t alloc(Tape& tp, const Shape& s, bool rg) {
    return tp.alloc_slot(s, rg);
  }
  static std::span<double> val(Tape& tp, std::uint32_t id) {
    return tp.val(id);
  }
  static const Shape& shape(const Tape& tp, std::uint32_t id) {
    return tp.slots_[id].shape;
  }
  static bool requires_grad(const Tape& tp, std::uint32_t id) {
    return tp.slots_[id].requires_grad;
  }
  static void record(Tape& tp, Node n) {
    if (tp.grad_enabled_ && tp.slots_[n.out].requires_grad) {
      tp.nodes_.push_back(n);
    }
  }
  static std::uint32_t push_aux(Tape& tp, std::span<const std::uint32_t> v) {
    const auto off = static_cast<std::uint32_t>(tp.aux_.size());
    tp.aux_.insert(tp.aux_.end(), v.begin(), v.end());
    return off;
  }
};

namespace {

using TA = TapeAccess;
using Op = TA::Op;

Tape& same_tape(std::initializer_list<const Tensor*> ts, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->defined()) {
      throw ContractError(std::string(op) + ": undefined tensor operand");
    }
    if (tape == nullptr) {
      tape = t->tape();
    } else if (tape != t->tape()) {
      throw ContractError(std::string(op) +
                          ": operands belong to different tapes");
    }
  }
  return *tape;
}

Tape& same_tape(std::span<const Tensor> ts, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor& t : ts) {
    if (!t.defined()) {
      throw ContractError(std::string(op) + ": undefined tensor operand");
    }
    if (tape == nullptr) {
      tape = t.tape();
    } else if (tape != t.tape()) {
      throw ContractError(std::string(op) +
                          ": operands belong to different tapes");
    }
  }
  return *tape;
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() +
                   " and " + b.str());
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

const Shape& Tensor::shape() const {
  if (!defined()) throw ContractError("shape() on undefined tensor");
  return TA::shape(*tape_, id_);
}

bool Tensor::requires_grad() const {
  if (!defined()) return false;
  return TA::requires_grad(*tape_, id_);
}

std::span<const double> Tensor::values() const {
  if (!defined()) throw ContractError("values() on undefined tensor");
  return tape_->val(id_);
}

std::span<const double> Tensor::grad() const {
  if (!defined()) throw ContractError("grad() on undefined tensor");
  if (!tape_->grad_enabled()) {
    throw ContractError("grad() on a tape with gradients disabled");
  }
  const auto& slot = tape_->slots_[id_];
  return {tape_->grad_.data() + slot.off, slot.shape.size()};
}

double Tensor::item() const {
  const auto v = values();
  if (v.size() != 1) {
    throw ContractError("item() on tensor of size " +
                        std::to_string(v.size()));
  }
  return v[0];
}

bool Tensor::all_finite() const {
  for (double v : values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---- Tape ------------------------------------------------------------------

std::uint32_t Tape::alloc_slot(const Shape& shape, bool requires_grad) {
  const std::size_t off = val_.size();
  val_.resize(off + shape.size(), 0.0);
  if (grad_enabled_) grad_.resize(off + shape.size(), 0.0);
  slots_.push_back(Slot{shape, off, requires_grad && grad_enabled_});
  return static_cast<std::uint32_t>(slots_.size() - 1);
}

std::span<double> Tape::val(std::uint32_t id) {
  const Slot& s = slots_[id];
  return {val_.data() + s.off, s.shape.size()};
}

std::span<const double> Tape::val(std::uint32_t id) const {
  const Slot& s = slots_[id];
  return {val_.data() + s.off, s.shape.size()};
}

std::span<double> Tape::grad_buf(std::uint32_t id) {
  const Slot& s = slots_[id];
  return {grad_.data() + s.off, s.shape.size()};
}

Tensor Tape::leaf(const Shape& shape, std::span<const double> values,
                  bool requires_grad) {
  if (values.size() != shape.size()) {
    throw ShapeError("leaf: " + std::to_string(values.size()) +
                     " values for shape " + shape.str());
  }
  // The source may view this tape's own arena, which alloc_slot can
  // relocate; stage such input first.
  const bool aliases = !val_.empty() && values.data() >= val_.data() &&
                       values.data() < val_.data() + val_.size();
  if (aliases) {
    const std::vector<double> staged(values.begin(), values.end());
    const std::uint32_t id = alloc_slot(shape, requires_grad);
    std::copy(staged.begin(), staged.end(), val(id).begin());
    return Tensor(this, id);
  }
  const std::uint32_t id = alloc_slot(shape, requires_grad);
  std::copy(values.begin(), values.end(), val(id).begin());
  return Tensor(this, id);
}

Tensor Tape::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(this, alloc_slot(shape, requires_grad));
}

Tensor Tape::scalar(double v) {
  return leaf(Shape::scalar(), std::span<const double>(&v, 1), false);
}

void Tape::backward(const Tensor& loss) {
  if (!grad_enabled_) {
    throw ContractError("backward() on a tape with gradients disabled");
  }
  if (loss.tape() != this) {
    throw ContractError("backward(): loss recorded on a different tape");
  }
  if (loss.shape().size() != 1) {
    throw ContractError("backward(): loss must be scalar, got shape " +
                        loss.shape().str());
  }
  std::fill(grad_.begin(), grad_.end(), 0.0);
  grad_buf(TA::id(loss))[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    run_backward_node(*it);
  }
}

void Tape::run_backward_node(const Node& n) {
  const auto g = grad_buf(n.out);
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (slots_[n.b].requires_grad) {
        auto db = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
      break;
    }
    case Op::kMul: {
      const auto va = val(n.a);
      const auto vb = val(n.b);
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * vb[i];
      }
      if (slots_[n.b].requires_grad) {
        auto db = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * va[i];
      }
      break;
    }
    case Op::kScale: {
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.c * g[i];
      }
      break;
    }
    case Op::kSigmoid: {
      const auto y = val(n.out);
      auto da = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i] * y[i] * (1.0 - y[i]);
      }
      break;
    }
    case Op::kTanh: {
      const auto y = val(n.out);
      auto da = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += g[i] * (1.0 - y[i] * y[i]);
      }
      break;
    }
    case Op::kLog: {
      const auto x = val(n.a);
      auto da = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
      break;
    }
    case Op::kMatMul: {
      const Shape& sa = slots_[n.a].shape;
      const Shape& sb = slots_[n.b].shape;
      const std::size_t m = sa.rows(), k = sa.cols(), nn = sb.cols();
      const auto va = val(n.a);
      const auto vb = val(n.b);
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < nn; ++l) {
              acc += g[i * nn + l] * vb[j * nn + l];
            }
            da[i * k + j] += acc;
          }
        }
      }
      if (slots_[n.b].requires_grad) {
        auto db = grad_buf(n.b);
        for (std::size_t l = 0; l < m; ++l) {
          for (std::size_t i = 0; i < k; ++i) {
            const double a_li = va[l * k + i];
            for (std::size_t j = 0; j < nn; ++j) {
              db[i * nn + j] += a_li * g[l * nn + j];
            }
          }
        }
      }
      break;
    }
    case Op::kMatVec: {
      const Shape& sw = slots_[n.a].shape;
      const std::size_t m = sw.rows(), k = sw.cols();
      const auto vw = val(n.a);
      const auto vx = val(n.b);
      if (slots_[n.a].requires_grad) {
        auto dw = grad_buf(n.a);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          double* wrow = dw.data() + i * k;
          for (std::size_t j = 0; j < k; ++j) wrow[j] += gi * vx[j];
        }
      }
      if (slots_[n.b].requires_grad) {
        auto dx = grad_buf(n.b);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          const double* wrow = vw.data() + i * k;
          for (std::size_t j = 0; j < k; ++j) dx[j] += gi * wrow[j];
        }
      }
      break;
    }
    case Op::kVecMat: {
      const Shape& sm = slots_[n.b].shape;
      const std::size_t r = sm.rows(), c = sm.cols();
      const auto vv = val(n.a);
      const auto vm = val(n.b);
      if (slots_[n.a].requires_grad) {
        auto dv = grad_buf(n.a);
        for (std::size_t i = 0; i < r; ++i) {
          const double* mrow = vm.data() + i * c;
          double acc = 0.0;
          for (std::size_t j = 0; j < c; ++j) acc += g[j] * mrow[j];
          dv[i] += acc;
        }
      }
      if (slots_[n.b].requires_grad) {
        auto dm = grad_buf(n.b);
        for (std::size_t i = 0; i < r; ++i) {
          const double vi = vv[i];
          double* mrow = dm.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) mrow[j] += vi * g[j];
        }
      }
      break;
    }
    case Op::kDot: {
      const auto va = val(n.a);
      const auto vb = val(n.b);
      const double g0 = g[0];
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < va.size(); ++i) da[i] += g0 * vb[i];
      }
      if (slots_[n.b].requires_grad) {
        auto db = grad_buf(n.b);
        for (std::size_t i = 0; i < vb.size(); ++i) db[i] += g0 * va[i];
      }
      break;
    }
    case Op::kSum: {
      auto da = grad_buf(n.a);
      const double g0 = g[0];
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g0;
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::uint32_t k = 0; k < n.aux_len; ++k) {
        const std::uint32_t in = aux_[n.aux_off + k];
        const std::size_t len = slots_[in].shape.size();
        if (slots_[in].requires_grad) {
          auto di = grad_buf(in);
          for (std::size_t j = 0; j < len; ++j) di[j] += g[off + j];
        }
        off += len;
      }
      break;
    }
    case Op::kSlice: {
      const std::size_t lo = aux_[n.aux_off];
      auto da = grad_buf(n.a);
      for (std::size_t j = 0; j < g.size(); ++j) da[lo + j] += g[j];
      break;
    }
    case Op::kPick: {
      grad_buf(n.a)[aux_[n.aux_off]] += g[0];
      break;
    }
    case Op::kRow: {
      const std::size_t c = slots_[n.a].shape.cols();
      const std::size_t r = aux_[n.aux_off];
      auto dm = grad_buf(n.a);
      for (std::size_t j = 0; j < c; ++j) dm[r * c + j] += g[j];
      break;
    }
    case Op::kStackRows: {
      const std::size_t c = slots_[n.out].shape.cols();
      for (std::uint32_t l = 0; l < n.aux_len; ++l) {
        const std::uint32_t in = aux_[n.aux_off + l];
        if (slots_[in].requires_grad) {
          auto di = grad_buf(in);
          for (std::size_t j = 0; j < c; ++j) di[j] += g[l * c + j];
        }
      }
      break;
    }
    case Op::kPairMax: {
      const auto va = val(n.a);
      const auto vb = val(n.b);
      if (slots_[n.a].requires_grad) {
        auto da = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (va[i] >= vb[i]) da[i] += g[i];
        }
      }
      if (slots_[n.b].requires_grad) {
        auto db = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (va[i] < vb[i]) db[i] += g[i];
        }
      }
      break;
    }
    case Op::kMaskedSoftmax: {
      // Masked outputs are exactly 0, so the standard softmax VJP already
      // routes no gradient to masked positions.
      const auto p = val(n.out);
      auto dv = grad_buf(n.a);
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * p[i];
      for (std::size_t i = 0; i < g.size(); ++i) {
        dv[i] += p[i] * (g[i] - s);
      }
      break;
    }
  }
}

// ---- Primitive op implementations -------------------------------------------

namespace {

// Shared preamble: validates, allocates the output slot, records the node.
// Spans must be taken only after the output slot exists (allocation can
// relocate the arena).
Tensor binary_elementwise(const Tensor& a, const Tensor& b, Op op,
                          const char* name) {
  Tape& t = same_tape({&a, &b}, name);
  if (a.shape() != b.shape()) shape_fail(name, a.shape(), b.shape());
  const std::uint32_t ia = TA::id(a), ib = TA::id(b);
  const bool rg = a.requires_grad() || b.requires_grad();
  const std::uint32_t out = TA::alloc(t, a.shape(), rg);
  const auto va = TA::val(t, ia);
  const auto vb = TA::val(t, ib);
  auto vo = TA::val(t, out);
  if (op == Op::kAdd) {
    for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  } else if (op == Op::kMul) {
    for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  } else {  // kPairMax
    for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::max(va[i], vb[i]);
  }
  TA::record(t, {op, out, ia, ib, 0, 0, 0.0});
  return TA::make(&t, out);
}

template <class Fn>
Tensor unary_elementwise(const Tensor& x, Op op, const char* name, Fn&& fn) {
  Tape& t = same_tape({&x}, name);
  const std::uint32_t ix = TA::id(x);
  const std::uint32_t out = TA::alloc(t, x.shape(), x.requires_grad());
  const auto vx = TA::val(t, ix);
  auto vo = TA::val(t, out);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = fn(vx[i]);
  TA::record(t, {op, out, ix, 0, 0, 0, 0.0});
  return TA::make(&t, out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, Op::kAdd, "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, Op::kMul, "mul");
}

Tensor pair_max(const Tensor& a, const Tensor& b) {
  return binary_elementwise(a, b, Op::kPairMax, "pair_max");
}

Tensor scale(const Tensor& a, double c) {
  Tape& t = same_tape({&a}, "scale");
  const std::uint32_t ia = TA::id(a);
  const std::uint32_t out = TA::alloc(t, a.shape(), a.requires_grad());
  const auto va = TA::val(t, ia);
  auto vo = TA::val(t, out);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = c * va[i];
  TA::record(t, {Op::kScale, out, ia, 0, 0, 0, c});
  return TA::make(&t, out);
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(x, Op::kSigmoid, "sigmoid", [](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                    : std::exp(v) / (1.0 + std::exp(v));
  });
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(x, Op::kTanh, "tanh",
                           [](double v) { return std::tanh(v); });
}

Tensor log(const Tensor& x) {
  return unary_elementwise(x, Op::kLog, "log",
                           [](double v) { return std::log(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape({&a, &b}, "matmul");
  if (a.shape().rank() != 2 || b.shape().rank() != 2 ||
      a.shape().cols() != b.shape().rows()) {
    shape_fail("matmul", a.shape(), b.shape());
  }
  const std::size_t m = a.shape().rows(), k = a.shape().cols(),
                    n = b.shape().cols();
  const std::uint32_t ia = TA::id(a), ib = TA::id(b);
  const bool rg = a.requires_grad() || b.requires_grad();
  const std::uint32_t out = TA::alloc(t, Shape::mat(m, n), rg);
  const auto va = TA::val(t, ia);
  const auto vb = TA::val(t, ib);
  auto vo = TA::val(t, out);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double a_il = va[i * k + l];
      const double* brow = vb.data() + l * n;
      double* crow = vo.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += a_il * brow[j];
    }
  }
  TA::record(t, {Op::kMatMul, out, ia, ib, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  Tape& t = same_tape({&w, &x}, "matvec");
  if (w.shape().rank() != 2 || x.shape().rank() != 1 ||
      w.shape().cols() != x.shape().length()) {
    shape_fail("matvec", w.shape(), x.shape());
  }
  const std::size_t m = w.shape().rows(), k = w.shape().cols();
  const std::uint32_t iw = TA::id(w), ix = TA::id(x);
  const bool rg = w.requires_grad() || x.requires_grad();
  const std::uint32_t out = TA::alloc(t, Shape::vec(m), rg);
  const auto vw = TA::val(t, iw);
  const auto vx = TA::val(t, ix);
  auto vo = TA::val(t, out);
  for (std::size_t i = 0; i < m; ++i) {
    const double* wrow = vw.data() + i * k;
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += wrow[j] * vx[j];
    vo[i] = acc;
  }
  TA::record(t, {Op::kMatVec, out, iw, ix, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor vecmat(const Tensor& v, const Tensor& m) {
  Tape& t = same_tape({&v, &m}, "vecmat");
  if (v.shape().rank() != 1 || m.shape().rank() != 2 ||
      v.shape().length() != m.shape().rows()) {
    shape_fail("vecmat", v.shape(), m.shape());
  }
  const std::size_t r = m.shape().rows(), c = m.shape().cols();
  const std::uint32_t iv = TA::id(v), im = TA::id(m);
  const bool rg = v.requires_grad() || m.requires_grad();
  const std::uint32_t out = TA::alloc(t, Shape::vec(c), rg);
  const auto vv = TA::val(t, iv);
  const auto vm = TA::val(t, im);
  auto vo = TA::val(t, out);
  for (std::size_t i = 0; i < r; ++i) {
    const double vi = vv[i];
    const double* mrow = vm.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) vo[j] += vi * mrow[j];
  }
  TA::record(t, {Op::kVecMat, out, iv, im, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor dot(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape({&a, &b}, "dot");
  if (a.shape().rank() != 1 || b.shape().rank() != 1 ||
      a.shape().length() != b.shape().length()) {
    shape_fail("dot", a.shape(), b.shape());
  }
  const std::uint32_t ia = TA::id(a), ib = TA::id(b);
  const bool rg = a.requires_grad() || b.requires_grad();
  const std::uint32_t out = TA::alloc(t, Shape::scalar(), rg);
  const auto va = TA::val(t, ia);
  const auto vb = TA::val(t, ib);
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
  TA::val(t, out)[0] = acc;
  TA::record(t, {Op::kDot, out, ia, ib, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor sum(const Tensor& x) {
  Tape& t = same_tape({&x}, "sum");
  const std::uint32_t ix = TA::id(x);
  const std::uint32_t out = TA::alloc(t, Shape::scalar(), x.requires_grad());
  const auto vx = TA::val(t, ix);
  double acc = 0.0;
  for (double v : vx) acc += v;
  TA::val(t, out)[0] = acc;
  TA::record(t, {Op::kSum, out, ix, 0, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor concat(std::span<const Tensor> xs) {
  if (xs.empty()) throw ContractError("concat: no operands");
  Tape& t = same_tape(xs, "concat");
  std::size_t total = 0;
  bool rg = false;
  std::vector<std::uint32_t> ids;
  ids.reserve(xs.size());
  for (const Tensor& x : xs) {
    if (x.shape().rank() != 1) {
      throw ShapeError("concat: rank-1 operands required, got " +
                       x.shape().str());
    }
    total += x.shape().length();
    rg = rg || x.requires_grad();
    ids.push_back(TA::id(x));
  }
  const std::uint32_t out = TA::alloc(t, Shape::vec(total), rg);
  auto vo = TA::val(t, out);
  std::size_t off = 0;
  for (const std::uint32_t id : ids) {
    const auto vi = TA::val(t, id);
    std::copy(vi.begin(), vi.end(), vo.begin() + off);
    off += vi.size();
  }
  const std::uint32_t aux_off = TA::push_aux(t, ids);
  TA::record(t, {Op::kConcat, out, 0, 0, aux_off,
                 static_cast<std::uint32_t>(ids.size()), 0.0});
  return TA::make(&t, out);
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t len) {
  Tape& t = same_tape({&x}, "slice");
  if (x.shape().rank() != 1 || offset + len > x.shape().length()) {
    throw ShapeError("slice: [" + std::to_string(offset) + ", " +
                     std::to_string(offset + len) + ") out of bounds for " +
                     x.shape().str());
  }
  const std::uint32_t ix = TA::id(x);
  const std::uint32_t out = TA::alloc(t, Shape::vec(len), x.requires_grad());
  const auto vx = TA::val(t, ix);
  auto vo = TA::val(t, out);
  std::copy(vx.begin() + offset, vx.begin() + offset + len, vo.begin());
  const std::uint32_t lo32 = static_cast<std::uint32_t>(offset);
  const std::uint32_t aux_off = TA::push_aux(t, std::span(&lo32, 1));
  TA::record(t, {Op::kSlice, out, ix, 0, aux_off, 1, 0.0});
  return TA::make(&t, out);
}

Tensor pick(const Tensor& x, std::size_t index) {
  Tape& t = same_tape({&x}, "pick");
  if (x.shape().rank() != 1 || index >= x.shape().length()) {
    throw LookupError("pick: index " + std::to_string(index) +
                      " out of range for " + x.shape().str());
  }
  const std::uint32_t ix = TA::id(x);
  const std::uint32_t out =
      TA::alloc(t, Shape::scalar(), x.requires_grad());
  TA::val(t, out)[0] = TA::val(t, ix)[index];
  const std::uint32_t i32 = static_cast<std::uint32_t>(index);
  const std::uint32_t aux_off = TA::push_aux(t, std::span(&i32, 1));
  TA::record(t, {Op::kPick, out, ix, 0, aux_off, 1, 0.0});
  return TA::make(&t, out);
}

Tensor row(const Tensor& m, std::size_t r) {
  Tape& t = same_tape({&m}, "row");
  if (m.shape().rank() != 2 || r >= m.shape().rows()) {
    throw LookupError("row: index " + std::to_string(r) +
                      " out of range for " + m.shape().str());
  }
  const std::size_t c = m.shape().cols();
  const std::uint32_t im = TA::id(m);
  const std::uint32_t out = TA::alloc(t, Shape::vec(c), m.requires_grad());
  const auto vm = TA::val(t, im);
  auto vo = TA::val(t, out);
  std::copy(vm.begin() + r * c, vm.begin() + (r + 1) * c, vo.begin());
  const std::uint32_t r32 = static_cast<std::uint32_t>(r);
  const std::uint32_t aux_off = TA::push_aux(t, std::span(&r32, 1));
  TA::record(t, {Op::kRow, out, im, 0, aux_off, 1, 0.0});
  return TA::make(&t, out);
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no operands");
  Tape& t = same_tape(rows, "stack_rows");
  const std::size_t c = rows.front().shape().length();
  bool rg = false;
  std::vector<std::uint32_t> ids;
  ids.reserve(rows.size());
  for (const Tensor& x : rows) {
    if (x.shape().rank() != 1 || x.shape().length() != c) {
      shape_fail("stack_rows", rows.front().shape(), x.shape());
    }
    rg = rg || x.requires_grad();
    ids.push_back(TA::id(x));
  }
  const std::uint32_t out = TA::alloc(t, Shape::mat(ids.size(), c), rg);
  auto vo = TA::val(t, out);
  for (std::size_t l = 0; l < ids.size(); ++l) {
    const auto vi = TA::val(t, ids[l]);
    std::copy(vi.begin(), vi.end(), vo.begin() + l * c);
  }
  const std::uint32_t aux_off = TA::push_aux(t, ids);
  TA::record(t, {Op::kStackRows, out, 0, 0, aux_off,
                 static_cast<std::uint32_t>(ids.size()), 0.0});
  return TA::make(&t, out);
}

Tensor masked_softmax(const Tensor& v, std::span<const std::uint8_t> mask) {
  Tape& t = same_tape({&v}, "masked_softmax");
  if (v.shape().rank() != 1) {
    throw ShapeError("masked_softmax: rank-1 input required, got " +
                     v.shape().str());
  }
  const std::size_t n = v.shape().length();
  if (!mask.empty() && mask.size() != n) {
    throw ShapeError("masked_softmax: mask length " +
                     std::to_string(mask.size()) + " vs input " +
                     v.shape().str());
  }
  const auto kept = [&](std::size_t i) { return mask.empty() || mask[i]; };

  const std::uint32_t iv = TA::id(v);
  const std::uint32_t out = TA::alloc(t, Shape::vec(n), v.requires_grad());
  const auto vv = TA::val(t, iv);
  auto vo = TA::val(t, out);

  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (kept(i)) hi = std::max(hi, vv[i]);
  }
  if (!std::isfinite(hi)) {
    throw DomainError("masked_softmax: all entries masked");
  }
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept(i)) {
      vo[i] = std::exp(vv[i] - hi);
      z += vo[i];
    } else {
      vo[i] = 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) vo[i] /= z;
  TA::record(t, {Op::kMaskedSoftmax, out, iv, 0, 0, 0, 0.0});
  return TA::make(&t, out);
}

Tensor softmax(const Tensor& v) { return masked_softmax(v, {}); }

LstmState lstm_cell(const Tensor& x, const LstmState& prev,
                    const LstmWeights& w) {
  const std::size_t h4 = w.w_x.shape().rows();
  if (h4 % 4 != 0) {
    throw ShapeError("lstm_cell: stacked weight rows " + std::to_string(h4) +
                     " not divisible by 4");
  }
  const std::size_t h = h4 / 4;
  if (w.w_h.shape() != Shape::mat(h4, h) || w.b.shape() != Shape::vec(h4) ||
      prev.h.shape() != Shape::vec(h) || prev.c.shape() != Shape::vec(h)) {
    throw ShapeError("lstm_cell: inconsistent weight/state shapes " +
                     w.w_x.shape().str() + ", " + w.w_h.shape().str() + ", " +
                     w.b.shape().str() + ", h " + prev.h.shape().str());
  }
  const Tensor pre =
      add(add(matvec(w.w_x, x), matvec(w.w_h, prev.h)), w.b);
  const Tensor gi = sigmoid(slice(pre, 0, h));
  const Tensor gf = sigmoid(slice(pre, h, h));
  const Tensor gg = tanh(slice(pre, 2 * h, h));
  const Tensor go = sigmoid(slice(pre, 3 * h, h));
  const Tensor c = add(mul(gf, prev.c), mul(gi, gg));
  const Tensor hout = mul(go, tanh(c));
  return {hout, c};
}

}  // namespace leo::num
