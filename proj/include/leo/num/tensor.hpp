#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leo/errors.hpp"

namespace leo::num {

// Rank-1 or rank-2 dense shape. Scalars are represented as vectors of
// length 1; nothing in the model needs higher rank.
class Shape {
 public:
  Shape() = default;

  static Shape vec(std::size_t n) { return Shape(1, n, 1); }
  static Shape mat(std::size_t rows, std::size_t cols) {
    return Shape(2, rows, cols);
  }
  static Shape scalar() { return vec(1); }

  std::size_t rank() const { return rank_; }
  std::size_t size() const { return dim_[0] * dim_[1]; }
  std::size_t rows() const { return dim_[0]; }
  std::size_t cols() const { return dim_[1]; }
  // Length of a rank-1 shape.
  std::size_t length() const { return dim_[0] * dim_[1]; }

  bool operator==(const Shape& o) const {
    return rank_ == o.rank_ && dim_ == o.dim_;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const;

 private:
  Shape(std::size_t rank, std::size_t d0, std::size_t d1)
      : rank_(rank), dim_{d0, d1} {}
  std::size_t rank_ = 1;
  std::array<std::size_t, 2> dim_{1, 1};
};

class Tape;

// Lightweight handle to a value recorded on a tape. Copies alias the same
// storage; lifetime is bounded by the tape's.
class Tensor {
 public:
  Tensor() = default;

  bool defined() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  const Shape& shape() const;
  std::size_t size() const { return shape().size(); }
  bool requires_grad() const;

  std::span<const double> values() const;
  // Gradient of the last backward() pass; zeros before any backward.
  std::span<const double> grad() const;

  // Value of a single-element tensor.
  double item() const;

  bool all_finite() const;

 private:
  friend class Tape;
  friend struct TapeAccess;
  Tensor(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Execution-ordered record of primitive operations. One tape per loss
// evaluation; backward walks the record in exact reverse and accumulates
// gradients additively. A tape and its tensors are confined to a single
// thread; distinct tapes over shared read-only inputs may run in parallel.
class Tape {
 public:
  // grad_enabled=false skips all backward bookkeeping (evaluation mode).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Tensor leaf(const Shape& shape, std::span<const double> values,
              bool requires_grad = false);
  Tensor zeros(const Shape& shape, bool requires_grad = false);
  Tensor scalar(double v);

  // Populates grad buffers of every requires_grad ancestor of `loss`.
  // Re-running on the same tape resets gradients first, so results are
  // bit-identical across calls.
  void backward(const Tensor& loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_tensors() const { return slots_.size(); }

 private:
  friend class Tensor;
  friend struct TapeAccess;

  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kMul,
    kScale,
    kSigmoid,
    kTanh,
    kLog,
    kMatMul,
    kMatVec,
    kVecMat,
    kDot,
    kSum,
    kConcat,
    kSlice,
    kPick,
    kRow,
    kStackRows,
    kPairMax,
    kMaskedSoftmax,
  };

  struct Slot {
    Shape shape;
    std::size_t off = 0;
    bool requires_grad = false;
  };

  struct Node {
    Op op;
    std::uint32_t out = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t aux_off = 0;  // index into aux_ for variadic inputs/masks
    std::uint32_t aux_len = 0;
    double c = 0.0;  // scalar payload (scale factor, etc.)
  };

  std::uint32_t alloc_slot(const Shape& shape, bool requires_grad);
  std::span<double> val(std::uint32_t id);
  std::span<const double> val(std::uint32_t id) const;
  std::span<double> grad_buf(std::uint32_t id);

  void run_backward_node(const Node& n);

  bool grad_enabled_;
  std::vector<Slot> slots_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> aux_;
  std::vector<double> val_;
  std::vector<double> grad_;
};

// ---- Primitive operations -------------------------------------------------
// Each op validates shapes, computes the forward value, and (on a
// grad-enabled tape) records a node whose backward applies the exact
// vector-Jacobian product.

Tensor add(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise, same shape
Tensor scale(const Tensor& a, double c);             // c * a
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor log(const Tensor& x);
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n) -> (m,n)
Tensor matvec(const Tensor& w, const Tensor& x);     // (m,n)x(n) -> (m)
Tensor vecmat(const Tensor& v, const Tensor& m);     // (r)x(r,c) -> (c)
Tensor dot(const Tensor& a, const Tensor& b);        // (n)x(n) -> scalar
Tensor sum(const Tensor& x);                         // -> scalar
Tensor concat(std::span<const Tensor> xs);           // rank-1 juxtaposition
Tensor slice(const Tensor& x, std::size_t offset, std::size_t len);
Tensor pick(const Tensor& x, std::size_t index);     // x[index] -> scalar
Tensor row(const Tensor& m, std::size_t r);          // m[r,:] -> rank-1
Tensor stack_rows(std::span<const Tensor> rows);     // L vectors -> (L,n)
Tensor pair_max(const Tensor& a, const Tensor& b);   // elementwise max

// Probability vector over unmasked entries; masked entries are exactly 0.
// `mask` holds 1 for positions to keep; empty means all kept. Stabilized by
// subtracting the unmasked maximum. Throws DomainError if all masked.
Tensor masked_softmax(const Tensor& v, std::span<const std::uint8_t> mask);
Tensor softmax(const Tensor& v);

// ---- LSTM cell -------------------------------------------------------------
// Standard four-gate cell composed from the primitives above: gate order in
// the stacked pre-activation is input, forget, candidate, output.
//   c = f*c_prev + i*g,  h = o*tanh(c)

struct LstmWeights {
  Tensor w_x;  // (4H, D_in)
  Tensor w_h;  // (4H, H)
  Tensor b;    // (4H)
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_cell(const Tensor& x, const LstmState& prev,
                    const LstmWeights& w);

}  // namespace leo::num
