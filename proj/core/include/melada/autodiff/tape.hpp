#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "melada/autodiff/tensor.hpp"

namespace melada::ad {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Neg,
  Scale,
  AddScalar,
  MatMul,
  Transpose,
  AddRowVector,
  MulColVector,
  SumRows,
  SumCols,
  SumAll,
  ExpandRows,
  ExpandCols,
  ExpandScalar,
  SliceCols,
  PadCols,
  SliceRows,
  PadRows,
  ConcatCols,
  ConcatRows,
  Tanh,
  Sigmoid,
  Exp,
  Log,
  Sqrt,
  Square,
  Reciprocal,
  LogSoftmax,
  GradientReversal,
};

std::string_view op_name(Op op) noexcept;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const noexcept { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

struct Node {
  std::uint32_t id = 0;
  Op op = Op::Constant;
  std::array<std::uint32_t, 2> parents{};
  std::uint8_t arity = 0;
  Tensor value;
  bool requires_grad = false;
  // Op attributes: scale factor or added constant; slice/pad offset; pad or expand extent.
  double attr = 0.0;
  std::size_t offset = 0;
  std::size_t extent = 0;
  /// Filled by Tape::backward for leaves.
  std::optional<Tensor> grad;
};

struct GradOptions {
  /// Express the backward pass itself as tape nodes so the returned gradients
  /// can be differentiated again.
  bool record = false;
};

/// Define-by-run computation graph.
///
/// Ops evaluate eagerly as they are appended, so node ids are a topological
/// order by construction: every parent id is smaller than its child's id.
/// A tape belongs to a single thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::uint32_t id) const { return nodes_.at(id); }
  bool recording() const noexcept { return recording_; }

  /// Gradient of the scalar `loss` with respect to each of `wrt`. Inputs the
  /// loss does not depend on get a zero gradient. With `record` the results
  /// are themselves differentiable; without it they are constants and
  /// differentiating through them again is an error.
  std::vector<Var> gradients(Var loss, std::span<const Var> wrt, GradOptions options = {});

  /// Populates Node::grad of every leaf reachable from `loss`.
  void backward(Var loss);

  // Used by the op free functions.
  Var push(Op op, std::span<const Var> parents, Tensor value, double attr = 0.0,
           std::size_t offset = 0, std::size_t extent = 0);
  void check_same_tape(Var v) const;

 private:
  std::vector<std::optional<Var>> run_backward(Var loss, GradOptions options,
                                                std::span<const Var> keep);
  std::array<std::optional<Var>, 2> vjp(const Node& node, Var upstream);

  std::deque<Node> nodes_;
  bool recording_ = true;
};

// Elementwise arithmetic on equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);

Var matmul(Var a, Var b);
Var transpose(Var a);

/// m (BxC) + row (1xC) broadcast over rows.
Var add_row(Var m, Var row);
/// m (BxC) * col (Bx1) broadcast over columns.
Var mul_col(Var m, Var col);

Var sum_rows(Var a);  // BxC -> 1xC
Var sum_cols(Var a);  // BxC -> Bx1
Var sum_all(Var a);   // -> 1x1
Var expand_rows(Var row, std::size_t rows);
Var expand_cols(Var col, std::size_t cols);
Var expand_scalar(Var s, std::size_t rows, std::size_t cols);

Var slice_cols(Var a, std::size_t start, std::size_t width);
Var pad_cols(Var a, std::size_t start, std::size_t total);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var pad_rows(Var a, std::size_t start, std::size_t total);
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
/// Square root; its derivative at 0 is taken as 0.
Var sqrt(Var a);
Var square(Var a);
/// 1/x elementwise, with 1/0 defined as 0.
Var reciprocal(Var a);
/// Row-wise log-softmax.
Var log_softmax(Var a);

/// Gradient reversal: identity forward, exact negation backward.
Var grl(Var a);

Var mean_rows(Var a);
Var mean_all(Var a);
/// Euclidean norm of all entries.
Var l2_norm(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace melada::ad
