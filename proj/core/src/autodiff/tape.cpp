#include "melada/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::string describe(const Node& n) {
  return fmt::format("node #{} ({}, {})", n.id, op_name(n.op), shape_string(n.value.shape()));
}

const Node& node_of(Var v) { return v.tape().node(v.id()); }

void require_matrix(Var v, std::string_view what) {
  if (v.value().rank() != 2) {
    throw ShapeError(fmt::format("{}: {} is not a matrix", what, describe(node_of(v))));
  }
}

void require_same_shape(Var a, Var b, std::string_view what) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(fmt::format("{}: shape mismatch between {} and {}", what,
                                 describe(node_of(a)), describe(node_of(b))));
  }
}

template <typename F>
Tensor map_unary(const Tensor& x, F&& f) {
  Tensor out = x;
  for (double& v : out.data()) v = f(v);
  return out;
}

template <typename F>
Tensor map_binary(const Tensor& x, const Tensor& y, F&& f) {
  Tensor out = x;
  auto o = out.data();
  auto b = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(o[i], b[i]);
  return out;
}

Var unary(Op op, Var a, Tensor value, double attr = 0.0, std::size_t offset = 0,
          std::size_t extent = 0) {
  const std::array<Var, 1> parents{a};
  return a.tape().push(op, parents, std::move(value), attr, offset, extent);
}

Var binary(Op op, Var a, Var b, Tensor value) {
  a.tape().check_same_tape(b);
  const std::array<Var, 2> parents{a, b};
  return a.tape().push(op, parents, std::move(value));
}

}  // namespace

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::AddRowVector: return "add_row";
    case Op::MulColVector: return "mul_col";
    case Op::SumRows: return "sum_rows";
    case Op::SumCols: return "sum_cols";
    case Op::SumAll: return "sum_all";
    case Op::ExpandRows: return "expand_rows";
    case Op::ExpandCols: return "expand_cols";
    case Op::ExpandScalar: return "expand_scalar";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::SliceRows: return "slice_rows";
    case Op::PadRows: return "pad_rows";
    case Op::ConcatCols: return "concat_cols";
    case Op::ConcatRows: return "concat_rows";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Square: return "square";
    case Op::Reciprocal: return "reciprocal";
    case Op::LogSoftmax: return "log_softmax";
    case Op::GradientReversal: return "grl";
  }
  return "?";
}

const Tensor& Var::value() const { return tape_->node(id_).value; }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::leaf(Tensor value) {
  auto v = push(Op::Leaf, {}, std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::constant(Tensor value) { return push(Op::Constant, {}, std::move(value)); }

void Tape::check_same_tape(Var v) const {
  if (&v.tape() != this) throw InvalidArgument("operands live on different tapes");
}

Var Tape::push(Op op, std::span<const Var> parents, Tensor value, double attr, std::size_t offset,
               std::size_t extent) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (!value.all_finite()) {
    throw NumericError(fmt::format("{} (node #{}) produced a non-finite value", op_name(op), id));
  }
  Node n;
  n.id = id;
  n.value = std::move(value);
  n.attr = attr;
  n.offset = offset;
  n.extent = extent;
  bool needs_grad = false;
  for (const Var& p : parents) {
    check_same_tape(p);
    needs_grad = needs_grad || p.requires_grad();
  }
  if (recording_ && needs_grad) {
    n.op = op;
    n.arity = static_cast<std::uint8_t>(parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) n.parents[i] = parents[i].id();
    n.requires_grad = true;
  } else if (op == Op::Leaf) {
    n.op = Op::Leaf;
  } else {
    // Nothing upstream is differentiable (or recording is off): keep only the value.
    n.op = Op::Constant;
  }
  nodes_.push_back(std::move(n));
  return Var(this, id);
}

std::array<std::optional<Var>, 2> Tape::vjp(const Node& n, Var g) {
  auto parent = [&](int i) { return Var(this, n.parents[static_cast<std::size_t>(i)]); };
  auto wants = [&](int i) { return node(n.parents[static_cast<std::size_t>(i)]).requires_grad; };
  const Var y(this, n.id);
  std::array<std::optional<Var>, 2> out;

  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      break;
    case Op::Add:
      if (wants(0)) out[0] = g;
      if (wants(1)) out[1] = g;
      break;
    case Op::Sub:
      if (wants(0)) out[0] = g;
      if (wants(1)) out[1] = neg(g);
      break;
    case Op::Mul:
      if (wants(0)) out[0] = mul(g, parent(1));
      if (wants(1)) out[1] = mul(g, parent(0));
      break;
    case Op::Neg:
    case Op::GradientReversal:
      out[0] = neg(g);
      break;
    case Op::Scale:
      out[0] = scale(g, n.attr);
      break;
    case Op::AddScalar:
      out[0] = g;
      break;
    case Op::MatMul:
      if (wants(0)) out[0] = matmul(g, transpose(parent(1)));
      if (wants(1)) out[1] = matmul(transpose(parent(0)), g);
      break;
    case Op::Transpose:
      out[0] = transpose(g);
      break;
    case Op::AddRowVector:
      if (wants(0)) out[0] = g;
      if (wants(1)) out[1] = sum_rows(g);
      break;
    case Op::MulColVector:
      if (wants(0)) out[0] = mul_col(g, parent(1));
      if (wants(1)) out[1] = sum_cols(mul(g, parent(0)));
      break;
    case Op::SumRows:
      out[0] = expand_rows(g, parent(0).value().rows());
      break;
    case Op::SumCols:
      out[0] = expand_cols(g, parent(0).value().cols());
      break;
    case Op::SumAll:
      out[0] = expand_scalar(g, parent(0).value().rows(), parent(0).value().cols());
      break;
    case Op::ExpandRows:
      out[0] = sum_rows(g);
      break;
    case Op::ExpandCols:
      out[0] = sum_cols(g);
      break;
    case Op::ExpandScalar:
      out[0] = sum_all(g);
      break;
    case Op::SliceCols:
      out[0] = pad_cols(g, n.offset, n.extent);
      break;
    case Op::PadCols:
      out[0] = slice_cols(g, n.offset, parent(0).value().cols());
      break;
    case Op::SliceRows:
      out[0] = pad_rows(g, n.offset, n.extent);
      break;
    case Op::PadRows:
      out[0] = slice_rows(g, n.offset, parent(0).value().rows());
      break;
    case Op::ConcatCols: {
      const auto left = parent(0).value().cols();
      if (wants(0)) out[0] = slice_cols(g, 0, left);
      if (wants(1)) out[1] = slice_cols(g, left, parent(1).value().cols());
      break;
    }
    case Op::ConcatRows: {
      const auto top = parent(0).value().rows();
      if (wants(0)) out[0] = slice_rows(g, 0, top);
      if (wants(1)) out[1] = slice_rows(g, top, parent(1).value().rows());
      break;
    }
    case Op::Tanh:
      out[0] = mul(g, add_scalar(neg(square(y)), 1.0));
      break;
    case Op::Sigmoid:
      out[0] = mul(g, mul(y, add_scalar(neg(y), 1.0)));
      break;
    case Op::Exp:
      out[0] = mul(g, y);
      break;
    case Op::Log:
      out[0] = mul(g, reciprocal(parent(0)));
      break;
    case Op::Sqrt:
      out[0] = mul(g, scale(reciprocal(y), 0.5));
      break;
    case Op::Square:
      out[0] = mul(g, scale(parent(0), 2.0));
      break;
    case Op::Reciprocal:
      out[0] = neg(mul(g, square(y)));
      break;
    case Op::LogSoftmax:
      out[0] = sub(g, mul(exp(y), expand_cols(sum_cols(g), y.value().cols())));
      break;
  }
  return out;
}

std::vector<std::optional<Var>> Tape::run_backward(Var loss, GradOptions options,
                                                   std::span<const Var> keep) {
  check_same_tape(loss);
  const Node& root = node(loss.id());
  if (!root.value.is_scalar()) {
    throw ShapeError(fmt::format("backward needs a scalar loss, got {}", describe(root)));
  }
  if (!root.requires_grad) {
    throw InvalidArgument(fmt::format(
        "{} does not depend on any differentiable input; if it was built from gradients, the "
        "first backward pass must be recorded",
        describe(root)));
  }

  const bool was_recording = recording_;
  recording_ = options.record;
  std::vector<std::optional<Var>> grads(static_cast<std::size_t>(loss.id()) + 1);
  std::vector<bool> retain(grads.size(), false);
  for (const Var& k : keep) {
    if (k.id() < retain.size()) retain[k.id()] = true;
  }
  try {
    grads[loss.id()] = constant(Tensor::scalar(1.0));
    for (std::int64_t i = loss.id(); i >= 0; --i) {
      const auto idx = static_cast<std::size_t>(i);
      if (!grads[idx]) continue;
      const Node& n = nodes_[idx];
      if (!n.requires_grad || n.arity == 0) continue;
      auto parent_grads = vjp(n, *grads[idx]);
      for (std::size_t k = 0; k < n.arity; ++k) {
        if (!parent_grads[k]) continue;
        auto& slot = grads[n.parents[k]];
        slot = slot ? add(*slot, *parent_grads[k]) : *parent_grads[k];
      }
      // Interior gradients are no longer needed once propagated.
      if (n.op != Op::Leaf && !retain[idx]) grads[idx].reset();
    }
  } catch (...) {
    recording_ = was_recording;
    throw;
  }
  recording_ = was_recording;
  return grads;
}

std::vector<Var> Tape::gradients(Var loss, std::span<const Var> wrt, GradOptions options) {
  for (const Var& w : wrt) check_same_tape(w);
  auto grads = run_backward(loss, options, wrt);
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() < grads.size() && grads[w.id()]) {
      out.push_back(*grads[w.id()]);
    } else {
      out.push_back(constant(Tensor::zeros(w.value().shape())));
    }
  }
  return out;
}

void Tape::backward(Var loss) {
  auto grads = run_backward(loss, {}, {});
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op != Op::Leaf) continue;
    n.grad = grads[i] ? grads[i]->value() : Tensor::zeros(n.value.shape());
  }
}

// ---------------------------------------------------------------------------
// Ops

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return binary(Op::Add, a, b, map_binary(a.value(), b.value(), std::plus<>()));
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return binary(Op::Sub, a, b, map_binary(a.value(), b.value(), std::minus<>()));
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  return binary(Op::Mul, a, b, map_binary(a.value(), b.value(), std::multiplies<>()));
}

Var neg(Var a) { return unary(Op::Neg, a, map_unary(a.value(), std::negate<>())); }

Var scale(Var a, double factor) {
  return unary(Op::Scale, a, map_unary(a.value(), [factor](double v) { return v * factor; }),
               factor);
}

Var add_scalar(Var a, double value) {
  return unary(Op::AddScalar, a, map_unary(a.value(), [value](double v) { return v + value; }),
               value);
}

Var matmul(Var a, Var b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const auto& x = a.value();
  const auto& y = b.value();
  if (x.cols() != y.rows()) {
    throw ShapeError(fmt::format("matmul: inner dimensions differ between {} and {}",
                                 describe(node_of(a)), describe(node_of(b))));
  }
  Tensor out = Tensor::zeros({x.rows(), y.cols()});
  if (!out.empty() && x.cols() > 0) {
    MutMap(out.data().data(), static_cast<Eigen::Index>(x.rows()),
           static_cast<Eigen::Index>(y.cols()))
        .noalias() = ConstMap(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                              static_cast<Eigen::Index>(x.cols())) *
                     ConstMap(y.data().data(), static_cast<Eigen::Index>(y.rows()),
                              static_cast<Eigen::Index>(y.cols()));
  }
  return binary(Op::MatMul, a, b, std::move(out));
}

Var transpose(Var a) {
  require_matrix(a, "transpose");
  const auto& x = a.value();
  const auto rows = x.rows();
  const auto cols = x.cols();
  Tensor out = Tensor::zeros({cols, rows});
  const double* src = x.data().data();
  double* dst = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
  return unary(Op::Transpose, a, std::move(out));
}

Var add_row(Var m, Var row) {
  require_matrix(m, "add_row");
  require_matrix(row, "add_row");
  const auto& x = m.value();
  const auto& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ShapeError(fmt::format("add_row: {} is not a row vector matching {}",
                                 describe(node_of(row)), describe(node_of(m))));
  }
  Tensor out = x;
  const auto cols = x.cols();
  const double* rv = r.data().data();
  double* dst = out.data().data();
  for (std::size_t i = 0, rows = x.rows(); i < rows; ++i, dst += cols) {
    for (std::size_t c = 0; c < cols; ++c) dst[c] += rv[c];
  }
  return binary(Op::AddRowVector, m, row, std::move(out));
}

Var mul_col(Var m, Var col) {
  require_matrix(m, "mul_col");
  require_matrix(col, "mul_col");
  const auto& x = m.value();
  const auto& c = col.value();
  if (c.cols() != 1 || c.rows() != x.rows()) {
    throw ShapeError(fmt::format("mul_col: {} is not a column vector matching {}",
                                 describe(node_of(col)), describe(node_of(m))));
  }
  Tensor out = x;
  const auto cols = x.cols();
  const double* cv = c.data().data();
  double* dst = out.data().data();
  for (std::size_t i = 0, rows = x.rows(); i < rows; ++i, dst += cols) {
    for (std::size_t j = 0; j < cols; ++j) dst[j] *= cv[i];
  }
  return binary(Op::MulColVector, m, col, std::move(out));
}

Var sum_rows(Var a) {
  require_matrix(a, "sum_rows");
  const auto& x = a.value();
  const auto cols = x.cols();
  Tensor out = Tensor::zeros({1, cols});
  const double* src = x.data().data();
  double* dst = out.data().data();
  for (std::size_t i = 0, rows = x.rows(); i < rows; ++i, src += cols) {
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  return unary(Op::SumRows, a, std::move(out));
}

Var sum_cols(Var a) {
  require_matrix(a, "sum_cols");
  const auto& x = a.value();
  const auto rows = x.rows();
  const auto cols = x.cols();
  Tensor out = Tensor::zeros({rows, 1});
  const double* src = x.data().data();
  for (std::size_t i = 0; i < rows; ++i, src += cols) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += src[c];
    out.data()[i] = s;
  }
  return unary(Op::SumCols, a, std::move(out));
}

Var sum_all(Var a) {
  require_matrix(a, "sum_all");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return unary(Op::SumAll, a, Tensor::scalar(s));
}

Var expand_rows(Var row, std::size_t rows) {
  require_matrix(row, "expand_rows");
  const auto& r = row.value();
  if (r.rows() != 1) {
    throw ShapeError(fmt::format("expand_rows: {} is not a row vector", describe(node_of(row))));
  }
  Tensor out = Tensor::zeros({rows, r.cols()});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(r.data().begin(), r.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * r.cols()));
  }
  return unary(Op::ExpandRows, row, std::move(out), 0.0, 0, rows);
}

Var expand_cols(Var col, std::size_t cols) {
  require_matrix(col, "expand_cols");
  const auto& c = col.value();
  if (c.cols() != 1) {
    throw ShapeError(fmt::format("expand_cols: {} is not a column vector", describe(node_of(col))));
  }
  const auto rows = c.rows();
  Tensor out = Tensor::zeros({rows, cols});
  double* dst = out.data().data();
  for (std::size_t i = 0; i < rows; ++i, dst += cols) std::fill(dst, dst + cols, c.data()[i]);
  return unary(Op::ExpandCols, col, std::move(out), 0.0, 0, cols);
}

Var expand_scalar(Var s, std::size_t rows, std::size_t cols) {
  if (!s.value().is_scalar()) {
    throw ShapeError(fmt::format("expand_scalar: {} is not 1x1", describe(node_of(s))));
  }
  return unary(Op::ExpandScalar, s, Tensor::full({rows, cols}, s.value().item()));
}

Var slice_cols(Var a, std::size_t start, std::size_t width) {
  require_matrix(a, "slice_cols");
  const auto& x = a.value();
  if (start + width > x.cols()) {
    throw ShapeError(fmt::format("slice_cols: [{}, {}) out of range for {}", start, start + width,
                                 describe(node_of(a))));
  }
  const auto rows = x.rows();
  const auto cols = x.cols();
  Tensor out = Tensor::zeros({rows, width});
  const double* src = x.data().data() + start;
  double* dst = out.data().data();
  for (std::size_t i = 0; i < rows; ++i, src += cols, dst += width) std::copy(src, src + width, dst);
  return unary(Op::SliceCols, a, std::move(out), 0.0, start, x.cols());
}

Var pad_cols(Var a, std::size_t start, std::size_t total) {
  require_matrix(a, "pad_cols");
  const auto& x = a.value();
  if (start + x.cols() > total) {
    throw ShapeError(fmt::format("pad_cols: {} does not fit at column {} of {}",
                                 describe(node_of(a)), start, total));
  }
  const auto rows = x.rows();
  const auto cols = x.cols();
  Tensor out = Tensor::zeros({rows, total});
  const double* src = x.data().data();
  double* dst = out.data().data() + start;
  for (std::size_t i = 0; i < rows; ++i, src += cols, dst += total) std::copy(src, src + cols, dst);
  return unary(Op::PadCols, a, std::move(out), 0.0, start, total);
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  require_matrix(a, "slice_rows");
  const auto& x = a.value();
  if (start + count > x.rows()) {
    throw ShapeError(fmt::format("slice_rows: [{}, {}) out of range for {}", start, start + count,
                                 describe(node_of(a))));
  }
  const auto c = x.cols();
  std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>(start * c),
                           x.data().begin() + static_cast<std::ptrdiff_t>((start + count) * c));
  return unary(Op::SliceRows, a, Tensor({count, c}, std::move(data)), 0.0, start, x.rows());
}

Var pad_rows(Var a, std::size_t start, std::size_t total) {
  require_matrix(a, "pad_rows");
  const auto& x = a.value();
  if (start + x.rows() > total) {
    throw ShapeError(fmt::format("pad_rows: {} does not fit at row {} of {}", describe(node_of(a)),
                                 start, total));
  }
  Tensor out = Tensor::zeros({total, x.cols()});
  std::copy(x.data().begin(), x.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(start * x.cols()));
  return unary(Op::PadRows, a, std::move(out), 0.0, start, total);
}

Var concat_cols(Var a, Var b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  const auto& x = a.value();
  const auto& y = b.value();
  if (x.rows() != y.rows()) {
    throw ShapeError(fmt::format("concat_cols: row counts differ between {} and {}",
                                 describe(node_of(a)), describe(node_of(b))));
  }
  const auto w = x.cols() + y.cols();
  const auto rows = x.rows();
  const auto xc = x.cols();
  const auto yc = y.cols();
  Tensor out = Tensor::zeros({rows, w});
  const double* xs = x.data().data();
  const double* ys = y.data().data();
  double* dst = out.data().data();
  for (std::size_t i = 0; i < rows; ++i, xs += xc, ys += yc, dst += w) {
    std::copy(xs, xs + xc, dst);
    std::copy(ys, ys + yc, dst + xc);
  }
  return binary(Op::ConcatCols, a, b, std::move(out));
}

Var concat_rows(Var a, Var b) {
  require_matrix(a, "concat_rows");
  require_matrix(b, "concat_rows");
  const auto& x = a.value();
  const auto& y = b.value();
  if (x.cols() != y.cols()) {
    throw ShapeError(fmt::format("concat_rows: column counts differ between {} and {}",
                                 describe(node_of(a)), describe(node_of(b))));
  }
  std::vector<double> data(x.data().begin(), x.data().end());
  data.insert(data.end(), y.data().begin(), y.data().end());
  return binary(Op::ConcatRows, a, b, Tensor({x.rows() + y.rows(), x.cols()}, std::move(data)));
}

Var tanh(Var a) {
  return unary(Op::Tanh, a, map_unary(a.value(), [](double v) { return std::tanh(v); }));
}

Var sigmoid(Var a) {
  return unary(Op::Sigmoid, a, map_unary(a.value(), [](double v) {
                 // Two branches keep exp() from overflowing for large |v|.
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               }));
}

Var exp(Var a) {
  return unary(Op::Exp, a, map_unary(a.value(), [](double v) { return std::exp(v); }));
}

Var log(Var a) {
  return unary(Op::Log, a, map_unary(a.value(), [](double v) { return std::log(v); }));
}

Var sqrt(Var a) {
  return unary(Op::Sqrt, a, map_unary(a.value(), [](double v) { return std::sqrt(v); }));
}

Var square(Var a) {
  return unary(Op::Square, a, map_unary(a.value(), [](double v) { return v * v; }));
}

Var reciprocal(Var a) {
  return unary(Op::Reciprocal, a,
               map_unary(a.value(), [](double v) { return v == 0.0 ? 0.0 : 1.0 / v; }));
}

Var log_softmax(Var a) {
  require_matrix(a, "log_softmax");
  Tensor out = a.value();
  const auto cols = out.cols();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double hi = out(i, 0);
    for (std::size_t j = 1; j < cols; ++j) hi = std::max(hi, out(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::exp(out(i, j) - hi);
    const double lse = hi + std::log(s);
    for (std::size_t j = 0; j < cols; ++j) out(i, j) -= lse;
  }
  return unary(Op::LogSoftmax, a, std::move(out));
}

Var grl(Var a) { return unary(Op::GradientReversal, a, a.value()); }

Var mean_rows(Var a) {
  require_matrix(a, "mean_rows");
  const auto n = a.value().rows();
  if (n == 0) throw ShapeError("mean_rows: empty matrix");
  return scale(sum_rows(a), 1.0 / static_cast<double>(n));
}

Var mean_all(Var a) {
  const auto n = a.value().size();
  if (n == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Var l2_norm(Var a) { return sqrt(sum_all(square(a))); }

}  // namespace melada::ad
