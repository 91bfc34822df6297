#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "specprop/linalg/matrix.h"

namespace specprop::ad {

using linalg::Matrix;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Primitive operations. Every backward (vjp) and forward (jvp) rule is itself
// written in terms of these primitives, so derivative graphs can be
// differentiated again.
enum class Op : std::uint8_t {
  kConstant,
  kVariable,       // differentiable leaf (parameters, latent points)
  kAdd,
  kSub,
  kMul,            // elementwise
  kScale,          // x * scalar
  kShift,          // x + scalar
  kMatmul,         // op(a) * op(b), transpose flags in ints
  kBiasAdd,        // (r x c) + (r x 1) repeated across columns
  kLeakyRelu,      // slope in scalar
  kLog,
  kExp,
  kSin,
  kCos,
  kReciprocal,
  kSqrt,
  kSumRows,        // (r x c) -> (1 x c)
  kBroadcastRows,  // (1 x c) -> (ints[0] x c)
  kSumCols,        // (r x c) -> (r x 1)
  kBroadcastCols,  // (r x 1) -> (r x ints[0])
  kTileCols,       // (r x c) -> (r x ints[0]*c), copies side by side
  kFoldCols,       // (r x k*c) -> (r x c), sums the k column blocks
  kSliceRows,      // rows [ints[0], ints[0]+ints[1])
  kPadRows,        // inverse of slice: zero rows around, ints = {begin, total}
};

std::string_view op_name(Op op);

struct Node {
  Op op = Op::kConstant;
  std::array<std::int32_t, 2> parents{-1, -1};
  double scalar = 0.0;
  std::array<std::size_t, 2> ints{0, 0};
  bool requires_grad = false;
  Matrix value;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::int32_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape& tape() const;
  std::int32_t id() const { return id_; }
  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::int32_t id_ = -1;
};

// Append-only, eagerly evaluated computation graph. Nodes are stored in
// creation order, which is a topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  Var variable(Matrix value);

  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Appends a fully-formed node; used by the primitive constructors.
  Var push(Node node);

 private:
  std::vector<Node> nodes_;
};

// Primitive constructors. All operands must live on the same tape and have
// exactly matching shapes unless stated otherwise; there is no implicit
// broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var shift(Var a, double s);
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
Var bias_add(Var x, Var bias);
Var leaky_relu(Var x, double slope);
Var log(Var x);
Var exp(Var x);
Var sin(Var x);
Var cos(Var x);
Var reciprocal(Var x);
Var sqrt(Var x);
Var sum_rows(Var x);
Var broadcast_rows(Var x, std::size_t rows);
Var sum_cols(Var x);
Var broadcast_cols(Var x, std::size_t cols);
Var tile_cols(Var x, std::size_t copies);
Var fold_cols(Var x, std::size_t copies);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var pad_rows(Var x, std::size_t begin, std::size_t total);

// Constant copy of x's value; gradients do not flow through it.
Var detach(Var x);

// Composite helpers built from primitives.
Var sum(Var x);                            // -> 1x1
Var inner(Var a, Var b);                   // -> 1x1
Var colwise_dot(Var a, Var b);             // -> 1 x cols
Var neg(Var x);
Var divide(Var a, Var b);
Var square(Var x);
Var mean_cols(Var x);                      // (r x c) -> (r x 1)
Var concat_rows(std::span<const Var> parts);
// Elementwise product of every row of x with the row vector r (1 x cols).
Var scale_columns(Var x, Var r);
// x (r x c) times the 1x1 node s.
Var scale_by(Var x, Var s);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace specprop::ad
