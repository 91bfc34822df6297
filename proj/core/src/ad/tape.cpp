#include "specprop/ad/tape.h"

#include <cmath>
#include <string>

namespace specprop::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kVariable: return "variable";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kShift: return "shift";
    case Op::kMatmul: return "matmul";
    case Op::kBiasAdd: return "bias_add";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kReciprocal: return "reciprocal";
    case Op::kSqrt: return "sqrt";
    case Op::kSumRows: return "sum_rows";
    case Op::kBroadcastRows: return "broadcast_rows";
    case Op::kSumCols: return "sum_cols";
    case Op::kBroadcastCols: return "broadcast_cols";
    case Op::kTileCols: return "tile_cols";
    case Op::kFoldCols: return "fold_cols";
    case Op::kSliceRows: return "slice_rows";
    case Op::kPadRows: return "pad_rows";
  }
  return "unknown";
}

Tape& Var::tape() const {
  if (!valid()) throw GraphError("use of an unbound Var");
  return *tape_;
}

const Matrix& Var::value() const { return tape().node(id_).value; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw GraphError("scalar(): node has shape " + linalg::shape_string(v));
  }
  return v(0, 0);
}

bool Var::requires_grad() const { return tape().node(id_).requires_grad; }

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(double value) { return constant(Matrix(1, 1, value)); }

Var Tape::variable(Matrix value) {
  Node n;
  n.op = Op::kVariable;
  n.requires_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

namespace {

Tape& common_tape(Var a, Var b) {
  Tape& t = a.tape();
  if (&t != &b.tape()) throw GraphError("operands live on different tapes");
  return t;
}

void require_same_shape(const char* what, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw GraphError(std::string(what) + ": shape mismatch " + linalg::shape_string(a) + " vs " +
                     linalg::shape_string(b));
  }
}

Var make_unary(Op op, Var x, Matrix value, double scalar = 0.0,
               std::array<std::size_t, 2> ints = {0, 0}) {
  Node n;
  n.op = op;
  n.parents = {x.id(), -1};
  n.scalar = scalar;
  n.ints = ints;
  n.requires_grad = x.requires_grad();
  n.value = std::move(value);
  return x.tape().push(std::move(n));
}

Var make_binary(Op op, Var a, Var b, Matrix value, std::array<std::size_t, 2> ints = {0, 0}) {
  Tape& t = common_tape(a, b);
  Node n;
  n.op = op;
  n.parents = {a.id(), b.id()};
  n.ints = ints;
  n.requires_grad = a.requires_grad() || b.requires_grad();
  n.value = std::move(value);
  return t.push(std::move(n));
}

template <typename F>
Matrix map(const Matrix& x, F f) {
  Matrix out(x.rows(), x.cols());
  const double* in = x.data();
  double* o = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  const double* pa = a.data();
  const double* pb = b.data();
  double* o = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = f(pa[i], pb[i]);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  return make_binary(Op::kAdd, a, b, zip(a.value(), b.value(), [](double x, double y) { return x + y; }));
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  return make_binary(Op::kSub, a, b, zip(a.value(), b.value(), [](double x, double y) { return x - y; }));
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  return make_binary(Op::kMul, a, b, zip(a.value(), b.value(), [](double x, double y) { return x * y; }));
}

Var scale(Var a, double s) {
  return make_unary(Op::kScale, a, map(a.value(), [s](double x) { return s * x; }), s);
}

Var shift(Var a, double s) {
  return make_unary(Op::kShift, a, map(a.value(), [s](double x) { return x + s; }), s);
}

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  Matrix v;
  try {
    v = linalg::matmul(a.value(), b.value(), transpose_a, transpose_b);
  } catch (const linalg::DimensionError& e) {
    throw GraphError(e.what());
  }
  return make_binary(Op::kMatmul, a, b, std::move(v),
                     {static_cast<std::size_t>(transpose_a), static_cast<std::size_t>(transpose_b)});
}

Var bias_add(Var x, Var bias) {
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.cols() != 1 || bv.rows() != xv.rows()) {
    throw GraphError("bias_add: bias must be " + std::to_string(xv.rows()) + "x1, got " +
                     linalg::shape_string(bv));
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double b = bv(r, 0);
    for (double& e : out.row_span(r)) e += b;
  }
  return make_binary(Op::kBiasAdd, x, bias, std::move(out));
}

Var leaky_relu(Var x, double slope) {
  return make_unary(Op::kLeakyRelu, x,
                    map(x.value(), [slope](double v) { return v >= 0.0 ? v : slope * v; }), slope);
}

Var log(Var x) { return make_unary(Op::kLog, x, map(x.value(), [](double v) { return std::log(v); })); }
Var exp(Var x) { return make_unary(Op::kExp, x, map(x.value(), [](double v) { return std::exp(v); })); }
Var sin(Var x) { return make_unary(Op::kSin, x, map(x.value(), [](double v) { return std::sin(v); })); }
Var cos(Var x) { return make_unary(Op::kCos, x, map(x.value(), [](double v) { return std::cos(v); })); }
Var reciprocal(Var x) {
  return make_unary(Op::kReciprocal, x, map(x.value(), [](double v) { return 1.0 / v; }));
}
Var sqrt(Var x) {
  return make_unary(Op::kSqrt, x, map(x.value(), [](double v) { return std::sqrt(v); }));
}

Var sum_rows(Var x) {
  const Matrix& v = x.value();
  Matrix out(1, v.cols());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto row = v.row_span(r);
    for (std::size_t c = 0; c < v.cols(); ++c) out(0, c) += row[c];
  }
  return make_unary(Op::kSumRows, x, std::move(out));
}

Var broadcast_rows(Var x, std::size_t rows) {
  const Matrix& v = x.value();
  if (v.rows() != 1) throw GraphError("broadcast_rows: input must have one row");
  Matrix out(rows, v.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(v.data(), v.data() + v.cols(), out.row_span(r).begin());
  return make_unary(Op::kBroadcastRows, x, std::move(out), 0.0, {rows, 0});
}

Var sum_cols(Var x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double s = 0.0;
    for (double e : v.row_span(r)) s += e;
    out(r, 0) = s;
  }
  return make_unary(Op::kSumCols, x, std::move(out));
}

Var broadcast_cols(Var x, std::size_t cols) {
  const Matrix& v = x.value();
  if (v.cols() != 1) throw GraphError("broadcast_cols: input must have one column");
  Matrix out(v.rows(), cols);
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (double& e : out.row_span(r)) e = v(r, 0);
  return make_unary(Op::kBroadcastCols, x, std::move(out), 0.0, {cols, 0});
}

Var tile_cols(Var x, std::size_t copies) {
  if (copies == 0) throw GraphError("tile_cols: copies must be positive");
  const Matrix& v = x.value();
  const std::size_t c = v.cols();
  Matrix out(v.rows(), c * copies);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto src = v.row_span(r);
    auto dst = out.row_span(r);
    for (std::size_t k = 0; k < copies; ++k) std::copy(src.begin(), src.end(), dst.begin() + k * c);
  }
  return make_unary(Op::kTileCols, x, std::move(out), 0.0, {copies, 0});
}

Var fold_cols(Var x, std::size_t copies) {
  const Matrix& v = x.value();
  if (copies == 0 || v.cols() % copies != 0) {
    throw GraphError("fold_cols: column count " + std::to_string(v.cols()) +
                     " is not a multiple of " + std::to_string(copies));
  }
  const std::size_t c = v.cols() / copies;
  Matrix out(v.rows(), c);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto src = v.row_span(r);
    auto dst = out.row_span(r);
    for (std::size_t k = 0; k < copies; ++k)
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[k * c + j];
  }
  return make_unary(Op::kFoldCols, x, std::move(out), 0.0, {copies, 0});
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Matrix& v = x.value();
  if (count == 0 || begin + count > v.rows()) throw GraphError("slice_rows: range out of bounds");
  Matrix out(count, v.cols());
  std::copy(v.data() + begin * v.cols(), v.data() + (begin + count) * v.cols(), out.data());
  return make_unary(Op::kSliceRows, x, std::move(out), 0.0, {begin, count});
}

Var pad_rows(Var x, std::size_t begin, std::size_t total) {
  const Matrix& v = x.value();
  if (begin + v.rows() > total) throw GraphError("pad_rows: range out of bounds");
  Matrix out(total, v.cols());
  std::copy(v.data(), v.data() + v.size(), out.data() + begin * v.cols());
  return make_unary(Op::kPadRows, x, std::move(out), 0.0, {begin, total});
}

Var detach(Var x) { return x.tape().constant(x.value()); }

Var sum(Var x) { return sum_cols(sum_rows(x)); }

Var inner(Var a, Var b) { return sum(mul(a, b)); }

Var colwise_dot(Var a, Var b) { return sum_rows(mul(a, b)); }

Var neg(Var x) { return scale(x, -1.0); }

Var divide(Var a, Var b) { return mul(a, reciprocal(b)); }

Var square(Var x) { return mul(x, x); }

Var mean_cols(Var x) { return scale(sum_cols(x), 1.0 / static_cast<double>(x.cols())); }

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw GraphError("concat_rows: no parts");
  std::size_t total = 0;
  for (const Var& p : parts) total += p.rows();
  if (parts.size() == 1) return parts[0];
  Var out;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    Var padded = pad_rows(p, offset, total);
    out = out.valid() ? add(out, padded) : padded;
    offset += p.rows();
  }
  return out;
}

Var scale_columns(Var x, Var r) {
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw GraphError("scale_columns: row vector has shape " + linalg::shape_string(r.value()) +
                     ", expected 1x" + std::to_string(x.cols()));
  }
  if (x.rows() == 1) return mul(x, r);
  return mul(x, broadcast_rows(r, x.rows()));
}

Var scale_by(Var x, Var s) {
  if (s.rows() != 1 || s.cols() != 1) throw GraphError("scale_by: factor must be 1x1");
  Var row = x.cols() == 1 ? s : broadcast_cols(s, x.cols());
  return scale_columns(x, row);
}

}  // namespace specprop::ad
