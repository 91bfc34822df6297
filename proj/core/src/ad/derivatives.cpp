#include "specprop/ad/derivatives.h"

#include <algorithm>
#include <string>

namespace specprop::ad {
namespace {

// Snapshot of the fields of a node needed to emit derivative nodes. The
// tape may reallocate while we append, so nothing here refers into it.
struct NodeInfo {
  Op op;
  Var self;
  Var a;
  Var b;
  double scalar;
  std::array<std::size_t, 2> ints;
  std::size_t parent_rows;
  std::size_t parent_cols;
};

NodeInfo snapshot(Tape& tape, std::int32_t id) {
  const Node& n = tape.node(id);
  NodeInfo info{n.op, Var(&tape, id), Var(), Var(), n.scalar, n.ints, 0, 0};
  if (n.parents[0] >= 0) {
    info.a = Var(&tape, n.parents[0]);
    info.parent_rows = tape.node(n.parents[0]).value.rows();
    info.parent_cols = tape.node(n.parents[0]).value.cols();
  }
  if (n.parents[1] >= 0) info.b = Var(&tape, n.parents[1]);
  return info;
}

// Derivative of leaky_relu evaluated at the parent's value. Piecewise
// constant, so it enters the graph as a constant. At exactly zero the
// positive-side slope (1) is used, matching the forward definition.
Var leaky_relu_mask(Var x, double slope) {
  const Matrix& v = x.value();
  Matrix mask(v.rows(), v.cols());
  const double* in = v.data();
  double* out = mask.data();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = in[i] >= 0.0 ? 1.0 : slope;
  return x.tape().constant(std::move(mask));
}

Var accumulate(Var existing, Var contribution) {
  return existing.valid() ? add(existing, contribution) : contribution;
}

// Adjoint contributions of node `info` given the adjoint g of its output.
// Returns {adjoint for parent a, adjoint for parent b}; entries are left
// invalid when the parent does not need one.
std::array<Var, 2> backward_rule(const NodeInfo& info, Var g, bool need_a, bool need_b) {
  std::array<Var, 2> out;
  switch (info.op) {
    case Op::kConstant:
    case Op::kVariable:
      break;
    case Op::kAdd:
      if (need_a) out[0] = g;
      if (need_b) out[1] = g;
      break;
    case Op::kSub:
      if (need_a) out[0] = g;
      if (need_b) out[1] = neg(g);
      break;
    case Op::kMul:
      if (need_a) out[0] = mul(g, info.b);
      if (need_b) out[1] = mul(g, info.a);
      break;
    case Op::kScale:
      out[0] = scale(g, info.scalar);
      break;
    case Op::kShift:
      out[0] = g;
      break;
    case Op::kMatmul: {
      const bool ta = info.ints[0] != 0;
      const bool tb = info.ints[1] != 0;
      if (need_a) {
        out[0] = ta ? matmul(info.b, g, tb, true) : matmul(g, info.b, false, !tb);
      }
      if (need_b) {
        out[1] = tb ? matmul(g, info.a, true, ta) : matmul(info.a, g, !ta, false);
      }
      break;
    }
    case Op::kBiasAdd:
      if (need_a) out[0] = g;
      if (need_b) out[1] = sum_cols(g);
      break;
    case Op::kLeakyRelu:
      out[0] = mul(g, leaky_relu_mask(info.a, info.scalar));
      break;
    case Op::kLog:
      out[0] = mul(g, reciprocal(info.a));
      break;
    case Op::kExp:
      out[0] = mul(g, info.self);
      break;
    case Op::kSin:
      out[0] = mul(g, cos(info.a));
      break;
    case Op::kCos:
      out[0] = neg(mul(g, sin(info.a)));
      break;
    case Op::kReciprocal:
      out[0] = neg(mul(g, mul(info.self, info.self)));
      break;
    case Op::kSqrt:
      out[0] = mul(g, scale(reciprocal(info.self), 0.5));
      break;
    case Op::kSumRows:
      out[0] = broadcast_rows(g, info.parent_rows);
      break;
    case Op::kBroadcastRows:
      out[0] = sum_rows(g);
      break;
    case Op::kSumCols:
      out[0] = broadcast_cols(g, info.parent_cols);
      break;
    case Op::kBroadcastCols:
      out[0] = sum_cols(g);
      break;
    case Op::kTileCols:
      out[0] = fold_cols(g, info.ints[0]);
      break;
    case Op::kFoldCols:
      out[0] = tile_cols(g, info.ints[0]);
      break;
    case Op::kSliceRows:
      out[0] = pad_rows(g, info.ints[0], info.parent_rows);
      break;
    case Op::kPadRows:
      out[0] = slice_rows(g, info.ints[0], info.parent_rows);
      break;
  }
  return out;
}

// Tangent of node `info` given the tangents of its parents (invalid = zero).
Var forward_rule(const NodeInfo& info, Var ta, Var tb) {
  switch (info.op) {
    case Op::kConstant:
    case Op::kVariable:
      return Var();
    case Op::kAdd:
      if (ta.valid() && tb.valid()) return add(ta, tb);
      return ta.valid() ? ta : tb;
    case Op::kSub:
      if (ta.valid() && tb.valid()) return sub(ta, tb);
      return ta.valid() ? ta : neg(tb);
    case Op::kMul: {
      Var out;
      if (ta.valid()) out = mul(ta, info.b);
      if (tb.valid()) out = accumulate(out, mul(info.a, tb));
      return out;
    }
    case Op::kScale:
      return scale(ta, info.scalar);
    case Op::kShift:
      return ta;
    case Op::kMatmul: {
      const bool ta_flag = info.ints[0] != 0;
      const bool tb_flag = info.ints[1] != 0;
      Var out;
      if (ta.valid()) out = matmul(ta, info.b, ta_flag, tb_flag);
      if (tb.valid()) out = accumulate(out, matmul(info.a, tb, ta_flag, tb_flag));
      return out;
    }
    case Op::kBiasAdd:
      if (ta.valid() && tb.valid()) return bias_add(ta, tb);
      if (ta.valid()) return ta;
      return broadcast_cols(tb, info.parent_cols);
    case Op::kLeakyRelu:
      return mul(ta, leaky_relu_mask(info.a, info.scalar));
    case Op::kLog:
      return mul(ta, reciprocal(info.a));
    case Op::kExp:
      return mul(ta, info.self);
    case Op::kSin:
      return mul(ta, cos(info.a));
    case Op::kCos:
      return neg(mul(ta, sin(info.a)));
    case Op::kReciprocal:
      return neg(mul(ta, mul(info.self, info.self)));
    case Op::kSqrt:
      return mul(ta, scale(reciprocal(info.self), 0.5));
    case Op::kSumRows:
      return sum_rows(ta);
    case Op::kBroadcastRows:
      return broadcast_rows(ta, info.ints[0]);
    case Op::kSumCols:
      return sum_cols(ta);
    case Op::kBroadcastCols:
      return broadcast_cols(ta, info.ints[0]);
    case Op::kTileCols:
      return tile_cols(ta, info.ints[0]);
    case Op::kFoldCols:
      return fold_cols(ta, info.ints[0]);
    case Op::kSliceRows:
      return slice_rows(ta, info.ints[0], info.ints[1]);
    case Op::kPadRows:
      return pad_rows(ta, info.ints[0], info.ints[1]);
  }
  return Var();
}

Tape& tape_of(Var output, std::span<const Var> inputs) {
  Tape& tape = output.tape();
  for (const Var& in : inputs) {
    if (&in.tape() != &tape) throw GraphError("inputs and output live on different tapes");
  }
  return tape;
}

Var zeros_like(Tape& tape, Var x) { return tape.constant(Matrix(x.rows(), x.cols())); }

std::vector<Var> reverse_pass(Var output, std::span<const Var> inputs, Var cotangent,
                              bool allow_unreachable) {
  Tape& tape = tape_of(output, inputs);
  if (&cotangent.tape() != &tape) throw GraphError("cotangent lives on a different tape");
  if (!cotangent.value().same_shape(output.value())) {
    throw GraphError("cotangent shape " + linalg::shape_string(cotangent.value()) +
                     " does not match output shape " + linalg::shape_string(output.value()));
  }
  std::vector<Var> result;
  result.reserve(inputs.size());
  if (inputs.empty()) return result;

  const std::int32_t hi = output.id();
  std::int32_t lo = hi;
  for (const Var& in : inputs) lo = std::min(lo, in.id());
  const std::size_t span_len = static_cast<std::size_t>(hi - lo + 1);

  std::vector<char> depends(span_len, 0);
  std::vector<char> is_input(span_len, 0);
  for (const Var& in : inputs) {
    if (in.id() > hi) continue;
    depends[static_cast<std::size_t>(in.id() - lo)] = 1;
    is_input[static_cast<std::size_t>(in.id() - lo)] = 1;
  }
  for (std::int32_t i = lo; i <= hi; ++i) {
    auto& d = depends[static_cast<std::size_t>(i - lo)];
    if (d) continue;
    const Node& n = tape.node(i);
    for (std::int32_t p : n.parents)
      if (p >= lo && depends[static_cast<std::size_t>(p - lo)]) d = 1;
  }

  if (!depends[span_len - 1]) {
    if (!allow_unreachable) throw GraphError("output is not reachable from the given inputs");
    for (const Var& in : inputs) result.push_back(zeros_like(tape, in));
    return result;
  }

  std::vector<Var> adjoint(span_len);
  adjoint[span_len - 1] = cotangent;
  for (std::int32_t i = hi; i > lo; --i) {
    const std::size_t slot = static_cast<std::size_t>(i - lo);
    if (!adjoint[slot].valid() || !depends[slot]) continue;
    const NodeInfo info = snapshot(tape, i);
    auto relevant = [&](Var p) {
      return p.valid() && p.id() >= lo && depends[static_cast<std::size_t>(p.id() - lo)];
    };
    const bool need_a = relevant(info.a);
    const bool need_b = relevant(info.b);
    if (!need_a && !need_b) continue;
    const auto contrib = backward_rule(info, adjoint[slot], need_a, need_b);
    if (need_a && contrib[0].valid()) {
      auto& target = adjoint[static_cast<std::size_t>(info.a.id() - lo)];
      target = accumulate(target, contrib[0]);
    }
    if (need_b && contrib[1].valid()) {
      auto& target = adjoint[static_cast<std::size_t>(info.b.id() - lo)];
      target = accumulate(target, contrib[1]);
    }
    // Inputs keep their adjoint for the read-out below.
    if (!is_input[slot]) adjoint[slot] = Var();
  }
  for (const Var& in : inputs) {
    if (in.id() > hi) {
      result.push_back(zeros_like(tape, in));
      continue;
    }
    Var adj = adjoint[static_cast<std::size_t>(in.id() - lo)];
    result.push_back(adj.valid() ? adj : zeros_like(tape, in));
  }
  return result;
}

}  // namespace

std::vector<Var> vjp(Var output, std::span<const Var> inputs, Var cotangent) {
  return reverse_pass(output, inputs, cotangent, false);
}

Var vjp(Var output, Var input, Var cotangent) {
  const Var inputs[] = {input};
  return vjp(output, inputs, cotangent)[0];
}

Var jvp(Var output, Var input, Var tangent) {
  Tape& tape = output.tape();
  if (&input.tape() != &tape || &tangent.tape() != &tape) {
    throw GraphError("jvp operands live on different tapes");
  }
  if (!tangent.value().same_shape(input.value())) {
    throw GraphError("tangent shape " + linalg::shape_string(tangent.value()) +
                     " does not match input shape " + linalg::shape_string(input.value()));
  }
  if (output.id() == input.id()) return tangent;
  if (output.id() < input.id()) throw GraphError("output is not reachable from the given input");

  const std::int32_t lo = input.id();
  const std::int32_t hi = output.id();
  std::vector<Var> tangents(static_cast<std::size_t>(hi - lo + 1));
  tangents[0] = tangent;
  for (std::int32_t i = lo + 1; i <= hi; ++i) {
    const Node& n = tape.node(i);
    Var ta, tb;
    if (n.parents[0] >= lo) ta = tangents[static_cast<std::size_t>(n.parents[0] - lo)];
    if (n.parents[1] >= lo) tb = tangents[static_cast<std::size_t>(n.parents[1] - lo)];
    if (!ta.valid() && !tb.valid()) continue;
    const NodeInfo info = snapshot(tape, i);
    tangents[static_cast<std::size_t>(i - lo)] = forward_rule(info, ta, tb);
  }
  Var out = tangents.back();
  if (!out.valid()) throw GraphError("output is not reachable from the given input");
  return out;
}

std::vector<Var> gradients(Var output, std::span<const Var> wrt) {
  if (output.rows() != 1 || output.cols() != 1) {
    throw GraphError("gradients: output must be 1x1, got " + linalg::shape_string(output.value()));
  }
  Var one = output.tape().constant(1.0);
  return reverse_pass(output, wrt, one, true);
}

}  // namespace specprop::ad
