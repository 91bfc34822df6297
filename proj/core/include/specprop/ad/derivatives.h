#pragma once

#include <span>
#include <vector>

#include "specprop/ad/tape.h"

namespace specprop::ad {

// Reverse mode: appends to the tape a graph computing u^T J for every input,
// where J is the Jacobian of `output` with respect to that input. The result
// nodes are ordinary primitives and may be differentiated again.
// Throws GraphError if `output` does not depend on any input.
std::vector<Var> vjp(Var output, std::span<const Var> inputs, Var cotangent);
Var vjp(Var output, Var input, Var cotangent);

// Forward mode: appends a graph computing J v for a perturbation `tangent`
// of `input`. Throws GraphError if `output` does not depend on `input`.
Var jvp(Var output, Var input, Var tangent);

// Gradient of a 1x1 node with respect to each of `wrt`, as graph nodes.
// Inputs that the output does not depend on receive zero gradients.
std::vector<Var> gradients(Var output, std::span<const Var> wrt);

}  // namespace specprop::ad
