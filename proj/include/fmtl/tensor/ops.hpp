#pragma once

#include "fmtl/tensor/tape.hpp"

// Differentiable primitives recorded on a Tape. All shapes are checked
// eagerly and violations throw ShapeError.
namespace fmtl::ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var transpose(Var a);
Var hstack(Var a, Var b);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
// Column-wise mean over rows: n x m -> 1 x m.
Var mean_rows(Var a);
// Sum of all entries -> 1 x 1.
Var sum(Var a);
// col (n x 1) + row (1 x m) broadcast to n x m.
Var broadcast_add(Var col, Var row);
// Row-wise softmax restricted to entries where mask != 0; masked entries are
// exactly 0 in the output. Every row must have at least one unmasked entry.
Var masked_row_softmax(Var a, const Matrix& mask);
// sum(a o a).
Var frobenius_sq(Var a);
// Tr(a * c * a^T) for a constant symmetric c.
Var trace_quadratic(Var a, const Matrix& c);

}  // namespace fmtl::ad
