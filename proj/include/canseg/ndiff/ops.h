#ifndef CANSEG_NDIFF_OPS_H_
#define CANSEG_NDIFF_OPS_H_

#include <span>
#include <vector>

#include "canseg/ndiff/graph.h"
#include "canseg/rng.h"

// Differentiable primitives. Every op throws ShapeError naming both operand
// shapes when they are incompatible.
namespace canseg::ndiff {

// (m x k)(k x n) -> (m x n); (m x k)(k) -> (m).
Var matmul(Var a, Var b);
// W x + b for W (m x k), x (k), b (m).
Var affine(Var w, Var x, Var b);

// Same shapes, or (m x n) + (n) broadcast over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// s * a for a size-1 tensor s.
Var scale_by(Var a, Var s);
Var one_minus(Var a);
Var add_n(const std::vector<Var>& terms);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);

// Rank-1 concatenation.
Var concat(const std::vector<Var>& parts);
// Rank-1 slice [start, start + length).
Var slice(Var a, int start, int length);
// Row of a rank-2 tensor.
Var row(Var a, int index);
// Rank-1 vectors of equal length -> matrix.
Var stack_rows(const std::vector<Var>& rows);
Var transpose(Var a);

// Rank-1 softmax. With a mask, masked-out entries are exactly 0.
Var softmax(Var a);
Var softmax(Var a, const std::vector<bool>& mask);
// log sum_{i in indices} exp(a_i).
Var logsumexp(Var a, std::span<const int> indices);

Var pick(Var a, int index);
Var sum(Var a);

// -log(max(p[target], floor)) for a probability vector p.
Var cross_entropy(Var probs, int target, double floor = 0.0);

// out[v] = sum of a[i] with indices[i] == v, for v < size.
Var scatter_add(Var a, std::span<const int> indices, int size);

// Inverted dropout: elementwise product with a mask holding 0 or 1/keep.
Var dropout_mask_apply(Var a, const Tensor& mask);
Tensor dropout_mask(const Shape& shape, double drop_probability, Rng& rng);
// Draws a mask and applies it; identity when drop_probability == 0 or the
// rng is null.
Var dropout(Var a, double drop_probability, Rng* rng);

}  // namespace canseg::ndiff

#endif  // CANSEG_NDIFF_OPS_H_
