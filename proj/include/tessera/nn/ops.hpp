#pragma once

#include <vector>

#include "tessera/nn/graph.hpp"

namespace tessera::nn {

// Linear algebra. Matrices are row-major nodes of shape rows x cols; vectors
// are n x 1.
Expr matvec(Expr w, Expr x);
Expr affine(Expr w, Expr x, Expr b);

Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr cmul(Expr a, Expr b);
Expr scale(Expr a, double c);
/// Elementwise sum of equally sized nodes.
Expr sum(const std::vector<Expr>& xs);

Expr tanh(Expr x);
Expr sigmoid(Expr x);
Expr relu(Expr x);

Expr concat(const std::vector<Expr>& xs);
/// Stacks equally sized vectors as the rows of a matrix.
Expr stack(const std::vector<Expr>& rows);
Expr slice(Expr x, std::size_t begin, std::size_t length);

/// Sum of all elements (scalar).
Expr sum_elements(Expr x);
Expr dot(Expr a, Expr b);
Expr pick(Expr x, std::size_t index);

Expr softmax(Expr x);
Expr log_softmax(Expr x);
Expr logsumexp(Expr x);

/// logsumexp(logits) - logits[gold].
Expr softmax_cross_entropy(Expr logits, std::size_t gold);

/// Binary cross-entropy of sigmoid(logit) against `positive`.
Expr logistic_loss(Expr logit, bool positive);

/// score_k = x' U_k y + W_k [x; y] + b_k. `u` has shape {K, dx, dy},
/// `w` {K, dx + dy}, `b` {K}.
Expr biaffine(Expr x, Expr y, Expr u, Expr w, Expr b);

/// Σ_i weights[i] * values[i].
Expr weighted_sum(Expr weights, const std::vector<Expr>& values);

/// Inverted dropout; identity outside training or when p == 0.
Expr dropout(Expr x, double p);

}  // namespace tessera::nn
