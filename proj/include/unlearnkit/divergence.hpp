#pragma once

#include "unlearnkit/common.hpp"

namespace unlearnkit {

// A probability vector is a Vector with nonnegative entries summing to 1
// within kProbSumTolerance. Helpers below validate at API boundaries.
using ProbVector = Vector;

inline constexpr double kProbSumTolerance = 1e-6;

struct DivergenceConfig {
  double epsilon = 1e-12;  // floor applied to the second KL argument only
  double temperature = 1.0;
};

bool is_prob_vector(const ProbVector& p, double tol = kProbSumTolerance);
void require_prob_vector(const ProbVector& p, std::string_view what);

// softmax(logits / temperature), computed with max-subtraction.
ProbVector softmax_with_temperature(const Vector& logits, double temperature);

// Row-wise softmax over a batch of logits.
Matrix softmax_rows(const Matrix& logits, double temperature);

// Shannon entropy in nats, 0·log0 := 0.
double entropy_nats(const ProbVector& p);

// KL(p || q) in nats: sum_i p_i * ln(p_i / max(q_i, eps)), zero-mass terms
// of p contribute nothing. Result clamped to be nonnegative.
double kl_divergence(const ProbVector& p, const ProbVector& q,
                     const DivergenceConfig& config = {});

// Jensen-Shannon divergence in bits (log base 2), so the value lies in
// [0, 1] and JS of complementary one-hots is exactly 1.
double js_divergence(const ProbVector& p, const ProbVector& q);

// Mean Euclidean distance between aligned probability rows.
double activation_distance(const Matrix& probs_a, const Matrix& probs_b);

}  // namespace unlearnkit
