#include "unlearnkit/divergence.hpp"

#include <cmath>
#include <sstream>

namespace unlearnkit {

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

bool is_prob_vector(const ProbVector& p, double tol) {
  if (p.size() == 0) return false;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double x = p[i];
    if (!std::isfinite(x) || x < 0.0) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

void require_prob_vector(const ProbVector& p, std::string_view what) {
  if (!is_prob_vector(p)) {
    throw NumericError(std::string(what) + ": not a valid probability vector");
  }
}

ProbVector softmax_with_temperature(const Vector& logits, double temperature) {
  if (logits.size() == 0) throw ShapeError("softmax: empty logits");
  if (!(temperature > 0.0)) throw NumericError("softmax: temperature must be positive");
  if (!logits.allFinite()) throw NumericError("softmax: non-finite logits");
  const Vector scaled = logits / temperature;
  const double m = scaled.maxCoeff();
  Vector e = (scaled.array() - m).exp();
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw NumericError("softmax: temperature must be positive");
  if (!logits.allFinite()) throw NumericError("softmax: non-finite logits");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Vector scaled = logits.row(r).transpose() / temperature;
    const double m = scaled.maxCoeff();
    Vector e = (scaled.array() - m).exp();
    out.row(r) = (e / e.sum()).transpose();
  }
  return out;
}

double entropy_nats(const ProbVector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double kl_divergence(const ProbVector& p, const ProbVector& q, const DivergenceConfig& config) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: dimension mismatch");
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      d += p[i] * std::log(p[i] / std::max(q[i], config.epsilon));
    }
  }
  return std::max(d, 0.0);
}

double js_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw ShapeError("js_divergence: dimension mismatch");
  // 0.5 KL(p||m) + 0.5 KL(q||m), m = (p+q)/2, log base 2. Whenever a
  // numerator entry is positive the mixture entry is too, so no floor is
  // needed here.
  constexpr double inv_ln2 = 1.4426950408889634074;
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) d += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) d += 0.5 * q[i] * std::log(q[i] / m);
  }
  d *= inv_ln2;
  if (d < 0.0) d = 0.0;
  if (d > 1.0) d = 1.0;
  return d;
}

double activation_distance(const Matrix& probs_a, const Matrix& probs_b) {
  if (probs_a.rows() != probs_b.rows() || probs_a.cols() != probs_b.cols()) {
    throw ShapeError("activation_distance: sequences are not aligned");
  }
  if (probs_a.rows() == 0) throw ArgumentError("activation_distance: empty sequences");
  double total = 0.0;
  for (Eigen::Index r = 0; r < probs_a.rows(); ++r) {
    total += (probs_a.row(r) - probs_b.row(r)).norm();
  }
  return total / static_cast<double>(probs_a.rows());
}

}  // namespace unlearnkit
