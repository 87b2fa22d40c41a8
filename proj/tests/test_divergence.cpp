#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "unlearnkit/divergence.hpp"

#include <cmath>
#include <random>

using namespace unlearnkit;

namespace {

// Independent brute-force evaluators in long double; these deliberately do
// not share code with the library path.
long double oracle_kl_nats(const std::vector<long double>& p, const std::vector<long double>& q,
                           long double eps = 1e-12L) {
  long double acc = 0.0L;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0L) acc += p[i] * std::log(p[i] / std::max(q[i], eps));
  }
  return acc < 0.0L ? 0.0L : acc;
}

long double oracle_js_bits(const std::vector<long double>& p, const std::vector<long double>& q) {
  long double acc = 0.0L;
  for (size_t i = 0; i < p.size(); ++i) {
    const long double m = (p[i] + q[i]) / 2.0L;
    if (p[i] > 0.0L) acc += 0.5L * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0L) acc += 0.5L * q[i] * std::log(q[i] / m);
  }
  return acc / std::log(2.0L);
}

std::vector<long double> oracle_softmax(const std::vector<long double>& logits, long double t) {
  long double total = 0.0L;
  std::vector<long double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) total += std::exp(logits[i] / t);
  for (size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] / t) / total;
  return out;
}

Vector random_prob(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  Vector p(dim);
  for (int i = 0; i < dim; ++i) p[i] = unif(rng);
  return p / p.sum();
}

std::vector<long double> to_ld(const Vector& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("softmax: equal logits give the uniform vector at any temperature") {
  for (double t : {0.25, 1.0, 4.0}) {
    const ProbVector p = softmax_with_temperature(Vector::Constant(5, 2.5), t);
    for (int i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(0.2).epsilon(1e-12));
  }
}

TEST_CASE("softmax: frozen two-logit value") {
  Vector logits(2);
  logits << 1.0, 0.0;
  const ProbVector p = softmax_with_temperature(logits, 1.0);
  CHECK(p[0] == doctest::Approx(0.731058578630005).epsilon(1e-10));
  CHECK(p[1] == doctest::Approx(0.268941421369995).epsilon(1e-10));
}

TEST_CASE("softmax: shift invariance and validity on random logits") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (int it = 0; it < 200; ++it) {
    const int dim = 2 + static_cast<int>(rng() % 9);
    Vector logits(dim);
    for (int i = 0; i < dim; ++i) logits[i] = gauss(rng);
    const ProbVector p = softmax_with_temperature(logits, 1.0);
    CHECK(is_prob_vector(p));
    const ProbVector shifted = softmax_with_temperature(logits.array() + 123.0, 1.0);
    CHECK((p - shifted).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("softmax: entropy is nondecreasing in temperature") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int it = 0; it < 100; ++it) {
    const int dim = 2 + static_cast<int>(rng() % 9);
    Vector logits(dim);
    for (int i = 0; i < dim; ++i) logits[i] = gauss(rng);
    double prev = -1.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
      const double h = entropy_nats(softmax_with_temperature(logits, t));
      CHECK(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("softmax: rejects non-finite logits and bad temperature") {
  Vector logits(2);
  logits << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(softmax_with_temperature(logits, 1.0), NumericError);
  CHECK_THROWS_AS(softmax_with_temperature(Vector::Zero(3), 0.0), NumericError);
}

TEST_CASE("kl: identity, frozen value, zero-mass floor") {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 20; ++it) {
    const Vector p = random_prob(rng, 4);
    CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-15));
  }
  Vector p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(kl_divergence(p, q) == doctest::Approx(0.143841036225890).epsilon(1e-9));

  // Documented clamping contract: second-argument zeros hit the 1e-12 floor.
  Vector onehot(2);
  onehot << 1.0, 0.0;
  CHECK(kl_divergence(p, onehot) == doctest::Approx(13.1223633774043).epsilon(1e-9));
}

TEST_CASE("kl: dimension mismatch is a shape error") {
  CHECK_THROWS_AS(kl_divergence(Vector::Constant(2, 0.5), Vector::Constant(3, 1.0 / 3)),
                  ShapeError);
  CHECK_THROWS_AS(js_divergence(Vector::Constant(2, 0.5), Vector::Constant(3, 1.0 / 3)),
                  ShapeError);
}

TEST_CASE("js: identity, maximum, frozen value") {
  Vector p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(js_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(js_divergence(p, q) == doctest::Approx(0.048794940695399).epsilon(1e-9));

  Vector e0 = Vector::Zero(4), e1 = Vector::Zero(4);
  e0[0] = 1.0;
  e1[1] = 1.0;
  CHECK(js_divergence(e0, e1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("divergences match the brute-force oracle on 1000 random pairs") {
  std::mt19937_64 rng(2024);
  for (int it = 0; it < 1000; ++it) {
    const int dim = 2 + static_cast<int>(rng() % 9);
    const Vector p = random_prob(rng, dim);
    const Vector q = random_prob(rng, dim);
    const double kl = kl_divergence(p, q);
    const double js = js_divergence(p, q);
    CHECK(std::abs(kl - static_cast<double>(oracle_kl_nats(to_ld(p), to_ld(q)))) < 1e-9);
    CHECK(std::abs(js - static_cast<double>(oracle_js_bits(to_ld(p), to_ld(q)))) < 1e-9);
    CHECK(kl >= 0.0);
    CHECK(js >= 0.0);
    CHECK(js <= 1.0);
    CHECK(std::abs(js - js_divergence(q, p)) < 1e-12);  // symmetry
  }
}

TEST_CASE("softmax matches the brute-force oracle") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int it = 0; it < 200; ++it) {
    const int dim = 2 + static_cast<int>(rng() % 9);
    Vector logits(dim);
    for (int i = 0; i < dim; ++i) logits[i] = gauss(rng);
    for (double t : {0.5, 1.0, 3.0}) {
      const ProbVector got = softmax_with_temperature(logits, t);
      const auto want = oracle_softmax(to_ld(logits), static_cast<long double>(t));
      for (int i = 0; i < dim; ++i) {
        CHECK(std::abs(got[i] - static_cast<double>(want[static_cast<size_t>(i)])) < 1e-12);
      }
    }
  }
}

TEST_CASE("activation distance: identity, orthogonal one-hots, shape error") {
  Matrix a(2, 3), b(2, 3);
  a << 1, 0, 0, 0.5, 0.25, 0.25;
  b = a;
  CHECK(activation_distance(a, b) == doctest::Approx(0.0));

  Matrix e0(1, 2), e1(1, 2);
  e0 << 1, 0;
  e1 << 0, 1;
  CHECK(activation_distance(e0, e1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(activation_distance(a, Matrix::Zero(3, 3)), ShapeError);
}
