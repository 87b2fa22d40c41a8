#pragma once

#include "unlearnkit/common.hpp"

#include <limits>
#include <memory>
#include <random>

namespace unlearnkit {

struct ParamTensor {
  Matrix value;
  Matrix grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  // Training-mode forward; caches whatever backward needs.
  virtual Matrix forward(const Matrix& input) = 0;
  // Accumulates parameter gradients, returns gradient wrt the input.
  virtual Matrix backward(const Matrix& grad_output) = 0;
  // Cache-free forward for frozen evaluation; safe to call concurrently.
  virtual Matrix infer(const Matrix& input) const = 0;
  virtual void collect_params(std::vector<ParamTensor*>& out) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(int in_dim, int out_dim, std::mt19937_64& rng);
  Matrix forward(const Matrix& input) override;
  Matrix backward(const Matrix& grad_output) override;
  Matrix infer(const Matrix& input) const override;
  void collect_params(std::vector<ParamTensor*>& out) override;
  std::unique_ptr<Layer> clone() const override;

 private:
  DenseLayer() = default;
  ParamTensor weight_;  // in x out
  ParamTensor bias_;    // 1 x out
  Matrix input_cache_;
};

class ReluLayer final : public Layer {
 public:
  ReluLayer() = default;
  Matrix forward(const Matrix& input) override;
  Matrix backward(const Matrix& grad_output) override;
  Matrix infer(const Matrix& input) const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Matrix mask_;
};

// 1-D convolution over a [channels x length] signal flattened row-major
// into each input row. Zero padding keeps the length fixed.
class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(int in_channels, int out_channels, int length, int kernel, std::mt19937_64& rng);
  Matrix forward(const Matrix& input) override;
  Matrix backward(const Matrix& grad_output) override;
  Matrix infer(const Matrix& input) const override;
  void collect_params(std::vector<ParamTensor*>& out) override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Conv1dLayer() = default;
  Matrix run(const Matrix& input) const;
  int in_ch_ = 0, out_ch_ = 0, len_ = 0, kernel_ = 0, pad_ = 0;
  ParamTensor weight_;  // out_ch x (in_ch * kernel)
  ParamTensor bias_;    // 1 x out_ch
  Matrix input_cache_;
};

// Mean over the length axis of a [channels x length] signal -> channels.
class GlobalAvgPool1dLayer final : public Layer {
 public:
  GlobalAvgPool1dLayer(int channels, int length) : ch_(channels), len_(length) {}
  Matrix forward(const Matrix& input) override;
  Matrix backward(const Matrix& grad_output) override;
  Matrix infer(const Matrix& input) const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  int ch_, len_;
};

// Single LSTM layer over [steps x step_width] rows; emits the final hidden
// state. Full backpropagation through time.
class LstmLayer final : public Layer {
 public:
  LstmLayer(int step_width, int steps, int hidden, std::mt19937_64& rng);
  Matrix forward(const Matrix& input) override;
  Matrix backward(const Matrix& grad_output) override;
  Matrix infer(const Matrix& input) const override;
  void collect_params(std::vector<ParamTensor*>& out) override;
  std::unique_ptr<Layer> clone() const override;

 private:
  LstmLayer() = default;
  int width_ = 0, steps_ = 0, hidden_ = 0;
  ParamTensor wx_;  // width x 4H, gate order [i f g o]
  ParamTensor wh_;  // H x 4H
  ParamTensor b_;   // 1 x 4H
  // caches, one Matrix per step
  std::vector<Matrix> xs_, is_, fs_, gs_, os_, cs_, hs_;
};

class Net {
 public:
  Net() = default;
  Net(const Net& other);
  Net& operator=(const Net& other);
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Matrix forward(const Matrix& input);
  void backward(const Matrix& grad_logits);
  Matrix infer(const Matrix& input) const;

  std::vector<ParamTensor*> params();
  void zero_grads();
  int param_count() const;
  Vector flatten_params() const;
  void unflatten_params(const Vector& flat);
  uint64_t param_hash() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::vector<ParamTensor*>& params);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Halves nothing on its own: call observe() once per epoch with the mean
// loss; when no improvement is seen for `patience` epochs the factor is
// applied and true is returned.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double factor) : patience_(patience), factor_(factor) {}
  bool observe(double epoch_loss, AdamOptimizer& opt);

 private:
  int patience_;
  double factor_;
  int stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace unlearnkit
