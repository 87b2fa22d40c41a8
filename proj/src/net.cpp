#include "unlearnkit/net.hpp"

#include <cmath>

namespace unlearnkit {

namespace {

void init_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
}

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

}  // namespace

// ---------------------------------------------------------------- DenseLayer

DenseLayer::DenseLayer(int in_dim, int out_dim, std::mt19937_64& rng) {
  weight_.value.resize(in_dim, out_dim);
  init_normal(weight_.value, std::sqrt(2.0 / in_dim), rng);
  weight_.grad = Matrix::Zero(in_dim, out_dim);
  bias_.value = Matrix::Zero(1, out_dim);
  bias_.grad = Matrix::Zero(1, out_dim);
}

Matrix DenseLayer::forward(const Matrix& input) {
  input_cache_ = input;
  return infer(input);
}

Matrix DenseLayer::infer(const Matrix& input) const {
  return (input * weight_.value).rowwise() + bias_.value.row(0);
}

Matrix DenseLayer::backward(const Matrix& grad_output) {
  weight_.grad += input_cache_.transpose() * grad_output;
  bias_.grad.row(0) += grad_output.colwise().sum();
  return grad_output * weight_.value.transpose();
}

void DenseLayer::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

std::unique_ptr<Layer> DenseLayer::clone() const {
  auto copy = std::unique_ptr<DenseLayer>(new DenseLayer());
  copy->weight_.value = weight_.value;
  copy->weight_.grad = Matrix::Zero(weight_.value.rows(), weight_.value.cols());
  copy->bias_.value = bias_.value;
  copy->bias_.grad = Matrix::Zero(bias_.value.rows(), bias_.value.cols());
  return copy;
}

// ---------------------------------------------------------------- ReluLayer

Matrix ReluLayer::forward(const Matrix& input) {
  mask_ = (input.array() > 0.0).cast<double>().matrix();
  return input.cwiseProduct(mask_);
}

Matrix ReluLayer::infer(const Matrix& input) const { return input.cwiseMax(0.0); }

Matrix ReluLayer::backward(const Matrix& grad_output) { return grad_output.cwiseProduct(mask_); }

std::unique_ptr<Layer> ReluLayer::clone() const { return std::make_unique<ReluLayer>(); }

// ---------------------------------------------------------------- Conv1dLayer

Conv1dLayer::Conv1dLayer(int in_channels, int out_channels, int length, int kernel,
                         std::mt19937_64& rng)
    : in_ch_(in_channels), out_ch_(out_channels), len_(length), kernel_(kernel),
      pad_(kernel / 2) {
  if (length < kernel) throw ShapeError("conv1d: signal shorter than kernel");
  weight_.value.resize(out_ch_, in_ch_ * kernel_);
  init_normal(weight_.value, std::sqrt(2.0 / (in_ch_ * kernel_)), rng);
  weight_.grad = Matrix::Zero(out_ch_, in_ch_ * kernel_);
  bias_.value = Matrix::Zero(1, out_ch_);
  bias_.grad = Matrix::Zero(1, out_ch_);
}

Matrix Conv1dLayer::run(const Matrix& input) const {
  const Eigen::Index n = input.rows();
  Matrix out = Matrix::Zero(n, static_cast<Eigen::Index>(out_ch_) * len_);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int oc = 0; oc < out_ch_; ++oc) {
      for (int t = 0; t < len_; ++t) {
        double acc = bias_.value(0, oc);
        for (int ic = 0; ic < in_ch_; ++ic) {
          for (int k = 0; k < kernel_; ++k) {
            const int src = t + k - pad_;
            if (src < 0 || src >= len_) continue;
            acc += weight_.value(oc, ic * kernel_ + k) * input(r, ic * len_ + src);
          }
        }
        out(r, oc * len_ + t) = acc;
      }
    }
  }
  return out;
}

Matrix Conv1dLayer::forward(const Matrix& input) {
  input_cache_ = input;
  return run(input);
}

Matrix Conv1dLayer::infer(const Matrix& input) const { return run(input); }

Matrix Conv1dLayer::backward(const Matrix& grad_output) {
  const Eigen::Index n = input_cache_.rows();
  Matrix grad_input = Matrix::Zero(n, static_cast<Eigen::Index>(in_ch_) * len_);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int oc = 0; oc < out_ch_; ++oc) {
      for (int t = 0; t < len_; ++t) {
        const double g = grad_output(r, oc * len_ + t);
        if (g == 0.0) continue;
        bias_.grad(0, oc) += g;
        for (int ic = 0; ic < in_ch_; ++ic) {
          for (int k = 0; k < kernel_; ++k) {
            const int src = t + k - pad_;
            if (src < 0 || src >= len_) continue;
            weight_.grad(oc, ic * kernel_ + k) += g * input_cache_(r, ic * len_ + src);
            grad_input(r, ic * len_ + src) += g * weight_.value(oc, ic * kernel_ + k);
          }
        }
      }
    }
  }
  return grad_input;
}

void Conv1dLayer::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

std::unique_ptr<Layer> Conv1dLayer::clone() const {
  auto copy = std::unique_ptr<Conv1dLayer>(new Conv1dLayer());
  copy->in_ch_ = in_ch_;
  copy->out_ch_ = out_ch_;
  copy->len_ = len_;
  copy->kernel_ = kernel_;
  copy->pad_ = pad_;
  copy->weight_.value = weight_.value;
  copy->weight_.grad = Matrix::Zero(weight_.value.rows(), weight_.value.cols());
  copy->bias_.value = bias_.value;
  copy->bias_.grad = Matrix::Zero(bias_.value.rows(), bias_.value.cols());
  return copy;
}

// ---------------------------------------------------------------- GlobalAvgPool1dLayer

Matrix GlobalAvgPool1dLayer::forward(const Matrix& input) { return infer(input); }

Matrix GlobalAvgPool1dLayer::infer(const Matrix& input) const {
  Matrix out(input.rows(), ch_);
  for (int c = 0; c < ch_; ++c) {
    out.col(c) = input.middleCols(static_cast<Eigen::Index>(c) * len_, len_).rowwise().mean();
  }
  return out;
}

Matrix GlobalAvgPool1dLayer::backward(const Matrix& grad_output) {
  Matrix grad_input(grad_output.rows(), static_cast<Eigen::Index>(ch_) * len_);
  for (int c = 0; c < ch_; ++c) {
    for (int t = 0; t < len_; ++t) {
      grad_input.col(static_cast<Eigen::Index>(c) * len_ + t) = grad_output.col(c) / len_;
    }
  }
  return grad_input;
}

std::unique_ptr<Layer> GlobalAvgPool1dLayer::clone() const {
  return std::make_unique<GlobalAvgPool1dLayer>(ch_, len_);
}

// ---------------------------------------------------------------- LstmLayer

LstmLayer::LstmLayer(int step_width, int steps, int hidden, std::mt19937_64& rng)
    : width_(step_width), steps_(steps), hidden_(hidden) {
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  wx_.value.resize(width_, 4 * hidden_);
  wh_.value.resize(hidden_, 4 * hidden_);
  init_normal(wx_.value, s, rng);
  init_normal(wh_.value, s, rng);
  wx_.grad = Matrix::Zero(width_, 4 * hidden_);
  wh_.grad = Matrix::Zero(hidden_, 4 * hidden_);
  b_.value = Matrix::Zero(1, 4 * hidden_);
  b_.grad = Matrix::Zero(1, 4 * hidden_);
}

Matrix LstmLayer::forward(const Matrix& input) {
  if (input.cols() != static_cast<Eigen::Index>(width_) * steps_) {
    throw ShapeError("lstm: input width does not match steps * step_width");
  }
  const Eigen::Index n = input.rows();
  xs_.assign(static_cast<size_t>(steps_), Matrix());
  is_ = fs_ = gs_ = os_ = cs_ = hs_ = xs_;
  Matrix h = Matrix::Zero(n, hidden_);
  Matrix c = Matrix::Zero(n, hidden_);
  for (int t = 0; t < steps_; ++t) {
    const Matrix x = input.middleCols(static_cast<Eigen::Index>(t) * width_, width_);
    Matrix a = ((x * wx_.value + h * wh_.value).rowwise() + b_.value.row(0));
    Matrix i = sigmoid(a.leftCols(hidden_));
    Matrix f = sigmoid(a.middleCols(hidden_, hidden_));
    Matrix g = a.middleCols(2 * hidden_, hidden_).array().tanh().matrix();
    Matrix o = sigmoid(a.rightCols(hidden_));
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(c.array().tanh().matrix());
    const auto ti = static_cast<size_t>(t);
    xs_[ti] = x;
    is_[ti] = i;
    fs_[ti] = f;
    gs_[ti] = g;
    os_[ti] = o;
    cs_[ti] = c;
    hs_[ti] = h;
  }
  return h;
}

Matrix LstmLayer::infer(const Matrix& input) const {
  if (input.cols() != static_cast<Eigen::Index>(width_) * steps_) {
    throw ShapeError("lstm: input width does not match steps * step_width");
  }
  const Eigen::Index n = input.rows();
  Matrix h = Matrix::Zero(n, hidden_);
  Matrix c = Matrix::Zero(n, hidden_);
  for (int t = 0; t < steps_; ++t) {
    const Matrix x = input.middleCols(static_cast<Eigen::Index>(t) * width_, width_);
    Matrix a = ((x * wx_.value + h * wh_.value).rowwise() + b_.value.row(0));
    Matrix i = sigmoid(a.leftCols(hidden_));
    Matrix f = sigmoid(a.middleCols(hidden_, hidden_));
    Matrix g = a.middleCols(2 * hidden_, hidden_).array().tanh().matrix();
    Matrix o = sigmoid(a.rightCols(hidden_));
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(c.array().tanh().matrix());
  }
  return h;
}

Matrix LstmLayer::backward(const Matrix& grad_output) {
  const Eigen::Index n = grad_output.rows();
  Matrix grad_input = Matrix::Zero(n, static_cast<Eigen::Index>(width_) * steps_);
  Matrix dh = grad_output;
  Matrix dc = Matrix::Zero(n, hidden_);
  for (int t = steps_ - 1; t >= 0; --t) {
    const auto ti = static_cast<size_t>(t);
    const Matrix& i = is_[ti];
    const Matrix& f = fs_[ti];
    const Matrix& g = gs_[ti];
    const Matrix& o = os_[ti];
    const Matrix tanh_c = cs_[ti].array().tanh().matrix();
    const Matrix c_prev = t > 0 ? cs_[ti - 1] : Matrix::Zero(n, hidden_).eval();
    const Matrix h_prev = t > 0 ? hs_[ti - 1] : Matrix::Zero(n, hidden_).eval();

    const Matrix d_o = dh.cwiseProduct(tanh_c);
    const Matrix d_ct =
        dc + dh.cwiseProduct(o).cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    const Matrix d_i = d_ct.cwiseProduct(g);
    const Matrix d_f = d_ct.cwiseProduct(c_prev);
    const Matrix d_g = d_ct.cwiseProduct(i);

    Matrix da(n, 4 * hidden_);
    da.leftCols(hidden_) = d_i.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    da.middleCols(hidden_, hidden_) = d_f.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    da.middleCols(2 * hidden_, hidden_) = d_g.cwiseProduct((1.0 - g.array().square()).matrix());
    da.rightCols(hidden_) = d_o.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

    wx_.grad += xs_[ti].transpose() * da;
    wh_.grad += h_prev.transpose() * da;
    b_.grad.row(0) += da.colwise().sum();

    grad_input.middleCols(static_cast<Eigen::Index>(t) * width_, width_) =
        da * wx_.value.transpose();
    dh = da * wh_.value.transpose();
    dc = d_ct.cwiseProduct(f);
  }
  return grad_input;
}

void LstmLayer::collect_params(std::vector<ParamTensor*>& out) {
  out.push_back(&wx_);
  out.push_back(&wh_);
  out.push_back(&b_);
}

std::unique_ptr<Layer> LstmLayer::clone() const {
  auto copy = std::unique_ptr<LstmLayer>(new LstmLayer());
  copy->width_ = width_;
  copy->steps_ = steps_;
  copy->hidden_ = hidden_;
  copy->wx_.value = wx_.value;
  copy->wh_.value = wh_.value;
  copy->b_.value = b_.value;
  copy->wx_.grad = Matrix::Zero(wx_.value.rows(), wx_.value.cols());
  copy->wh_.grad = Matrix::Zero(wh_.value.rows(), wh_.value.cols());
  copy->b_.grad = Matrix::Zero(b_.value.rows(), b_.value.cols());
  return copy;
}

// ---------------------------------------------------------------- Net

Net::Net(const Net& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Net& Net::operator=(const Net& other) {
  if (this != &other) {
    layers_.clear();
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  return *this;
}

Matrix Net::forward(const Matrix& input) {
  Matrix x = input;
  for (auto& l : layers_) x = l->forward(x);
  return x;
}

void Net::backward(const Matrix& grad_logits) {
  Matrix g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

Matrix Net::infer(const Matrix& input) const {
  Matrix x = input;
  for (const auto& l : layers_) x = l->infer(x);
  return x;
}

std::vector<ParamTensor*> Net::params() {
  std::vector<ParamTensor*> out;
  for (auto& l : layers_) l->collect_params(out);
  return out;
}

void Net::zero_grads() {
  for (auto* p : params()) p->grad.setZero();
}

int Net::param_count() const {
  int count = 0;
  auto* self = const_cast<Net*>(this);
  for (auto* p : self->params()) count += static_cast<int>(p->value.size());
  return count;
}

Vector Net::flatten_params() const {
  auto* self = const_cast<Net*>(this);
  Vector flat(param_count());
  Eigen::Index at = 0;
  for (auto* p : self->params()) {
    std::copy(p->value.data(), p->value.data() + p->value.size(), flat.data() + at);
    at += p->value.size();
  }
  return flat;
}

void Net::unflatten_params(const Vector& flat) {
  if (flat.size() != param_count()) throw ShapeError("unflatten_params: size mismatch");
  Eigen::Index at = 0;
  for (auto* p : params()) {
    std::copy(flat.data() + at, flat.data() + at + p->value.size(), p->value.data());
    at += p->value.size();
  }
}

uint64_t Net::param_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto* self = const_cast<Net*>(this);
  for (auto* p : self->params()) h = hash_matrix(p->value, h);
  return h;
}

// ---------------------------------------------------------------- optimizer

void AdamOptimizer::step(std::vector<ParamTensor*>& params) {
  if (m_.empty()) {
    for (auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    const auto m_hat = m_[i].array() / bc1;
    const auto v_hat = v_[i].array() / bc2;
    p.value.array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }
}

bool PlateauScheduler::observe(double epoch_loss, AdamOptimizer& opt) {
  if (epoch_loss < best_ - 1e-12) {
    best_ = epoch_loss;
    stale_ = 0;
    return false;
  }
  if (++stale_ >= patience_) {
    opt.set_learning_rate(opt.learning_rate() * factor_);
    stale_ = 0;
    return true;
  }
  return false;
}

}  // namespace unlearnkit
