#include "wrl/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wrl {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("DenseNet: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("DenseNet: layer sizes must be positive");
}

}  // namespace

DenseNet::DenseNet(std::vector<int> sizes, OutputHead head)
    : sizes_(std::move(sizes)), head_(head) {
  check_sizes(sizes_);
  layers_.resize(sizes_.size() - 1);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].in = sizes_[l];
    layers_[l].out = sizes_[l + 1];
    layers_[l].w.assign(static_cast<std::size_t>(layers_[l].in) * layers_[l].out, 0.0);
    layers_[l].b.assign(layers_[l].out, 0.0);
  }
}

DenseNet::DenseNet(std::vector<int> layer_sizes, OutputHead head, Rng& rng)
    : DenseNet(std::move(layer_sizes), head) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (double& w : layer.w) w = rng.uniform(-bound, bound);
    for (double& b : layer.b) b = rng.uniform(-bound, bound);
  }
}

DenseNet DenseNet::zeros(std::vector<int> layer_sizes, OutputHead head) {
  return DenseNet(std::move(layer_sizes), head);
}

int DenseNet::param_count() const {
  int n = 0;
  for (const auto& layer : layers_) n += layer.out * layer.in + layer.out;
  return n;
}

std::vector<double> DenseNet::params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.w.begin(), layer.w.end());
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
  }
  return flat;
}

void DenseNet::set_params(std::span<const double> flat) {
  if (static_cast<int>(flat.size()) != param_count())
    throw std::invalid_argument("DenseNet::set_params: expected " +
                                std::to_string(param_count()) + " values, got " +
                                std::to_string(flat.size()));
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    for (double& w : layer.w) w = flat[pos++];
    for (double& b : layer.b) b = flat[pos++];
  }
}

void DenseNet::check_input(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("DenseNet: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(input_dim()));
}

std::vector<std::vector<double>> DenseNet::forward_trace(std::span<const double> x) const {
  std::vector<std::vector<double>> act(layers_.size() + 1);
  act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::vector<double> out(layer.out);
    for (int i = 0; i < layer.out; ++i) {
      double s = layer.b[i];
      const double* wrow = layer.w.data() + static_cast<std::size_t>(i) * layer.in;
      for (int j = 0; j < layer.in; ++j) s += wrow[j] * act[l][j];
      out[i] = s;
    }
    if (l + 1 < layers_.size())
      for (double& v : out) v = std::tanh(v);
    act[l + 1] = std::move(out);
  }
  return act;
}

std::vector<double> DenseNet::backprop_params(const std::vector<std::vector<double>>& act,
                                              std::span<const double> out_grad) const {
  std::vector<double> grad(param_count(), 0.0);
  // Parameter offsets per layer in the flat layout.
  std::vector<std::size_t> offset(layers_.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = pos;
    pos += static_cast<std::size_t>(layers_[l].out) * layers_[l].in + layers_[l].out;
  }

  std::vector<double> delta(out_grad.begin(), out_grad.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const auto& input = act[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + static_cast<std::size_t>(layer.out) * layer.in;
    for (int i = 0; i < layer.out; ++i) {
      const double d = delta[i];
      double* grow = gw + static_cast<std::size_t>(i) * layer.in;
      for (int j = 0; j < layer.in; ++j) grow[j] = d * input[j];
      gb[i] = d;
    }
    if (l == 0) break;
    // Propagate through the weights, then the tanh of the layer below.
    std::vector<double> prev(layer.in, 0.0);
    for (int i = 0; i < layer.out; ++i) {
      const double d = delta[i];
      const double* wrow = layer.w.data() + static_cast<std::size_t>(i) * layer.in;
      for (int j = 0; j < layer.in; ++j) prev[j] += d * wrow[j];
    }
    for (int j = 0; j < layer.in; ++j) prev[j] *= 1.0 - input[j] * input[j];
    delta = std::move(prev);
  }
  return grad;
}

double DenseNet::critic_forward(std::span<const double> x) const {
  if (head_ != OutputHead::Linear || output_dim() != 1)
    throw std::invalid_argument("critic_forward: requires a linear head with one output");
  check_input(x);
  return forward_trace(x).back()[0];
}

std::vector<double> DenseNet::critic_grad_params(std::span<const double> x) const {
  if (head_ != OutputHead::Linear || output_dim() != 1)
    throw std::invalid_argument("critic_grad_params: requires a linear head with one output");
  check_input(x);
  const auto act = forward_trace(x);
  const double one = 1.0;
  return backprop_params(act, std::span<const double>(&one, 1));
}

std::vector<double> DenseNet::critic_grad_input(std::span<const double> x) const {
  if (head_ != OutputHead::Linear || output_dim() != 1)
    throw std::invalid_argument("critic_grad_input: requires a linear head with one output");
  check_input(x);
  const auto act = forward_trace(x);
  std::vector<double> delta{1.0};
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    std::vector<double> prev(layer.in, 0.0);
    for (int i = 0; i < layer.out; ++i) {
      const double d = delta[i];
      const double* wrow = layer.w.data() + static_cast<std::size_t>(i) * layer.in;
      for (int j = 0; j < layer.in; ++j) prev[j] += d * wrow[j];
    }
    if (l > 0)
      for (int j = 0; j < layer.in; ++j) prev[j] *= 1.0 - act[l][j] * act[l][j];
    delta = std::move(prev);
  }
  return delta;
}

std::vector<double> DenseNet::policy_forward(std::span<const double> x) const {
  if (head_ != OutputHead::Softmax)
    throw std::invalid_argument("policy_forward: requires a softmax head");
  check_input(x);
  const auto act = forward_trace(x);
  const auto& logits = act.back();
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& v : probs) v /= sum;
  return probs;
}

std::vector<double> DenseNet::policy_log_grad(std::span<const double> x, int action) const {
  if (head_ != OutputHead::Softmax)
    throw std::invalid_argument("policy_log_grad: requires a softmax head");
  check_input(x);
  if (action < 0 || action >= output_dim())
    throw std::invalid_argument("policy_log_grad: action index out of range");
  const auto act = forward_trace(x);
  const auto& logits = act.back();
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& v : probs) v /= sum;
  // d log pi(a) / d logit_k = [k == a] - pi(k)
  std::vector<double> out_grad(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k)
    out_grad[k] = (static_cast<int>(k) == action ? 1.0 : 0.0) - probs[k];
  return backprop_params(act, out_grad);
}

std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grad,
                             double rate) {
  if (params.size() != grad.size())
    throw std::invalid_argument("sgd_step: parameter/gradient size mismatch");
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - rate * grad[i];
  return out;
}

void sgd_step_inplace(DenseNet& net, std::span<const double> grad, double rate) {
  net.set_params(sgd_step(net.params(), grad, rate));
}

}  // namespace wrl
