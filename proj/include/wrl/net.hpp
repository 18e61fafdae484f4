#pragma once

#include <span>
#include <vector>

#include "wrl/rng.hpp"

namespace wrl {

enum class OutputHead { Linear, Softmax };

/**
 * Small dense network with tanh hidden layers and exact hand-written
 * reverse-mode gradients. The linear head serves as a scalar critic, the
 * softmax head (computed with max subtraction) as a discrete-action
 * policy.
 *
 * Parameter vector layout, used by params()/set_params() and every
 * gradient with respect to parameters: for each layer in order, the
 * weight matrix row-major (out x in), then the bias vector. Flatten
 * followed by unflatten is the identity.
 */
class DenseNet {
 public:
  // Fan-in scaled uniform init: every weight and bias of a layer with
  // fan-in f is drawn uniformly from [-1/sqrt(f), 1/sqrt(f)], in layout
  // order, from the supplied stream.
  DenseNet(std::vector<int> layer_sizes, OutputHead head, Rng& rng);

  // All-zero parameters (softmax head then yields the uniform policy).
  static DenseNet zeros(std::vector<int> layer_sizes, OutputHead head);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  OutputHead head() const { return head_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int param_count() const;

  std::vector<double> params() const;
  void set_params(std::span<const double> flat);

  // Scalar critic output; requires a Linear head with one output unit.
  double critic_forward(std::span<const double> x) const;

  // d critic / d parameters, in parameter layout order.
  std::vector<double> critic_grad_params(std::span<const double> x) const;

  // d critic / d input.
  std::vector<double> critic_grad_input(std::span<const double> x) const;

  // Action distribution; requires a Softmax head. Logits get the max
  // subtracted before exponentiation, so large logits stay finite.
  std::vector<double> policy_forward(std::span<const double> x) const;

  // d log pi(action | x) / d parameters. Averaging over the policy's own
  // actions gives zero (sum_a pi(a) * grad log pi(a) = 0).
  std::vector<double> policy_log_grad(std::span<const double> x, int action) const;

 private:
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;
  };

  DenseNet(std::vector<int> sizes, OutputHead head);
  void check_input(std::span<const double> x) const;

  // Activations per layer boundary: act[0] = input, act[l+1] = output of
  // layer l (tanh for hidden layers, raw affine for the last).
  std::vector<std::vector<double>> forward_trace(std::span<const double> x) const;
  std::vector<double> backprop_params(const std::vector<std::vector<double>>& act,
                                      std::span<const double> out_grad) const;

  std::vector<int> sizes_;
  OutputHead head_;
  std::vector<Layer> layers_;
};

// params - rate * grad, shapes checked.
std::vector<double> sgd_step(std::span<const double> params, std::span<const double> grad,
                             double rate);

// In-place convenience used by the trainers.
void sgd_step_inplace(DenseNet& net, std::span<const double> grad, double rate);

}  // namespace wrl
