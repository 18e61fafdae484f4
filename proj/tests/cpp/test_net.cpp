#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wrl/net.hpp"
#include "wrl/rng.hpp"

using namespace wrl;

namespace {

// central differences of a scalar function of the flat parameter vector
template <typename F>
std::vector<double> fd_params(DenseNet& net, F&& f, double h = 1e-5) {
  const std::vector<double> base = net.params();
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> p = base;
    p[i] = base[i] + h;
    net.set_params(p);
    const double up = f(net);
    p[i] = base[i] - h;
    net.set_params(p);
    const double dn = f(net);
    out[i] = (up - dn) / (2.0 * h);
  }
  net.set_params(base);
  return out;
}

void check_close_rel(const std::vector<double>& got, const std::vector<double>& want,
                     double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max(1.0, std::abs(want[i]));
    CHECK(std::abs(got[i] - want[i]) <= tol * scale);
  }
}

std::vector<double> random_point(int dim, Rng& rng) {
  std::vector<double> x(dim);
  for (double& c : x) c = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("critic forward hand values") {
  DenseNet zero = DenseNet::zeros({3, 4, 1}, OutputHead::Linear);
  const std::vector<double> x{0.3, -0.7, 2.0};
  CHECK(zero.critic_forward(x) == 0.0);

  // single linear layer w = (1, 2), b = 0
  DenseNet lin = DenseNet::zeros({2, 1}, OutputHead::Linear);
  const std::vector<double> p{1.0, 2.0, 0.0};
  lin.set_params(p);
  const std::vector<double> x2{3.0, 4.0};
  CHECK(lin.critic_forward(x2) == doctest::Approx(11.0));

  const std::vector<double> gp = lin.critic_grad_params(x2);
  REQUIRE(gp.size() == 3);
  CHECK(gp[0] == doctest::Approx(3.0));
  CHECK(gp[1] == doctest::Approx(4.0));
  CHECK(gp[2] == doctest::Approx(1.0));

  const std::vector<double> gi = lin.critic_grad_input(x2);
  CHECK(gi[0] == doctest::Approx(1.0));
  CHECK(gi[1] == doctest::Approx(2.0));

  const std::vector<double> wrong{1.0, 2.0, 3.0};
  CHECK_THROWS_AS((void)lin.critic_forward(wrong), std::invalid_argument);
}

TEST_CASE("zero network gradients and odd-activation symmetry") {
  DenseNet zero = DenseNet::zeros({2, 3, 1}, OutputHead::Linear);
  const std::vector<double> x{0.4, -0.9};
  for (double g : zero.critic_grad_input(x)) CHECK(g == 0.0);

  // zero input with zero biases: tanh hidden activations vanish, so the
  // layer-0 weight gradients (= delta * input) vanish too
  Rng rng(7);
  DenseNet net({2, 4, 4, 1}, OutputHead::Linear, rng);
  std::vector<double> p = net.params();
  // zero all biases: layout is per layer [weights..., bias...]
  std::size_t at = 0;
  const auto& sizes = net.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t w = static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
    at += w;
    for (int i = 0; i < sizes[l + 1]; ++i) p[at + i] = 0.0;
    at += sizes[l + 1];
  }
  net.set_params(p);
  const std::vector<double> origin{0.0, 0.0};
  CHECK(net.critic_forward(origin) == doctest::Approx(0.0));
  const std::vector<double> gp = net.critic_grad_params(origin);
  for (std::size_t i = 0; i < 2u * 4u; ++i) CHECK(gp[i] == 0.0);  // layer-0 weights
}

TEST_CASE("parameter vector round trip") {
  Rng rng(11);
  DenseNet net({4, 8, 8, 2}, OutputHead::Softmax, rng);
  const std::vector<double> p = net.params();
  CHECK(static_cast<int>(p.size()) == net.param_count());
  CHECK(net.param_count() == (4 * 8 + 8) + (8 * 8 + 8) + (8 * 2 + 2));
  DenseNet other = DenseNet::zeros({4, 8, 8, 2}, OutputHead::Softmax);
  other.set_params(p);
  CHECK(other.params() == p);

  std::vector<double> short_p(p.begin(), p.end() - 1);
  CHECK_THROWS_AS(other.set_params(short_p), std::invalid_argument);
}

TEST_CASE("initialization is deterministic and fan-in bounded") {
  Rng a(123), b(123), c(124);
  DenseNet na({4, 16, 1}, OutputHead::Linear, a);
  DenseNet nb({4, 16, 1}, OutputHead::Linear, b);
  DenseNet nc({4, 16, 1}, OutputHead::Linear, c);
  CHECK(na.params() == nb.params());
  CHECK(na.params() != nc.params());

  // layer 0 has fan-in 4, layer 1 fan-in 16
  const std::vector<double> p = na.params();
  const double b0 = 1.0 / std::sqrt(4.0), b1 = 1.0 / std::sqrt(16.0);
  for (std::size_t i = 0; i < 4 * 16 + 16; ++i) CHECK(std::abs(p[i]) <= b0);
  for (std::size_t i = 4 * 16 + 16; i < p.size(); ++i) CHECK(std::abs(p[i]) <= b1);
}

TEST_CASE("softmax head basics") {
  DenseNet uniform = DenseNet::zeros({3, 2}, OutputHead::Softmax);
  const std::vector<double> x{0.2, -0.1, 0.7};
  const std::vector<double> pi0 = uniform.policy_forward(x);
  CHECK(pi0[0] == doctest::Approx(0.5));
  CHECK(pi0[1] == doctest::Approx(0.5));

  // bias-only logits (ln 3, 0)
  DenseNet biased = DenseNet::zeros({1, 2}, OutputHead::Softmax);
  const std::vector<double> p{0.0, 0.0, std::log(3.0), 0.0};
  biased.set_params(p);
  const std::vector<double> x1{0.0};
  const std::vector<double> pi1 = biased.policy_forward(x1);
  CHECK(pi1[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pi1[1] == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(5);
  DenseNet net({4, 8, 3}, OutputHead::Softmax, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> xt = random_point(4, rng);
    const std::vector<double> pi = net.policy_forward(xt);
    double sum = 0.0;
    for (double q : pi) {
      CHECK(q > 0.0);
      sum += q;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }

  // the critic entry points refuse a softmax head and vice versa
  CHECK_THROWS_AS((void)net.critic_forward(random_point(4, rng)), std::invalid_argument);
  DenseNet lin = DenseNet::zeros({2, 1}, OutputHead::Linear);
  const std::vector<double> x2{0.0, 0.0};
  CHECK_THROWS_AS((void)lin.policy_forward(x2), std::invalid_argument);
}

TEST_CASE("softmax is shift invariant in the logits") {
  // shifting every output-layer bias by a constant shifts all logits
  DenseNet net = DenseNet::zeros({2, 2}, OutputHead::Softmax);
  std::vector<double> p{0.3, -0.2, 0.8, 0.1, 40.0, -3.0};
  net.set_params(p);
  const std::vector<double> x{0.5, -0.5};
  const std::vector<double> base = net.policy_forward(x);
  std::vector<double> shifted = p;
  shifted[4] += 500.0;
  shifted[5] += 500.0;
  net.set_params(shifted);
  const std::vector<double> moved = net.policy_forward(x);
  CHECK(std::abs(moved[0] - base[0]) <= 1e-12);
  CHECK(std::abs(moved[1] - base[1]) <= 1e-12);
  for (double q : moved) CHECK(std::isfinite(q));
}

TEST_CASE("two-action score gradients negate at the uniform point") {
  DenseNet net = DenseNet::zeros({3, 2}, OutputHead::Softmax);  // zero params: uniform
  const std::vector<double> x{0.3, -0.7, 0.2};
  const std::vector<double> g0 = net.policy_log_grad(x, 0);
  const std::vector<double> g1 = net.policy_log_grad(x, 1);
  REQUIRE(g0.size() == g1.size());
  double largest = 0.0;
  for (std::size_t i = 0; i < g0.size(); ++i) {
    CHECK(g0[i] == doctest::Approx(-g1[i]).epsilon(1e-12));
    largest = std::max(largest, std::abs(g0[i]));
  }
  CHECK(largest > 0.0);  // the identity is not vacuous
}

TEST_CASE("score function has zero mean under the policy") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    DenseNet net({3, 8, 4}, OutputHead::Softmax, rng);
    const std::vector<double> x = random_point(3, rng);
    const std::vector<double> pi = net.policy_forward(x);
    std::vector<double> mean(net.param_count(), 0.0);
    for (int a = 0; a < 4; ++a) {
      const std::vector<double> g = net.policy_log_grad(x, a);
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += pi[a] * g[i];
    }
    for (double m : mean) CHECK(std::abs(m) <= 1e-8);
  }
}

TEST_CASE("gradients agree with finite differences on random configurations") {
  Rng rng(2024);
  int done = 0;
  while (done < 100) {
    const int in = 1 + static_cast<int>(rng.below(4));
    const int hidden = 2 + static_cast<int>(rng.below(6));
    const int layers = 1 + static_cast<int>(rng.below(2));
    const bool actor = rng.uniform() < 0.5;
    std::vector<int> sizes{in};
    for (int l = 0; l < layers; ++l) sizes.push_back(hidden);
    sizes.push_back(actor ? 2 + static_cast<int>(rng.below(3)) : 1);

    DenseNet net(sizes, actor ? OutputHead::Softmax : OutputHead::Linear, rng);
    const std::vector<double> x = random_point(in, rng);

    if (actor) {
      const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(sizes.back())));
      const std::vector<double> got = net.policy_log_grad(x, a);
      const std::vector<double> want = fd_params(
          net, [&](DenseNet& n) { return std::log(n.policy_forward(x)[a]); });
      check_close_rel(got, want, 1e-4);
    } else {
      const std::vector<double> gotp = net.critic_grad_params(x);
      const std::vector<double> wantp =
          fd_params(net, [&](DenseNet& n) { return n.critic_forward(x); });
      check_close_rel(gotp, wantp, 1e-4);

      const std::vector<double> goti = net.critic_grad_input(x);
      std::vector<double> wanti(x.size());
      const double h = 1e-5;
      for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        wanti[i] = (net.critic_forward(xp) - net.critic_forward(xm)) / (2.0 * h);
      }
      check_close_rel(goti, wanti, 1e-4);
    }
    ++done;
  }
}

TEST_CASE("sgd step arithmetic") {
  const std::vector<double> p{1.0, 1.0};
  const std::vector<double> g{1.0, -1.0};
  const std::vector<double> stepped = sgd_step(p, g, 0.5);
  CHECK(stepped[0] == doctest::Approx(0.5));
  CHECK(stepped[1] == doctest::Approx(1.5));

  const std::vector<double> zero{0.0, 0.0};
  CHECK(sgd_step(p, zero, 0.5) == p);

  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS((void)sgd_step(p, shorter, 0.5), std::invalid_argument);

  // descent on a quadratic: f = 0.5 * ||p||^2, grad = p
  std::vector<double> q{3.0, -4.0};
  double prev = 0.5 * (q[0] * q[0] + q[1] * q[1]);
  for (int it = 0; it < 50; ++it) {
    q = sgd_step(q, q, 0.1);
    const double now = 0.5 * (q[0] * q[0] + q[1] * q[1]);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("in-place step matches the pure one") {
  Rng rng(77);
  DenseNet net({2, 4, 1}, OutputHead::Linear, rng);
  const std::vector<double> before = net.params();
  std::vector<double> grad(net.param_count());
  for (double& g : grad) g = rng.uniform(-1.0, 1.0);
  sgd_step_inplace(net, grad, 0.01);
  CHECK(net.params() == sgd_step(before, grad, 0.01));
}
