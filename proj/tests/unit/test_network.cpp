#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support/gradcheck.hpp"
#include "fmsr/error.hpp"
#include "fmsr/network.hpp"

using namespace fmsr;

namespace {

Network make(std::vector<int> sizes, Activation hidden, Activation out, std::uint64_t seed = 1) {
  NetworkSpec s;
  s.layer_sizes = std::move(sizes);
  s.hidden_activation = hidden;
  s.output_activation = out;
  s.init_seed = seed;
  return Network(s);
}

}  // namespace

TEST_CASE("identity network and bias-only outputs") {
  Network net = make({3, 3}, Activation::ReLU, Activation::Identity);
  auto& p = net.params();
  std::fill(p.begin(), p.end(), 0.0);
  const auto& L = net.layout().layers[0];
  for (int i = 0; i < 3; ++i) p[L.weight_offset + i * 3 + i] = 1.0;
  const std::vector<double> x{0.3, -1.2, 7.0};
  CHECK(net.forward(x) == x);

  Network tanh_net = make({2, 2}, Activation::ReLU, Activation::Tanh);
  std::fill(tanh_net.params().begin(), tanh_net.params().end(), 0.0);
  tanh_net.params()[tanh_net.layout().layers[0].bias_offset] = 0.5;
  const auto y = tanh_net.forward(std::vector<double>{4.0, 5.0});
  CHECK(y[0] == doctest::Approx(std::tanh(0.5)));
  CHECK(y[1] == 0.0);
}

TEST_CASE("forward matches a straight-line evaluation") {
  oracle::Lcg rng(2);
  for (Activation h : {Activation::ReLU, Activation::Tanh}) {
    const Network net = make({4, 6, 3}, h, Activation::Tanh, 42);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform(-2, 2);
      const auto lib = net.forward(x);
      const auto hand = test::manual_forward(net, net.params(), x).output;
      for (int o = 0; o < 3; ++o) CHECK(lib[o] == doctest::Approx(hand[o]).epsilon(1e-14));
    }
  }
}

TEST_CASE("linear gradient equals the input") {
  Network net = make({4, 1}, Activation::ReLU, Activation::Identity);
  const std::vector<double> x{0.1, -0.2, 0.3, 4.0};
  const auto g = net.gradient(x, std::vector<double>{1.0});
  const auto& L = net.layout().layers[0];
  for (int i = 0; i < 4; ++i) CHECK(g.params.values[L.weight_offset + i] == x[i]);
  CHECK(g.params.values[L.bias_offset] == 1.0);
}

TEST_CASE("zero cotangent gives zero gradients") {
  const Network net = make({5, 8, 8, 2}, Activation::ReLU, Activation::Tanh);
  const auto g = net.gradient(std::vector<double>(5, 0.3), std::vector<double>{0.0, 0.0});
  for (double v : g.params.values) CHECK(v == 0.0);
  for (double v : g.input) CHECK(v == 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  oracle::Lcg rng(11);
  for (Activation h : {Activation::ReLU, Activation::Tanh}) {
    const Network net = make({6, 16, 16, 3}, h, Activation::Tanh, 5);
    for (int k = 0; k < 10; ++k) {
      const auto x = test::smooth_point(net, rng);
      std::vector<double> cot(3);
      for (double& c : cot) c = rng.uniform(-1, 1);
      const auto r = test::check_network_gradient(net, x, cot, rng, 200);
      CHECK(r.failed == 0);
    }
  }
}

TEST_CASE("batch gradient sums single-sample gradients") {
  oracle::Lcg rng(4);
  const Network net = make({3, 7, 2}, Activation::Tanh, Activation::Identity, 8);
  Eigen::MatrixXd X(3, 5), C(2, 5);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1, 1);
  for (int i = 0; i < C.size(); ++i) C.data()[i] = rng.uniform(-1, 1);
  const auto batch = net.gradient_batch(X, C);
  std::vector<double> sum(net.layout().size, 0.0);
  for (int c = 0; c < 5; ++c) {
    const std::vector<double> x(X.col(c).data(), X.col(c).data() + 3), ct(C.col(c).data(), C.col(c).data() + 2);
    const auto g = net.gradient(x, ct);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g.params.values[k];
    for (int i = 0; i < 3; ++i) CHECK(batch.inputs(i, c) == doctest::Approx(g.input[i]).epsilon(1e-13));
  }
  for (std::size_t k = 0; k < sum.size(); ++k) CHECK(batch.params[k] == doctest::Approx(sum[k]).epsilon(1e-12));
}

TEST_CASE("shape mismatches are contract violations") {
  const Network net = make({3, 4, 2}, Activation::ReLU, Activation::Tanh);
  CHECK_THROWS_AS(net.forward(std::vector<double>(2)), ContractViolation);
  CHECK_THROWS_AS(net.gradient(std::vector<double>(3), std::vector<double>(3)), ContractViolation);
  NetworkSpec bad;
  bad.layer_sizes = {3};
  CHECK_THROWS(Network{bad});
  bad.layer_sizes = {3, 0};
  CHECK_THROWS(Network{bad});
}

TEST_CASE("soft update") {
  ParamVector target{std::vector<double>(6, 0.0), ParamLayout::for_sizes({2, 2})};
  ParamVector online{std::vector<double>(6, 1.0), ParamLayout::for_sizes({2, 2})};
  CHECK(soft_update(target, online, 1.0).values == online.values);
  CHECK(soft_update(target, online, 0.0).values == target.values);
  for (double v : soft_update(target, online, 0.05).values) CHECK(v == doctest::Approx(0.05));
  ParamVector other{std::vector<double>(5, 1.0), ParamLayout::for_sizes({1, 2, 1})};
  CHECK_THROWS_AS(soft_update(target, other, 0.5), ContractViolation);
}

TEST_CASE("target lag is a convex combination of past online parameters") {
  // After k updates with online values o_1..o_k, the target is
  // (1-tau)^k t_0 + sum_j tau (1-tau)^(k-j) o_j; the weights sum to 1.
  const double tau = 0.3;
  ParamVector t{{2.0, 0.0}, ParamLayout::for_sizes({1, 1})};
  const std::vector<double> online = {1.0, -1.0, 4.0, 0.5};
  double expect = t.values[0];
  for (double o : online) {
    t = soft_update(t, ParamVector{{o, 0.0}, t.layout}, tau);
    expect = (1 - tau) * expect + tau * o;
  }
  CHECK(t.values[0] == doctest::Approx(expect).epsilon(1e-14));
  double weight_sum = std::pow(1 - tau, 4);
  for (int j = 1; j <= 4; ++j) weight_sum += tau * std::pow(1 - tau, 4 - j);
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("flat parameters round-trip and init is seeded") {
  Network a = make({4, 9, 2}, Activation::ReLU, Activation::Tanh, 77);
  const Network b = make({4, 9, 2}, Activation::ReLU, Activation::Tanh, 77);
  const Network c = make({4, 9, 2}, Activation::ReLU, Activation::Tanh, 78);
  CHECK(a.params() == b.params());
  CHECK(a.params() != c.params());
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  const auto before = a.forward(x);
  a.set_params(a.get_params());
  CHECK(a.forward(x) == before);
  CHECK(a.layout().size == 4 * 9 + 9 + 9 * 2 + 2);
  CHECK_THROWS_AS(a.set_params(ParamVector{{1.0, 2.0}, ParamLayout::for_sizes({1, 1})}), ContractViolation);

  std::stringstream ss;
  a.write(ss);
  const Network back = Network::read(ss);
  CHECK(back.params() == a.params());
  CHECK(back.forward(x) == before);
}

TEST_CASE("Adam moves against the gradient") {
  Adam opt(2, 0.1);
  std::vector<double> p{1.0, -1.0};
  for (int k = 0; k < 100; ++k) opt.descend(p, std::vector<double>{2 * p[0], 2 * p[1]});
  CHECK(std::abs(p[0]) < 0.1);
  CHECK(std::abs(p[1]) < 0.1);
  CHECK(opt.steps() == 100);
}
