#include "fmsr/network.hpp"

#include <cmath>
#include <string>

#include "fmsr/binary_io.hpp"
#include "fmsr/error.hpp"
#include "fmsr/rng.hpp"

namespace fmsr {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

// d act / d z, given both z and act(z).
Eigen::MatrixXd derivative(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& out) {
  switch (a) {
    case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::ReLU: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - out.array().square()).matrix();
  }
  return z;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation: " + std::string(name));
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("a network needs at least an input and an output layer");
  for (int s : layer_sizes)
    if (s < 1) throw ConfigError("layer sizes must be >= 1");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
}

ParamLayout ParamLayout::for_sizes(const std::vector<int>& sizes) {
  ParamLayout layout;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    LayerLayout layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    layer.weight_offset = offset;
    offset += static_cast<std::size_t>(layer.inputs) * layer.outputs;
    layer.bias_offset = offset;
    offset += layer.outputs;
    layout.layers.push_back(layer);
  }
  layout.size = offset;
  return layout;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  layout_ = ParamLayout::for_sizes(spec_.layer_sizes);
  params_.resize(layout_.size);
  SplitMix64 rng(spec_.init_seed);
  for (const auto& layer : layout_.layers) {
    const double bound = spec_.init_scale / std::sqrt(static_cast<double>(layer.inputs));
    const std::size_t end = layer.bias_offset + layer.outputs;
    for (std::size_t i = layer.weight_offset; i < end; ++i) params_[i] = rng.uniform(-bound, bound);
  }
}

Network::Tape Network::run(const Eigen::MatrixXd& inputs) const {
  FMSR_REQUIRE(inputs.rows() == input_size(),
               "network input has " + std::to_string(inputs.rows()) + " rows, expected " + std::to_string(input_size()));
  Tape tape;
  tape.post.push_back(inputs);
  const std::size_t n_layers = layout_.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = layout_.layers[l];
    Eigen::Map<const RowMajor> w(params_.data() + layer.weight_offset, layer.outputs, layer.inputs);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + layer.bias_offset, layer.outputs);
    Eigen::MatrixXd z = w * tape.post.back();
    z.colwise() += b;
    const Activation act = l + 1 == n_layers ? spec_.output_activation : spec_.hidden_activation;
    tape.post.push_back(activate(act, z));
    tape.pre.push_back(std::move(z));
  }
  return tape;
}

std::vector<double> Network::forward(std::span<const double> input) const {
  Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd y = forward_batch(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& inputs) const { return run(inputs).post.back(); }

Network::BatchGradient Network::gradient_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& cotangents) const {
  FMSR_REQUIRE(cotangents.rows() == output_size() && cotangents.cols() == inputs.cols(),
               "cotangent shape does not match network output");
  const Tape tape = run(inputs);
  BatchGradient g;
  g.params.assign(layout_.size, 0.0);
  const std::size_t n_layers = layout_.layers.size();
  Eigen::MatrixXd delta = cotangents;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = layout_.layers[l];
    const Activation act = l + 1 == n_layers ? spec_.output_activation : spec_.hidden_activation;
    delta = delta.cwiseProduct(derivative(act, tape.pre[l], tape.post[l + 1]));
    Eigen::Map<RowMajor> dw(g.params.data() + layer.weight_offset, layer.outputs, layer.inputs);
    Eigen::Map<Eigen::VectorXd> db(g.params.data() + layer.bias_offset, layer.outputs);
    dw.noalias() = delta * tape.post[l].transpose();
    db = delta.rowwise().sum();
    Eigen::Map<const RowMajor> w(params_.data() + layer.weight_offset, layer.outputs, layer.inputs);
    delta = w.transpose() * delta;
  }
  g.inputs = std::move(delta);
  return g;
}

Network::Gradient Network::gradient(std::span<const double> input, std::span<const double> cotangent) const {
  FMSR_REQUIRE(static_cast<int>(cotangent.size()) == output_size(), "cotangent length does not match output");
  Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  Eigen::Map<const Eigen::VectorXd> c(cotangent.data(), static_cast<Eigen::Index>(cotangent.size()));
  BatchGradient bg = gradient_batch(x, c);
  Gradient g;
  g.params = {std::move(bg.params), layout_};
  g.input.assign(bg.inputs.data(), bg.inputs.data() + bg.inputs.size());
  return g;
}

void Network::set_params(const ParamVector& p) {
  FMSR_REQUIRE(p.values.size() == layout_.size, "parameter vector length does not match network");
  FMSR_REQUIRE(p.layout.layers.empty() || p.layout == layout_, "parameter layout does not match network");
  params_ = p.values;
}

void Network::write(std::ostream& out) const {
  out.write("NET1", 4);
  io::write_pod<std::uint64_t>(out, spec_.layer_sizes.size());
  for (int s : spec_.layer_sizes) io::write_pod<std::int32_t>(out, s);
  io::write_pod<std::int32_t>(out, static_cast<std::int32_t>(spec_.hidden_activation));
  io::write_pod<std::int32_t>(out, static_cast<std::int32_t>(spec_.output_activation));
  io::write_pod(out, spec_.init_seed);
  io::write_pod(out, spec_.init_scale);
  io::write_doubles(out, params_);
}

Network Network::read(std::istream& in) {
  io::expect_magic(in, "NET1");
  NetworkSpec spec;
  const auto n = io::read_pod<std::uint64_t>(in);
  if (n > 64) throw VersionError("implausible layer count in network header");
  for (std::uint64_t i = 0; i < n; ++i) spec.layer_sizes.push_back(io::read_pod<std::int32_t>(in));
  spec.hidden_activation = static_cast<Activation>(io::read_pod<std::int32_t>(in));
  spec.output_activation = static_cast<Activation>(io::read_pod<std::int32_t>(in));
  spec.init_seed = io::read_pod<std::uint64_t>(in);
  spec.init_scale = io::read_pod<double>(in);
  Network net(spec);
  auto values = io::read_doubles(in);
  if (values.size() != net.layout_.size) throw VersionError("network parameter count does not match header");
  net.params_ = std::move(values);
  return net;
}

ParamVector soft_update(const ParamVector& target, const ParamVector& online, double tau_soft) {
  FMSR_REQUIRE(target.values.size() == online.values.size(), "soft update needs equal-length parameter vectors");
  FMSR_REQUIRE(tau_soft >= 0.0 && tau_soft <= 1.0, "tau_soft must be in [0, 1]");
  ParamVector out = target;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = tau_soft * online.values[i] + (1.0 - tau_soft) * target.values[i];
  return out;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::descend(std::vector<double>& params, std::span<const double> grad) {
  FMSR_REQUIRE(params.size() == m_.size() && grad.size() == m_.size(), "optimizer state does not match parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace fmsr
