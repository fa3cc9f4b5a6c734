#pragma once

// Dense feed-forward networks with analytic reverse-mode gradients and flat
// parameter access.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace fmsr {

enum class Activation { Identity, ReLU, Tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct NetworkSpec {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::ReLU;
  Activation output_activation = Activation::Identity;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;

  void validate() const;
};

struct LayerLayout {
  int inputs = 0;
  int outputs = 0;
  std::size_t weight_offset = 0;  // row-major outputs x inputs
  std::size_t bias_offset = 0;

  bool operator==(const LayerLayout&) const = default;
};

struct ParamLayout {
  std::vector<LayerLayout> layers;
  std::size_t size = 0;

  static ParamLayout for_sizes(const std::vector<int>& layer_sizes);
  bool operator==(const ParamLayout&) const = default;
};

struct ParamVector {
  std::vector<double> values;
  ParamLayout layout;
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  int input_size() const { return spec_.layer_sizes.front(); }
  int output_size() const { return spec_.layer_sizes.back(); }

  std::vector<double> forward(std::span<const double> input) const;
  /// Column-per-sample batch.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  struct Gradient {
    ParamVector params;
    std::vector<double> input;
  };
  /// Vector-Jacobian product of forward at `input` with `cotangent`.
  Gradient gradient(std::span<const double> input, std::span<const double> cotangent) const;

  struct BatchGradient {
    std::vector<double> params;  // summed over the batch
    Eigen::MatrixXd inputs;      // one column per sample
  };
  BatchGradient gradient_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& cotangents) const;

  ParamVector get_params() const { return {params_, layout_}; }
  void set_params(const ParamVector& p);
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void write(std::ostream& out) const;
  static Network read(std::istream& in);

 private:
  struct Tape {
    std::vector<Eigen::MatrixXd> pre;   // z per layer
    std::vector<Eigen::MatrixXd> post;  // a per layer, post[0] = input
  };
  Tape run(const Eigen::MatrixXd& inputs) const;

  NetworkSpec spec_;
  ParamLayout layout_;
  std::vector<double> params_;
};

/// Elementwise tau * online + (1 - tau) * target.
ParamVector soft_update(const ParamVector& target, const ParamVector& online, double tau_soft);

/// Adaptive moment estimation; `descend` moves params against `grad`.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void descend(std::vector<double>& params, std::span<const double> grad);
  double learning_rate() const { return lr_; }
  std::uint64_t steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace fmsr
