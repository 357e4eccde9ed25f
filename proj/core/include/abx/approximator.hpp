#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "abx/errors.hpp"

namespace abx {

enum class Activation { relu, tanh };

/// Shape of a fully connected net: input -> hidden_layers x hidden_dim ->
/// output, with a linear output layer. A spec fully determines the parameter
/// count and the flat parameter layout.
struct ApproximatorSpec {
  int input_dim = 1;
  int hidden_dim = 64;
  int output_dim = 1;
  int hidden_layers = 2;
  Activation activation = Activation::relu;

  int parameter_count() const;
  void validate() const;  // throws ConfigError if any dimension < 1

  bool operator==(const ApproximatorSpec&) const = default;
};

/// One linear layer's slice of the flat parameter vector. Weights are
/// row-major (out x in) at [weights, weights + in*out), biases at
/// [bias, bias + out). Layers are stored input-to-output; this layout is
/// also the snapshot file's "layer order".
struct LayerShape {
  int in = 0;
  int out = 0;
  std::size_t weights = 0;
  std::size_t bias = 0;
};

std::vector<LayerShape> layer_shapes(const ApproximatorSpec& spec);

/// Scratch activations for one forward pass; reuse across calls to avoid
/// per-step allocation. Not safe for concurrent use.
class MlpWorkspace {
 public:
  void prepare(const ApproximatorSpec& spec);
  std::vector<std::vector<double>> acts;  // acts[0]=input, acts[l]=hidden l
  std::vector<double> delta;              // backward scratch
  std::vector<double> delta_next;
 private:
  ApproximatorSpec prepared_for_;
  bool ready_ = false;
};

/// Deterministic scaled uniform fan-in init: weights and biases of a layer
/// with fan-in n are drawn from U(-1/sqrt(n), 1/sqrt(n)) in layout order.
void mlp_init(const ApproximatorSpec& spec, std::uint64_t seed,
              std::span<double> params);

/// y = net(x). Post-activation values are left in ws for a later backward.
void mlp_forward(const ApproximatorSpec& spec, std::span<const double> params,
                 std::span<const double> x, std::span<double> y,
                 MlpWorkspace& ws);

/// Accumulates dLoss/dparams into grad given dLoss/dy and the workspace of
/// the forward pass that produced y.
void mlp_backward(const ApproximatorSpec& spec, std::span<const double> params,
                  const MlpWorkspace& ws, std::span<const double> dl_dy,
                  std::span<double> grad);

enum class OptimizerKind { adam, sgd };

/// Per-parameter first/second moment accumulation (default) or plain
/// gradient descent.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t n);
  void step(std::span<double> params, std::span<const double> grad, double lr);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

struct TrainReport {
  double mean_squared_error_before = 0.0;
  double gradient_norm = 0.0;
  long step_count = 0;
};

/// A frozen randomly initialized target net and a trainable predictor of the
/// same spec. The squared prediction error acts as an occurrence-frequency
/// signal: inputs the predictor was trained on produce small errors.
///
/// Confined to one worker: methods are not safe to call concurrently.
class DistillationPair {
 public:
  DistillationPair(const ApproximatorSpec& spec, std::uint64_t seed,
                   OptimizerKind optimizer = OptimizerKind::adam);

  const ApproximatorSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  long step_count() const { return step_count_; }

  /// ||predictor(x) - target(x)||^2. Pure; throws UsageError on dimension
  /// mismatch or non-finite input.
  double prediction_error(std::span<const double> x) const;

  /// One optimizer step on the mean per-sample squared error of the batch.
  /// The target is untouched. Throws UsageError on an empty batch or a
  /// non-finite learning rate.
  TrainReport train_step(std::span<const std::vector<double>> batch,
                         double learning_rate);

  /// Mean per-sample squared error over the batch at the current predictor.
  double batch_loss(std::span<const std::vector<double>> batch) const;
  /// Gradient of batch_loss with respect to the predictor parameters.
  std::vector<double> batch_gradient(
      std::span<const std::vector<double>> batch) const;

  std::span<const double> target_parameters() const { return target_; }
  std::span<const double> predictor_parameters() const { return predictor_; }
  void set_predictor_parameters(std::span<const double> params);

  /// Flat little-endian snapshot: magic "ABXP", version, dims, then raw
  /// 64-bit floats in layer order (target first, then predictor).
  void save_snapshot(const std::filesystem::path& path) const;
  static DistillationPair load_snapshot(const std::filesystem::path& path);

 private:
  double loss_and_gradient(std::span<const std::vector<double>> batch,
                           std::span<double> grad) const;

  ApproximatorSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<double> target_;
  std::vector<double> predictor_;
  Optimizer optimizer_;
  long step_count_ = 0;
  mutable MlpWorkspace ws_;
  mutable std::vector<double> out_target_, out_predictor_;
  mutable std::vector<double> grad_scratch_, dl_dy_scratch_;
};

}  // namespace abx
