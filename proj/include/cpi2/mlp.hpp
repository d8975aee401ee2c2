#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cpi2/rng.hpp"
#include "cpi2/util.hpp"

namespace cpi2 {

enum class LossKind { mse, gaussian_nll };

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t step = 0;
};

/// Fully connected network with tanh hidden layers and a linear output layer.
/// Parameters live in one flat vector laid out per layer as weights
/// (row-major, out x in) followed by biases. The flat layout is shared by the
/// gradient buffers, the Adam state and the on-disk format.
class Mlp {
 public:
  Mlp() = default;

  /// Weights drawn uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases
  /// zero. final_layer_scale multiplies the output layer's weights; networks
  /// that should start near zero predictions pass a small value here.
  static Mlp init(std::vector<int> layer_sizes, Rng& rng, double final_layer_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t param_count() const { return flat_.size(); }
  std::span<double> params() { return flat_; }
  std::span<const double> params() const { return flat_; }

  Vec forward(std::span<const double> input) const;

  /// Activations recorded during a forward pass, for backpropagation.
  /// activations[0] is the input; activations[L] is the network output.
  struct Trace {
    std::vector<Vec> activations;
  };

  Vec forward(std::span<const double> input, Trace& trace) const;

  /// Backpropagates dL/d(output), accumulating parameter gradients into
  /// `grad` (flat layout, caller-zeroed) and returning dL/d(input).
  Vec backward(const Trace& trace, std::span<const double> dout, std::span<double> grad) const;

  void adam_step(std::span<const double> grad, double lr, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

  /// One Adam step on the mean batch loss. For gaussian_nll the network
  /// output is the mean of a diagonal Gaussian with fixed per-dimension
  /// standard deviation `sigma`, and targets are the observed samples.
  /// Throws if the loss is non-finite; parameters are untouched in that case.
  double train_step(const std::vector<Vec>& inputs, const std::vector<Vec>& targets,
                    LossKind loss, double lr, std::span<const double> sigma = {});

  /// Flat binary format: magic "MLP1", u32 layer count, u32 sizes, then the
  /// parameters as little-endian 64-bit floats in layer order, weights before
  /// biases. Optimizer state is not persisted.
  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

 private:
  std::vector<int> sizes_;
  Vec flat_;
  std::vector<std::size_t> w_off_;
  std::vector<std::size_t> b_off_;
  AdamState adam_;

  void build_offsets();
};

}  // namespace cpi2
