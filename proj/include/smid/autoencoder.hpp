#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smid/matrix.hpp"

namespace smid {

enum class Activation { Identity, Relu, Sigmoid };

/// Layout and training setup of a fully connected encoder/decoder pair.
/// Dense layer i maps widths[i] -> widths[i + 1]; widths[bottleneck] is the
/// code width.
struct NetSpec {
  std::vector<int> widths;
  std::vector<Activation> activations;  // one per dense layer
  std::size_t bottleneck = 0;
  int epochs = 15;
  int batch_size = 30;
  double rho = 0.95;  // Adadelta decay
  double epsilon = 1e-6;

  std::size_t n_layers() const noexcept { return activations.size(); }
  int input_width() const { return widths.front(); }
  int code_width() const { return widths[bottleneck]; }

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Undercomplete autoencoder: the encoder widths run from the input down to
/// the code, the decoder mirrors them. Rectifiers everywhere except a logistic
/// output layer.
NetSpec autoencoder_spec(int n_inputs, const std::vector<int>& encoder_widths = {12, 8, 4, 2});

/// Overcomplete baseline: encoder N -> N -> N with a mirrored decoder.
NetSpec dnn_spec(int n_inputs);

/// Throws ShapeMismatch/BadParameter on an inconsistent spec.
void check_spec(const NetSpec& spec);

/// Parameters live in one flat vector; layer l owns a row-major
/// widths[l+1] x widths[l] weight block followed by its bias.
struct NeuralNet {
  NetSpec spec;
  std::vector<double> params;
  std::vector<std::size_t> weight_offset;  // per layer
  std::vector<std::size_t> bias_offset;    // per layer
  // Adadelta running averages, same length as params.
  std::vector<double> grad_sq_avg;
  std::vector<double> step_sq_avg;

  std::size_t n_params() const noexcept { return params.size(); }
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;

  friend bool operator==(const NeuralNet&, const NeuralNet&) = default;
};

/// Allocates a net with Glorot-uniform weights and zero biases.
NeuralNet init_net(const NetSpec& spec, std::uint64_t seed);

struct TrainResult {
  NeuralNet net;
  std::vector<double> loss_trace;  // mean MSE per epoch
};

/// Minimises the mean squared reconstruction error with Adadelta over
/// spec.epochs epochs of shuffled mini-batches. Throws NonFiniteLoss when the
/// loss diverges.
TrainResult train(const NetSpec& spec, const Matrix& data, std::uint64_t seed);

/// One Adadelta update with a precomputed gradient.
void adadelta_step(NeuralNet& net, std::span<const double> grad);

/// Mean squared error over rows and columns, and its gradient w.r.t. params.
double loss_and_gradient(const NeuralNet& net, const Matrix& batch, std::span<double> grad);
double reconstruction_loss(const NeuralNet& net, const Matrix& data);

Matrix encode(const NeuralNet& net, const Matrix& points);
Matrix decode(const NeuralNet& net, const Matrix& codes);

struct GradientCheck {
  /// max over parameters of |backprop - fd| / max(|backprop|, |fd|, 1e-6)
  double max_rel_error = 0.0;
  /// Smallest |pre-activation| seen at a rectifier; finite differences are
  /// unreliable when this is comparable to the step.
  double kink_margin = 0.0;
};

/// Compares backprop against central finite differences (step 1e-5) for
/// every parameter of a net drawn from `seed`. Biases are drawn from
/// +-[0.05, 0.5] so zero inputs to a layer do not sit on a rectifier kink.
GradientCheck gradient_check(const NetSpec& spec, const Matrix& sample, std::uint64_t seed);

/// Same as above on a caller-provided net.
GradientCheck gradient_check(const NeuralNet& net, const Matrix& sample);

}  // namespace smid
