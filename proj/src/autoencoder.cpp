#include "smid/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smid/error.hpp"
#include "smid/rng.hpp"

namespace smid {

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Identity: break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output a.
double activate_slope(Activation act, double z, double a) {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;  // subgradient 0 at the kink
    case Activation::Sigmoid: return a * (1.0 - a);
    case Activation::Identity: break;
  }
  return 1.0;
}

struct Workspace {
  std::vector<std::vector<double>> pre;  // per layer
  std::vector<std::vector<double>> out;  // out[0] is the input, out[l+1] layer l
  std::vector<std::vector<double>> delta;

  explicit Workspace(const NetSpec& spec) {
    out.emplace_back(static_cast<std::size_t>(spec.widths.front()));
    for (std::size_t l = 0; l < spec.n_layers(); ++l) {
      const auto w = static_cast<std::size_t>(spec.widths[l + 1]);
      pre.emplace_back(w);
      out.emplace_back(w);
      delta.emplace_back(w);
    }
  }
};

void forward_layers(const NeuralNet& net, std::size_t first, std::size_t last, Workspace& ws) {
  const auto& spec = net.spec;
  for (std::size_t l = first; l < last; ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto outw = static_cast<std::size_t>(spec.widths[l + 1]);
    const double* w = net.params.data() + net.weight_offset[l];
    const double* b = net.params.data() + net.bias_offset[l];
    const auto& a_in = ws.out[l];
    for (std::size_t j = 0; j < outw; ++j) {
      double z = b[j];
      for (std::size_t i = 0; i < in; ++i) z += w[j * in + i] * a_in[i];
      ws.pre[l][j] = z;
      ws.out[l + 1][j] = activate(spec.activations[l], z);
    }
  }
}

Matrix run_span(const NeuralNet& net, const Matrix& input, std::size_t first, std::size_t last) {
  const auto& spec = net.spec;
  if (input.cols() != static_cast<std::size_t>(spec.widths[first])) {
    throw Error(ErrorCode::ShapeMismatch, "input width does not match the network");
  }
  const auto out_w = static_cast<std::size_t>(spec.widths[last]);
  Matrix result(input.rows(), out_w);
  const auto rows = static_cast<std::ptrdiff_t>(input.rows());
#pragma omp parallel
  {
    Workspace ws(spec);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      auto x = input.row(static_cast<std::size_t>(r));
      ws.out[first].assign(x.begin(), x.end());
      forward_layers(net, first, last, ws);
      std::ranges::copy(ws.out[last], result.row(static_cast<std::size_t>(r)).begin());
    }
  }
  return result;
}

}  // namespace

NetSpec autoencoder_spec(int n_inputs, const std::vector<int>& encoder_widths) {
  if (n_inputs < 1 || encoder_widths.empty()) throw Error(ErrorCode::BadParameter, "empty encoder");
  NetSpec spec;
  spec.widths.push_back(n_inputs);
  spec.widths.insert(spec.widths.end(), encoder_widths.begin(), encoder_widths.end());
  spec.bottleneck = spec.widths.size() - 1;
  for (std::size_t i = spec.bottleneck; i-- > 0;) spec.widths.push_back(spec.widths[i]);
  spec.activations.assign(spec.widths.size() - 1, Activation::Relu);
  spec.activations.back() = Activation::Sigmoid;
  if (spec.code_width() >= n_inputs) throw Error(ErrorCode::BadParameter, "autoencoder code must be narrower than its input");
  check_spec(spec);
  return spec;
}

NetSpec dnn_spec(int n_inputs) {
  if (n_inputs < 1) throw Error(ErrorCode::BadParameter, "need at least one input");
  NetSpec spec;
  spec.widths = {n_inputs, n_inputs, n_inputs, n_inputs, n_inputs};
  spec.bottleneck = 2;
  spec.activations = {Activation::Relu, Activation::Relu, Activation::Relu, Activation::Sigmoid};
  check_spec(spec);
  return spec;
}

void check_spec(const NetSpec& spec) {
  if (spec.widths.size() < 2) throw Error(ErrorCode::ShapeMismatch, "a net needs at least one layer");
  if (std::ranges::any_of(spec.widths, [](int w) { return w < 1; })) {
    throw Error(ErrorCode::BadParameter, "layer widths must be positive");
  }
  if (spec.activations.size() + 1 != spec.widths.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one activation per dense layer expected");
  }
  if (spec.bottleneck >= spec.widths.size()) throw Error(ErrorCode::ShapeMismatch, "bottleneck index out of range");
  if (spec.epochs < 0 || spec.batch_size < 1) throw Error(ErrorCode::BadParameter, "bad training schedule");
  if (!(spec.rho > 0.0 && spec.rho < 1.0) || !(spec.epsilon > 0.0)) {
    throw Error(ErrorCode::BadParameter, "bad Adadelta hyperparameters");
  }
}

std::span<const double> NeuralNet::weights(std::size_t layer) const {
  const auto n = static_cast<std::size_t>(spec.widths[layer]) * static_cast<std::size_t>(spec.widths[layer + 1]);
  return {params.data() + weight_offset[layer], n};
}

std::span<const double> NeuralNet::bias(std::size_t layer) const {
  return {params.data() + bias_offset[layer], static_cast<std::size_t>(spec.widths[layer + 1])};
}

NeuralNet init_net(const NetSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  NeuralNet net;
  net.spec = spec;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
    net.weight_offset.push_back(offset);
    offset += in * out;
    net.bias_offset.push_back(offset);
    offset += out;
  }
  net.params.assign(offset, 0.0);
  net.grad_sq_avg.assign(offset, 0.0);
  net.step_sq_avg.assign(offset, 0.0);

  SplitMix64 rng(derive_seed(seed, stream_id("ae-init")));
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) {
      net.params[net.weight_offset[l] + i] = limit * (2.0 * uniform01(rng) - 1.0);
    }
  }
  return net;
}

double loss_and_gradient(const NeuralNet& net, const Matrix& batch, std::span<double> grad) {
  const auto& spec = net.spec;
  if (batch.cols() != static_cast<std::size_t>(spec.input_width()) || batch.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "batch width does not match the network");
  }
  std::ranges::fill(grad, 0.0);
  const std::size_t n_layers = spec.n_layers();
  const std::size_t width = batch.cols();
  const double scale = 1.0 / static_cast<double>(batch.rows() * width);
  Workspace ws(spec);
  double loss = 0.0;

  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto x = batch.row(r);
    ws.out[0].assign(x.begin(), x.end());
    forward_layers(net, 0, n_layers, ws);

    const auto& y = ws.out[n_layers];
    auto& top = ws.delta[n_layers - 1];
    for (std::size_t j = 0; j < width; ++j) {
      const double diff = y[j] - x[j];
      loss += diff * diff;
      top[j] = 2.0 * diff * scale * activate_slope(spec.activations[n_layers - 1], ws.pre[n_layers - 1][j], y[j]);
    }

    for (std::size_t l = n_layers; l-- > 0;) {
      const auto in = static_cast<std::size_t>(spec.widths[l]);
      const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
      const double* w = net.params.data() + net.weight_offset[l];
      double* gw = grad.data() + net.weight_offset[l];
      double* gb = grad.data() + net.bias_offset[l];
      const auto& delta = ws.delta[l];
      const auto& a_in = ws.out[l];
      for (std::size_t j = 0; j < out; ++j) {
        gb[j] += delta[j];
        for (std::size_t i = 0; i < in; ++i) gw[j * in + i] += delta[j] * a_in[i];
      }
      if (l == 0) break;
      auto& below = ws.delta[l - 1];
      for (std::size_t i = 0; i < in; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) acc += w[j * in + i] * delta[j];
        below[i] = acc * activate_slope(spec.activations[l - 1], ws.pre[l - 1][i], ws.out[l][i]);
      }
    }
  }
  return loss * scale;
}

double reconstruction_loss(const NeuralNet& net, const Matrix& data) {
  const Matrix out = decode(net, encode(net, data));
  double loss = 0.0;
  for (std::size_t i = 0; i < data.flat().size(); ++i) {
    const double diff = out.flat()[i] - data.flat()[i];
    loss += diff * diff;
  }
  return loss / static_cast<double>(data.flat().size());
}

void adadelta_step(NeuralNet& net, std::span<const double> grad) {
  const double rho = net.spec.rho;
  const double eps = net.spec.epsilon;
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    const double g = grad[i];
    net.grad_sq_avg[i] = rho * net.grad_sq_avg[i] + (1.0 - rho) * g * g;
    const double step = -std::sqrt(net.step_sq_avg[i] + eps) / std::sqrt(net.grad_sq_avg[i] + eps) * g;
    net.step_sq_avg[i] = rho * net.step_sq_avg[i] + (1.0 - rho) * step * step;
    net.params[i] += step;
  }
}

TrainResult train(const NetSpec& spec, const Matrix& data, std::uint64_t seed) {
  check_spec(spec);
  if (data.cols() != static_cast<std::size_t>(spec.input_width())) {
    throw Error(ErrorCode::ShapeMismatch, "data width does not match the network input");
  }
  if (data.rows() == 0) throw Error(ErrorCode::BadParameter, "no training data");

  TrainResult result{init_net(spec, seed), {}};
  NeuralNet& net = result.net;
  std::vector<double> grad(net.n_params());
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(spec.batch_size);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    SplitMix64 rng(derive_seed(seed, stream_id("ae-shuffle") + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i-- > 1;) {
      const auto j = std::min(i, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1)));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const Matrix rows = data.select_rows(std::span(order).subspan(start, stop - start));
      const double loss = loss_and_gradient(net, rows, grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "training diverged in epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(stop - start);
      adadelta_step(net, grad);
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

Matrix encode(const NeuralNet& net, const Matrix& points) { return run_span(net, points, 0, net.spec.bottleneck); }

Matrix decode(const NeuralNet& net, const Matrix& codes) {
  return run_span(net, codes, net.spec.bottleneck, net.spec.n_layers());
}

GradientCheck gradient_check(const NetSpec& spec, const Matrix& sample, std::uint64_t seed) {
  NeuralNet net = init_net(spec, seed);
  SplitMix64 rng(derive_seed(seed, stream_id("gradcheck-bias")));
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(spec.widths[l + 1]); ++j) {
      const double magnitude = 0.05 + 0.45 * uniform01(rng);
      net.params[net.bias_offset[l] + j] = uniform01(rng) < 0.5 ? -magnitude : magnitude;
    }
  }
  return gradient_check(net, sample);
}

GradientCheck gradient_check(const NeuralNet& net, const Matrix& sample) {
  constexpr double kStep = 1e-5;
  GradientCheck result;
  result.kink_margin = std::numeric_limits<double>::infinity();

  Workspace ws(net.spec);
  for (std::size_t r = 0; r < sample.rows(); ++r) {
    auto x = sample.row(r);
    ws.out[0].assign(x.begin(), x.end());
    forward_layers(net, 0, net.spec.n_layers(), ws);
    for (std::size_t l = 0; l < net.spec.n_layers(); ++l) {
      if (net.spec.activations[l] != Activation::Relu) continue;
      for (double z : ws.pre[l]) result.kink_margin = std::min(result.kink_margin, std::abs(z));
    }
  }

  std::vector<double> analytic(net.n_params());
  std::vector<double> scratch(net.n_params());
  loss_and_gradient(net, sample, analytic);
  NeuralNet probe = net;
  for (std::size_t i = 0; i < probe.params.size(); ++i) {
    const double saved = probe.params[i];
    probe.params[i] = saved + kStep;
    const double up = loss_and_gradient(probe, sample, scratch);
    probe.params[i] = saved - kStep;
    const double down = loss_and_gradient(probe, sample, scratch);
    probe.params[i] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - numeric) / denom);
  }
  return result;
}

}  // namespace smid
