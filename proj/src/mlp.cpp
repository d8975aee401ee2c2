#include "cpi2/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are not supported");

namespace cpi2 {

void Mlp::build_offsets() {
  w_off_.clear();
  b_off_.clear();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
    b_off_.push_back(off);
    off += sizes_[l + 1];
  }
  flat_.assign(off, 0.0);
  adam_.m.assign(off, 0.0);
  adam_.v.assign(off, 0.0);
  adam_.step = 0;
}

Mlp Mlp::init(std::vector<int> layer_sizes, Rng& rng, double final_layer_scale) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("Mlp::init: need at least input and output layer");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("Mlp::init: layer sizes must be positive");
  }
  Mlp net;
  net.sizes_ = std::move(layer_sizes);
  net.build_offsets();
  const std::size_t layers = net.sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = net.sizes_[l];
    const int fan_out = net.sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double scale = (l + 1 == layers) ? final_layer_scale : 1.0;
    double* w = net.flat_.data() + net.w_off_[l];
    for (int i = 0; i < fan_out * fan_in; ++i) {
      w[i] = scale * rng.uniform(-bound, bound);
    }
    // biases stay zero
  }
  return net;
}

Vec Mlp::forward(std::span<const double> input) const {
  Trace trace;
  return forward(input, trace);
}

Vec Mlp::forward(std::span<const double> input, Trace& trace) const {
  if (input.size() != static_cast<std::size_t>(sizes_.front())) {
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  }
  const std::size_t layers = sizes_.size() - 1;
  trace.activations.resize(layers + 1);
  trace.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = flat_.data() + w_off_[l];
    const double* b = flat_.data() + b_off_[l];
    const Vec& a = trace.activations[l];
    Vec& z = trace.activations[l + 1];
    z.assign(out, 0.0);
    for (int i = 0; i < out; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * a[j];
      z[i] = (l + 1 == layers) ? acc : std::tanh(acc);
    }
  }
  return trace.activations.back();
}

Vec Mlp::backward(const Trace& trace, std::span<const double> dout,
                  std::span<double> grad) const {
  const std::size_t layers = sizes_.size() - 1;
  Vec delta(dout.begin(), dout.end());
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = flat_.data() + w_off_[l];
    double* gw = grad.data() + w_off_[l];
    double* gb = grad.data() + b_off_[l];
    const Vec& a = trace.activations[l];
    Vec dprev(in, 0.0);
    for (int i = 0; i < out; ++i) {
      const double d = delta[i];
      gb[i] += d;
      const double* row = w + static_cast<std::size_t>(i) * in;
      double* grow = gw + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) {
        grow[j] += d * a[j];
        dprev[j] += d * row[j];
      }
    }
    if (l > 0) {
      // hidden activations are tanh; a holds the post-activation values
      for (int j = 0; j < in; ++j) dprev[j] *= 1.0 - a[j] * a[j];
    }
    delta = std::move(dprev);
  }
  return delta;
}

void Mlp::adam_step(std::span<const double> grad, double lr, double beta1, double beta2,
                    double eps) {
  adam_.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_.step));
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    adam_.m[i] = beta1 * adam_.m[i] + (1.0 - beta1) * grad[i];
    adam_.v[i] = beta2 * adam_.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = adam_.m[i] / bc1;
    const double vhat = adam_.v[i] / bc2;
    flat_[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

double Mlp::train_step(const std::vector<Vec>& inputs, const std::vector<Vec>& targets,
                       LossKind loss, double lr, std::span<const double> sigma) {
  if (inputs.empty() || inputs.size() != targets.size()) {
    throw std::invalid_argument("Mlp::train_step: empty batch or size mismatch");
  }
  const std::size_t batch = inputs.size();
  const int out_dim = output_dim();
  if (loss == LossKind::gaussian_nll && sigma.size() != static_cast<std::size_t>(out_dim)) {
    throw std::invalid_argument("Mlp::train_step: gaussian_nll needs one sigma per output");
  }
  for (double s : sigma) {
    if (s <= 0.0) throw std::invalid_argument("Mlp::train_step: sigma must be positive");
  }

  Vec grad(flat_.size(), 0.0);
  Trace trace;
  Vec dout(out_dim);
  double total_loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch);
  constexpr double half_log_2pi = 0.9189385332046727;

  for (std::size_t s = 0; s < batch; ++s) {
    const Vec& target = targets[s];
    if (target.size() != static_cast<std::size_t>(out_dim)) {
      throw std::invalid_argument("Mlp::train_step: target dimension mismatch");
    }
    const Vec y = forward(inputs[s], trace);
    if (loss == LossKind::mse) {
      const double inv_bd = inv_b / out_dim;
      for (int d = 0; d < out_dim; ++d) {
        const double e = y[d] - target[d];
        total_loss += e * e * inv_bd;
        dout[d] = 2.0 * e * inv_bd;
      }
    } else {
      for (int d = 0; d < out_dim; ++d) {
        const double z = (y[d] - target[d]) / sigma[d];
        total_loss += (0.5 * z * z + std::log(sigma[d]) + half_log_2pi) * inv_b;
        dout[d] = z / sigma[d] * inv_b;
      }
    }
    backward(trace, dout, grad);
  }

  if (!std::isfinite(total_loss)) {
    throw std::runtime_error("Mlp::train_step: non-finite loss, step rejected");
  }
  adam_step(grad, lr);
  return total_loss;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Mlp::save: cannot open " + path.string());
  out.write("MLP1", 4);
  const std::uint32_t n = static_cast<std::uint32_t>(sizes_.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (int s : sizes_) {
    const std::uint32_t v = static_cast<std::uint32_t>(s);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  out.write(reinterpret_cast<const char*>(flat_.data()),
            static_cast<std::streamsize>(flat_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("Mlp::save: write failed for " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Mlp::load: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MLP1", 4) != 0) {
    throw std::runtime_error("Mlp::load: bad magic in " + path.string());
  }
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n < 2 || n > 64) throw std::runtime_error("Mlp::load: bad layer count");
  Mlp net;
  net.sizes_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in || v == 0) throw std::runtime_error("Mlp::load: bad layer size");
    net.sizes_[i] = static_cast<int>(v);
  }
  net.build_offsets();
  in.read(reinterpret_cast<char*>(net.flat_.data()),
          static_cast<std::streamsize>(net.flat_.size() * sizeof(double)));
  if (!in) throw std::runtime_error("Mlp::load: truncated parameter data");
  return net;
}

}  // namespace cpi2
