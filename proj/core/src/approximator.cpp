#include "abx/approximator.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "abx/random.hpp"

namespace abx {

namespace {

constexpr std::uint64_t kTargetStream = 0x7a6765741ULL;
constexpr std::uint64_t kPredictorStream = 0x70726564ULL;
constexpr char kSnapshotMagic[4] = {'A', 'B', 'X', 'P'};
constexpr std::uint32_t kSnapshotVersion = 1;

double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// derivative expressed through the post-activation value h
double activate_grad(Activation a, double h) {
  return a == Activation::relu ? (h > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

void check_input(const ApproximatorSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw UsageError("input has length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(spec.input_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw UsageError("non-finite input entry");
  }
}

}  // namespace

int ApproximatorSpec::parameter_count() const {
  int n = 0;
  for (const auto& layer : layer_shapes(*this)) n += layer.in * layer.out + layer.out;
  return n;
}

void ApproximatorSpec::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1 || hidden_layers < 1) {
    throw ConfigError("approximator dimensions must all be >= 1");
  }
}

std::vector<LayerShape> layer_shapes(const ApproximatorSpec& spec) {
  std::vector<LayerShape> layers;
  std::size_t offset = 0;
  int in = spec.input_dim;
  for (int l = 0; l <= spec.hidden_layers; ++l) {
    const int out = (l == spec.hidden_layers) ? spec.output_dim : spec.hidden_dim;
    LayerShape ls;
    ls.in = in;
    ls.out = out;
    ls.weights = offset;
    ls.bias = offset + static_cast<std::size_t>(in) * out;
    layers.push_back(ls);
    offset = ls.bias + out;
    in = out;
  }
  return layers;
}

void MlpWorkspace::prepare(const ApproximatorSpec& spec) {
  if (ready_ && prepared_for_ == spec) return;
  acts.assign(spec.hidden_layers + 1, {});
  acts[0].resize(spec.input_dim);
  for (int l = 1; l <= spec.hidden_layers; ++l) acts[l].resize(spec.hidden_dim);
  const int widest = std::max(spec.hidden_dim, spec.output_dim);
  delta.resize(widest);
  delta_next.resize(widest);
  prepared_for_ = spec;
  ready_ = true;
}

void mlp_init(const ApproximatorSpec& spec, std::uint64_t seed,
              std::span<double> params) {
  Rng rng(seed);
  for (const auto& layer : layer_shapes(spec)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (int i = 0; i < layer.in * layer.out; ++i) {
      params[layer.weights + i] = rng.uniform(-bound, bound);
    }
    for (int j = 0; j < layer.out; ++j) {
      params[layer.bias + j] = rng.uniform(-bound, bound);
    }
  }
}

void mlp_forward(const ApproximatorSpec& spec, std::span<const double> params,
                 std::span<const double> x, std::span<double> y,
                 MlpWorkspace& ws) {
  ws.prepare(spec);
  std::copy(x.begin(), x.end(), ws.acts[0].begin());

  const auto layers = layer_shapes(spec);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& ls = layers[l];
    const double* in = ws.acts[l].data();
    const bool last = (l + 1 == layers.size());
    double* out = last ? y.data() : ws.acts[l + 1].data();
    const double* w = params.data() + ls.weights;
    const double* b = params.data() + ls.bias;
    for (int j = 0; j < ls.out; ++j) {
      const double* wrow = w + static_cast<std::size_t>(j) * ls.in;
      double z = b[j];
      for (int i = 0; i < ls.in; ++i) z += wrow[i] * in[i];
      out[j] = last ? z : activate(spec.activation, z);
    }
  }
}

void mlp_backward(const ApproximatorSpec& spec, std::span<const double> params,
                  const MlpWorkspace& ws, std::span<const double> dl_dy,
                  std::span<double> grad) {
  const auto layers = layer_shapes(spec);
  // delta starts as dL/d(output pre-activation); the output layer is linear.
  std::vector<double>& delta = const_cast<MlpWorkspace&>(ws).delta;
  std::vector<double>& delta_next = const_cast<MlpWorkspace&>(ws).delta_next;
  std::copy(dl_dy.begin(), dl_dy.end(), delta.begin());

  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerShape& ls = layers[li];
    const double* in = ws.acts[li].data();
    const double* w = params.data() + ls.weights;
    double* gw = grad.data() + ls.weights;
    double* gb = grad.data() + ls.bias;

    for (int j = 0; j < ls.out; ++j) {
      const double d = delta[j];
      double* gwrow = gw + static_cast<std::size_t>(j) * ls.in;
      for (int i = 0; i < ls.in; ++i) gwrow[i] += d * in[i];
      gb[j] += d;
    }
    if (li == 0) break;

    // propagate to the previous layer's post-activation, then through the
    // activation function
    for (int i = 0; i < ls.in; ++i) {
      double s = 0.0;
      for (int j = 0; j < ls.out; ++j) {
        s += w[static_cast<std::size_t>(j) * ls.in + i] * delta[j];
      }
      delta_next[i] = s * activate_grad(spec.activation, in[i]);
    }
    std::swap(delta, delta_next);
  }
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t n) : kind_(kind) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad,
                     double lr) {
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * g;
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * g * g;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

DistillationPair::DistillationPair(const ApproximatorSpec& spec,
                                   std::uint64_t seed, OptimizerKind optimizer)
    : spec_(spec),
      seed_(seed),
      optimizer_(optimizer, static_cast<std::size_t>([&] {
                   spec.validate();
                   return spec.parameter_count();
                 }())) {
  const std::size_t n = static_cast<std::size_t>(spec_.parameter_count());
  target_.resize(n);
  predictor_.resize(n);
  // distinct streams of the same seed, so the initial error is almost
  // surely positive
  mlp_init(spec_, mix_seed(seed, kTargetStream), target_);
  mlp_init(spec_, mix_seed(seed, kPredictorStream), predictor_);
  out_target_.resize(spec_.output_dim);
  out_predictor_.resize(spec_.output_dim);
  dl_dy_scratch_.resize(spec_.output_dim);
  grad_scratch_.resize(n);
}

double DistillationPair::prediction_error(std::span<const double> x) const {
  check_input(spec_, x);
  mlp_forward(spec_, target_, x, out_target_, ws_);
  mlp_forward(spec_, predictor_, x, out_predictor_, ws_);
  double err = 0.0;
  for (int j = 0; j < spec_.output_dim; ++j) {
    const double d = out_predictor_[j] - out_target_[j];
    err += d * d;
  }
  return err;
}

double DistillationPair::loss_and_gradient(
    std::span<const std::vector<double>> batch, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& x : batch) {
    check_input(spec_, x);
    mlp_forward(spec_, target_, x, out_target_, ws_);
    mlp_forward(spec_, predictor_, x, out_predictor_, ws_);
    for (int j = 0; j < spec_.output_dim; ++j) {
      const double d = out_predictor_[j] - out_target_[j];
      loss += d * d * inv_b;
      dl_dy_scratch_[j] = 2.0 * d * inv_b;
    }
    // ws_ still holds the predictor's activations
    mlp_backward(spec_, predictor_, ws_, dl_dy_scratch_, grad);
  }
  return loss;
}

TrainReport DistillationPair::train_step(
    std::span<const std::vector<double>> batch, double learning_rate) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  if (!std::isfinite(learning_rate)) {
    throw UsageError("train_step: non-finite learning rate");
  }
  const double loss = loss_and_gradient(batch, grad_scratch_);
  double norm2 = 0.0;
  for (double g : grad_scratch_) norm2 += g * g;
  optimizer_.step(predictor_, grad_scratch_, learning_rate);
  ++step_count_;
  return TrainReport{loss, std::sqrt(norm2), step_count_};
}

double DistillationPair::batch_loss(
    std::span<const std::vector<double>> batch) const {
  if (batch.empty()) throw UsageError("batch_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& x : batch) loss += prediction_error(x) * inv_b;
  return loss;
}

std::vector<double> DistillationPair::batch_gradient(
    std::span<const std::vector<double>> batch) const {
  if (batch.empty()) throw UsageError("batch_gradient: empty batch");
  std::vector<double> grad(predictor_.size(), 0.0);
  loss_and_gradient(batch, grad);
  return grad;
}

void DistillationPair::set_predictor_parameters(std::span<const double> params) {
  if (params.size() != predictor_.size()) {
    throw UsageError("set_predictor_parameters: wrong length");
  }
  std::copy(params.begin(), params.end(), predictor_.begin());
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;
  std::uint32_t u32() {
    if (pos + 4 > data.size()) throw ConfigError("snapshot truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    if (pos + 8 > data.size()) throw ConfigError("snapshot truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
};

}  // namespace

void DistillationPair::save_snapshot(const std::filesystem::path& path) const {
  std::string out;
  out.append(kSnapshotMagic, 4);
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(spec_.input_dim));
  put_u32(out, static_cast<std::uint32_t>(spec_.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(spec_.output_dim));
  put_u32(out, static_cast<std::uint32_t>(spec_.hidden_layers));
  put_u32(out, static_cast<std::uint32_t>(spec_.activation));
  put_u64(out, seed_);
  put_u64(out, target_.size());
  for (double p : target_) put_f64(out, p);
  for (double p : predictor_) put_f64(out, p);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open snapshot file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f.flush()) throw ConfigError("snapshot write failed: " + path.string());
}

DistillationPair DistillationPair::load_snapshot(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open snapshot file " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (data.size() < 4 || std::memcmp(data.data(), kSnapshotMagic, 4) != 0) {
    throw ConfigError("bad snapshot magic in " + path.string());
  }
  Reader r{data, 4};
  if (r.u32() != kSnapshotVersion) throw ConfigError("unsupported snapshot version");
  ApproximatorSpec spec;
  spec.input_dim = static_cast<int>(r.u32());
  spec.hidden_dim = static_cast<int>(r.u32());
  spec.output_dim = static_cast<int>(r.u32());
  spec.hidden_layers = static_cast<int>(r.u32());
  spec.activation = static_cast<Activation>(r.u32());
  const std::uint64_t seed = r.u64();
  const std::uint64_t count = r.u64();

  DistillationPair pair(spec, seed);
  if (count != pair.target_.size()) throw ConfigError("snapshot parameter count mismatch");
  for (auto& p : pair.target_) p = r.f64();
  for (auto& p : pair.predictor_) p = r.f64();
  return pair;
}

}  // namespace abx
