#include "bcfl/learners.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "bcfl/random.hpp"
#include "model_kernels.hpp"

namespace bcfl {

namespace {

constexpr char kMagic[8] = {'B', 'C', 'F', 'L', 'P', 'V', '0', '1'};
constexpr std::size_t kHeaderSize = 8 + 4 * 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[off + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

void check_spec(const ArchSpec& s) {
  if (s.history_len < 1) throw std::invalid_argument("arch: history_len must be >= 1");
  if (s.channels != kChannels) throw std::invalid_argument("arch: expected 4 input channels");
  if (s.arch != Arch::kLinear && s.hidden < 1) throw std::invalid_argument("arch: hidden must be >= 1");
}

// Glorot-uniform fill of a rows x cols block.
void glorot(std::vector<double>& w, std::size_t offset, std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < rows * cols; ++i) w[offset + i] = rng.uniform(-limit, limit);
}

template <class Get>
LossGrad loss_and_grad_impl(const Predictor& p, std::size_t n, Get get) {
  if (n == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  const auto& spec = p.spec();
  const auto& w = p.params().values;
  LossGrad out;
  out.grad.assign(w.size(), 0.0);
  detail::Workspace ws;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WindowedSample& s = get(i);
    const double pred = detail::forward(spec, w, s.x, ws);
    const double r = pred - p.stats().normalize_target(s.y);
    out.loss += r * r;
    detail::backward(spec, w, s.x, 2.0 * r * inv_n, ws, out.grad);
  }
  out.loss *= inv_n;
  return out;
}

}  // namespace

std::string_view arch_name(Arch a) {
  switch (a) {
    case Arch::kLinear: return "linear";
    case Arch::kNnpg: return "nnpg";
    case Arch::kLstm: return "lstm";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  if (name == "linear") return Arch::kLinear;
  if (name == "nnpg") return Arch::kNnpg;
  if (name == "lstm") return Arch::kLstm;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

std::size_t ArchSpec::param_count() const {
  const auto D = input_size();
  const auto I = static_cast<std::size_t>(channels);
  const auto H = static_cast<std::size_t>(hidden);
  switch (arch) {
    case Arch::kLinear: return D + 1;
    case Arch::kNnpg: return H * D + 2 * H + 1;
    case Arch::kLstm: return 4 * (H * (I + H) + 2 * H) + H + 1;
  }
  return 0;
}

ArchSpec default_spec(Arch arch, const WindowConfig& cfg) {
  ArchSpec s;
  s.arch = arch;
  s.history_len = cfg.history_len;
  s.hidden = arch == Arch::kLstm ? 16 : arch == Arch::kNnpg ? 10 : 0;
  return s;
}

bool ParamVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::uint8_t> serialize(const ParamVector& p) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  out.reserve(kHeaderSize + 8 * p.values.size());
  put_u32(out, static_cast<std::uint32_t>(p.spec.arch));
  put_u32(out, static_cast<std::uint32_t>(p.spec.history_len));
  put_u32(out, static_cast<std::uint32_t>(p.spec.channels));
  put_u32(out, static_cast<std::uint32_t>(p.spec.hidden));
  put_u64(out, p.values.size());
  for (double v : p.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ParamVector deserialize(std::span<const std::uint8_t> b) {
  if (b.size() < kHeaderSize || std::memcmp(b.data(), kMagic, 8) != 0)
    throw std::invalid_argument("deserialize: not a parameter blob");
  ParamVector p;
  const auto arch = static_cast<std::uint32_t>(get_le(b, 8, 4));
  if (arch > 2) throw std::invalid_argument("deserialize: unknown arch tag");
  p.spec.arch = static_cast<Arch>(arch);
  p.spec.history_len = static_cast<int>(get_le(b, 12, 4));
  p.spec.channels = static_cast<int>(get_le(b, 16, 4));
  p.spec.hidden = static_cast<int>(get_le(b, 20, 4));
  const std::uint64_t n = get_le(b, 24, 8);
  if (b.size() != kHeaderSize + 8 * n) throw std::invalid_argument("deserialize: truncated blob");
  if (n != p.spec.param_count()) throw std::invalid_argument("deserialize: count does not match arch");
  p.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    p.values[i] = std::bit_cast<double>(get_le(b, kHeaderSize + 8 * i, 8));
  return p;
}

void Hyperparams::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (batches_per_epoch < 0) throw std::invalid_argument("batches_per_epoch must be >= 0");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
}

Predictor::Predictor(ParamVector params, NormStats stats)
    : params_(std::move(params)), stats_(stats) {
  check_spec(params_.spec);
  if (params_.values.size() != params_.spec.param_count())
    throw std::invalid_argument("parameter count " + std::to_string(params_.values.size()) +
                                " does not match arch (" + std::to_string(params_.spec.param_count()) + ")");
}

Predictor Predictor::init(const ArchSpec& spec, const NormStats& stats, std::uint64_t init_seed) {
  check_spec(spec);
  ParamVector p;
  p.spec = spec;
  p.values.assign(spec.param_count(), 0.0);
  Rng rng(derive_seed({init_seed, 0x696e6974ULL, static_cast<std::uint64_t>(spec.arch)}));
  const std::size_t D = spec.input_size();
  const auto H = static_cast<std::size_t>(spec.hidden);
  const auto I = static_cast<std::size_t>(spec.channels);
  switch (spec.arch) {
    case Arch::kLinear: glorot(p.values, 0, 1, D, rng); break;
    case Arch::kNnpg:
      glorot(p.values, 0, H, D, rng);
      glorot(p.values, H * D + H, 1, H, rng);
      break;
    case Arch::kLstm: {
      const std::size_t G = 4 * H;
      glorot(p.values, 0, G, I, rng);
      glorot(p.values, G * I, G, H, rng);
      glorot(p.values, G * I + G * H + 2 * G, 1, H, rng);
      break;
    }
  }
  return Predictor(std::move(p), stats);
}

double Predictor::forward(std::span<const double> x) const {
  detail::Workspace ws;
  return detail::forward(params_.spec, params_.values, x, ws);
}

double Predictor::predict(std::span<const double> x) const {
  if (x.size() != params_.spec.input_size())
    throw std::invalid_argument("predict: expected " + std::to_string(params_.spec.input_size()) +
                                " inputs, got " + std::to_string(x.size()));
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
    throw std::invalid_argument("predict: non-finite input");
  return stats_.denormalize_target(forward(x));
}

Predictor Predictor::with_params(ParamVector v) const {
  if (!(v.spec == params_.spec)) throw std::invalid_argument("set_params: architecture mismatch");
  if (v.values.size() != params_.values.size())
    throw std::invalid_argument("set_params: expected " + std::to_string(params_.values.size()) +
                                " values, got " + std::to_string(v.values.size()));
  return Predictor(std::move(v), stats_);
}

LossGrad loss_and_grad(const Predictor& p, std::span<const WindowedSample> batch) {
  return loss_and_grad_impl(p, batch.size(), [&](std::size_t i) -> const WindowedSample& { return batch[i]; });
}

LossGrad loss_and_grad(const Predictor& p, std::span<const WindowedSample* const> batch) {
  return loss_and_grad_impl(p, batch.size(), [&](std::size_t i) -> const WindowedSample& { return *batch[i]; });
}

double mse_loss(const Predictor& p, std::span<const WindowedSample> samples) {
  if (samples.empty()) throw std::invalid_argument("mse_loss: no samples");
  detail::Workspace ws;
  double acc = 0.0;
  for (const auto& s : samples) {
    const double r = detail::forward(p.spec(), p.params().values, s.x, ws) - p.stats().normalize_target(s.y);
    acc += r * r;
  }
  return acc / static_cast<double>(samples.size());
}

void adam_step(std::vector<double>& w, std::span<const double> g, AdamState& st, const Hyperparams& h) {
  if (st.m.size() != w.size()) {
    st.m.assign(w.size(), 0.0);
    st.v.assign(w.size(), 0.0);
  }
  ++st.step;
  const double bc1 = 1.0 - std::pow(h.adam_beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(h.adam_beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = h.adam_beta1 * st.m[i] + (1.0 - h.adam_beta1) * g[i];
    st.v[i] = h.adam_beta2 * st.v[i] + (1.0 - h.adam_beta2) * g[i] * g[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    w[i] -= h.learning_rate * (mhat / (std::sqrt(vhat) + h.adam_eps) + h.weight_decay * w[i]);
  }
}

Predictor train_local(const Predictor& p, std::span<const WindowedSample> train,
                      std::span<const WindowedSample> val, const Hyperparams& h,
                      std::uint64_t train_seed, TrainTrace* trace) {
  h.validate();
  if (train.empty()) throw std::invalid_argument("train_local: empty training set");

  Predictor current = p;
  std::vector<double> w = p.params().values;
  std::optional<std::vector<double>> best;
  double best_loss = std::numeric_limits<double>::infinity();
  AdamState adam;
  Rng rng(derive_seed({train_seed, 0x747261696eULL}));

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto B = static_cast<std::size_t>(h.batch_size);
  std::size_t batches = (train.size() + B - 1) / B;
  if (h.batches_per_epoch > 0) batches = std::min(batches, static_cast<std::size_t>(h.batches_per_epoch));
  std::vector<const WindowedSample*> batch;
  batch.reserve(B);

  for (int epoch = 1; epoch <= h.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      const std::size_t end = std::min(train.size(), (b + 1) * B);
      for (std::size_t k = b * B; k < end; ++k) batch.push_back(&train[order[k]]);
      current = Predictor(ParamVector{p.spec(), w}, p.stats());
      const LossGrad lg = loss_and_grad(current, batch);
      adam_step(w, lg.grad, adam, h);
    }
    if (!val.empty() && (epoch % h.eval_every == 0 || epoch == h.epochs)) {
      current = Predictor(ParamVector{p.spec(), w}, p.stats());
      const double vl = mse_loss(current, val);
      if (trace) trace->val_loss.push_back(vl);
      if (vl < best_loss || !best) {
        best_loss = vl;
        best = w;
        if (trace) trace->best_epoch = epoch;
      }
    }
  }
  if (!best) {
    best = std::move(w);
    if (trace) trace->best_epoch = h.epochs;
  }
  return Predictor(ParamVector{p.spec(), std::move(*best)}, p.stats());
}

}  // namespace bcfl
