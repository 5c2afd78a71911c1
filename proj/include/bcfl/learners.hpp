#pragma once

// Sequence predictors (LSTM, NNPG-style feedforward, linear), their flat
// parameter vectors, analytic gradients and minibatch Adam training.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcfl/synth_data.hpp"

namespace bcfl {

enum class Arch : std::uint32_t { kLinear = 0, kNnpg = 1, kLstm = 2 };

std::string_view arch_name(Arch a);
Arch parse_arch(std::string_view name);

struct ArchSpec {
  Arch arch = Arch::kLstm;
  int history_len = 24;
  int channels = kChannels;
  int hidden = 16;  // LSTM cell size or NNPG hidden units; ignored for linear

  std::size_t param_count() const;
  std::size_t input_size() const { return static_cast<std::size_t>(history_len * channels); }

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

ArchSpec default_spec(Arch arch, const WindowConfig& cfg);

struct ParamVector {
  ArchSpec spec;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// Wire format: "BCFLPV01", then u32 arch, u32 history_len, u32 channels,
// u32 hidden, u64 count, then count little-endian IEEE-754 doubles.
std::vector<std::uint8_t> serialize(const ParamVector& p);
ParamVector deserialize(std::span<const std::uint8_t> bytes);

struct Hyperparams {
  double learning_rate = 1e-6;
  double weight_decay = 4e-4;
  int epochs = 5000;
  int batch_size = 64;
  // Minibatches drawn per epoch; 0 means a full pass over the training set.
  int batches_per_epoch = 0;
  // Validation-checkpoint cadence in epochs. The last epoch is always checked.
  int eval_every = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

class Predictor {
 public:
  Predictor(ParamVector params, NormStats stats);

  static Predictor init(const ArchSpec& spec, const NormStats& stats, std::uint64_t init_seed);

  // Prediction in mg/dL for one normalized L x 4 window (row-major).
  double predict(std::span<const double> x) const;
  // Output in normalized target units, no input checks.
  double forward(std::span<const double> x) const;

  const ParamVector& params() const { return params_; }
  const ArchSpec& spec() const { return params_.spec; }
  const NormStats& stats() const { return stats_; }

  Predictor with_params(ParamVector v) const;
  // Same parameters under another site's scaling.
  Predictor with_stats(const NormStats& s) const { return Predictor(params_, s); }

  friend bool operator==(const Predictor&, const Predictor&) = default;

 private:
  ParamVector params_;
  NormStats stats_;
};

inline Predictor init_model(Arch arch, const WindowConfig& cfg, const NormStats& stats,
                            std::uint64_t seed) {
  return Predictor::init(default_spec(arch, cfg), stats, seed);
}

inline const ParamVector& get_params(const Predictor& p) { return p.params(); }
inline Predictor set_params(const Predictor& p, ParamVector v) { return p.with_params(std::move(v)); }

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean squared error in normalized target space, and its gradient.
LossGrad loss_and_grad(const Predictor& p, std::span<const WindowedSample> batch);
LossGrad loss_and_grad(const Predictor& p, std::span<const WindowedSample* const> batch);
double mse_loss(const Predictor& p, std::span<const WindowedSample> samples);

struct TrainTrace {
  std::vector<double> val_loss;  // one entry per validation checkpoint
  int best_epoch = 0;
};

Predictor train_local(const Predictor& p, std::span<const WindowedSample> train,
                      std::span<const WindowedSample> val, const Hyperparams& h,
                      std::uint64_t train_seed, TrainTrace* trace = nullptr);

// One decoupled-weight-decay Adam update, exposed for testing the optimizer
// in isolation. `step` is 1-based.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};
void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               const Hyperparams& h);

}  // namespace bcfl
