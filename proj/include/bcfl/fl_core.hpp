#pragma once

// Sample-count weighted parameter averaging and the chainless FedAvg loop.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bcfl/learners.hpp"
#include "bcfl/synth_data.hpp"

namespace bcfl {

struct LocalUpdate {
  int participant_id = 0;
  int round = 0;
  ParamVector params;
  std::size_t n_k = 0;
};

struct GlobalModel {
  int round = 0;  // 0 is the shared initial model
  ParamVector params;
};

// beta_k = n_k / N, one division per participant.
std::vector<double> aggregation_weights(std::span<const LocalUpdate> updates);

// sum_k beta_k * theta_k, componentwise. Contributions are ordered by
// participant id and combined with pairwise summation, so the result does
// not depend on the order of `updates`.
ParamVector aggregate(std::span<const LocalUpdate> updates);

// Per-round local-training seed; independent of scheduling order.
std::uint64_t local_train_seed(std::uint64_t global_seed, int round, int participant_id);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency, also capped by BCFL_SIM_THREADS when set).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);
int resolve_threads(int requested);

struct FedAvgOptions {
  int rounds = 40;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct FedAvgRound {
  int round = 0;
  std::vector<double> val_loss;  // per hospital, global model on hospital's validation split
};

struct FedAvgResult {
  GlobalModel model;
  std::vector<FedAvgRound> rounds;
};

// Every hospital trains from the previous global model each round and all
// updates are averaged. No screening of updates takes place. Each hospital
// works in its own standardized units (HospitalDataset::stats), so only the
// parameters of `initial` matter.
FedAvgResult run_fedavg(std::span<const HospitalDataset> hospitals, const Predictor& initial,
                        const Hyperparams& h, const FedAvgOptions& opt);

}  // namespace bcfl
