#include "bcfl/fl_core.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "bcfl/random.hpp"

namespace bcfl {

namespace {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

void check_updates(std::span<const LocalUpdate> updates) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  const auto& first = updates.front();
  for (const auto& u : updates) {
    if (!(u.params.spec == first.params.spec) || u.params.size() != first.params.size())
      throw std::invalid_argument("aggregate: mixed architectures (participant " +
                                  std::to_string(u.participant_id) + ")");
    if (u.round != first.round)
      throw std::invalid_argument("aggregate: mixed rounds " + std::to_string(first.round) + " and " +
                                  std::to_string(u.round));
    if (u.n_k == 0)
      throw std::invalid_argument("aggregate: participant " + std::to_string(u.participant_id) + " has n_k = 0");
  }
}

}  // namespace

std::vector<double> aggregation_weights(std::span<const LocalUpdate> updates) {
  check_updates(updates);
  std::size_t total = 0;
  for (const auto& u : updates) total += u.n_k;
  std::vector<double> beta;
  beta.reserve(updates.size());
  for (const auto& u : updates) beta.push_back(static_cast<double>(u.n_k) / static_cast<double>(total));
  return beta;
}

ParamVector aggregate(std::span<const LocalUpdate> updates) {
  check_updates(updates);
  std::vector<const LocalUpdate*> ordered;
  for (const auto& u : updates) ordered.push_back(&u);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LocalUpdate* a, const LocalUpdate* b) { return a->participant_id < b->participant_id; });
  std::size_t total = 0;
  for (const auto* u : ordered) total += u->n_k;

  const std::size_t K = ordered.size();
  std::vector<double> beta(K);
  for (std::size_t k = 0; k < K; ++k)
    beta[k] = static_cast<double>(ordered[k]->n_k) / static_cast<double>(total);

  ParamVector out;
  out.spec = ordered.front()->params.spec;
  const std::size_t P = ordered.front()->params.size();
  out.values.resize(P);
  std::vector<double> terms(K);
  for (std::size_t j = 0; j < P; ++j) {
    for (std::size_t k = 0; k < K; ++k) terms[k] = beta[k] * ordered[k]->params.values[j];
    out.values[j] = pairwise_sum(terms.data(), K);
  }
  return out;
}

std::uint64_t local_train_seed(std::uint64_t global_seed, int round, int participant_id) {
  return derive_seed({global_seed, 0x726f756e64ULL, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(participant_id)});
}

int resolve_threads(int requested) {
  int n = requested;
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BCFL_SIM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(resolve_threads(threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

FedAvgResult run_fedavg(std::span<const HospitalDataset> hospitals, const Predictor& initial,
                        const Hyperparams& h, const FedAvgOptions& opt) {
  if (hospitals.empty()) throw std::invalid_argument("run_fedavg: no hospitals");
  if (opt.rounds < 1) throw std::invalid_argument("run_fedavg: rounds must be >= 1");

  FedAvgResult result;
  result.model = {0, initial.params()};
  Predictor global = initial;
  for (int r = 1; r <= opt.rounds; ++r) {
    std::vector<LocalUpdate> updates(hospitals.size());
    parallel_for(hospitals.size(), opt.threads, [&](std::size_t k) {
      const auto& hd = hospitals[k];
      const Predictor local = train_local(global.with_stats(hd.stats), hd.train, hd.val, h,
                                          local_train_seed(opt.seed, r, hd.hospital_id));
      updates[k] = {hd.hospital_id, r, local.params(), hd.n_train};
    });
    global = global.with_params(aggregate(updates));
    result.model = {r, global.params()};

    FedAvgRound info{r, {}};
    for (const auto& hd : hospitals)
      info.val_loss.push_back(hd.val.empty() ? 0.0 : mse_loss(global.with_stats(hd.stats), hd.val));
    result.rounds.push_back(std::move(info));
  }
  return result;
}

}  // namespace bcfl
