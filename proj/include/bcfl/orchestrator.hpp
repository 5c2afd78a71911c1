#pragma once

// Composes data generation, local learners, FedAvg and the simulated chain
// into the evaluated scenario families, and produces per-patient metrics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcfl/chain/content_store.hpp"
#include "bcfl/chain/ledger.hpp"
#include "bcfl/chain/protocol.hpp"
#include "bcfl/learners.hpp"
#include "bcfl/metrics.hpp"
#include "bcfl/synth_data.hpp"

namespace bcfl {

enum class Mode { kSingle, kCentral, kFedAvg, kMcgp };
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

// How a malicious participant votes when it is drawn as a voter.
enum class MaliciousVoting {
  kOppose,    // opposes every proposal
  kEvaluate,  // follows the protocol, evaluating on its own (fake) data
};

struct Seeds {
  std::uint64_t data = 42;
  std::uint64_t split = 7;
  std::uint64_t init = 1;
  std::uint64_t train = 2;
  std::uint64_t chain = 3;

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

struct ScenarioConfig {
  Mode mode = Mode::kMcgp;
  int hospital = 1;  // 1-based, single mode only
  int num_hospitals = 5;
  int patients_per_hospital = 5;
  int unseen_patients = 5;
  int malicious_hospitals = 0;
  Arch arch = Arch::kLstm;
  int hidden = 0;  // 0 selects the architecture default
  WindowConfig window;
  SplitConfig split;
  int days = 28;
  Hyperparams hyper;
  int rounds = 40;
  chain::StakeConfig stake;
  MaliciousVoting malicious_vote = MaliciousVoting::kOppose;
  Seeds seeds;
  std::vector<int> selected_patients{4, 7, 13, 19, 23};
  int threads = 0;

  void validate() const;
  ArchSpec arch_spec() const;
  int current_patient_count() const { return num_hospitals * patients_per_hospital; }
};

// Desk-scale defaults used by the acceptance suite and `--preset desk`.
ScenarioConfig desk_scale_config();

struct Participant {
  int id = 0;  // hospital k is id k; malicious hospitals follow the honest ones
  bool malicious = false;
  std::vector<GlucoseSeries> patients;
};

struct World {
  std::vector<Participant> hospitals;  // honest first, then malicious
  std::vector<GlucoseSeries> unseen;

  std::vector<const Participant*> honest() const;
  std::vector<const Participant*> participants(bool with_malicious) const;
  const GlucoseSeries* find_patient(int patient_id) const;
  int malicious_count() const;
  // Input scaling a deployment site applies to this patient: the owning
  // hospital's training statistics, or the patient's own training-period
  // statistics for unseen patients.
  NormStats site_stats(int patient_id, const SplitConfig& split) const;
};

// Hospital k owns patients (k-1)*P+1 .. k*P; unseen patients follow; each
// malicious hospital gets P fake patients numbered after the unseen ones.
World build_world(const ScenarioConfig& cfg);

struct PatientMetrics {
  int patient_id = 0;
  bool seen = false;
  MetricsResult metrics;
};

struct EvalTarget {
  const GlucoseSeries* series = nullptr;
  NormStats scaling;  // standardization the model is deployed under for this patient
};

// Predicts every test-region window of each patient (inputs standardized and
// outputs restored with the target's scaling) and scores it.
std::vector<PatientMetrics> evaluate_model(const Predictor& model, std::span<const EvalTarget> patients,
                                           const ScenarioConfig& cfg);

struct PredictionTrace {
  std::vector<int> steps;  // series index of each target
  std::vector<double> truth;
  std::vector<double> predicted;
};
PredictionTrace predict_trace(const Predictor& model, const EvalTarget& patient, const ScenarioConfig& cfg);

struct RoundSummary {
  int round = 0;
  std::vector<int> trainers;
  std::vector<int> voters;
  chain::VoteMap votes;
  std::optional<chain::Vote> majority;
  std::vector<int> pruned;
  std::string finalized_digest;
  double mean_val_loss = 0.0;  // finalized model over active honest validation splits
};

struct RunResult {
  std::string method;
  Mode mode = Mode::kMcgp;
  bool with_malicious = false;
  std::optional<Predictor> model;
  std::vector<PatientMetrics> current;  // selected current patients
  std::vector<PatientMetrics> unseen;
  std::vector<chain::LedgerEvent> events;  // MCGP only
  std::vector<RoundSummary> rounds;
  std::vector<int> trained_patients;
  // Site-scaled models (single, federated) run in each site's standardized
  // units; a central model keeps the scaling of its pooled training set.
  bool site_scaled = true;
  bool aborted = false;
  std::string abort_reason;
  chain::ContentStore store;  // MCGP only

  double avg_rmse(bool unseen_cohort) const;
  double avg_mard(bool unseen_cohort) const;
};

std::string method_name(Mode mode, int hospital, bool with_malicious);

EvalTarget eval_target(const RunResult& r, const World& world, int patient_id, const SplitConfig& split);

RunResult run_single(const ScenarioConfig& cfg, const World& world, int hospital);
RunResult run_central(const ScenarioConfig& cfg, const World& world, bool with_malicious);
RunResult run_fedavg_scenario(const ScenarioConfig& cfg, const World& world, bool with_malicious);
RunResult run_mcgp(const ScenarioConfig& cfg, const World& world, bool with_malicious);

// Runs a method by its table name: H<k>Single, TotalCentral[Mal], FedAvg[Mal], MCGP[Mal].
RunResult run_method(const ScenarioConfig& cfg, const World& world, std::string_view method);

// Dispatches on cfg.mode; malicious participation follows cfg.malicious_hospitals.
RunResult run_scenario(const ScenarioConfig& cfg, const World& world);

struct SuiteRow {
  std::string method;
  int patient_id = 0;
  bool seen = false;
  double rmse = 0.0;
  double mard = 0.0;
};

struct SuiteSummary {
  std::string method;
  std::string cohort;  // "current" or "unseen"
  double avg_rmse = 0.0;
  double avg_mard = 0.0;
  double delta_avg_rmse = 0.0;
  double delta_avg_mard = 0.0;
};

struct SuiteResult {
  std::vector<RunResult> runs;
  std::vector<SuiteRow> rows;
  std::vector<SuiteSummary> summary;

  const RunResult& run(const std::string& method) const;
};

// H1..HK Single, TotalCentral (with and without the malicious hospital),
// FedAvg with the malicious hospital, and MCGP with and without it. Deltas
// are taken against the clean MCGP averages.
SuiteResult run_suite(const ScenarioConfig& cfg);
SuiteResult run_suite(const ScenarioConfig& cfg, const World& world);

}  // namespace bcfl
