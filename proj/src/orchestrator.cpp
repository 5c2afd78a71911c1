#include "bcfl/orchestrator.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "bcfl/errors.hpp"
#include "bcfl/fl_core.hpp"
#include "bcfl/random.hpp"

namespace bcfl {

using chain::ContentStore;
using chain::Digest;
using chain::LedgerEvent;
using chain::Vote;

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kSingle: return "single";
    case Mode::kCentral: return "central";
    case Mode::kFedAvg: return "fedavg";
    case Mode::kMcgp: return "mcgp";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  if (s == "single") return Mode::kSingle;
  if (s == "central") return Mode::kCentral;
  if (s == "fedavg") return Mode::kFedAvg;
  if (s == "mcgp") return Mode::kMcgp;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

void ScenarioConfig::validate() const {
  if (num_hospitals < 1) throw std::invalid_argument("num_hospitals must be >= 1");
  if (patients_per_hospital < 1) throw std::invalid_argument("patients_per_hospital must be >= 1");
  if (unseen_patients < 0) throw std::invalid_argument("unseen_patients must be >= 0");
  if (malicious_hospitals < 0 || malicious_hospitals > 1) throw std::invalid_argument("malicious_hospitals must be 0 or 1");
  if ((mode == Mode::kFedAvg || mode == Mode::kMcgp) && num_hospitals < 2)
    throw std::invalid_argument("mode " + std::string(mode_name(mode)) + " needs num_hospitals >= 2");
  if (mode == Mode::kSingle && malicious_hospitals > 0)
    throw std::invalid_argument("malicious_hospitals is not valid for single mode");
  if (mode == Mode::kSingle && (hospital < 1 || hospital > num_hospitals))
    throw std::invalid_argument("hospital must be in 1.." + std::to_string(num_hospitals));
  if (hidden < 0) throw std::invalid_argument("hidden must be >= 0");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (split.train_days < 1) throw std::invalid_argument("train_days must be >= 1");
  if (!(split.val_fraction > 0.0 && split.val_fraction < 1.0)) throw std::invalid_argument("val_fraction must be in (0, 1)");
  if (days <= split.train_days) throw std::invalid_argument("days must exceed train_days");
  window.validate();
  hyper.validate();
  stake.validate();
  for (int p : selected_patients)
    if (p < 1 || p > current_patient_count())
      throw std::invalid_argument("selected patient " + std::to_string(p) + " is not a current patient");
}

ArchSpec ScenarioConfig::arch_spec() const {
  ArchSpec s = default_spec(arch, window);
  if (hidden > 0) s.hidden = hidden;
  return s;
}

ScenarioConfig desk_scale_config() {
  ScenarioConfig c;
  c.days = 10;
  c.rounds = 10;
  c.hidden = 16;
  c.hyper.learning_rate = 2e-3;
  c.hyper.epochs = 200;
  c.hyper.batch_size = 64;
  c.hyper.batches_per_epoch = 1;
  c.hyper.eval_every = 10;
  // Ten short rounds leave sites far from agreement, so honest aggregates can
  // cost a voter's site 15-18% validation loss late in a run; poisoned ones
  // cost 22% or more.
  c.stake.vote_tolerance = 0.20;
  return c;
}

std::vector<const Participant*> World::honest() const { return participants(false); }

std::vector<const Participant*> World::participants(bool with_malicious) const {
  std::vector<const Participant*> out;
  for (const auto& h : hospitals)
    if (with_malicious || !h.malicious) out.push_back(&h);
  return out;
}

const GlucoseSeries* World::find_patient(int patient_id) const {
  for (const auto& h : hospitals)
    for (const auto& s : h.patients)
      if (s.patient_id == patient_id) return &s;
  for (const auto& s : unseen)
    if (s.patient_id == patient_id) return &s;
  return nullptr;
}

NormStats World::site_stats(int patient_id, const SplitConfig& split) const {
  for (const auto& h : hospitals)
    for (const auto& s : h.patients)
      if (s.patient_id == patient_id) return training_stats(h.patients, split);
  for (const auto& s : unseen)
    if (s.patient_id == patient_id) return training_stats(std::span(&s, 1), split);
  throw std::invalid_argument("no patient " + std::to_string(patient_id) + " in world");
}

int World::malicious_count() const {
  return static_cast<int>(std::count_if(hospitals.begin(), hospitals.end(), [](const auto& h) { return h.malicious; }));
}

World build_world(const ScenarioConfig& cfg) {
  cfg.validate();
  const int P = cfg.patients_per_hospital;
  World w;
  for (int k = 1; k <= cfg.num_hospitals; ++k) {
    Participant h{k, false, {}};
    for (int i = 1; i <= P; ++i) h.patients.push_back(generate_patient((k - 1) * P + i, cfg.days, cfg.seeds.data));
    w.hospitals.push_back(std::move(h));
  }
  const int unseen_base = cfg.current_patient_count();
  for (int i = 1; i <= cfg.unseen_patients; ++i)
    w.unseen.push_back(generate_patient(unseen_base + i, cfg.days, cfg.seeds.data));
  const int fake_base = unseen_base + cfg.unseen_patients;
  for (int m = 1; m <= cfg.malicious_hospitals; ++m) {
    Participant h{cfg.num_hospitals + m, true, {}};
    for (int i = 1; i <= P; ++i)
      h.patients.push_back(generate_malicious_series(fake_base + (m - 1) * P + i, cfg.days, cfg.seeds.data));
    w.hospitals.push_back(std::move(h));
  }
  return w;
}

std::vector<PatientMetrics> evaluate_model(const Predictor& model, std::span<const EvalTarget> patients,
                                           const ScenarioConfig& cfg) {
  std::vector<PatientMetrics> out;
  for (const auto& [s, scaling] : patients) {
    const auto tw = test_windows(*s, cfg.window, cfg.split, scaling);
    const Predictor deployed = model.with_stats(scaling);
    if (tw.samples.empty()) throw EmptyWindowError("patient " + std::to_string(s->patient_id) + " has no test windows");
    std::vector<double> preds, refs;
    preds.reserve(tw.samples.size());
    refs.reserve(tw.samples.size());
    for (const auto& smp : tw.samples) {
      preds.push_back(deployed.predict(smp.x));
      refs.push_back(smp.y);
    }
    out.push_back({s->patient_id, false, evaluate_metrics(preds, refs)});
  }
  return out;
}

PredictionTrace predict_trace(const Predictor& model, const EvalTarget& patient, const ScenarioConfig& cfg) {
  const auto tw = test_windows(*patient.series, cfg.window, cfg.split, patient.scaling);
  const Predictor deployed = model.with_stats(patient.scaling);
  PredictionTrace t;
  for (const auto& smp : tw.samples) {
    t.steps.push_back(smp.start + cfg.window.span() - 1);
    t.truth.push_back(smp.y);
    t.predicted.push_back(deployed.predict(smp.x));
  }
  return t;
}

namespace {

double mean_of(const std::vector<PatientMetrics>& v, double MetricsResult::*field) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : v) s += m.metrics.*field;
  return s / static_cast<double>(v.size());
}

struct Prepared {
  std::vector<HospitalDataset> datasets;
  NormStats stats;
  std::vector<int> patient_ids;
};

// Federated sites standardize with their own training statistics. A central
// server (`pooled`) standardizes everything with the pool of those statistics.
Prepared prepare(const ScenarioConfig& cfg, const std::vector<const Participant*>& parts, bool pooled = false) {
  Prepared p;
  std::vector<NormStats> local;
  for (const Participant* h : parts) local.push_back(training_stats(h->patients, cfg.split));
  p.stats = pool_stats(local);
  for (const Participant* h : parts) {
    HospitalDataset ds = pooled ? split_dataset(h->id, h->patients, cfg.window, cfg.split, cfg.seeds.split, p.stats)
                                : split_dataset(h->id, h->patients, cfg.window, cfg.split, cfg.seeds.split);
    ds.malicious = h->malicious;
    for (int id : ds.patient_ids) p.patient_ids.push_back(id);
    p.datasets.push_back(std::move(ds));
  }
  return p;
}

void evaluate_into(RunResult& r, const ScenarioConfig& cfg, const World& world) {
  std::vector<EvalTarget> cur, uns;
  for (int id : cfg.selected_patients) {
    const GlucoseSeries* s = world.find_patient(id);
    if (!s) throw std::invalid_argument("selected patient " + std::to_string(id) + " not in world");
    cur.push_back(eval_target(r, world, id, cfg.split));
  }
  for (const auto& s : world.unseen) uns.push_back(eval_target(r, world, s.patient_id, cfg.split));
  const std::set<int> trained(r.trained_patients.begin(), r.trained_patients.end());
  r.current = evaluate_model(*r.model, cur, cfg);
  for (auto& m : r.current) m.seen = trained.contains(m.patient_id);
  r.unseen = evaluate_model(*r.model, uns, cfg);
  for (auto& m : r.unseen) m.seen = trained.contains(m.patient_id);
}

Predictor initial_model(const ScenarioConfig& cfg, const NormStats& stats) {
  return Predictor::init(cfg.arch_spec(), stats, cfg.seeds.init);
}

}  // namespace

double RunResult::avg_rmse(bool unseen_cohort) const {
  return mean_of(unseen_cohort ? unseen : current, &MetricsResult::rmse);
}

double RunResult::avg_mard(bool unseen_cohort) const {
  return mean_of(unseen_cohort ? unseen : current, &MetricsResult::mard);
}

EvalTarget eval_target(const RunResult& r, const World& world, int patient_id, const SplitConfig& split) {
  const GlucoseSeries* s = world.find_patient(patient_id);
  if (!s) throw std::invalid_argument("no patient " + std::to_string(patient_id) + " in world");
  if (!r.model) throw std::invalid_argument("run has no model");
  return {s, r.site_scaled ? world.site_stats(patient_id, split) : r.model->stats()};
}

std::string method_name(Mode mode, int hospital, bool with_malicious) {
  const char* suffix = with_malicious ? "Mal" : "";
  switch (mode) {
    case Mode::kSingle: return "H" + std::to_string(hospital) + "Single";
    case Mode::kCentral: return std::string("TotalCentral") + suffix;
    case Mode::kFedAvg: return std::string("FedAvg") + suffix;
    case Mode::kMcgp: return std::string("MCGP") + suffix;
  }
  return "?";
}

RunResult run_single(const ScenarioConfig& cfg, const World& world, int hospital) {
  const auto honest = world.honest();
  if (hospital < 1 || hospital > static_cast<int>(honest.size()))
    throw std::invalid_argument("run_single: hospital " + std::to_string(hospital) + " out of range");
  const Participant* h = honest[static_cast<std::size_t>(hospital - 1)];
  const HospitalDataset ds = split_dataset(h->id, h->patients, cfg.window, cfg.split, cfg.seeds.split);
  const NormStats& stats = ds.stats;

  RunResult r;
  r.method = method_name(Mode::kSingle, hospital, false);
  r.mode = Mode::kSingle;
  r.trained_patients = ds.patient_ids;
  TrainTrace trace;
  r.model = train_local(initial_model(cfg, stats), ds.train, ds.val, cfg.hyper,
                        local_train_seed(cfg.seeds.train, 0, h->id), &trace);
  for (std::size_t i = 0; i < trace.val_loss.size(); ++i) {
    RoundSummary s;
    s.round = static_cast<int>(i + 1);
    s.mean_val_loss = trace.val_loss[i];
    r.rounds.push_back(std::move(s));
  }
  evaluate_into(r, cfg, world);
  return r;
}

RunResult run_central(const ScenarioConfig& cfg, const World& world, bool with_malicious) {
  Prepared p = prepare(cfg, world.participants(with_malicious), true);
  std::vector<WindowedSample> train, val;
  for (auto& ds : p.datasets) {
    train.insert(train.end(), std::make_move_iterator(ds.train.begin()), std::make_move_iterator(ds.train.end()));
    val.insert(val.end(), std::make_move_iterator(ds.val.begin()), std::make_move_iterator(ds.val.end()));
  }
  RunResult r;
  r.method = method_name(Mode::kCentral, 0, with_malicious);
  r.mode = Mode::kCentral;
  r.site_scaled = false;
  r.with_malicious = with_malicious;
  r.trained_patients = p.patient_ids;
  TrainTrace trace;
  r.model = train_local(initial_model(cfg, p.stats), train, val, cfg.hyper, local_train_seed(cfg.seeds.train, 0, 0), &trace);
  for (std::size_t i = 0; i < trace.val_loss.size(); ++i) {
    RoundSummary s;
    s.round = static_cast<int>(i + 1);
    s.mean_val_loss = trace.val_loss[i];
    r.rounds.push_back(std::move(s));
  }
  evaluate_into(r, cfg, world);
  return r;
}

RunResult run_fedavg_scenario(const ScenarioConfig& cfg, const World& world, bool with_malicious) {
  const Prepared p = prepare(cfg, world.participants(with_malicious));
  FedAvgOptions opt;
  opt.rounds = cfg.rounds;
  opt.seed = cfg.seeds.train;
  opt.threads = cfg.threads;
  const FedAvgResult fr = run_fedavg(p.datasets, initial_model(cfg, p.stats), cfg.hyper, opt);

  RunResult r;
  r.method = method_name(Mode::kFedAvg, 0, with_malicious);
  r.mode = Mode::kFedAvg;
  r.with_malicious = with_malicious;
  r.trained_patients = p.patient_ids;
  r.model = Predictor(fr.model.params, p.stats);
  for (const auto& fround : fr.rounds) {
    RoundSummary s;
    s.round = fround.round;
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < p.datasets.size(); ++k) {
      if (p.datasets[k].malicious) continue;
      sum += fround.val_loss[k];
      ++n;
    }
    s.mean_val_loss = n ? sum / n : 0.0;
    r.rounds.push_back(std::move(s));
  }
  evaluate_into(r, cfg, world);
  return r;
}

RunResult run_mcgp(const ScenarioConfig& cfg, const World& world, bool with_malicious) {
  const Prepared p = prepare(cfg, world.participants(with_malicious));
  std::map<int, const HospitalDataset*> by_id;
  for (const auto& ds : p.datasets) by_id[ds.hospital_id] = &ds;

  RunResult r;
  r.method = method_name(Mode::kMcgp, 0, with_malicious);
  r.mode = Mode::kMcgp;
  r.with_malicious = with_malicious;
  r.trained_patients = p.patient_ids;

  ContentStore& store = r.store;
  chain::TokenLedger ledger;
  chain::KeyRegistry keys;
  Predictor global = initial_model(cfg, p.stats);
  Digest prev = store.put(global.params());
  {
    LedgerEvent e;
    e.event_type = "genesis";
    e.digest = prev.hex();
    ledger.record(std::move(e));
  }
  for (const auto& ds : p.datasets) {
    keys.enroll(ds.hospital_id, cfg.seeds.chain);
    ledger.fund(ds.hospital_id, cfg.stake.initial_balance);
    ledger.stake(ds.hospital_id, cfg.stake.stake_amount);
  }

  for (int round = 1; round <= cfg.rounds; ++round) {
    ledger.set_round(round);
    RoundSummary summary;
    summary.round = round;
    summary.pruned = chain::prune_ineligible(ledger, cfg.stake.eligibility_threshold);
    const auto active = ledger.active_set();

    chain::RoundRecord rec;
    rec.round = round;
    rec.pruned = summary.pruned;
    try {
      rec.assignment = chain::assign_roles(round, active, chain::randomness_beacon(prev, round), keys);
    } catch (const QuorumError& e) {
      LedgerEvent ev;
      ev.event_type = "abort";
      ledger.record(std::move(ev));
      r.aborted = true;
      r.abort_reason = e.what();
      r.rounds.push_back(std::move(summary));
      break;
    }
    const auto& asg = rec.assignment;
    for (int id : active) {
      LedgerEvent ev;
      ev.event_type = asg.is_trainer(id) ? "trainer" : "voter";
      ev.participant = id;
      ev.digest = asg.proofs.at(id).output.hex();
      ledger.record(std::move(ev));
    }

    // Off-chain local training, in parallel; submission order is fixed.
    std::vector<ParamVector> local(asg.trainers.size());
    parallel_for(asg.trainers.size(), cfg.threads, [&](std::size_t i) {
      const HospitalDataset& ds = *by_id.at(asg.trainers[i]);
      local[i] = train_local(global.with_stats(ds.stats), ds.train, ds.val, cfg.hyper,
                             local_train_seed(cfg.seeds.train, round, ds.hospital_id))
                     .params();
    });
    for (std::size_t i = 0; i < asg.trainers.size(); ++i) {
      const int id = asg.trainers[i];
      const Digest d = chain::submit_update(rec, store, id, local[i], by_id.at(id)->n_train);
      LedgerEvent ev;
      ev.event_type = "submit";
      ev.participant = id;
      ev.digest = d.hex();
      ledger.record(std::move(ev));
    }

    // The lowest-id voter publishes the aggregate; every voter re-derives it.
    const auto agg = chain::recompute_aggregate(rec, store);
    if (!agg) throw LedgerError("round " + std::to_string(round) + ": submitted updates cannot be aggregated");
    const Digest proposed = store.put(*agg);
    rec.proposed = proposed;
    {
      LedgerEvent ev;
      ev.event_type = "propose";
      ev.participant = *std::min_element(asg.voters.begin(), asg.voters.end());
      ev.digest = proposed.hex();
      ledger.record(std::move(ev));
    }

    for (int v : asg.voters) {
      const HospitalDataset& ds = *by_id.at(v);
      Vote vote;
      if (ds.malicious && cfg.malicious_vote == MaliciousVoting::kOppose) {
        vote = Vote::kOppose;
      } else {
        const Predictor previous = global.with_stats(ds.stats);
        chain::VoterInput in;
        in.record = &rec;
        in.store = &store;
        in.proposed = proposed;
        in.previous = &previous;
        in.val = ds.val;
        in.tolerance = cfg.stake.vote_tolerance;
        vote = chain::voter_evaluate(v, in);
      }
      rec.votes[v] = vote;
      LedgerEvent ev;
      ev.event_type = "vote";
      ev.participant = v;
      ev.vote = vote;
      ledger.record(std::move(ev));
    }

    const Vote majority = chain::decide_vote(rec.votes, round);
    rec.majority = majority;
    {
      LedgerEvent ev;
      ev.event_type = "majority";
      ev.majority = majority;
      ledger.record(std::move(ev));
    }
    rec.delta = chain::settle_round(ledger, asg, rec.votes, majority, cfg.stake);
    if (!ledger.conserved()) throw LedgerError("round " + std::to_string(round) + ": token conservation violated");

    prev = chain::finalize_model(majority, proposed, prev, store);
    global = global.with_params(*store.get(prev));
    rec.finalized = prev;
    {
      LedgerEvent ev;
      ev.event_type = "finalize";
      ev.majority = majority;
      ev.digest = prev.hex();
      ledger.record(std::move(ev));
    }

    summary.trainers = asg.trainers;
    summary.voters = asg.voters;
    summary.votes = rec.votes;
    summary.majority = majority;
    summary.finalized_digest = prev.hex();
    double sum = 0.0;
    int n = 0;
    for (int id : active) {
      const HospitalDataset& ds = *by_id.at(id);
      if (ds.malicious || ds.val.empty()) continue;
      sum += mse_loss(global.with_stats(ds.stats), ds.val);
      ++n;
    }
    summary.mean_val_loss = n ? sum / n : 0.0;
    r.rounds.push_back(std::move(summary));
  }

  r.model = global;
  r.events = ledger.events();
  evaluate_into(r, cfg, world);
  return r;
}

RunResult run_scenario(const ScenarioConfig& cfg, const World& world) {
  cfg.validate();
  const bool mal = cfg.malicious_hospitals > 0;
  if (mal && world.malicious_count() == 0) throw std::invalid_argument("world has no malicious hospital");
  switch (cfg.mode) {
    case Mode::kSingle: return run_single(cfg, world, cfg.hospital);
    case Mode::kCentral: return run_central(cfg, world, mal);
    case Mode::kFedAvg: return run_fedavg_scenario(cfg, world, mal);
    case Mode::kMcgp: return run_mcgp(cfg, world, mal);
  }
  throw std::invalid_argument("unknown mode");
}

RunResult run_method(const ScenarioConfig& cfg, const World& world, std::string_view method) {
  const int K = static_cast<int>(world.honest().size());
  for (int k = 1; k <= K; ++k)
    if (method == method_name(Mode::kSingle, k, false)) return run_single(cfg, world, k);
  for (bool mal : {false, true}) {
    if (mal && world.malicious_count() == 0) continue;
    if (method == method_name(Mode::kCentral, 0, mal)) return run_central(cfg, world, mal);
    if (method == method_name(Mode::kFedAvg, 0, mal)) return run_fedavg_scenario(cfg, world, mal);
    if (method == method_name(Mode::kMcgp, 0, mal)) return run_mcgp(cfg, world, mal);
  }
  throw std::invalid_argument("unknown method '" + std::string(method) + "'");
}

const RunResult& SuiteResult::run(const std::string& method) const {
  for (const auto& r : runs)
    if (r.method == method) return r;
  throw std::out_of_range("no run named " + method);
}

SuiteResult run_suite(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.malicious_hospitals = 1;
  c.mode = Mode::kMcgp;
  return run_suite(cfg, build_world(c));
}

SuiteResult run_suite(const ScenarioConfig& cfg, const World& world) {
  if (world.malicious_count() == 0) throw std::invalid_argument("run_suite: world needs a malicious hospital");
  const int K = static_cast<int>(world.honest().size());
  if (K < 2) throw std::invalid_argument("run_suite: needs at least two honest hospitals");

  // Scenario runs are independent; each one writes only its own slot.
  std::vector<std::function<RunResult()>> jobs;
  for (int k = 1; k <= K; ++k) jobs.push_back([&, k] { return run_single(cfg, world, k); });
  jobs.push_back([&] { return run_central(cfg, world, false); });
  jobs.push_back([&] { return run_central(cfg, world, true); });
  jobs.push_back([&] { return run_fedavg_scenario(cfg, world, true); });
  jobs.push_back([&] { return run_mcgp(cfg, world, false); });
  jobs.push_back([&] { return run_mcgp(cfg, world, true); });

  SuiteResult out;
  out.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) { out.runs[i] = jobs[i](); });

  for (const auto& r : out.runs) {
    for (const auto& m : r.current) out.rows.push_back({r.method, m.patient_id, m.seen, m.metrics.rmse, m.metrics.mard});
    for (const auto& m : r.unseen) out.rows.push_back({r.method, m.patient_id, m.seen, m.metrics.rmse, m.metrics.mard});
  }
  const RunResult& ref = out.run(method_name(Mode::kMcgp, 0, false));
  for (bool unseen : {false, true}) {
    for (const auto& r : out.runs) {
      SuiteSummary s;
      s.method = r.method;
      s.cohort = unseen ? "unseen" : "current";
      s.avg_rmse = r.avg_rmse(unseen);
      s.avg_mard = r.avg_mard(unseen);
      s.delta_avg_rmse = delta_avg(ref.avg_rmse(unseen), s.avg_rmse);
      s.delta_avg_mard = delta_avg(ref.avg_mard(unseen), s.avg_mard);
      out.summary.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace bcfl
