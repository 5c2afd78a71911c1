#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "bcfl/chain/content_store.hpp"
#include "bcfl/errors.hpp"
#include "bcfl/orchestrator.hpp"

using namespace bcfl;

namespace {

// Small enough that a full suite runs in seconds.
ScenarioConfig tiny() {
  ScenarioConfig c;
  c.days = 8;
  c.rounds = 3;
  c.hidden = 4;
  c.window = WindowConfig{6, 2};
  c.hyper.learning_rate = 1e-3;
  c.hyper.epochs = 3;
  c.hyper.batch_size = 16;
  c.hyper.batches_per_epoch = 2;
  c.threads = 1;
  return c;
}

std::set<int> ids(const std::vector<PatientMetrics>& v) {
  std::set<int> s;
  for (const auto& m : v) s.insert(m.patient_id);
  return s;
}

}  // namespace

TEST(World, PatientNumbering) {
  auto cfg = tiny();
  cfg.malicious_hospitals = 1;
  const World w = build_world(cfg);
  ASSERT_EQ(w.hospitals.size(), 6u);
  for (int k = 1; k <= 5; ++k) {
    const auto& h = w.hospitals[static_cast<std::size_t>(k - 1)];
    EXPECT_EQ(h.id, k);
    EXPECT_FALSE(h.malicious);
    ASSERT_EQ(h.patients.size(), 5u);
    for (int j = 0; j < 5; ++j) EXPECT_EQ(h.patients[static_cast<std::size_t>(j)].patient_id, (k - 1) * 5 + j + 1);
  }
  EXPECT_EQ(w.hospitals[5].id, 6);
  EXPECT_TRUE(w.hospitals[5].malicious);
  EXPECT_EQ(w.hospitals[5].patients.front().patient_id, 31);
  EXPECT_EQ(w.hospitals[5].patients.back().patient_id, 35);
  ASSERT_EQ(w.unseen.size(), 5u);
  EXPECT_EQ(w.unseen.front().patient_id, 26);
  EXPECT_EQ(w.unseen.back().patient_id, 30);
  EXPECT_EQ(w.malicious_count(), 1);
  EXPECT_EQ(w.honest().size(), 5u);
  EXPECT_EQ(w.find_patient(13)->patient_id, 13);
  EXPECT_EQ(w.find_patient(99), nullptr);
}

TEST(World, HonestSeriesDoNotDependOnMaliciousPresence) {
  auto cfg = tiny();
  const World a = build_world(cfg);
  cfg.malicious_hospitals = 1;
  const World b = build_world(cfg);
  for (std::size_t k = 0; k < a.hospitals.size(); ++k) EXPECT_EQ(a.hospitals[k].patients, b.hospitals[k].patients);
  EXPECT_EQ(a.unseen, b.unseen);
}

TEST(Config, ValidateRejectsBadValues) {
  auto cfg = tiny();
  EXPECT_NO_THROW(cfg.validate());
  cfg.malicious_hospitals = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny();
  cfg.days = 7;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny();
  cfg.selected_patients = {26};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny();
  cfg.mode = Mode::kSingle;
  cfg.hospital = 6;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(MethodNames, RoundTrip) {
  EXPECT_EQ(method_name(Mode::kSingle, 3, false), "H3Single");
  EXPECT_EQ(method_name(Mode::kCentral, 0, true), "TotalCentralMal");
  EXPECT_EQ(method_name(Mode::kFedAvg, 0, true), "FedAvgMal");
  EXPECT_EQ(method_name(Mode::kMcgp, 0, false), "MCGP");
  EXPECT_EQ(parse_mode("fedavg"), Mode::kFedAvg);
  EXPECT_THROW(parse_mode("gossip"), std::invalid_argument);
}

class Scenario : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto c = tiny();
    c.malicious_hospitals = 1;
    world_ = new World(build_world(c));
  }
  static void TearDownTestSuite() { delete world_; }
  static const World& world() { return *world_; }
  static World* world_;
};
World* Scenario::world_ = nullptr;

TEST_F(Scenario, SingleSeenFlags) {
  const auto r = run_single(tiny(), world(), 1);
  EXPECT_EQ(r.method, "H1Single");
  EXPECT_EQ(ids(r.current), (std::set<int>{4, 7, 13, 19, 23}));
  EXPECT_EQ(ids(r.unseen), (std::set<int>{26, 27, 28, 29, 30}));
  for (const auto& m : r.current) EXPECT_EQ(m.seen, m.patient_id <= 5) << m.patient_id;
  for (const auto& m : r.unseen) EXPECT_FALSE(m.seen);
  for (const auto* c : {&r.current, &r.unseen})
    for (const auto& m : *c) {
      EXPECT_GT(m.metrics.rmse, 0.0);
      EXPECT_EQ(m.metrics.n, 288 - 8 + 1);
    }
}

TEST_F(Scenario, ZeroLearningRateKeepsInitialModel) {
  auto cfg = tiny();
  cfg.hyper.learning_rate = 0.0;
  const auto a = run_single(cfg, world(), 1);
  const auto b = run_single(cfg, world(), 2);
  EXPECT_EQ(a.model->params(), b.model->params());
  const auto f = run_fedavg_scenario(cfg, world(), true);
  for (std::size_t i = 0; i < f.model->params().size(); ++i)
    EXPECT_NEAR(f.model->params().values[i], a.model->params().values[i], 1e-12);
}

TEST_F(Scenario, FederatedRunsSeeAllCurrentPatients) {
  const auto r = run_fedavg_scenario(tiny(), world(), true);
  EXPECT_EQ(r.method, "FedAvgMal");
  for (const auto& m : r.current) EXPECT_TRUE(m.seen);
  EXPECT_EQ(r.rounds.size(), 3u);
  const auto c = run_central(tiny(), world(), false);
  EXPECT_FALSE(c.site_scaled);
  for (const auto& m : c.current) EXPECT_TRUE(m.seen);
}

TEST_F(Scenario, McgpIsDeterministicAndThreadIndependent) {
  auto cfg = tiny();
  const auto a = run_mcgp(cfg, world(), true);
  const auto b = run_mcgp(cfg, world(), true);
  cfg.threads = 3;
  const auto c = run_mcgp(cfg, world(), true);
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.events, c.events);
  EXPECT_EQ(a.model->params(), c.model->params());
  for (std::size_t i = 0; i < a.current.size(); ++i) EXPECT_EQ(a.current[i].metrics.rmse, c.current[i].metrics.rmse);
}

TEST_F(Scenario, McgpEventLogReplaysToFinalState) {
  const auto r = run_mcgp(tiny(), world(), true);
  ASSERT_FALSE(r.aborted);

  std::stringstream ss;
  chain::write_event_log(ss, r.events);
  const auto events = chain::read_event_log(ss);
  ASSERT_EQ(events, r.events);
  const auto ledger = chain::TokenLedger::replay(events);
  EXPECT_TRUE(ledger.conserved());

  // Every finalized digest is in the store, and the last one is the model.
  std::string last;
  std::set<int> roles_seen;
  int finalizes = 0;
  for (const auto& e : events) {
    if (e.event_type == "trainer" || e.event_type == "voter") roles_seen.insert(*e.participant);
    if (e.event_type != "finalize") continue;
    ++finalizes;
    last = *e.digest;
    EXPECT_TRUE(r.store.contains(chain::Digest::from_hex(last)));
  }
  EXPECT_EQ(finalizes, 3);
  EXPECT_EQ(last, chain::digest_of(r.model->params()).hex());
  EXPECT_EQ(*r.store.get(chain::Digest::from_hex(last)), r.model->params());
  EXPECT_TRUE(roles_seen.contains(6));

  for (const auto& s : r.rounds) {
    EXPECT_EQ(s.trainers.size() + s.voters.size(), 6u);
    EXPECT_EQ(s.trainers.size(), 3u);
  }
}

TEST_F(Scenario, McgpAbortsWhenQuorumIsLost) {
  auto cfg = tiny();
  cfg.num_hospitals = 2;
  cfg.selected_patients = {1, 6};
  cfg.rounds = 6;
  cfg.stake.stake_amount = 3;
  cfg.stake.initial_balance = 3;
  cfg.stake.eligibility_threshold = 2;
  cfg.stake.slash = 1;
  cfg.malicious_hospitals = 1;
  cfg.malicious_vote = MaliciousVoting::kOppose;
  cfg.hyper.learning_rate = 5.0;  // wrecks every proposal
  const World w = build_world(cfg);
  const auto r = run_mcgp(cfg, w, true);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.abort_reason.empty());
  EXPECT_EQ(r.events.back().event_type, "abort");
  EXPECT_LT(r.rounds.back().round, cfg.rounds + 1);
  EXPECT_TRUE(r.model.has_value());
}

TEST_F(Scenario, RunMethodDispatch) {
  EXPECT_EQ(run_method(tiny(), world(), "H2Single").method, "H2Single");
  EXPECT_THROW(run_method(tiny(), world(), "H9Single"), std::invalid_argument);
  EXPECT_THROW(run_method(tiny(), world(), "Gossip"), std::invalid_argument);
}

TEST_F(Scenario, SuiteShape) {
  const auto s = run_suite(tiny(), world());
  const std::vector<std::string> expect{"H1Single", "H2Single", "H3Single", "H4Single", "H5Single", "TotalCentral",
                                        "TotalCentralMal", "FedAvgMal", "MCGP", "MCGPMal"};
  ASSERT_EQ(s.runs.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(s.runs[i].method, expect[i]);
  EXPECT_EQ(s.rows.size(), expect.size() * 10);
  EXPECT_EQ(s.summary.size(), expect.size() * 2);
  for (const auto& row : s.summary) {
    const auto& ref = s.run("MCGP");
    const bool unseen = row.cohort == "unseen";
    EXPECT_DOUBLE_EQ(row.delta_avg_rmse, ref.avg_rmse(unseen) - row.avg_rmse);
    if (row.method == "MCGP") EXPECT_EQ(row.delta_avg_rmse, 0.0);
  }
  EXPECT_THROW(s.run("nope"), std::out_of_range);

  // Single-model runs agree with standalone runs on the same world.
  EXPECT_EQ(s.run("H3Single").model->params(), run_single(tiny(), world(), 3).model->params());
}
