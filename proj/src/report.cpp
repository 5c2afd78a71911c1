#include "bcfl/report.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "bcfl/config.hpp"
#include "json.hpp"

namespace bcfl {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const SuiteRow> rows) {
  out << "method,patient_id,seen,rmse,mard\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.patient_id << ',' << (r.seen ? 1 : 0) << ',' << format_double(r.rmse) << ','
        << format_double(r.mard) << '\n';
}

std::vector<SuiteRow> metric_rows(const RunResult& r) {
  std::vector<SuiteRow> rows;
  for (const auto* cohort : {&r.current, &r.unseen})
    for (const auto& m : *cohort) rows.push_back({r.method, m.patient_id, m.seen, m.metrics.rmse, m.metrics.mard});
  return rows;
}

void write_summary_csv(std::ostream& out, std::span<const SuiteSummary> rows) {
  out << "method,avg_rmse,avg_mard,delta_avg_rmse,delta_avg_mard,cohort\n";
  for (const auto& s : rows)
    out << s.method << ',' << format_double(s.avg_rmse) << ',' << format_double(s.avg_mard) << ','
        << format_double(s.delta_avg_rmse) << ',' << format_double(s.delta_avg_mard) << ',' << s.cohort << '\n';
}

void write_rounds_csv(std::ostream& out, const RunResult& r) {
  out << "round,trainers,voters,support,oppose,majority,pruned,finalized,mean_val_loss\n";
  for (const auto& s : r.rounds) {
    int sup = 0, opp = 0;
    for (const auto& [p, v] : s.votes) (v == chain::Vote::kSupport ? sup : opp)++;
    out << s.round << ',' << join(s.trainers) << ',' << join(s.voters) << ',' << sup << ',' << opp << ','
        << (s.majority ? chain::to_string(*s.majority) : "") << ',' << join(s.pruned) << ',' << s.finalized_digest
        << ',' << format_double(s.mean_val_loss) << '\n';
  }
}

std::size_t write_trace_csv(std::ostream& out, const PredictionTrace& truth, std::span<const TraceColumn> columns,
                            std::size_t last) {
  const std::size_t n = truth.truth.size();
  for (const auto& c : columns)
    if (c.predicted.size() != n) throw std::invalid_argument("trace column " + c.method + " has the wrong length");
  const std::size_t rows = std::min(last, n);
  out << "step,ground_truth";
  for (const auto& c : columns) out << ',' << c.method;
  out << '\n';
  for (std::size_t i = n - rows; i < n; ++i) {
    out << truth.steps[i] << ',' << format_double(truth.truth[i]);
    for (const auto& c : columns) out << ',' << format_double(c.predicted[i]);
    out << '\n';
  }
  return rows;
}

void write_config_snapshot(const fs::path& dir, const ScenarioConfig& cfg) {
  fs::create_directories(dir);
  open_out(dir / "config.json") << config_to_json(cfg);
  nlohmann::ordered_json seeds = {{"data", cfg.seeds.data},
                                  {"split", cfg.seeds.split},
                                  {"init", cfg.seeds.init},
                                  {"train", cfg.seeds.train},
                                  {"chain", cfg.seeds.chain},
                                  {"train_seed_rule", "derive_seed(train, round, participant)"}};
  open_out(dir / "seeds.json") << seeds.dump(2) << '\n';
}

void write_run_bundle(const fs::path& dir, const ScenarioConfig& cfg, const RunResult& r) {
  write_config_snapshot(dir, cfg);
  const auto rows = metric_rows(r);
  {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, rows);
  }
  {
    auto out = open_out(dir / "summary.csv");
    out << "method,cohort,avg_rmse,avg_mard\n";
    for (bool unseen : {false, true})
      out << r.method << ',' << (unseen ? "unseen" : "current") << ',' << format_double(r.avg_rmse(unseen)) << ','
          << format_double(r.avg_mard(unseen)) << '\n';
  }
  {
    auto out = open_out(dir / "rounds.csv");
    write_rounds_csv(out, r);
  }
  if (r.mode == Mode::kMcgp) {
    auto out = open_out(dir / "events.jsonl");
    chain::write_event_log(out, r.events);
  }
}

void write_suite_bundle(const fs::path& dir, const ScenarioConfig& cfg, const SuiteResult& s) {
  write_config_snapshot(dir, cfg);
  {
    auto out = open_out(dir / "suite_metrics.csv");
    write_metrics_csv(out, s.rows);
  }
  {
    auto out = open_out(dir / "suite_summary.csv");
    write_summary_csv(out, s.summary);
  }
  for (const auto& r : s.runs) {
    if (r.mode != Mode::kMcgp) continue;
    auto out = open_out(dir / (r.method + "_events.jsonl"));
    chain::write_event_log(out, r.events);
  }
}

}  // namespace bcfl
