#pragma once

// CSV and bundle writers shared by the CLI and the tests. Numbers are printed
// with %.17g so every file is a byte-exact function of config and seeds.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bcfl/orchestrator.hpp"

namespace bcfl {

std::string format_double(double v);

// method,patient_id,seen,rmse,mard
void write_metrics_csv(std::ostream& out, std::span<const SuiteRow> rows);
std::vector<SuiteRow> metric_rows(const RunResult& r);
// method,avg_rmse,avg_mard,delta_avg_rmse,delta_avg_mard,cohort
void write_summary_csv(std::ostream& out, std::span<const SuiteSummary> rows);
// round,trainers,voters,support,oppose,majority,pruned,finalized,mean_val_loss
void write_rounds_csv(std::ostream& out, const RunResult& r);

struct TraceColumn {
  std::string method;
  std::vector<double> predicted;
};
// step,ground_truth,<method>... over the last `last` test points. Returns the
// number of rows written (clamped to what is available).
std::size_t write_trace_csv(std::ostream& out, const PredictionTrace& truth, std::span<const TraceColumn> columns,
                            std::size_t last);

// Creates `dir` and writes config.json and seeds.json.
void write_config_snapshot(const std::filesystem::path& dir, const ScenarioConfig& cfg);

// metrics.csv, summary.csv, rounds.csv and (MCGP) events.jsonl.
void write_run_bundle(const std::filesystem::path& dir, const ScenarioConfig& cfg, const RunResult& r);
// suite_metrics.csv and suite_summary.csv.
void write_suite_bundle(const std::filesystem::path& dir, const ScenarioConfig& cfg, const SuiteResult& s);

}  // namespace bcfl
