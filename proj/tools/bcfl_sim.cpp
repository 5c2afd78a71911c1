// bcfl_sim: generate synthetic cohorts, run scenarios and suites, emit traces.
//
// Exit codes: 0 success, 2 quorum abort (partial bundle written), 64 usage or
// configuration error, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bcfl/config.hpp"
#include "bcfl/orchestrator.hpp"
#include "bcfl/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace bcfl;

namespace {

constexpr int kExitQuorum = 2;
constexpr int kExitUsage = 64;

struct Common {
  std::string config;
  std::vector<std::string> seed_overrides;
};

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig{} : load_config(c.config);
  for (const auto& s : c.seed_overrides) apply_seed_override(cfg, s);
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON scenario configuration (defaults when omitted)");
  cmd->add_option("--seed-override", c.seed_overrides, "Override a seed, e.g. data=7 (repeatable)");
}

int cmd_generate(const Common& c, const fs::path& out, std::optional<int> malicious) {
  ScenarioConfig cfg = resolve(c);
  if (malicious) cfg.malicious_hospitals = *malicious;
  cfg.validate();
  const World world = build_world(cfg);
  fs::create_directories(out);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  const auto emit = [&](const GlucoseSeries& s, const char* role, int hospital) {
    const std::string name = "patient_" + std::to_string(s.patient_id) + ".csv";
    std::ofstream f(out / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    write_series_csv(f, s);
    manifest.push_back({{"patient_id", s.patient_id},
                        {"file", name},
                        {"role", role},
                        {"hospital", hospital ? nlohmann::ordered_json(hospital) : nlohmann::ordered_json(nullptr)},
                        {"days", s.days}});
  };
  for (const auto& h : world.hospitals)
    for (const auto& s : h.patients) emit(s, h.malicious ? "malicious" : "current", h.id);
  for (const auto& s : world.unseen) emit(s, "unseen", 0);
  write_config_snapshot(out, cfg);
  std::ofstream(out / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
  std::printf("wrote %zu patient series to %s\n", manifest.size(), out.string().c_str());
  return 0;
}

int cmd_run(const Common& c, const fs::path& out, const std::string& mode, std::optional<int> hospital,
            std::optional<int> malicious) {
  ScenarioConfig cfg = resolve(c);
  if (!mode.empty()) cfg.mode = parse_mode(mode);
  if (hospital) cfg.hospital = *hospital;
  if (malicious) cfg.malicious_hospitals = *malicious;
  cfg.validate();
  const World world = build_world(cfg);
  const RunResult r = run_scenario(cfg, world);
  write_run_bundle(out, cfg, r);
  std::printf("%s: current avg rmse %.3f mard %.3f | unseen avg rmse %.3f mard %.3f\n", r.method.c_str(),
              r.avg_rmse(false), r.avg_mard(false), r.avg_rmse(true), r.avg_mard(true));
  if (r.aborted) {
    std::fprintf(stderr, "quorum lost: %s (partial bundle in %s)\n", r.abort_reason.c_str(), out.string().c_str());
    return kExitQuorum;
  }
  return 0;
}

int cmd_suite(const Common& c, const fs::path& out) {
  ScenarioConfig cfg = resolve(c);
  cfg.validate();
  const SuiteResult s = run_suite(cfg);
  write_suite_bundle(out, cfg, s);
  for (const auto& row : s.summary)
    std::printf("%-16s %-8s avg rmse %8.3f  mard %7.3f  delta %8.3f\n", row.method.c_str(), row.cohort.c_str(),
                row.avg_rmse, row.avg_mard, row.delta_avg_rmse);
  return 0;
}

int cmd_trace(const Common& c, const fs::path& out, int patient, const std::vector<std::string>& methods,
              std::size_t last) {
  ScenarioConfig cfg = resolve(c);
  for (const auto& m : methods)
    if (m.ends_with("Mal")) cfg.malicious_hospitals = 1;
  cfg.validate();
  ScenarioConfig world_cfg = cfg;
  world_cfg.mode = Mode::kMcgp;
  const World world = build_world(world_cfg);
  const GlucoseSeries* s = world.find_patient(patient);
  if (!s) throw ConfigError("patient", "no patient " + std::to_string(patient) + " in this world");

  std::optional<PredictionTrace> truth;
  std::vector<TraceColumn> cols;
  for (const auto& m : methods) {
    const RunResult r = run_method(cfg, world, m);
    PredictionTrace t = predict_trace(*r.model, eval_target(r, world, patient, cfg.split), cfg);
    if (!truth) truth = t;
    cols.push_back({m, std::move(t.predicted)});
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out.string());
  const std::size_t rows = write_trace_csv(f, *truth, cols, last);
  if (rows < last)
    std::fprintf(stderr, "warning: patient %d has only %zu test points; wrote all of them\n", patient, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blockchain-coordinated federated glucose prediction simulator"};
  app.require_subcommand(1);
  Common common;

  std::string out;
  std::string mode;
  std::optional<int> hospital, malicious, patient_opt;
  std::vector<std::string> methods;
  std::size_t last = 1000;

  auto* gen = app.add_subcommand("generate", "Write synthetic patient series");
  add_common(gen, common);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--malicious", malicious, "Number of malicious hospitals (0 or 1)");

  auto* run = app.add_subcommand("run", "Run one scenario and write its bundle");
  add_common(run, common);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--mode", mode, "single | central | fedavg | mcgp");
  run->add_option("--hospital", hospital, "Hospital for single mode (1-based)");
  run->add_option("--malicious", malicious, "Number of malicious hospitals (0 or 1)");

  auto* suite = app.add_subcommand("suite", "Run every method on one world and write comparison tables");
  add_common(suite, common);
  suite->add_option("--out", out, "Output directory")->required();

  auto* trace = app.add_subcommand("trace", "Write a prediction trace for one patient");
  add_common(trace, common);
  trace->add_option("--out", out, "Output CSV file")->required();
  trace->add_option("--patient", patient_opt, "Patient id")->required();
  trace->add_option("--method", methods, "Method name, e.g. MCGP or H1Single (repeatable)")->required();
  trace->add_option("--last", last, "Number of trailing test points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(common, out, malicious);
    if (*run) return cmd_run(common, out, mode, hospital, malicious);
    if (*suite) return cmd_suite(common, out);
    if (*trace) return cmd_trace(common, out, *patient_opt, methods, last);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
