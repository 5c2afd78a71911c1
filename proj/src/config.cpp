#include "bcfl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace bcfl {

using nlohmann::ordered_json;

namespace {

template <typename T>
T get_as(const ordered_json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

using Setter = std::function<void(ScenarioConfig&, const ordered_json&, const std::string&)>;

template <typename T, typename F>
Setter field(F&& assign) {
  return [assign](ScenarioConfig& c, const ordered_json& v, const std::string& k) { assign(c, get_as<T>(v, k)); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"mode", field<std::string>([](auto& c, std::string v) { c.mode = parse_mode(v); })},
      {"hospital", field<int>([](auto& c, int v) { c.hospital = v; })},
      {"num_hospitals", field<int>([](auto& c, int v) { c.num_hospitals = v; })},
      {"patients_per_hospital", field<int>([](auto& c, int v) { c.patients_per_hospital = v; })},
      {"unseen_patients", field<int>([](auto& c, int v) { c.unseen_patients = v; })},
      {"malicious_hospitals", field<int>([](auto& c, int v) { c.malicious_hospitals = v; })},
      {"arch", field<std::string>([](auto& c, std::string v) { c.arch = parse_arch(v); })},
      {"hidden", field<int>([](auto& c, int v) { c.hidden = v; })},
      {"history_len", field<int>([](auto& c, int v) { c.window.history_len = v; })},
      {"horizon", field<int>([](auto& c, int v) { c.window.horizon = v; })},
      {"days", field<int>([](auto& c, int v) { c.days = v; })},
      {"train_days", field<int>([](auto& c, int v) { c.split.train_days = v; })},
      {"val_fraction", field<double>([](auto& c, double v) { c.split.val_fraction = v; })},
      {"learning_rate", field<double>([](auto& c, double v) { c.hyper.learning_rate = v; })},
      {"weight_decay", field<double>([](auto& c, double v) { c.hyper.weight_decay = v; })},
      {"epochs", field<int>([](auto& c, int v) { c.hyper.epochs = v; })},
      {"batch_size", field<int>([](auto& c, int v) { c.hyper.batch_size = v; })},
      {"batches_per_epoch", field<int>([](auto& c, int v) { c.hyper.batches_per_epoch = v; })},
      {"eval_every", field<int>([](auto& c, int v) { c.hyper.eval_every = v; })},
      {"adam_beta1", field<double>([](auto& c, double v) { c.hyper.adam_beta1 = v; })},
      {"adam_beta2", field<double>([](auto& c, double v) { c.hyper.adam_beta2 = v; })},
      {"adam_eps", field<double>([](auto& c, double v) { c.hyper.adam_eps = v; })},
      {"rounds", field<int>([](auto& c, int v) { c.rounds = v; })},
      {"stake_amount", field<std::int64_t>([](auto& c, std::int64_t v) { c.stake.stake_amount = v; })},
      {"eligibility_threshold", field<std::int64_t>([](auto& c, std::int64_t v) { c.stake.eligibility_threshold = v; })},
      {"reward", field<std::int64_t>([](auto& c, std::int64_t v) { c.stake.reward = v; })},
      {"slash", field<std::int64_t>([](auto& c, std::int64_t v) { c.stake.slash = v; })},
      {"vote_tolerance", field<double>([](auto& c, double v) { c.stake.vote_tolerance = v; })},
      {"initial_balance", field<std::int64_t>([](auto& c, std::int64_t v) { c.stake.initial_balance = v; })},
      {"malicious_vote", field<std::string>([](auto& c, std::string v) {
         if (v == "oppose") c.malicious_vote = MaliciousVoting::kOppose;
         else if (v == "evaluate") c.malicious_vote = MaliciousVoting::kEvaluate;
         else throw std::invalid_argument("expected 'oppose' or 'evaluate'");
       })},
      {"selected_patients", field<std::vector<int>>([](auto& c, std::vector<int> v) { c.selected_patients = std::move(v); })},
      {"threads", field<int>([](auto& c, int v) { c.threads = v; })},
  };
  return s;
}

std::uint64_t& seed_slot(Seeds& s, std::string_view name) {
  if (name == "data") return s.data;
  if (name == "split") return s.split;
  if (name == "init") return s.init;
  if (name == "train") return s.train;
  if (name == "chain") return s.chain;
  throw ConfigError("seeds." + std::string(name), "unknown seed (expected data, split, init, train or chain)");
}

// Field-level checks first so the diagnostic can name the key.
void validate_keys(const ScenarioConfig& c) {
  const auto check = [](bool ok, const char* key, const char* msg) {
    if (!ok) throw ConfigError(key, msg);
  };
  check(c.num_hospitals >= 1, "num_hospitals", "must be >= 1");
  check(c.patients_per_hospital >= 1, "patients_per_hospital", "must be >= 1");
  check(c.unseen_patients >= 0, "unseen_patients", "must be >= 0");
  check(c.malicious_hospitals == 0 || c.malicious_hospitals == 1, "malicious_hospitals", "must be 0 or 1");
  check(c.hidden >= 0, "hidden", "must be >= 0");
  check(c.window.history_len >= 1, "history_len", "must be >= 1");
  check(c.window.horizon >= 1, "horizon", "must be >= 1");
  check(c.split.train_days >= 1, "train_days", "must be >= 1");
  check(c.days > c.split.train_days, "days", "must exceed train_days");
  check(c.split.val_fraction > 0.0 && c.split.val_fraction < 1.0, "val_fraction", "must be in (0, 1)");
  check(c.hyper.learning_rate >= 0.0, "learning_rate", "must be >= 0");
  check(c.hyper.weight_decay >= 0.0, "weight_decay", "must be >= 0");
  check(c.hyper.epochs >= 1, "epochs", "must be >= 1");
  check(c.hyper.batch_size >= 1, "batch_size", "must be >= 1");
  check(c.hyper.batches_per_epoch >= 0, "batches_per_epoch", "must be >= 0");
  check(c.hyper.eval_every >= 1, "eval_every", "must be >= 1");
  check(c.rounds >= 1, "rounds", "must be >= 1");
  check(c.stake.eligibility_threshold >= 0, "eligibility_threshold", "must be >= 0");
  check(c.stake.stake_amount > c.stake.eligibility_threshold, "stake_amount", "must exceed eligibility_threshold");
  check(c.stake.reward > 0, "reward", "must be > 0");
  check(c.stake.slash > 0, "slash", "must be > 0");
  check(c.stake.vote_tolerance >= 0.0, "vote_tolerance", "must be >= 0");
  check(c.stake.initial_balance >= c.stake.stake_amount, "initial_balance", "must cover stake_amount");
  check(c.threads >= 0, "threads", "must be >= 0");
  if (c.mode == Mode::kSingle) {
    check(c.hospital >= 1 && c.hospital <= c.num_hospitals, "hospital", "must be in 1..num_hospitals");
    check(c.malicious_hospitals == 0, "malicious_hospitals", "not valid for single mode");
  }
  if (c.mode == Mode::kFedAvg || c.mode == Mode::kMcgp)
    check(c.num_hospitals >= 2, "num_hospitals", "federated modes need at least 2");
  for (int p : c.selected_patients)
    check(p >= 1 && p <= c.current_patient_count(), "selected_patients", "entries must be current patient ids");
  c.validate();
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!j.is_object()) throw ConfigError("<document>", "top level must be an object");

  ScenarioConfig c;
  if (j.contains("preset")) {
    const auto p = get_as<std::string>(j["preset"], "preset");
    if (p == "desk") c = desk_scale_config();
    else if (p != "paper") throw ConfigError("preset", "expected 'paper' or 'desk'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (key == "seeds") {
      if (!value.is_object()) throw ConfigError("seeds", "expected an object");
      for (const auto& [name, v] : value.items()) seed_slot(c.seeds, name) = get_as<std::uint64_t>(v, "seeds." + name);
      continue;
    }
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown key");
    try {
      it->second(c, value, key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  }
  validate_keys(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["mode"] = std::string(mode_name(c.mode));
  j["hospital"] = c.hospital;
  j["num_hospitals"] = c.num_hospitals;
  j["patients_per_hospital"] = c.patients_per_hospital;
  j["unseen_patients"] = c.unseen_patients;
  j["malicious_hospitals"] = c.malicious_hospitals;
  j["arch"] = std::string(arch_name(c.arch));
  j["hidden"] = c.hidden;
  j["history_len"] = c.window.history_len;
  j["horizon"] = c.window.horizon;
  j["days"] = c.days;
  j["train_days"] = c.split.train_days;
  j["val_fraction"] = c.split.val_fraction;
  j["learning_rate"] = c.hyper.learning_rate;
  j["weight_decay"] = c.hyper.weight_decay;
  j["epochs"] = c.hyper.epochs;
  j["batch_size"] = c.hyper.batch_size;
  j["batches_per_epoch"] = c.hyper.batches_per_epoch;
  j["eval_every"] = c.hyper.eval_every;
  j["adam_beta1"] = c.hyper.adam_beta1;
  j["adam_beta2"] = c.hyper.adam_beta2;
  j["adam_eps"] = c.hyper.adam_eps;
  j["rounds"] = c.rounds;
  j["stake_amount"] = c.stake.stake_amount;
  j["eligibility_threshold"] = c.stake.eligibility_threshold;
  j["reward"] = c.stake.reward;
  j["slash"] = c.stake.slash;
  j["vote_tolerance"] = c.stake.vote_tolerance;
  j["initial_balance"] = c.stake.initial_balance;
  j["malicious_vote"] = c.malicious_vote == MaliciousVoting::kOppose ? "oppose" : "evaluate";
  j["selected_patients"] = c.selected_patients;
  j["threads"] = c.threads;
  j["seeds"] = {{"data", c.seeds.data},
                {"split", c.seeds.split},
                {"init", c.seeds.init},
                {"train", c.seeds.train},
                {"chain", c.seeds.chain}};
  return j.dump(2) + "\n";
}

void apply_seed_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("seeds", "override must look like name=value");
  const auto name = assignment.substr(0, eq);
  const auto value = assignment.substr(eq + 1);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("seeds." + std::string(name), "not an unsigned integer: " + std::string(value));
  seed_slot(cfg.seeds, name) = v;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return config_to_json(a) == config_to_json(b); }

}  // namespace bcfl
