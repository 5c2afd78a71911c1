#include "bcfl/chain/ledger.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bcfl/errors.hpp"
#include "json.hpp"

namespace bcfl::chain {

using nlohmann::ordered_json;

void StakeConfig::validate() const {
  if (!(eligibility_threshold >= 0)) throw std::invalid_argument("eligibility_threshold must be >= 0");
  if (!(stake_amount > eligibility_threshold))
    throw std::invalid_argument("stake_amount must exceed eligibility_threshold");
  if (reward <= 0) throw std::invalid_argument("reward must be > 0");
  if (slash <= 0) throw std::invalid_argument("slash must be > 0");
  if (!(vote_tolerance >= 0.0)) throw std::invalid_argument("vote_tolerance must be >= 0");
  if (initial_balance < stake_amount) throw std::invalid_argument("initial_balance must cover stake_amount");
}

const char* to_string(Vote v) { return v == Vote::kSupport ? "support" : "oppose"; }

Vote parse_vote(std::string_view s) {
  if (s == "support") return Vote::kSupport;
  if (s == "oppose") return Vote::kOppose;
  throw std::invalid_argument("unknown vote '" + std::string(s) + "'");
}

std::string to_json_line(const LedgerEvent& e) {
  ordered_json j;
  j["round"] = e.round;
  j["event_type"] = e.event_type;
  j["participant"] = e.participant ? ordered_json(*e.participant) : ordered_json(nullptr);
  j["amount"] = e.amount ? ordered_json(*e.amount) : ordered_json(nullptr);
  j["vote"] = e.vote ? ordered_json(to_string(*e.vote)) : ordered_json(nullptr);
  j["majority"] = e.majority ? ordered_json(to_string(*e.majority)) : ordered_json(nullptr);
  j["digest"] = e.digest ? ordered_json(*e.digest) : ordered_json(nullptr);
  return j.dump();
}

LedgerEvent parse_json_line(const std::string& line) {
  const auto j = ordered_json::parse(line);
  LedgerEvent e;
  e.round = j.at("round").get<int>();
  e.event_type = j.at("event_type").get<std::string>();
  if (!j.at("participant").is_null()) e.participant = j["participant"].get<ParticipantId>();
  if (!j.at("amount").is_null()) e.amount = j["amount"].get<Tokens>();
  if (!j.at("vote").is_null()) e.vote = parse_vote(j["vote"].get<std::string>());
  if (!j.at("majority").is_null()) e.majority = parse_vote(j["majority"].get<std::string>());
  if (!j.at("digest").is_null()) e.digest = j["digest"].get<std::string>();
  return e;
}

void write_event_log(std::ostream& out, std::span<const LedgerEvent> events) {
  for (const auto& e : events) out << to_json_line(e) << '\n';
}

std::vector<LedgerEvent> read_event_log(std::istream& in) {
  std::vector<LedgerEvent> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_json_line(line));
  return out;
}

Account& TokenLedger::mutable_account(ParticipantId p) {
  auto it = accounts_.find(p);
  if (it == accounts_.end()) throw LedgerError("unknown participant " + std::to_string(p));
  return it->second;
}

const Account& TokenLedger::account(ParticipantId p) const {
  auto it = accounts_.find(p);
  if (it == accounts_.end()) throw LedgerError("unknown participant " + std::to_string(p));
  return it->second;
}

void TokenLedger::log(const std::string& type, ParticipantId p, Tokens amount) {
  LedgerEvent e;
  e.round = round_;
  e.event_type = type;
  e.participant = p;
  e.amount = amount;
  events_.push_back(std::move(e));
}

void TokenLedger::record(LedgerEvent e) {
  e.round = round_;
  events_.push_back(std::move(e));
}

void TokenLedger::fund(ParticipantId p, Tokens amount) {
  if (amount < 0) throw LedgerError("fund: negative amount");
  accounts_[p].balance += amount;
  initial_total_ += amount;
  log("fund", p, amount);
}

void TokenLedger::stake(ParticipantId p, Tokens amount) {
  Account& a = mutable_account(p);
  if (a.removed) throw LedgerError("stake: participant " + std::to_string(p) + " was removed");
  if (a.active || a.staked > 0) throw LedgerError("stake: participant " + std::to_string(p) + " already staked");
  if (amount <= 0) throw LedgerError("stake: amount must be positive");
  if (a.balance < amount)
    throw LedgerError("stake: participant " + std::to_string(p) + " has balance " + std::to_string(a.balance) +
                      ", needs " + std::to_string(amount));
  a.balance -= amount;
  a.staked += amount;
  a.active = true;
  log("stake", p, amount);
}

void TokenLedger::reward(ParticipantId p, Tokens amount) {
  if (amount <= 0) throw LedgerError("reward: amount must be positive");
  mutable_account(p).balance += amount;
  minted_total_ += amount;
  log("reward", p, amount);
}

Tokens TokenLedger::slash(ParticipantId p, Tokens amount) {
  if (amount <= 0) throw LedgerError("slash: amount must be positive");
  Account& a = mutable_account(p);
  const Tokens burned = std::min(a.staked, amount);
  a.staked -= burned;
  burned_total_ += burned;
  log("slash", p, burned);
  return burned;
}

std::vector<ParticipantId> TokenLedger::prune_ineligible(Tokens threshold) {
  std::vector<ParticipantId> removed;
  for (auto& [p, a] : accounts_) {
    if (a.active && a.staked <= threshold) {
      a.active = false;
      a.removed = true;
      removed.push_back(p);
      log("prune", p, a.staked);
    }
  }
  return removed;
}

std::vector<ParticipantId> TokenLedger::active_set() const {
  std::vector<ParticipantId> out;
  for (const auto& [p, a] : accounts_)
    if (a.active) out.push_back(p);
  return out;
}

std::vector<ParticipantId> TokenLedger::participants() const {
  std::vector<ParticipantId> out;
  for (const auto& [p, a] : accounts_) out.push_back(p);
  return out;
}

Tokens TokenLedger::circulating() const {
  Tokens t = 0;
  for (const auto& [p, a] : accounts_) t += a.balance + a.staked;
  return t;
}

bool TokenLedger::same_state(const TokenLedger& o) const {
  return accounts_ == o.accounts_ && initial_total_ == o.initial_total_ && minted_total_ == o.minted_total_ &&
         burned_total_ == o.burned_total_;
}

TokenLedger TokenLedger::replay(std::span<const LedgerEvent> events) {
  TokenLedger l;
  for (const auto& e : events) {
    l.round_ = e.round;
    const auto need = [&](const char* what) {
      if (!e.participant || !e.amount)
        throw LedgerError(std::string("replay: ") + what + " event missing participant or amount");
    };
    if (e.event_type == "fund") {
      need("fund");
      l.fund(*e.participant, *e.amount);
    } else if (e.event_type == "stake") {
      need("stake");
      l.stake(*e.participant, *e.amount);
    } else if (e.event_type == "reward") {
      need("reward");
      l.reward(*e.participant, *e.amount);
    } else if (e.event_type == "slash") {
      need("slash");
      if (*e.amount == 0) {
        l.log("slash", *e.participant, 0);
        continue;
      }
      if (l.slash(*e.participant, *e.amount) != *e.amount)
        throw LedgerError("replay: slash exceeds replayed stake of participant " + std::to_string(*e.participant));
    } else if (e.event_type == "prune") {
      need("prune");
      Account& a = l.mutable_account(*e.participant);
      if (!a.active || a.staked != *e.amount)
        throw LedgerError("replay: prune of participant " + std::to_string(*e.participant) +
                          " inconsistent with replayed state");
      a.active = false;
      a.removed = true;
      l.log("prune", *e.participant, a.staked);
    } else {
      l.events_.push_back(e);
    }
  }
  return l;
}

}  // namespace bcfl::chain
