#pragma once

// $FML token ledger: balances, stakes, eligibility and the append-only event
// log that mirrors every state change.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcfl::chain {

using Tokens = std::int64_t;
using ParticipantId = int;

struct StakeConfig {
  Tokens stake_amount = 10;          // delta
  Tokens eligibility_threshold = 2;  // delta_0
  Tokens reward = 1;                 // rho
  Tokens slash = 2;                  // sigma
  double vote_tolerance = 0.05;      // epsilon
  Tokens initial_balance = 20;

  void validate() const;
};

enum class Vote { kSupport, kOppose };
const char* to_string(Vote v);
Vote parse_vote(std::string_view s);

// One line of the event log. Fields that do not apply to an event type are
// empty and serialize as JSON null.
struct LedgerEvent {
  int round = 0;
  std::string event_type;
  std::optional<ParticipantId> participant;
  std::optional<Tokens> amount;
  std::optional<Vote> vote;
  std::optional<Vote> majority;
  std::optional<std::string> digest;

  friend bool operator==(const LedgerEvent&, const LedgerEvent&) = default;
};

std::string to_json_line(const LedgerEvent& e);
LedgerEvent parse_json_line(const std::string& line);
void write_event_log(std::ostream& out, std::span<const LedgerEvent> events);
std::vector<LedgerEvent> read_event_log(std::istream& in);

struct Account {
  Tokens balance = 0;
  Tokens staked = 0;
  bool active = false;
  bool removed = false;

  friend bool operator==(const Account&, const Account&) = default;
};

class TokenLedger {
 public:
  // Genesis allocation; counts towards the initial total.
  void fund(ParticipantId p, Tokens amount);
  // Moves `amount` from balance to stake and activates the participant.
  void stake(ParticipantId p, Tokens amount);
  // Mints `amount` into the participant's balance.
  void reward(ParticipantId p, Tokens amount);
  // Burns up to `amount` from the stake; returns what was burned.
  Tokens slash(ParticipantId p, Tokens amount);
  // Permanently deactivates participants whose stake is not above threshold.
  std::vector<ParticipantId> prune_ineligible(Tokens threshold);

  void set_round(int round) { round_ = round; }
  int round() const { return round_; }
  // Appends a non-monetary event (roles, votes, finalization) to the log.
  void record(LedgerEvent e);

  const Account& account(ParticipantId p) const;
  bool has(ParticipantId p) const { return accounts_.contains(p); }
  Tokens balance(ParticipantId p) const { return account(p).balance; }
  Tokens staked(ParticipantId p) const { return account(p).staked; }
  bool is_active(ParticipantId p) const { return has(p) && account(p).active; }
  std::vector<ParticipantId> active_set() const;
  std::vector<ParticipantId> participants() const;

  Tokens initial_total() const { return initial_total_; }
  Tokens minted_total() const { return minted_total_; }
  Tokens burned_total() const { return burned_total_; }
  Tokens circulating() const;  // sum of balances and stakes
  bool conserved() const { return circulating() == initial_total_ + minted_total_ - burned_total_; }

  const std::vector<LedgerEvent>& events() const { return events_; }

  // Rebuilds ledger state from an event log. Throws LedgerError when a
  // monetary event is inconsistent with the replayed state.
  static TokenLedger replay(std::span<const LedgerEvent> events);

  // State equality (events excluded).
  bool same_state(const TokenLedger& o) const;

 private:
  Account& mutable_account(ParticipantId p);
  void log(const std::string& type, ParticipantId p, Tokens amount);

  std::map<ParticipantId, Account> accounts_;
  Tokens initial_total_ = 0;
  Tokens minted_total_ = 0;
  Tokens burned_total_ = 0;
  int round_ = 0;
  std::vector<LedgerEvent> events_;
};

}  // namespace bcfl::chain
