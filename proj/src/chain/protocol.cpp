#include "bcfl/chain/protocol.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "bcfl/errors.hpp"

namespace bcfl::chain {

void KeyRegistry::enroll(ParticipantId p, std::uint64_t chain_seed) {
  std::string material = "bcfl-vrf-key:";
  material += std::to_string(chain_seed);
  material += ':';
  material += std::to_string(p);
  keys_[p] = VrfKeyPair::from_seed(sha256(material));
}

const VrfKeyPair& KeyRegistry::key(ParticipantId p) const {
  auto it = keys_.find(p);
  if (it == keys_.end()) throw LedgerError("no VRF key enrolled for participant " + std::to_string(p));
  return it->second;
}

std::vector<std::uint8_t> role_input(const Digest& beacon, int round) {
  std::vector<std::uint8_t> in(beacon.bytes.begin(), beacon.bytes.end());
  const auto r = static_cast<std::uint64_t>(round);
  for (int i = 0; i < 8; ++i) in.push_back(static_cast<std::uint8_t>(r >> (8 * i)));
  return in;
}

bool RoleAssignment::is_trainer(ParticipantId p) const {
  return std::find(trainers.begin(), trainers.end(), p) != trainers.end();
}

bool RoleAssignment::is_voter(ParticipantId p) const {
  return std::find(voters.begin(), voters.end(), p) != voters.end();
}

namespace {

// Ascending VRF output; participant id breaks (astronomically unlikely) ties.
std::vector<ParticipantId> rank_by_output(const std::map<ParticipantId, VrfResult>& proofs) {
  std::vector<ParticipantId> order;
  for (const auto& [p, r] : proofs) order.push_back(p);
  std::sort(order.begin(), order.end(), [&](ParticipantId a, ParticipantId b) {
    const auto& oa = proofs.at(a).output;
    const auto& ob = proofs.at(b).output;
    return oa != ob ? oa < ob : a < b;
  });
  return order;
}

}  // namespace

RoleAssignment assign_roles(int round, std::span<const ParticipantId> active, const Digest& beacon,
                            const KeyRegistry& keys) {
  if (active.size() < 2)
    throw QuorumError(round, "only " + std::to_string(active.size()) + " eligible participant(s); need 2");
  RoleAssignment a;
  a.round = round;
  a.beacon = beacon;
  const auto input = role_input(beacon, round);
  for (ParticipantId p : active) a.proofs[p] = vrf_eval(keys.key(p), input);
  const auto order = rank_by_output(a.proofs);
  const std::size_t n_trainers = (order.size() + 1) / 2;
  a.trainers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_trainers));
  a.voters.assign(order.begin() + static_cast<std::ptrdiff_t>(n_trainers), order.end());
  return a;
}

bool verify_assignment(const RoleAssignment& a, const KeyRegistry& keys) {
  const auto input = role_input(a.beacon, a.round);
  for (const auto& [p, r] : a.proofs)
    if (!vrf_verify(keys.public_key(p), input, r.output, r.proof)) return false;
  const auto order = rank_by_output(a.proofs);
  const std::size_t n_trainers = (order.size() + 1) / 2;
  if (a.trainers.size() != n_trainers || a.voters.size() != order.size() - n_trainers) return false;
  return std::equal(a.trainers.begin(), a.trainers.end(), order.begin()) &&
         std::equal(a.voters.begin(), a.voters.end(), order.begin() + static_cast<std::ptrdiff_t>(n_trainers));
}

Digest submit_update(RoundRecord& record, ContentStore& store, ParticipantId trainer, const ParamVector& params,
                     std::size_t n_k) {
  if (!record.assignment.is_trainer(trainer))
    throw LedgerError("participant " + std::to_string(trainer) + " is not a trainer in round " +
                      std::to_string(record.round));
  for (const auto& u : record.updates)
    if (u.trainer == trainer)
      throw LedgerError("participant " + std::to_string(trainer) + " already submitted in round " +
                        std::to_string(record.round));
  if (n_k == 0) throw LedgerError("update must report n_k >= 1");
  const Digest d = store.put(params);
  record.updates.push_back({trainer, d, n_k});
  return d;
}

std::optional<ParamVector> recompute_aggregate(const RoundRecord& record, const ContentStore& store) {
  if (record.updates.empty()) return std::nullopt;
  try {
    std::vector<LocalUpdate> updates;
    for (const auto& u : record.updates) {
      auto blob = store.get(u.digest);
      if (!blob) return std::nullopt;
      updates.push_back({u.trainer, record.round, std::move(*blob), u.n_k});
    }
    return aggregate(updates);
  } catch (const std::invalid_argument&) {
    // Undecodable blob or incompatible architectures: no usable aggregate.
    return std::nullopt;
  }
}

Vote voter_evaluate(ParticipantId voter, const VoterInput& in) {
  if (!in.record || !in.store || !in.previous) throw std::invalid_argument("voter_evaluate: incomplete input");
  if (!in.record->assignment.is_voter(voter))
    throw LedgerError("participant " + std::to_string(voter) + " is not a voter in round " +
                      std::to_string(in.record->round));
  const auto agg = recompute_aggregate(*in.record, *in.store);
  if (!agg) return Vote::kOppose;
  if (digest_of(*agg) != in.proposed) return Vote::kOppose;
  if (in.val.empty()) return Vote::kSupport;
  const Predictor proposed = in.previous->with_params(*agg);
  const double new_loss = mse_loss(proposed, in.val);
  const double old_loss = mse_loss(*in.previous, in.val);
  return new_loss <= old_loss * (1.0 + in.tolerance) ? Vote::kSupport : Vote::kOppose;
}

Vote decide_vote(const VoteMap& votes, int round) {
  if (votes.empty()) throw QuorumError(round, "no votes cast");
  std::size_t support = 0;
  for (const auto& [p, v] : votes) support += v == Vote::kSupport;
  return 2 * support > votes.size() ? Vote::kSupport : Vote::kOppose;
}

LedgerDelta settle_round(TokenLedger& ledger, const RoleAssignment& assignment, const VoteMap& votes,
                         Vote majority, const StakeConfig& cfg) {
  for (const auto& [p, v] : votes)
    if (!assignment.is_voter(p))
      throw LedgerError("vote from participant " + std::to_string(p) + " who is not a voter");
  LedgerDelta delta;
  for (const auto& [p, v] : votes) {
    if (v == majority) {
      ledger.reward(p, cfg.reward);
      delta.balance[p] += cfg.reward;
    } else {
      delta.staked[p] -= ledger.slash(p, cfg.slash);
    }
  }
  std::vector<ParticipantId> trainers = assignment.trainers;
  std::sort(trainers.begin(), trainers.end());
  for (ParticipantId p : trainers) {
    if (majority == Vote::kSupport) {
      ledger.reward(p, cfg.reward);
      delta.balance[p] += cfg.reward;
    } else {
      delta.staked[p] -= ledger.slash(p, cfg.slash);
    }
  }
  return delta;
}

std::vector<ParticipantId> prune_ineligible(TokenLedger& ledger, Tokens threshold) {
  return ledger.prune_ineligible(threshold);
}

const ParamVector& finalize_model(Vote majority, const ParamVector& proposed, const ParamVector& previous) {
  return majority == Vote::kSupport ? proposed : previous;
}

Digest finalize_model(Vote majority, const Digest& proposed, const Digest& previous, const ContentStore& store) {
  if (!store.contains(proposed)) throw LedgerError("finalize: proposed model " + proposed.hex() + " not in store");
  if (!store.contains(previous)) throw LedgerError("finalize: previous model " + previous.hex() + " not in store");
  return majority == Vote::kSupport ? proposed : previous;
}

}  // namespace bcfl::chain
