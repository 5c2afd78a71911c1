#pragma once

// One round of the incentive protocol: VRF role assignment, update
// submission, voter evaluation, majority decision, settlement and
// finalization of the global model.

#include <map>
#include <span>
#include <vector>

#include "bcfl/chain/content_store.hpp"
#include "bcfl/chain/digest.hpp"
#include "bcfl/chain/ledger.hpp"
#include "bcfl/chain/vrf.hpp"
#include "bcfl/fl_core.hpp"
#include "bcfl/learners.hpp"

namespace bcfl::chain {

class KeyRegistry {
 public:
  // Deterministic keys per (chain_seed, participant).
  void enroll(ParticipantId p, std::uint64_t chain_seed);
  void enroll(ParticipantId p, const VrfKeyPair& key) { keys_[p] = key; }
  const VrfKeyPair& key(ParticipantId p) const;
  const VrfPublicKey& public_key(ParticipantId p) const { return key(p).public_key; }

 private:
  std::map<ParticipantId, VrfKeyPair> keys_;
};

// Bytes every participant feeds to its VRF for a round: beacon || round (u64 LE).
std::vector<std::uint8_t> role_input(const Digest& beacon, int round);

struct RoleAssignment {
  int round = 0;
  std::vector<ParticipantId> trainers;  // ascending VRF output order
  std::vector<ParticipantId> voters;
  std::map<ParticipantId, VrfResult> proofs;
  Digest beacon;

  bool is_trainer(ParticipantId p) const;
  bool is_voter(ParticipantId p) const;
};

// Sorts the active set by VRF output; the first ceil(n/2) train, the rest vote.
// Throws QuorumError when fewer than two participants are active.
RoleAssignment assign_roles(int round, std::span<const ParticipantId> active, const Digest& beacon,
                            const KeyRegistry& keys);

// Re-derives the assignment from the published proofs.
bool verify_assignment(const RoleAssignment& a, const KeyRegistry& keys);

struct SubmittedUpdate {
  ParticipantId trainer = 0;
  Digest digest;
  std::size_t n_k = 0;
};

struct LedgerDelta {
  std::map<ParticipantId, Tokens> balance;
  std::map<ParticipantId, Tokens> staked;
};

using VoteMap = std::map<ParticipantId, Vote>;

struct RoundRecord {
  int round = 0;
  RoleAssignment assignment;
  std::vector<SubmittedUpdate> updates;
  std::optional<Digest> proposed;
  VoteMap votes;
  std::optional<Vote> majority;
  std::optional<Digest> finalized;
  LedgerDelta delta;
  std::vector<ParticipantId> pruned;
};

// Stores the trainer's parameters and records the digest in the round.
// Throws LedgerError for non-trainers and duplicate submissions.
Digest submit_update(RoundRecord& record, ContentStore& store, ParticipantId trainer, const ParamVector& params,
                     std::size_t n_k);

// Fetches every submitted update and forms the weighted aggregate. Returns
// nullopt when any blob is missing from the store.
std::optional<ParamVector> recompute_aggregate(const RoundRecord& record, const ContentStore& store);

struct VoterInput {
  const RoundRecord* record = nullptr;
  const ContentStore* store = nullptr;
  Digest proposed;
  const Predictor* previous = nullptr;  // last finalized model
  std::span<const WindowedSample> val;  // voter's private evaluation data
  double tolerance = 0.05;
};

// Support iff the recomputed aggregate matches `proposed` and its validation
// loss does not exceed the previous model's by more than the tolerance.
Vote voter_evaluate(ParticipantId voter, const VoterInput& in);

// Strict majority wins; ties go to oppose. Throws QuorumError on zero votes.
Vote decide_vote(const VoteMap& votes, int round = 0);

// Rewards/slashes voters by agreement with the majority and trainers by the
// majority outcome. Applies to the ledger and returns the per-account delta.
LedgerDelta settle_round(TokenLedger& ledger, const RoleAssignment& assignment, const VoteMap& votes,
                         Vote majority, const StakeConfig& cfg);

std::vector<ParticipantId> prune_ineligible(TokenLedger& ledger, Tokens threshold);

// theta^r = proposed on support, previous on oppose.
const ParamVector& finalize_model(Vote majority, const ParamVector& proposed, const ParamVector& previous);
// Digest form; both blobs must exist in the store.
Digest finalize_model(Vote majority, const Digest& proposed, const Digest& previous, const ContentStore& store);

}  // namespace bcfl::chain
