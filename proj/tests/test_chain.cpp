#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "bcfl/chain/content_store.hpp"
#include "bcfl/chain/digest.hpp"
#include "bcfl/chain/protocol.hpp"
#include "bcfl/chain/vrf.hpp"
#include "bcfl/errors.hpp"
#include "bcfl/random.hpp"

using namespace bcfl;
using namespace bcfl::chain;

namespace {

ParamVector linear_params(double fill, int len = 2) {
  ArchSpec s;
  s.arch = Arch::kLinear;
  s.history_len = len;
  return {s, std::vector<double>(s.param_count(), fill)};
}

KeyRegistry registry(int n, std::uint64_t seed) {
  KeyRegistry k;
  for (int p = 1; p <= n; ++p) k.enroll(p, seed);
  return k;
}

}  // namespace

TEST(Digest, KnownSha256Vectors) {
  EXPECT_EQ(sha256(std::string_view("abc")).hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256(std::string_view("")).hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, HexRoundTripAndErrors) {
  const Digest d = sha256(std::string_view("x"));
  EXPECT_EQ(Digest::from_hex(d.hex()), d);
  EXPECT_THROW(Digest::from_hex("abc"), std::invalid_argument);
  EXPECT_THROW(Digest::from_hex(std::string(64, 'g')), std::invalid_argument);
}

TEST(Digest, BeaconDependsOnRound) {
  const Digest d = sha256(std::string_view("m"));
  EXPECT_NE(randomness_beacon(d, 1), randomness_beacon(d, 2));
  EXPECT_EQ(randomness_beacon(d, 3), randomness_beacon(d, 3));
}

TEST(ContentStore, AddressedByContent) {
  ContentStore store;
  const auto a = linear_params(0.5), b = linear_params(0.25);
  const Digest da = store.put(a);
  EXPECT_EQ(da, digest_of(a));
  EXPECT_EQ(store.get(da), a);
  const Digest db = store.put(b);
  EXPECT_NE(da, db);
  EXPECT_EQ(store.put(a), da);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_FALSE(store.get(sha256(std::string_view("missing"))).has_value());
}

TEST(Vrf, GenuineTuplesVerify) {
  const auto key = VrfKeyPair::from_seed(sha256(std::string_view("k1")));
  for (int i = 0; i < 20; ++i) {
    const std::vector<std::uint8_t> in{static_cast<std::uint8_t>(i), 7, 9};
    const auto r = vrf_eval(key, in);
    EXPECT_TRUE(vrf_verify(key.public_key, in, r.output, r.proof));
    EXPECT_EQ(vrf_eval(key, in).output, r.output);
  }
}

TEST(Vrf, DistinctInputsAndKeysGiveDistinctOutputs) {
  const auto k1 = VrfKeyPair::from_seed(sha256(std::string_view("k1")));
  const auto k2 = VrfKeyPair::from_seed(sha256(std::string_view("k2")));
  const std::vector<std::uint8_t> a{1}, b{2};
  EXPECT_NE(vrf_eval(k1, a).output, vrf_eval(k1, b).output);
  EXPECT_NE(vrf_eval(k1, a).output, vrf_eval(k2, a).output);
  const auto r = vrf_eval(k1, a);
  EXPECT_FALSE(vrf_verify(k2.public_key, a, r.output, r.proof));
}

TEST(Vrf, EverySingleBitTamperIsRejected) {
  const auto key = VrfKeyPair::from_seed(sha256(std::string_view("tamper")));
  const std::vector<std::uint8_t> in{0xde, 0xad, 0xbe, 0xef};
  const auto r = vrf_eval(key, in);
  for (std::size_t bit = 0; bit < in.size() * 8; ++bit) {
    auto t = in;
    t[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_FALSE(vrf_verify(key.public_key, t, r.output, r.proof)) << "input bit " << bit;
  }
  for (std::size_t bit = 0; bit < 256; ++bit) {
    Digest o = r.output;
    o.bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_FALSE(vrf_verify(key.public_key, in, o, r.proof)) << "output bit " << bit;
  }
  for (std::size_t bit = 0; bit < 512; ++bit) {
    VrfProof p = r.proof;
    p.bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_FALSE(vrf_verify(key.public_key, in, r.output, p)) << "proof bit " << bit;
  }
  for (std::size_t bit = 0; bit < 256; ++bit) {
    VrfPublicKey pk = key.public_key;
    pk[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_FALSE(vrf_verify(pk, in, r.output, r.proof)) << "key bit " << bit;
  }
}

TEST(Roles, PartitionAndCeilHalf) {
  const auto keys = registry(9, 11);
  const Digest beacon = sha256(std::string_view("b"));
  for (int n = 2; n <= 9; ++n) {
    std::vector<ParticipantId> active;
    for (int p = 1; p <= n; ++p) active.push_back(p);
    const auto a = assign_roles(4, active, beacon, keys);
    EXPECT_EQ(a.trainers.size(), static_cast<std::size_t>((n + 1) / 2));
    EXPECT_EQ(a.trainers.size() + a.voters.size(), static_cast<std::size_t>(n));
    std::set<ParticipantId> all(a.trainers.begin(), a.trainers.end());
    all.insert(a.voters.begin(), a.voters.end());
    EXPECT_EQ(all.size(), static_cast<std::size_t>(n));
    EXPECT_TRUE(verify_assignment(a, keys));

    // Trainers come first in ascending VRF output order.
    std::vector<ParticipantId> order = a.trainers;
    order.insert(order.end(), a.voters.begin(), a.voters.end());
    for (std::size_t i = 1; i < order.size(); ++i)
      EXPECT_LT(a.proofs.at(order[i - 1]).output, a.proofs.at(order[i]).output);
  }
}

TEST(Roles, DeterministicAndBeaconSensitive) {
  const auto keys = registry(5, 3);
  const std::vector<ParticipantId> active{1, 2, 3, 4, 5};
  const Digest b = sha256(std::string_view("b"));
  const auto a1 = assign_roles(1, active, b, keys);
  const auto a2 = assign_roles(1, active, b, keys);
  EXPECT_EQ(a1.trainers, a2.trainers);
  EXPECT_EQ(a1.trainers.size(), 3u);
  EXPECT_EQ(a1.voters.size(), 2u);

  bool changed = false;
  for (int r = 2; r < 12 && !changed; ++r) changed = assign_roles(r, active, randomness_beacon(b, r), keys).trainers != a1.trainers;
  EXPECT_TRUE(changed);
}

TEST(Roles, QuorumAndTamper) {
  const auto keys = registry(3, 3);
  const std::vector<ParticipantId> one{2};
  EXPECT_THROW(assign_roles(6, one, Digest{}, keys), QuorumError);
  try {
    assign_roles(6, one, Digest{}, keys);
  } catch (const QuorumError& e) {
    EXPECT_EQ(e.round(), 6);
  }
  const std::vector<ParticipantId> two{1, 3};
  auto a = assign_roles(1, two, Digest{}, keys);
  EXPECT_EQ(a.trainers.size(), 1u);
  std::swap(a.trainers, a.voters);
  EXPECT_FALSE(verify_assignment(a, keys));
}

class RoundFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    keys = registry(5, 9);
    const std::vector<ParticipantId> active{1, 2, 3, 4, 5};
    record.round = 1;
    record.assignment = assign_roles(1, active, Digest{}, keys);
    spec.arch = Arch::kLinear;
    spec.history_len = 2;
    Rng rng(1);
    for (int i = 0; i < 60; ++i) {
      WindowedSample s;
      s.x.resize(spec.input_size());
      for (auto& v : s.x) v = rng.normal();
      s.y = 0.5 * s.x[0] - 0.25 * s.x[4];
      val.push_back(s);
    }
  }

  KeyRegistry keys;
  RoundRecord record;
  ContentStore store;
  ArchSpec spec;
  std::vector<WindowedSample> val;
};

TEST_F(RoundFixture, OnlyTrainersSubmitOnce) {
  const auto p = linear_params(0.1);
  const int t = record.assignment.trainers[0];
  const int v = record.assignment.voters[0];
  EXPECT_THROW(submit_update(record, store, v, p, 10), LedgerError);
  EXPECT_EQ(submit_update(record, store, t, p, 10), digest_of(p));
  EXPECT_THROW(submit_update(record, store, t, p, 10), LedgerError);
  EXPECT_EQ(store.get(record.updates[0].digest), p);
}

TEST_F(RoundFixture, AggregateFromStore) {
  double fill = 0.0;
  for (int t : record.assignment.trainers) submit_update(record, store, t, linear_params(fill += 1.0), 5);
  const auto agg = recompute_aggregate(record, store);
  ASSERT_TRUE(agg.has_value());
  for (double v : agg->values) EXPECT_NEAR(v, 2.0, 1e-12);

  ContentStore empty;
  EXPECT_FALSE(recompute_aggregate(record, empty).has_value());
}

TEST_F(RoundFixture, VoterRules) {
  const Predictor prev(ParamVector{spec, std::vector<double>(spec.param_count(), 0.0)}, NormStats{});
  for (int t : record.assignment.trainers) submit_update(record, store, t, prev.params(), 5);
  const Digest agg = store.put(*recompute_aggregate(record, store));
  const int voter = record.assignment.voters[0];
  VoterInput in{&record, &store, agg, &prev, val, 0.05};
  EXPECT_EQ(voter_evaluate(voter, in), Vote::kSupport);

  Digest tampered = agg;
  tampered.bytes[0] ^= 1;
  in.proposed = tampered;
  EXPECT_EQ(voter_evaluate(voter, in), Vote::kOppose);

  EXPECT_THROW(voter_evaluate(record.assignment.trainers[0], VoterInput{&record, &store, agg, &prev, val, 0.05}),
               LedgerError);
}

TEST_F(RoundFixture, NoisyProposalIsOpposed) {
  const Predictor prev(ParamVector{spec, std::vector<double>(spec.param_count(), 0.0)}, NormStats{});
  Rng rng(5);
  for (int t : record.assignment.trainers) {
    auto p = prev.params();
    for (auto& v : p.values) v += rng.normal(0, 50);
    submit_update(record, store, t, p, 5);
  }
  const Digest agg = store.put(*recompute_aggregate(record, store));
  VoterInput in{&record, &store, agg, &prev, val, 0.05};
  EXPECT_EQ(voter_evaluate(record.assignment.voters[0], in), Vote::kOppose);
}

TEST(Majority, StrictWithTiesOpposed) {
  EXPECT_EQ(decide_vote({{1, Vote::kSupport}, {2, Vote::kSupport}, {3, Vote::kOppose}}), Vote::kSupport);
  EXPECT_EQ(decide_vote({{1, Vote::kSupport}, {2, Vote::kOppose}}), Vote::kOppose);
  EXPECT_EQ(decide_vote({{1, Vote::kOppose}, {2, Vote::kOppose}}), Vote::kOppose);
  EXPECT_EQ(decide_vote({{1, Vote::kSupport}}), Vote::kSupport);
  EXPECT_THROW(decide_vote({}, 3), QuorumError);
}

TEST(Finalize, CaseSplit) {
  const auto a = linear_params(1.0), b = linear_params(2.0);
  EXPECT_EQ(finalize_model(Vote::kSupport, a, b), a);
  EXPECT_EQ(finalize_model(Vote::kOppose, a, b), b);

  ContentStore store;
  const Digest da = store.put(a), db = store.put(b);
  EXPECT_EQ(finalize_model(Vote::kSupport, da, db, store), da);
  EXPECT_EQ(finalize_model(Vote::kOppose, da, db, store), db);
  EXPECT_THROW(finalize_model(Vote::kSupport, digest_of(linear_params(3.0)), db, store), LedgerError);
}
