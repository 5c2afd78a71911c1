#pragma once

#include <stdexcept>
#include <string>

namespace bcfl {

// A series range too short to produce a single (history, target) window.
class EmptyWindowError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fewer than two eligible participants remain, or a round produced no votes.
class QuorumError : public std::runtime_error {
 public:
  QuorumError(int round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
  int round() const noexcept { return round_; }

 private:
  int round_;
};

// Violations of the simulated chain's rules (role checks, double staking, ...).
class LedgerError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace bcfl
