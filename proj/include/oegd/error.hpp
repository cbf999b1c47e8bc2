#pragma once

#include <stdexcept>
#include <string>

namespace oegd {

// Every failure the library raises carries one of these codes so callers
// (and the CLI's exit-code mapping) can dispatch without string matching.
enum class Errc {
  // data / schema
  EmptySchema,
  EmptyFile,
  IoFailure,
  MalformedRow,
  UnknownCategoricalValue,
  EmptyDataset,
  // workload
  ArityTooLarge,
  TooManyMarginals,
  DimensionMismatch,
  DegenerateWorkload,
  // privacy
  DeltaOutOfRange,
  InvalidParam,
  ChargeAfterHalt,
  EmptyCandidates,
  // oracle
  SearchSpaceTooLarge,
  // engines
  EmptySeparator,
  LedgerHalted,
  RequiresExactOracle,
  BudgetExceeded,
  // harness
  ConfigError,
  MismatchedWorkloads,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace oegd
