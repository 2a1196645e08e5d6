#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsp/ast.hpp"
#include "gsp/vm.hpp"

namespace gsp {

// ---- generation ----

struct GenConfig {
  uint64_t seed = 0;
  int maxTopStmts = 6;
  int maxExprDepth = 3;
  int maxClasses = 3;
  double dynBias = 0.5;  // probability of Dyn at each annotation site
};

// Deterministic: identical configs yield identical programs. Output is
// well-formed (parseable, names resolved) but not necessarily well-typed.
SurfaceProgram generate_program(const GenConfig& cfg);

// ---- verdicts ----

enum class VerdictKind {
  WellTypedValue,
  AllowedError,
  StaticReject,
  Timeout,
  SoundnessViolation,
};

struct Verdict {
  VerdictKind kind = VerdictKind::WellTypedValue;
  std::string rendered;                  // WellTypedValue: last top-level value
  Type staticType = Type::dyn();         // WellTypedValue
  ErrKind errKind = ErrKind::CastError;  // AllowedError
  std::vector<std::string> codes;        // StaticReject
  std::string detail;                    // SoundnessViolation
};

const char* verdict_kind_name(VerdictKind k);

// check -> compile -> optimize -> execute under an instruction budget, then
// classify. Also runs the optimizer differential (optimized vs checked-entry
// execution) and, for programs without checked-dict literals, the erasure
// differential at 10x the budget.
Verdict soundness_verdict(const SurfaceProgram& p, long long budget);
Verdict soundness_verdict_source(const std::string& source, long long budget);

// ---- fuzzing ----

struct FuzzSummary {
  long long wellTyped = 0;
  long long allowedErrors = 0;
  long long staticRejects = 0;
  long long timeouts = 0;
  long long violations = 0;
  std::vector<std::string> violationDetails;  // "seed=<s> index=<i>: <detail>"
};

FuzzSummary run_fuzz(uint64_t seed, int count, double dynBias, long long budget);

// ---- corpus ----

// Files carry an expectation header:
//   # expect: value <rendered>   |   # expect: static <code>   |
//   # expect: runtime <kind>
struct CorpusEntry {
  std::string file;
  bool pass = false;
  std::string detail;
};

struct CorpusReport {
  std::vector<CorpusEntry> entries;
  int passed = 0;
  int failed = 0;
};

CorpusReport run_corpus(const std::string& dir);

}  // namespace gsp
