#pragma once

#include <map>
#include <string>
#include <vector>

#include "gsp/checker.hpp"
#include "gsp/runtime.hpp"

namespace gsp {

// ---- instructions ----

enum class Op {
  LOAD_CONST,         // a: const index
  LOAD_LOCAL,         // a: slot
  STORE_LOCAL,        // a: slot
  LOAD_GLOBAL,        // name
  STORE_GLOBAL,       // name (module-level initializers only)
  CAST,               // a: typeRef
  CHECK_ARGS,         // checkArgs: (local slot, typeRef) pairs
  BUILD_MAP,          // a: entry count
  BUILD_CHECKED_MAP,  // a: typeRef (CheckedDict type), b: entry count
  TP_ALLOC,           // a: classId; pops one value per field slot
  INVOKE_FUNCTION,    // a: funcId, b: entry (0 checked / 1 fast), c: strict edge
  INVOKE_METHOD,      // a: vtable slot, b: entry, c: strict edge, d: argc incl. self
  CALL_DYNAMIC,       // name ("" = callee on stack beneath args), a: argc
  DICT_GET,
  DICT_SET,
  DICT_SET_GUARDED,
  LOAD_FIELD,         // a: classId, b: field slot
  STORE_FIELD,        // a: classId, b: field slot
  LOAD_ATTR_DYN,      // name
  STORE_ATTR_DYN,     // name
  IS_NONE,
  EQ,
  NOT,
  JUMP,               // a: absolute target offset
  POP_JUMP_IF_FALSE,  // a: absolute target offset
  POP,                // a: 1 = module-level output (render and record)
  RETURN_VALUE,
};

struct Instr {
  Op op;
  int a = 0, b = 0, c = 0, d = 0;
  std::string name;
  std::vector<std::pair<int, int>> checkArgs;
};

struct BCFunction {
  std::string name;
  int nLocals = 0;
  int nParams = 0;
  int fastEntry = 0;  // checked entry is always offset 0
  std::vector<Instr> code;
};

struct BytecodeModule {
  std::vector<BCFunction> functions;  // user functions, methods, constructors, module
  int moduleFunc = -1;
  ClassTable classes;
  std::vector<std::pair<int, int>> ctorIds;  // per classId: (0-arg, 1-arg) funcIds
  std::vector<Type> typeRefs;
  std::vector<Value> consts;
  std::map<std::string, int> funcIds;   // user free functions
  std::map<std::string, int> classIds;
};

// ---- metrics ----

struct Metrics {
  long long casts_executed = 0;
  long long check_args_executed = 0;
  long long arg_casts_executed = 0;
  long long element_casts = 0;
  long long direct_calls = 0;
  long long vtable_calls = 0;
  long long dynamic_calls = 0;
  long long wrapper_result_checks = 0;
};

// ---- execution outcome ----

enum class ExecStatus { Ok, Error, Timeout, Internal };

struct ExecResult {
  ExecStatus status = ExecStatus::Ok;
  std::vector<std::string> outputs;  // rendered top-level expression values
  std::vector<Value> outputValues;   // same values, for terminal-value checks
  Metrics metrics;
  ErrKind errKind = ErrKind::CastError;
  std::string errMessage;
  std::string internalDetail;
};

// ---- operations ----

// Lowers an elaborated program. All invoke edges target the checked entry;
// statically-strict edges carry a marker the optimizer acts on.
BytecodeModule compile(const ElabProgram& p);

// Retargets strict invoke edges to the fast entry. Semantics-preserving.
BytecodeModule optimize(const BytecodeModule& m);

// Runs module-level code under an instruction budget. Every failure is one
// of the four allowed error kinds; anything else reports Internal.
ExecResult execute(const BytecodeModule& m, TypeRegistry& reg, long long budget);

// Stable text listing, golden-tested.
std::string dump(const BytecodeModule& m);

}  // namespace gsp
