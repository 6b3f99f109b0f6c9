#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/calc/sexpr.hpp"
#include "mv/eval/eval.hpp"
#include "mv/meta/enumerate.hpp"
#include "mv/typing/check.hpp"

namespace mv::meta {

struct Counterexample {
  std::string term;
  std::string perms;
  Mode access = Mode::exec;
  std::string typing;
  std::string detail;
  std::vector<std::string> trace;
};

struct PropertyReport {
  std::string property;
  std::uint64_t examined = 0;
  std::uint64_t passed = 0;
  std::optional<Counterexample> counterexample;

  void record(bool ok, const std::function<Counterexample()>& make);
  bool ok() const { return passed == examined; }
};

nlohmann::json to_json(const PropertyReport& r);
std::string summary(const PropertyReport& r);

/// One well-typed configuration: heap h = 0 of type int, Γ = ∅.
struct Case {
  ExprPtr expr;
  typing::PermEnv perms;
  Mode access;
  typing::TypingSet typings;
};

struct SweepResult {
  PropertyReport preservation{"preservation"};
  PropertyReport progress{"progress"};
  PropertyReport termination{"termination"};
  std::uint64_t terms = 0;
  std::uint64_t configurations = 0;
  double seconds = 0;
};

/// Permission environments tried for a term: only ∅ unless it mentions index i.
std::vector<typing::PermEnv> perm_envs_for(const calc::Expr& e, const std::vector<std::int64_t>& indices);

/// Steps once and re-checks at the same permissions and access level; every
/// typing of the case must survive.
bool preservation_holds(const EnumerationSpec& spec, const Case& c, typing::TypingCache* cache, std::string& detail);
bool progress_holds(const EnumerationSpec& spec, const Case& c, std::string& detail);
bool termination_holds(const EnumerationSpec& spec, const Case& c, std::uint64_t budget, std::string& detail);

/// The preservation, progress and termination sweep.  Termination is only
/// examined for spec and proof access.
SweepResult sweep(const EnumerationSpec& spec, std::uint64_t budget = eval::default_budget);

struct AgreementResult {
  PropertyReport agreement{"checker-agreement"};
  std::uint64_t known_incomplete = 0;  // declarative accepts only with borrows the term does not annotate
  std::vector<std::string> incomplete_examples;
  double seconds = 0;
};

/// One case under Γ = ∅, P = ∅.  An algorithmic rejection of a declaratively
/// typable term counts as known incompleteness only when no typing survives
/// restricting borrows to the annotated ones.
void check_agreement(const EnumerationSpec& spec, const ExprPtr& e, Mode m, AgreementResult& res,
                     typing::TypingCache* cache = nullptr);

/// Declarative vs algorithmic over the permission-free corpus.
AgreementResult agreement_sweep(EnumerationSpec spec);

/// The heap self-application that loops at exec access.  Kept out of sweeps.
struct DivergenceFixture {
  calc::CalcProgram program;
};
DivergenceFixture divergence_fixture();

}  // namespace mv::meta
