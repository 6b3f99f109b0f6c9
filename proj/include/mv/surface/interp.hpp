#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/surface/vc.hpp"

namespace mv::surface {

struct Outcome {
  enum class Kind { returned, overflow, division_by_zero, budget_exhausted, error };
  Kind kind = Kind::returned;
  std::optional<Value> value;
  std::vector<std::pair<std::string, Value>> outputs;  // final values of mutable-reference parameters
  std::map<std::string, Value> locals;                  // executable bindings of the entry frame at exit
  Span span;
  std::string message;
  long long steps = 0;

  bool operator==(const Outcome& o) const {
    return kind == o.kind && value == o.value && outputs == o.outputs && locals == o.locals;
  }
};

const char* to_string(Outcome::Kind k);
std::string describe(const Outcome& o);
nlohmann::json to_json(const Outcome& o);

/// Executes `entry` with exact machine-integer semantics; ghost code is skipped.
Outcome interpret(const Program& p, const std::string& entry, const std::vector<Value>& inputs,
                  long long budget = 10'000'000);

}  // namespace mv::surface
