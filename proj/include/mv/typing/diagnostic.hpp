#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mv/calc/syntax.hpp"

namespace mv::typing {

struct Diagnostic {
  std::string rule;
  calc::Span span;
  std::string message;
  std::string severity = "error";
};

/// `line:col: severity [rule] message`
std::string to_text(const Diagnostic& d);
nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const std::vector<Diagnostic>& ds);

}  // namespace mv::typing
