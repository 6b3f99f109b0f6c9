#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mv/calc/syntax.hpp"

namespace mv::typing {

using calc::Mode;
using calc::ModeUsage;
using calc::TypePtr;
using calc::Usage;

struct Binding {
  ModeUsage mu;
  TypePtr type;
};

bool binding_eq(const Binding& a, const Binding& b);

using VarEnv = std::map<std::string, Binding>;
using PermEnv = std::map<std::int64_t, Usage>;

enum class Selector { linear, nonlinear, as_shared, as_linear, as_spec };

VarEnv project(const VarEnv& g, Selector s);
/// `as_spec` has no meaning for permission environments and throws.
PermEnv project(const PermEnv& p, Selector s);

bool env_eq(const VarEnv& a, const VarEnv& b);

/// All (G1, G2) with G = G1 # G2.  Order: the i-th linear binding (in key
/// order) goes left when bit i of the enumeration counter is clear.
std::vector<std::pair<VarEnv, VarEnv>> env_split_enumerate(const VarEnv& g);
std::vector<std::pair<PermEnv, PermEnv>> perm_split_enumerate(const PermEnv& p);

/// Recombination used to check splits: true iff g = g1 # g2.
bool is_split_of(const VarEnv& g, const VarEnv& g1, const VarEnv& g2);
bool is_split_of(const PermEnv& p, const PermEnv& p1, const PermEnv& p2);

std::string to_string(const VarEnv& g);
std::string to_string(const PermEnv& p);

}  // namespace mv::typing
