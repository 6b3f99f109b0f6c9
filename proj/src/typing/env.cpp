#include "mv/typing/env.hpp"

#include <sstream>
#include <stdexcept>

#include "mv/calc/sexpr.hpp"

namespace mv::typing {

bool binding_eq(const Binding& a, const Binding& b) { return a.mu == b.mu && calc::type_eq(*a.type, *b.type); }

VarEnv project(const VarEnv& g, Selector s) {
  VarEnv out;
  for (const auto& [x, b] : g) {
    switch (s) {
      case Selector::linear:
        if (b.mu.is_linear()) out.emplace(x, b);
        break;
      case Selector::nonlinear:
        if (!b.mu.is_linear()) out.emplace(x, b);
        break;
      case Selector::as_shared:
        out.emplace(x, Binding{b.mu.is_spec() ? b.mu : ModeUsage::shared(b.mu.mode()), b.type});
        break;
      case Selector::as_linear:
        out.emplace(x, Binding{b.mu.is_spec() ? b.mu : ModeUsage::linear(b.mu.mode()), b.type});
        break;
      case Selector::as_spec:
        out.emplace(x, Binding{ModeUsage::spec(), b.type});
        break;
    }
  }
  return out;
}

PermEnv project(const PermEnv& p, Selector s) {
  if (s == Selector::as_spec) throw std::invalid_argument("spec projection is not defined on permission environments");
  PermEnv out;
  for (const auto& [i, u] : p) {
    switch (s) {
      case Selector::linear:
        if (u == Usage::linear) out.emplace(i, u);
        break;
      case Selector::nonlinear:
        if (u == Usage::shared) out.emplace(i, u);
        break;
      case Selector::as_shared:
        out.emplace(i, Usage::shared);
        break;
      case Selector::as_linear:
        out.emplace(i, Usage::linear);
        break;
      case Selector::as_spec:
        break;
    }
  }
  return out;
}

bool env_eq(const VarEnv& a, const VarEnv& b) {
  if (a.size() != b.size()) return false;
  auto it = b.begin();
  for (const auto& [x, bx] : a) {
    if (it->first != x || !binding_eq(bx, it->second)) return false;
    ++it;
  }
  return true;
}

std::vector<std::pair<VarEnv, VarEnv>> env_split_enumerate(const VarEnv& g) {
  std::vector<std::string> linear;
  for (const auto& [x, b] : g)
    if (b.mu.is_linear()) linear.push_back(x);
  std::vector<std::pair<VarEnv, VarEnv>> out;
  const std::size_t n = std::size_t{1} << linear.size();
  out.reserve(n);
  for (std::size_t mask = 0; mask < n; ++mask) {
    VarEnv left = g;
    VarEnv right = g;
    for (std::size_t k = 0; k < linear.size(); ++k) {
      VarEnv& spec_side = (mask >> k & 1) ? left : right;
      spec_side.at(linear[k]).mu = ModeUsage::spec();
    }
    out.emplace_back(std::move(left), std::move(right));
  }
  return out;
}

std::vector<std::pair<PermEnv, PermEnv>> perm_split_enumerate(const PermEnv& p) {
  std::vector<std::int64_t> linear;
  for (const auto& [i, u] : p)
    if (u == Usage::linear) linear.push_back(i);
  std::vector<std::pair<PermEnv, PermEnv>> out;
  const std::size_t n = std::size_t{1} << linear.size();
  for (std::size_t mask = 0; mask < n; ++mask) {
    PermEnv left = p;
    PermEnv right = p;
    for (std::size_t k = 0; k < linear.size(); ++k) ((mask >> k & 1) ? left : right).erase(linear[k]);
    out.emplace_back(std::move(left), std::move(right));
  }
  return out;
}

bool is_split_of(const VarEnv& g, const VarEnv& g1, const VarEnv& g2) {
  // !G, spec(linear G) must be the same on all three; linear parts concatenate.
  auto residue = [](const VarEnv& e) {
    VarEnv r = project(e, Selector::nonlinear);
    for (auto& [x, b] : project(project(e, Selector::linear), Selector::as_spec)) r.emplace(x, b);
    return r;
  };
  VarEnv r = residue(g);
  if (!env_eq(r, residue(g1)) || !env_eq(r, residue(g2))) return false;
  VarEnv l1 = project(g1, Selector::linear);
  VarEnv l2 = project(g2, Selector::linear);
  for (const auto& [x, b] : l1)
    if (l2.count(x)) return false;
  l1.insert(l2.begin(), l2.end());
  return env_eq(project(g, Selector::linear), l1);
}

bool is_split_of(const PermEnv& p, const PermEnv& p1, const PermEnv& p2) {
  PermEnv shared = project(p, Selector::nonlinear);
  if (shared != project(p1, Selector::nonlinear) || shared != project(p2, Selector::nonlinear)) return false;
  PermEnv l1 = project(p1, Selector::linear);
  for (const auto& [i, u] : project(p2, Selector::linear))
    if (!l1.emplace(i, u).second) return false;
  return l1 == project(p, Selector::linear);
}

std::string to_string(const VarEnv& g) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [x, b] : g) {
    os << (first ? "" : ", ") << x << ": " << calc::to_string(b.mu) << " " << calc::print(*b.type);
    first = false;
  }
  os << "}";
  return os.str();
}

std::string to_string(const PermEnv& p) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [i, u] : p) {
    os << (first ? "" : ", ") << i << ": " << calc::to_string(u);
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace mv::typing
