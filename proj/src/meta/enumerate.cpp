#include "mv/meta/enumerate.hpp"

#include <functional>
#include <map>

#include "mv/calc/sexpr.hpp"
#include "mv/typing/check.hpp"

namespace mv::meta {

using calc::Expr;
using TK = calc::Type::Kind;

std::string binder_name(std::size_t depth) { return "x" + std::to_string(depth); }

EnumerationSpec rich_spec() {
  EnumerationSpec s;
  s.decls = calc::parse_program("(struct S (exec int) (proof int)) (main unit)").decls;
  for (const char* t : {"int", "Unit", "Never", "(perm 0 int)", "S"}) s.types.push_back(calc::parse_type(t));
  auto ty = [](const char* t) { return calc::parse_type(t); };
  using calc::Callability;
  using calc::Lifetime;
  using calc::ModeUsage;
  s.lambdas = {
      {Mode::exec, Callability::many, Lifetime::static_, ModeUsage::linear(Mode::exec), ty("int")},
      {Mode::exec, Callability::once, Lifetime::restricted, ModeUsage::linear(Mode::exec), ty("int")},
      {Mode::proof, Callability::once, Lifetime::static_, ModeUsage::linear(Mode::proof), ty("(perm 0 int)")},
      {Mode::spec, Callability::many, Lifetime::static_, ModeUsage::spec(), ty("int")},
  };
  return s;
}

EnumerationSpec default_spec() {
  EnumerationSpec s = rich_spec();
  s.types = {calc::Type::int_()};
  s.lambdas = {s.lambdas[1], s.lambdas[3]};
  return s;
}

namespace {

using Scope = std::vector<TypePtr>;

struct Entry {
  ExprPtr e;
  TypePtr type;
};

/// Terms of one size under one scope, grouped by type.
struct Bucket {
  std::vector<Entry> all;
  std::map<std::string, std::vector<Entry>> by_type;
};

using Sink = std::function<void(const ExprPtr&)>;

class Enumerator {
public:
  Enumerator(const EnumerationSpec& s, typing::TypingCache* cache)
      : s_(s), heap_(calc::Type::int_()), cache_(cache) {
    if (!s_.decls.empty()) datatype_ = &s_.decls.decls().front();
  }

  const Bucket& exact(std::size_t n, const Scope& scope) {
    std::string key = std::to_string(n) + "|";
    for (const auto& t : scope) key += calc::print(*t) + ";";
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    Bucket b;
    build(n, scope, [&](const ExprPtr& c) {
      std::map<std::string, TypePtr> seen;
      for (const auto& t : lax(scope, c)) seen.emplace(calc::print(*t.type), t.type);
      for (const auto& [name, t] : seen) {
        b.all.push_back(Entry{c, t});
        b.by_type[name].push_back(Entry{c, t});
      }
    });
    return memo_.emplace(key, std::move(b)).first->second;
  }

  /// Closed terms of exactly size n, not memoized.
  void stream(std::size_t n, const Sink& sink) {
    build(n, {}, [&](const ExprPtr& c) {
      if (!lax({}, c).empty()) sink(c);
    });
  }

private:
  const EnumerationSpec& s_;
  TypePtr heap_;
  typing::TypingCache* cache_;

  typing::TypingSet lax(const Scope& scope, const ExprPtr& c) {
    std::map<std::string, TypePtr> vars;
    for (std::size_t i = 0; i < scope.size(); ++i) vars.emplace(binder_name(i), scope[i]);
    return typing::infer_lax(s_.decls, heap_, vars, Mode::exec, *c, cache_, c.get());
  }

  const calc::DatatypeDecl* datatype_ = nullptr;
  std::map<std::string, Bucket> memo_;

  static const std::vector<Entry>& of_type(const Bucket& b, const calc::Type& t) {
    static const std::vector<Entry> none;
    auto it = b.by_type.find(calc::print(t));
    return it == b.by_type.end() ? none : it->second;
  }

  static Scope extend(Scope s, TypePtr t) {
    s.push_back(std::move(t));
    return s;
  }

  void build(std::size_t n, const Scope& scope, const Sink& emit) {
    const std::size_t k = scope.size();
    const bool perms = !s_.permission_free;
    if (n == 0) return;
    if (n == 1) {
      for (long l : s_.literals) emit(Expr::int_lit(l));
      emit(Expr::unit());
      emit(Expr::bottom());
      for (const auto& t : s_.types)
        if (perms || t->kind != TK::perm) emit(Expr::default_(t));
      emit(Expr::hdata());
      emit(Expr::hread());
      for (const auto& t : s_.types)
        if (perms || t->kind != TK::perm) emit(Expr::none(t));
      for (std::size_t i = 0; i < k; ++i) emit(Expr::var(binder_name(i)));
      return;
    }
    for (const auto& c : exact(n - 1, scope).all) {
      if (c.type->kind == TK::never) emit(Expr::crash_never(c.e));
      if (c.type->kind == TK::int_) emit(Expr::hwrite(c.e));
      if (perms && c.type->kind == TK::perm) emit(Expr::pdata(c.e));
      emit(Expr::drop(c.e));
      emit(Expr::copy(c.e));
      emit(Expr::some(c.e, c.type));
    }
    if (n >= 3 && perms) {
      for (auto i : s_.perm_indices)
        for (const auto& c : exact(n - 2, scope).all) {
          if (c.type->kind == TK::perm && c.type->perm_index == i) emit(Expr::pread(i, c.e));
          if (calc::is_value(*c.e)) emit(Expr::perm(i, c.e));
        }
    }
    for (std::size_t a = 1; a + 1 < n; ++a) {
      const std::size_t b = n - 1 - a;
      const Bucket& left = exact(a, scope);
      const Bucket& right = exact(b, scope);
      for (const auto& l : of_type(left, *calc::Type::int_()))
        for (const auto& r : of_type(right, *calc::Type::int_())) emit(Expr::add(l.e, r.e));
      for (const auto& l : of_type(left, *calc::Type::unit()))
        for (const auto& r : right.all) emit(Expr::seq(l.e, r.e));
      for (const auto& l : left.all) {
        if (l.type->kind != TK::fn) continue;
        for (const auto& r : of_type(right, *l.type->fn->arg)) emit(Expr::app(l.e, r.e));
      }
      if (datatype_ && datatype_->fields.size() == 2)
        for (const auto& l : of_type(left, *datatype_->fields[0].second))
          for (const auto& r : of_type(right, *datatype_->fields[1].second))
            emit(Expr::struct_(datatype_->name, {l.e, r.e}));
      for (const auto& l : left.all) {
        const Bucket& body = exact(b, extend(scope, l.type));
        for (const auto& r : body.all)
          for (Mode m : s_.let_modes) emit(Expr::let(m, binder_name(k), l.e, r.e));
      }
      if (datatype_ && datatype_->fields.size() == 2) {
        Scope inner = extend(extend(scope, datatype_->fields[0].second), datatype_->fields[1].second);
        const Bucket& body = exact(b, inner);
        for (const auto& l : of_type(left, *calc::Type::named(datatype_->name)))
          for (const auto& r : body.all)
            emit(Expr::let_struct(datatype_->name, {binder_name(k), binder_name(k + 1)}, l.e, r.e));
      }
    }
    if (n >= 4 && perms) {
      for (auto i : s_.perm_indices)
        for (std::size_t a = 1; a + 2 < n; ++a) {
          const Bucket& right = exact(n - 2 - a, scope);
          for (const auto& l : exact(a, scope).all)
            for (const auto& r : right.all)
              if (r.type->kind == TK::perm && r.type->perm_index == i) emit(Expr::pwrite(i, l.e, r.e));
        }
    }
    for (std::size_t a = 1; a + 2 < n; ++a)
      for (std::size_t b = 1; a + b + 1 < n; ++b) {
        const std::size_t c = n - 1 - a - b;
        for (const auto& s : exact(a, scope).all) {
          if (s.type->kind != TK::option) continue;
          const Bucket& thens = exact(b, extend(scope, s.type->inner));
          const Bucket& elses = exact(c, scope);
          for (const auto& t : thens.all)
            for (const auto& e : of_type(elses, *t.type))
              emit(Expr::if_some(binder_name(k), s.e, t.e, e.e));
        }
      }
    for (const auto& h : s_.lambdas) {
      if (s_.permission_free && h.param_type->kind == TK::perm) continue;
      for (const auto& body : exact(n - 1, extend(scope, h.param_type)).all)
        emit(Expr::lambda_(
            calc::Lambda{h.mode, h.callability, h.lifetime, binder_name(k), h.param_mu, h.param_type, body.e}));
    }
  }
};

std::vector<ExprPtr> unique_terms(const std::vector<Entry>& entries) {
  std::vector<ExprPtr> out;
  const Expr* last = nullptr;
  for (const auto& en : entries) {
    if (en.e.get() == last) continue;
    last = en.e.get();
    out.push_back(en.e);
  }
  return out;
}

}  // namespace

std::vector<ExprPtr> enumerate_exact(const EnumerationSpec& spec, std::size_t size, std::size_t depth) {
  typing::TypingCache cache;
  Enumerator en(spec, &cache);
  return unique_terms(en.exact(size, Scope(depth, calc::Type::int_())).all);
}

std::size_t for_each_term(const EnumerationSpec& spec, typing::TypingCache& cache,
                          const std::function<bool(const ExprPtr&)>& fn) {
  Enumerator en(spec, &cache);
  std::size_t count = 0;
  bool stop = false;
  auto visit = [&](const ExprPtr& e) {
    if (stop) return;
    if (count >= spec.max_count || !fn(e)) {
      stop = true;
      return;
    }
    ++count;
  };
  for (std::size_t n = 1; n < spec.max_size && !stop; ++n)
    for (const auto& e : unique_terms(en.exact(n, {}).all)) visit(e);
  if (spec.max_size >= 1 && !stop) en.stream(spec.max_size, visit);
  return count;
}

std::vector<ExprPtr> enumerate_terms(const EnumerationSpec& spec) {
  typing::TypingCache cache;
  std::vector<ExprPtr> out;
  for_each_term(spec, cache, [&](const ExprPtr& e) {
    out.push_back(e);
    return true;
  });
  return out;
}

}  // namespace mv::meta
