#include "mv/calc/syntax.hpp"

#include <algorithm>
#include <stdexcept>

namespace mv::calc {

bool mode_leq(Mode a, Mode b) { return static_cast<int>(a) <= static_cast<int>(b); }

Mode mode_join(Mode a, Mode b) { return mode_leq(a, b) ? b : a; }

ModeUsage ModeUsage::of(Mode m, Usage u) {
  ModeUsage r;
  r.mode_ = m;
  if (m != Mode::spec) r.usage_ = u;
  return r;
}

const std::vector<ModeUsage>& ModeUsage::all() {
  static const std::vector<ModeUsage> all_mus = {
      ModeUsage::linear(Mode::exec), ModeUsage::shared(Mode::exec), ModeUsage::linear(Mode::proof),
      ModeUsage::shared(Mode::proof), ModeUsage::spec()};
  return all_mus;
}

ModeUsage join_mode_usage(Mode m, ModeUsage mu) {
  Mode joined = mode_join(m, mu.mode());
  if (joined == Mode::spec) return ModeUsage::spec();
  return ModeUsage::of(joined, *mu.usage());
}

// ---------------------------------------------------------------------------
// Types

namespace {
TypePtr make_type(Type t) { return std::make_shared<const Type>(std::move(t)); }
}  // namespace

TypePtr Type::int_() {
  static const TypePtr t = make_type(Type{Kind::int_});
  return t;
}
TypePtr Type::unit() {
  static const TypePtr t = make_type(Type{Kind::unit});
  return t;
}
TypePtr Type::never() {
  static const TypePtr t = make_type(Type{Kind::never});
  return t;
}
TypePtr Type::perm(std::int64_t index, TypePtr payload) {
  Type t{Kind::perm};
  t.perm_index = index;
  t.inner = std::move(payload);
  return make_type(std::move(t));
}
TypePtr Type::option(TypePtr payload) {
  Type t{Kind::option};
  t.inner = std::move(payload);
  return make_type(std::move(t));
}
TypePtr Type::named(std::string name) {
  Type t{Kind::named};
  t.name = std::move(name);
  return make_type(std::move(t));
}
TypePtr Type::function(FnSig sig) {
  Type t{Kind::fn};
  t.fn = std::move(sig);
  return make_type(std::move(t));
}

namespace {
template <typename T>
int cmp3(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}
}  // namespace

int type_compare(const Type& a, const Type& b) {
  if (&a == &b) return 0;
  if (int c = cmp3(a.kind, b.kind)) return c;
  switch (a.kind) {
    case Type::Kind::int_:
    case Type::Kind::unit:
    case Type::Kind::never:
      return 0;
    case Type::Kind::perm:
      if (int c = cmp3(a.perm_index, b.perm_index)) return c;
      return type_compare(*a.inner, *b.inner);
    case Type::Kind::option:
      return type_compare(*a.inner, *b.inner);
    case Type::Kind::named:
      return cmp3(a.name, b.name);
    case Type::Kind::fn: {
      const FnSig& x = *a.fn;
      const FnSig& y = *b.fn;
      if (int c = cmp3(x.mode, y.mode)) return c;
      if (int c = cmp3(x.callability, y.callability)) return c;
      if (int c = cmp3(x.lifetime, y.lifetime)) return c;
      if (int c = cmp3(x.arg_mu, y.arg_mu)) return c;
      if (int c = type_compare(*x.arg, *y.arg)) return c;
      if (int c = cmp3(x.res_mu, y.res_mu)) return c;
      return type_compare(*x.res, *y.res);
    }
  }
  return 0;
}

bool type_eq(const Type& a, const Type& b) { return type_compare(a, b) == 0; }

Lifetime lifetime_of(const Type& t) {
  switch (t.kind) {
    case Type::Kind::fn:
      return t.fn->lifetime;
    case Type::Kind::option:
      return lifetime_of(*t.inner);
    default:
      return Lifetime::static_;
  }
}

// ---------------------------------------------------------------------------
// Expressions

namespace {
ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

Expr node(Expr::Kind k, std::vector<ExprPtr> args = {}) {
  Expr e{k};
  e.args = std::move(args);
  return e;
}
}  // namespace

ExprPtr Expr::var(std::string x) {
  Expr e = node(Kind::var);
  e.name = std::move(x);
  return make(std::move(e));
}
ExprPtr Expr::int_lit(BigInt i) {
  Expr e = node(Kind::int_lit);
  e.value = std::move(i);
  return make(std::move(e));
}
ExprPtr Expr::add(ExprPtr a, ExprPtr b) { return make(node(Kind::add, {std::move(a), std::move(b)})); }
ExprPtr Expr::unit() { return make(node(Kind::unit)); }
ExprPtr Expr::bottom() { return make(node(Kind::bottom)); }
ExprPtr Expr::default_(TypePtr t) {
  Expr e = node(Kind::default_);
  e.type = std::move(t);
  return make(std::move(e));
}
ExprPtr Expr::crash_never(ExprPtr e) { return make(node(Kind::crash_never, {std::move(e)})); }
ExprPtr Expr::hdata() { return make(node(Kind::hdata)); }
ExprPtr Expr::hread() { return make(node(Kind::hread)); }
ExprPtr Expr::hwrite(ExprPtr e) { return make(node(Kind::hwrite, {std::move(e)})); }
ExprPtr Expr::perm(std::int64_t i, ExprPtr v) {
  Expr e = node(Kind::perm, {std::move(v)});
  e.perm_index = i;
  return make(std::move(e));
}
ExprPtr Expr::pdata(ExprPtr e) { return make(node(Kind::pdata, {std::move(e)})); }
ExprPtr Expr::pread(std::int64_t i, ExprPtr p) {
  Expr e = node(Kind::pread, {std::move(p)});
  e.perm_index = i;
  return make(std::move(e));
}
ExprPtr Expr::pwrite(std::int64_t i, ExprPtr value, ExprPtr perm) {
  Expr e = node(Kind::pwrite, {std::move(value), std::move(perm)});
  e.perm_index = i;
  return make(std::move(e));
}
ExprPtr Expr::drop(ExprPtr e) { return make(node(Kind::drop, {std::move(e)})); }
ExprPtr Expr::copy(ExprPtr e) { return make(node(Kind::copy, {std::move(e)})); }
ExprPtr Expr::seq(ExprPtr a, ExprPtr b, std::optional<BorrowSet> borrow) {
  Expr e = node(Kind::seq, {std::move(a), std::move(b)});
  e.borrow = std::move(borrow);
  return make(std::move(e));
}
ExprPtr Expr::let(Mode m, std::string x, ExprPtr bound, ExprPtr body, std::optional<BorrowSet> borrow) {
  Expr e = node(Kind::let, {std::move(bound), std::move(body)});
  e.mode = m;
  e.name = std::move(x);
  e.borrow = std::move(borrow);
  return make(std::move(e));
}
ExprPtr Expr::none(TypePtr t) {
  Expr e = node(Kind::none);
  e.type = std::move(t);
  return make(std::move(e));
}
ExprPtr Expr::some(ExprPtr v, TypePtr t) {
  Expr e = node(Kind::some, {std::move(v)});
  e.type = std::move(t);
  return make(std::move(e));
}
ExprPtr Expr::if_some(std::string x, ExprPtr scrutinee, ExprPtr then_, ExprPtr else_) {
  Expr e = node(Kind::if_some, {std::move(scrutinee), std::move(then_), std::move(else_)});
  e.name = std::move(x);
  return make(std::move(e));
}
ExprPtr Expr::struct_(std::string s, std::vector<ExprPtr> fields) {
  Expr e = node(Kind::struct_, std::move(fields));
  e.name = std::move(s);
  return make(std::move(e));
}
ExprPtr Expr::let_struct(std::string s, std::vector<std::string> xs, ExprPtr bound, ExprPtr body) {
  Expr e = node(Kind::let_struct, {std::move(bound), std::move(body)});
  e.name = std::move(s);
  e.binders = std::move(xs);
  return make(std::move(e));
}
ExprPtr Expr::lambda_(Lambda l) {
  Expr e = node(Kind::lambda, {l.body});
  e.lambda = std::move(l);
  return make(std::move(e));
}
ExprPtr Expr::app(ExprPtr f, ExprPtr a) { return make(node(Kind::app, {std::move(f), std::move(a)})); }

ExprPtr with_child(const Expr& e, std::size_t index, ExprPtr child) {
  Expr copy = e;
  copy.args.at(index) = child;
  if (copy.kind == Expr::Kind::lambda) copy.lambda->body = std::move(child);
  return make(std::move(copy));
}

ExprPtr with_span(const Expr& e, Span span) {
  Expr copy = e;
  copy.span = span;
  return make(std::move(copy));
}

int expr_compare(const Expr& a, const Expr& b) {
  if (&a == &b) return 0;
  if (int c = cmp3(a.kind, b.kind)) return c;
  if (int c = cmp3(a.name, b.name)) return c;
  if (a.kind == Expr::Kind::int_lit) {
    if (int c = cmp(a.value, b.value)) return c < 0 ? -1 : 1;
  }
  if (int c = cmp3(a.perm_index, b.perm_index)) return c;
  if (a.kind == Expr::Kind::let) {
    if (int c = cmp3(a.mode, b.mode)) return c;
  }
  if (bool(a.type) != bool(b.type)) return a.type ? 1 : -1;
  if (a.type) {
    if (int c = type_compare(*a.type, *b.type)) return c;
  }
  if (int c = cmp3(a.binders, b.binders)) return c;
  if (bool(a.borrow) != bool(b.borrow)) return a.borrow ? 1 : -1;
  if (a.borrow) {
    if (int c = cmp3(a.borrow->vars, b.borrow->vars)) return c;
    if (int c = cmp3(a.borrow->perms, b.borrow->perms)) return c;
  }
  if (a.lambda) {
    const Lambda& x = *a.lambda;
    const Lambda& y = *b.lambda;
    if (int c = cmp3(x.mode, y.mode)) return c;
    if (int c = cmp3(x.callability, y.callability)) return c;
    if (int c = cmp3(x.lifetime, y.lifetime)) return c;
    if (int c = cmp3(x.param, y.param)) return c;
    if (int c = cmp3(x.param_mu, y.param_mu)) return c;
    if (int c = type_compare(*x.param_type, *y.param_type)) return c;
  }
  if (int c = cmp3(a.args.size(), b.args.size())) return c;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (int c = expr_compare(*a.args[i], *b.args[i])) return c;
  }
  return 0;
}

bool expr_eq(const Expr& a, const Expr& b) { return expr_compare(a, b) == 0; }

std::size_t expr_size(const Expr& e) {
  std::size_t n = 1;
  switch (e.kind) {
    case Expr::Kind::perm:
    case Expr::Kind::pread:
    case Expr::Kind::pwrite:
      n += 1;
      break;
    default:
      break;
  }
  for (const auto& c : e.args) n += expr_size(*c);
  return n;
}

bool is_value(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::int_lit:
    case Expr::Kind::unit:
    case Expr::Kind::bottom:
    case Expr::Kind::none:
    case Expr::Kind::lambda:
      return true;
    case Expr::Kind::perm:
    case Expr::Kind::some:
    case Expr::Kind::struct_:
      return std::all_of(e.args.begin(), e.args.end(), [](const ExprPtr& c) { return is_value(*c); });
    default:
      return false;
  }
}

namespace {
// Which children are under a binder for `x`: returns true if child `i` is shadowed.
bool shadows(const Expr& e, std::size_t i, const std::string& x) {
  switch (e.kind) {
    case Expr::Kind::let:
      return i == 1 && e.name == x;
    case Expr::Kind::if_some:
      return i == 1 && e.name == x;
    case Expr::Kind::let_struct:
      return i == 1 && std::find(e.binders.begin(), e.binders.end(), x) != e.binders.end();
    case Expr::Kind::lambda:
      return e.lambda->param == x;
    default:
      return false;
  }
}
}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::string& x, const ExprPtr& v) {
  if (e->kind == Expr::Kind::var) return e->name == x ? v : e;
  ExprPtr result = e;
  if (e->borrow && std::find(e->borrow->vars.begin(), e->borrow->vars.end(), x) != e->borrow->vars.end()) {
    Expr copy = *e;
    std::erase(copy.borrow->vars, x);
    result = std::make_shared<const Expr>(std::move(copy));
  }
  for (std::size_t i = 0; i < e->args.size(); ++i) {
    if (shadows(*e, i, x)) continue;
    ExprPtr child = substitute(e->args[i], x, v);
    if (child != e->args[i]) result = with_child(*result, i, std::move(child));
  }
  return result;
}

bool occurs_free(const Expr& e, const std::string& x) {
  if (e.kind == Expr::Kind::var) return e.name == x;
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (shadows(e, i, x)) continue;
    if (occurs_free(*e.args[i], x)) return true;
  }
  return false;
}

bool mentions_perm(const Expr& e, std::int64_t i) {
  if (e.kind == Expr::Kind::perm && e.perm_index == i) return true;
  return std::any_of(e.args.begin(), e.args.end(), [i](const ExprPtr& c) { return mentions_perm(*c, i); });
}

const DatatypeDecl* DeclTable::find(const std::string& name) const {
  for (const auto& d : decls_)
    if (d.name == name) return &d;
  return nullptr;
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::exec:
      return "exec";
    case Mode::proof:
      return "proof";
    case Mode::spec:
      return "spec";
  }
  return "?";
}
const char* to_string(Usage u) { return u == Usage::linear ? "linear" : "shared"; }
const char* to_string(Callability c) { return c == Callability::once ? "once" : "many"; }
const char* to_string(Lifetime l) { return l == Lifetime::static_ ? "static" : "restricted"; }
std::string to_string(ModeUsage mu) {
  if (mu.is_spec()) return "spec";
  return std::string("(") + to_string(mu.mode()) + " " + to_string(*mu.usage()) + ")";
}

}  // namespace mv::calc
