#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace mv::calc {

using BigInt = mpz_class;

// Ordered exec < proof < spec; the enumerator values encode the lattice.
enum class Mode : std::uint8_t { exec = 0, proof = 1, spec = 2 };
enum class Usage : std::uint8_t { linear, shared };
enum class Callability : std::uint8_t { once, many };
enum class Lifetime : std::uint8_t { static_, restricted };

bool mode_leq(Mode a, Mode b);
Mode mode_join(Mode a, Mode b);

/// Mode plus usage.  `spec` never carries a usage.
class ModeUsage {
public:
  ModeUsage() = default;  // spec
  static ModeUsage spec() { return ModeUsage{}; }
  static ModeUsage of(Mode m, Usage u);
  static ModeUsage linear(Mode m) { return of(m, Usage::linear); }
  static ModeUsage shared(Mode m) { return of(m, Usage::shared); }

  Mode mode() const { return mode_; }
  std::optional<Usage> usage() const { return usage_; }
  bool is_spec() const { return mode_ == Mode::spec; }
  bool is_linear() const { return usage_ == Usage::linear; }
  bool is_shared() const { return usage_ == Usage::shared; }

  /// All five mode-usages, in a fixed canonical order.
  static const std::vector<ModeUsage>& all();

  auto operator<=>(const ModeUsage&) const = default;

private:
  Mode mode_ = Mode::spec;
  std::optional<Usage> usage_;
};

ModeUsage join_mode_usage(Mode m, ModeUsage mu);

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct FnSig {
  Mode mode;
  Callability callability;
  Lifetime lifetime;
  ModeUsage arg_mu;
  TypePtr arg;
  ModeUsage res_mu;
  TypePtr res;
};

struct Type {
  enum class Kind : std::uint8_t { int_, unit, never, perm, option, named, fn };

  Kind kind;
  std::int64_t perm_index = 0;  // perm
  TypePtr inner;                // perm payload, option payload
  std::string name;             // named datatype
  std::optional<FnSig> fn;      // fn

  static TypePtr int_();
  static TypePtr unit();
  static TypePtr never();
  static TypePtr perm(std::int64_t index, TypePtr payload);
  static TypePtr option(TypePtr payload);
  static TypePtr named(std::string name);
  static TypePtr function(FnSig sig);
};

bool type_eq(const Type& a, const Type& b);
int type_compare(const Type& a, const Type& b);
inline bool type_eq(const TypePtr& a, const TypePtr& b) { return type_eq(*a, *b); }

struct TypeLess {
  bool operator()(const TypePtr& a, const TypePtr& b) const { return type_compare(*a, *b) < 0; }
};

Lifetime lifetime_of(const Type& t);

struct Span {
  int line = 0;
  int col = 0;
  auto operator<=>(const Span&) const = default;
};

/// Explicit borrow clause on `seq`/`let`, consumed by the algorithmic checker.
struct BorrowSet {
  std::vector<std::string> vars;
  std::vector<std::int64_t> perms;
  bool empty() const { return vars.empty() && perms.empty(); }
  bool operator==(const BorrowSet&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Lambda {
  Mode mode;
  Callability callability;
  Lifetime lifetime;
  std::string param;
  ModeUsage param_mu;
  TypePtr param_type;
  ExprPtr body;
};

struct Expr {
  enum class Kind : std::uint8_t {
    var,
    int_lit,
    add,
    unit,
    bottom,
    default_,
    crash_never,
    hdata,
    hread,
    hwrite,
    perm,
    pdata,
    pread,
    pwrite,
    drop,
    copy,
    seq,
    let,
    none,
    some,
    if_some,
    struct_,
    let_struct,
    lambda,
    app,
  };

  Kind kind;
  Span span;
  std::string name;               // var; let / if_some binder; struct name
  BigInt value;                   // int_lit
  std::int64_t perm_index = 0;    // perm, pread, pwrite
  Mode mode = Mode::exec;         // let annotation
  TypePtr type;                   // default, none, some
  std::vector<ExprPtr> args;      // children in evaluation order
  std::vector<std::string> binders;  // let_struct
  std::optional<BorrowSet> borrow;   // seq, let
  std::optional<Lambda> lambda;

  // Constructors.  Children are listed in left-to-right evaluation order.
  static ExprPtr var(std::string x);
  static ExprPtr int_lit(BigInt i);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr unit();
  static ExprPtr bottom();
  static ExprPtr default_(TypePtr t);
  static ExprPtr crash_never(ExprPtr e);
  static ExprPtr hdata();
  static ExprPtr hread();
  static ExprPtr hwrite(ExprPtr e);
  static ExprPtr perm(std::int64_t i, ExprPtr v);
  static ExprPtr pdata(ExprPtr e);
  static ExprPtr pread(std::int64_t i, ExprPtr e);
  static ExprPtr pwrite(std::int64_t i, ExprPtr value, ExprPtr perm);
  static ExprPtr drop(ExprPtr e);
  static ExprPtr copy(ExprPtr e);
  static ExprPtr seq(ExprPtr a, ExprPtr b, std::optional<BorrowSet> borrow = std::nullopt);
  static ExprPtr let(Mode m, std::string x, ExprPtr bound, ExprPtr body,
                     std::optional<BorrowSet> borrow = std::nullopt);
  static ExprPtr none(TypePtr t);
  static ExprPtr some(ExprPtr e, TypePtr t);
  static ExprPtr if_some(std::string x, ExprPtr scrutinee, ExprPtr then_, ExprPtr else_);
  static ExprPtr struct_(std::string s, std::vector<ExprPtr> fields);
  static ExprPtr let_struct(std::string s, std::vector<std::string> xs, ExprPtr bound, ExprPtr body);
  static ExprPtr lambda_(Lambda l);
  static ExprPtr app(ExprPtr f, ExprPtr a);
};

/// Copy of `e` with one child replaced.  Used by substitution and context plugging.
ExprPtr with_child(const Expr& e, std::size_t index, ExprPtr child);
ExprPtr with_span(const Expr& e, Span span);

bool expr_eq(const Expr& a, const Expr& b);
int expr_compare(const Expr& a, const Expr& b);
inline bool expr_eq(const ExprPtr& a, const ExprPtr& b) { return expr_eq(*a, *b); }

/// Node count; permission indices count as one node each.
std::size_t expr_size(const Expr& e);

bool is_value(const Expr& e);

/// Capture-avoiding substitution of a closed value for every free `x`.
ExprPtr substitute(const ExprPtr& e, const std::string& x, const ExprPtr& v);

bool occurs_free(const Expr& e, const std::string& x);
/// True when a permission literal for index `i` occurs anywhere in `e`.
bool mentions_perm(const Expr& e, std::int64_t i);

struct DatatypeDecl {
  std::string name;
  std::vector<std::pair<Mode, TypePtr>> fields;
};

class DeclTable {
public:
  DeclTable() = default;
  explicit DeclTable(std::vector<DatatypeDecl> decls) : decls_(std::move(decls)) {}

  const std::vector<DatatypeDecl>& decls() const { return decls_; }
  const DatatypeDecl* find(const std::string& name) const;
  void push(DatatypeDecl d) { decls_.push_back(std::move(d)); }
  bool empty() const { return decls_.empty(); }

private:
  std::vector<DatatypeDecl> decls_;
};

const char* to_string(Mode m);
const char* to_string(Usage u);
const char* to_string(Callability c);
const char* to_string(Lifetime l);
std::string to_string(ModeUsage mu);

}  // namespace mv::calc
