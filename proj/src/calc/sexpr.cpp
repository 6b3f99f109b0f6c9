#include "mv/calc/sexpr.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace mv::calc {

namespace {

const std::set<std::string, std::less<>> kReserved = {
    "unit",  "bot",     "int",    "Unit",   "Never",      "spec",  "proof",    "exec",   "linear",
    "shared", "once",   "many",   "static", "restricted", "perm",  "Option",   "Fn",     "default",
    "crash_never", "hdata", "hread", "hwrite", "pdata", "pread", "pwrite", "drop", "copy", "seq",
    "let",   "none",    "some",   "if_some", "struct",    "let_struct", "lambda", "app",  "borrow"};

class Reader {
public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SNode> read_all() {
    std::vector<SNode> out;
    skip();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip();
    }
    return out;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  Span here() const { return Span{line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SNode read() {
    SNode n;
    n.span = here();
    char c = text_[pos_];
    if (c == '(') {
      n.is_list = true;
      advance();
      skip();
      while (true) {
        if (pos_ >= text_.size()) throw ParseError(n.span, "unterminated list");
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        n.items.push_back(read());
        skip();
      }
      return n;
    }
    if (c == ')') throw ParseError(n.span, "unexpected ')'");
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
      n.atom.push_back(d);
      advance();
    }
    return n;
  }
};

bool is_integer_atom(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool is_identifier_atom(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')) return false;
  return true;
}

const std::string& head(const SNode& n) {
  static const std::string empty;
  if (!n.is_list || n.items.empty() || n.items[0].is_list) return empty;
  return n.items[0].atom;
}

void expect_arity(const SNode& n, std::size_t k, const char* form) {
  if (n.items.size() != k)
    throw ParseError(n.span, std::string("'") + form + "' expects " + std::to_string(k - 1) + " argument(s)");
}

std::int64_t int_of(const SNode& n) {
  if (n.is_list || !is_integer_atom(n.atom)) throw ParseError(n.span, "expected an integer");
  try {
    return std::stoll(n.atom);
  } catch (const std::exception&) {
    throw ParseError(n.span, "integer out of range");
  }
}

std::string ident_of(const SNode& n) {
  if (n.is_list || !is_identifier_atom(n.atom) || kReserved.count(n.atom))
    throw ParseError(n.span, "expected an identifier");
  return n.atom;
}

Mode mode_of_atom(const SNode& n) {
  if (!n.is_list) {
    if (n.atom == "spec") return Mode::spec;
    if (n.atom == "proof") return Mode::proof;
    if (n.atom == "exec") return Mode::exec;
  }
  throw ParseError(n.span, "expected a mode (spec, proof, exec)");
}

Usage usage_of_atom(const SNode& n) {
  if (!n.is_list) {
    if (n.atom == "linear") return Usage::linear;
    if (n.atom == "shared") return Usage::shared;
  }
  throw ParseError(n.span, "expected a usage (linear, shared)");
}

Callability callability_of_atom(const SNode& n) {
  if (!n.is_list) {
    if (n.atom == "once") return Callability::once;
    if (n.atom == "many") return Callability::many;
  }
  throw ParseError(n.span, "expected a callability (once, many)");
}

Lifetime lifetime_of_atom(const SNode& n) {
  if (!n.is_list) {
    if (n.atom == "static") return Lifetime::static_;
    if (n.atom == "restricted") return Lifetime::restricted;
  }
  throw ParseError(n.span, "expected a lifetime (static, restricted)");
}

BorrowSet borrow_of(const SNode& n) {
  BorrowSet b;
  for (std::size_t i = 1; i < n.items.size(); ++i) {
    const SNode& item = n.items[i];
    if (!item.is_list && is_integer_atom(item.atom))
      b.perms.push_back(int_of(item));
    else
      b.vars.push_back(ident_of(item));
  }
  return b;
}

ExprPtr spanned(const ExprPtr& e, Span s) { return with_span(*e, s); }

}  // namespace

std::vector<SNode> read_sexprs(std::string_view text) { return Reader(text).read_all(); }

ModeUsage mode_usage_from_sexpr(const SNode& n) {
  if (!n.is_list && n.atom == "spec") return ModeUsage::spec();
  if (n.is_list && n.items.size() == 2) {
    Mode m = mode_of_atom(n.items[0]);
    if (m == Mode::spec) throw ParseError(n.span, "spec does not carry a usage");
    return ModeUsage::of(m, usage_of_atom(n.items[1]));
  }
  throw ParseError(n.span, "expected a mode-usage: spec, (proof u) or (exec u)");
}

TypePtr type_from_sexpr(const SNode& n) {
  if (!n.is_list) {
    if (n.atom == "int") return Type::int_();
    if (n.atom == "Unit") return Type::unit();
    if (n.atom == "Never") return Type::never();
    return Type::named(ident_of(n));
  }
  const std::string& h = head(n);
  if (h == "perm") {
    expect_arity(n, 3, "perm");
    return Type::perm(int_of(n.items[1]), type_from_sexpr(n.items[2]));
  }
  if (h == "Option") {
    expect_arity(n, 2, "Option");
    return Type::option(type_from_sexpr(n.items[1]));
  }
  if (h == "Fn") {
    expect_arity(n, 8, "Fn");
    FnSig sig{mode_of_atom(n.items[1]),
              callability_of_atom(n.items[2]),
              lifetime_of_atom(n.items[3]),
              mode_usage_from_sexpr(n.items[4]),
              type_from_sexpr(n.items[5]),
              mode_usage_from_sexpr(n.items[6]),
              type_from_sexpr(n.items[7])};
    return Type::function(std::move(sig));
  }
  throw ParseError(n.span, "unknown type form");
}

ExprPtr expr_from_sexpr(const SNode& n) {
  if (!n.is_list) {
    if (is_integer_atom(n.atom)) return spanned(Expr::int_lit(BigInt(n.atom)), n.span);
    if (n.atom == "unit") return spanned(Expr::unit(), n.span);
    if (n.atom == "bot") return spanned(Expr::bottom(), n.span);
    return spanned(Expr::var(ident_of(n)), n.span);
  }
  if (n.items.empty()) throw ParseError(n.span, "empty form");
  const std::string& h = head(n);
  auto sub = [&](std::size_t i) { return expr_from_sexpr(n.items.at(i)); };
  ExprPtr e;
  if (h == "+") {
    expect_arity(n, 3, "+");
    e = Expr::add(sub(1), sub(2));
  } else if (h == "default") {
    expect_arity(n, 2, "default");
    e = Expr::default_(type_from_sexpr(n.items[1]));
  } else if (h == "crash_never") {
    expect_arity(n, 2, "crash_never");
    e = Expr::crash_never(sub(1));
  } else if (h == "hdata") {
    expect_arity(n, 1, "hdata");
    e = Expr::hdata();
  } else if (h == "hread") {
    expect_arity(n, 1, "hread");
    e = Expr::hread();
  } else if (h == "hwrite") {
    expect_arity(n, 2, "hwrite");
    e = Expr::hwrite(sub(1));
  } else if (h == "perm") {
    expect_arity(n, 3, "perm");
    e = Expr::perm(int_of(n.items[1]), sub(2));
  } else if (h == "pdata") {
    expect_arity(n, 2, "pdata");
    e = Expr::pdata(sub(1));
  } else if (h == "pread") {
    expect_arity(n, 3, "pread");
    e = Expr::pread(int_of(n.items[1]), sub(2));
  } else if (h == "pwrite") {
    expect_arity(n, 4, "pwrite");
    e = Expr::pwrite(int_of(n.items[1]), sub(2), sub(3));
  } else if (h == "drop") {
    expect_arity(n, 2, "drop");
    e = Expr::drop(sub(1));
  } else if (h == "copy") {
    expect_arity(n, 2, "copy");
    e = Expr::copy(sub(1));
  } else if (h == "seq") {
    if (n.items.size() == 4 && head(n.items[1]) == "borrow")
      e = Expr::seq(sub(2), sub(3), borrow_of(n.items[1]));
    else {
      expect_arity(n, 3, "seq");
      e = Expr::seq(sub(1), sub(2));
    }
  } else if (h == "let") {
    if (n.items.size() == 6 && head(n.items[3]) == "borrow")
      e = Expr::let(mode_of_atom(n.items[1]), ident_of(n.items[2]), sub(4), sub(5), borrow_of(n.items[3]));
    else {
      expect_arity(n, 5, "let");
      e = Expr::let(mode_of_atom(n.items[1]), ident_of(n.items[2]), sub(3), sub(4));
    }
  } else if (h == "none") {
    expect_arity(n, 2, "none");
    e = Expr::none(type_from_sexpr(n.items[1]));
  } else if (h == "some") {
    expect_arity(n, 3, "some");
    e = Expr::some(sub(1), type_from_sexpr(n.items[2]));
  } else if (h == "if_some") {
    expect_arity(n, 5, "if_some");
    e = Expr::if_some(ident_of(n.items[1]), sub(2), sub(3), sub(4));
  } else if (h == "struct") {
    if (n.items.size() < 2) throw ParseError(n.span, "'struct' expects a datatype name");
    std::vector<ExprPtr> fields;
    for (std::size_t i = 2; i < n.items.size(); ++i) fields.push_back(sub(i));
    e = Expr::struct_(ident_of(n.items[1]), std::move(fields));
  } else if (h == "let_struct") {
    expect_arity(n, 5, "let_struct");
    if (!n.items[2].is_list) throw ParseError(n.items[2].span, "expected a binder list");
    std::vector<std::string> xs;
    for (const auto& b : n.items[2].items) xs.push_back(ident_of(b));
    e = Expr::let_struct(ident_of(n.items[1]), std::move(xs), sub(3), sub(4));
  } else if (h == "lambda") {
    expect_arity(n, 6, "lambda");
    const SNode& param = n.items[4];
    if (!param.is_list || param.items.size() != 3) throw ParseError(param.span, "expected (x mode-usage type)");
    Lambda l{mode_of_atom(n.items[1]),
             callability_of_atom(n.items[2]),
             lifetime_of_atom(n.items[3]),
             ident_of(param.items[0]),
             mode_usage_from_sexpr(param.items[1]),
             type_from_sexpr(param.items[2]),
             sub(5)};
    e = Expr::lambda_(std::move(l));
  } else if (h == "app") {
    expect_arity(n, 3, "app");
    e = Expr::app(sub(1), sub(2));
  } else {
    throw ParseError(n.span, "unknown expression form '" + h + "'");
  }
  return spanned(e, n.span);
}

namespace {
const SNode& single(const std::vector<SNode>& nodes) {
  if (nodes.size() != 1) throw ParseError(nodes.empty() ? Span{1, 1} : nodes[1].span, "expected exactly one form");
  return nodes[0];
}

void print_type(std::ostream& os, const Type& t);

void print_mu(std::ostream& os, ModeUsage mu) { os << to_string(mu); }

void print_type(std::ostream& os, const Type& t) {
  switch (t.kind) {
    case Type::Kind::int_:
      os << "int";
      return;
    case Type::Kind::unit:
      os << "Unit";
      return;
    case Type::Kind::never:
      os << "Never";
      return;
    case Type::Kind::perm:
      os << "(perm " << t.perm_index << " ";
      print_type(os, *t.inner);
      os << ")";
      return;
    case Type::Kind::option:
      os << "(Option ";
      print_type(os, *t.inner);
      os << ")";
      return;
    case Type::Kind::named:
      os << t.name;
      return;
    case Type::Kind::fn: {
      const FnSig& f = *t.fn;
      os << "(Fn " << to_string(f.mode) << " " << to_string(f.callability) << " " << to_string(f.lifetime) << " ";
      print_mu(os, f.arg_mu);
      os << " ";
      print_type(os, *f.arg);
      os << " ";
      print_mu(os, f.res_mu);
      os << " ";
      print_type(os, *f.res);
      os << ")";
      return;
    }
  }
}

void print_borrow(std::ostream& os, const BorrowSet& b) {
  os << "(borrow";
  for (const auto& v : b.vars) os << " " << v;
  for (auto i : b.perms) os << " " << i;
  os << ")";
}

void print_expr(std::ostream& os, const Expr& e) {
  auto kid = [&](std::size_t i) {
    os << " ";
    print_expr(os, *e.args[i]);
  };
  switch (e.kind) {
    case Expr::Kind::var:
      os << e.name;
      return;
    case Expr::Kind::int_lit:
      os << e.value.get_str();
      return;
    case Expr::Kind::unit:
      os << "unit";
      return;
    case Expr::Kind::bottom:
      os << "bot";
      return;
    case Expr::Kind::add:
      os << "(+";
      kid(0);
      kid(1);
      os << ")";
      return;
    case Expr::Kind::default_:
      os << "(default ";
      print_type(os, *e.type);
      os << ")";
      return;
    case Expr::Kind::crash_never:
      os << "(crash_never";
      kid(0);
      os << ")";
      return;
    case Expr::Kind::hdata:
      os << "(hdata)";
      return;
    case Expr::Kind::hread:
      os << "(hread)";
      return;
    case Expr::Kind::hwrite:
      os << "(hwrite";
      kid(0);
      os << ")";
      return;
    case Expr::Kind::perm:
      os << "(perm " << e.perm_index;
      kid(0);
      os << ")";
      return;
    case Expr::Kind::pdata:
      os << "(pdata";
      kid(0);
      os << ")";
      return;
    case Expr::Kind::pread:
      os << "(pread " << e.perm_index;
      kid(0);
      os << ")";
      return;
    case Expr::Kind::pwrite:
      os << "(pwrite " << e.perm_index;
      kid(0);
      kid(1);
      os << ")";
      return;
    case Expr::Kind::drop:
      os << "(drop";
      kid(0);
      os << ")";
      return;
    case Expr::Kind::copy:
      os << "(copy";
      kid(0);
      os << ")";
      return;
    case Expr::Kind::seq:
      os << "(seq";
      if (e.borrow) {
        os << " ";
        print_borrow(os, *e.borrow);
      }
      kid(0);
      kid(1);
      os << ")";
      return;
    case Expr::Kind::let:
      os << "(let " << to_string(e.mode) << " " << e.name;
      if (e.borrow) {
        os << " ";
        print_borrow(os, *e.borrow);
      }
      kid(0);
      kid(1);
      os << ")";
      return;
    case Expr::Kind::none:
      os << "(none ";
      print_type(os, *e.type);
      os << ")";
      return;
    case Expr::Kind::some:
      os << "(some";
      kid(0);
      os << " ";
      print_type(os, *e.type);
      os << ")";
      return;
    case Expr::Kind::if_some:
      os << "(if_some " << e.name;
      kid(0);
      kid(1);
      kid(2);
      os << ")";
      return;
    case Expr::Kind::struct_:
      os << "(struct " << e.name;
      for (std::size_t i = 0; i < e.args.size(); ++i) kid(i);
      os << ")";
      return;
    case Expr::Kind::let_struct: {
      os << "(let_struct " << e.name << " (";
      for (std::size_t i = 0; i < e.binders.size(); ++i) os << (i ? " " : "") << e.binders[i];
      os << ")";
      kid(0);
      kid(1);
      os << ")";
      return;
    }
    case Expr::Kind::lambda: {
      const Lambda& l = *e.lambda;
      os << "(lambda " << to_string(l.mode) << " " << to_string(l.callability) << " " << to_string(l.lifetime)
         << " (" << l.param << " ";
      print_mu(os, l.param_mu);
      os << " ";
      print_type(os, *l.param_type);
      os << ") ";
      print_expr(os, *l.body);
      os << ")";
      return;
    }
    case Expr::Kind::app:
      os << "(app";
      kid(0);
      kid(1);
      os << ")";
      return;
  }
}
}  // namespace

ExprPtr parse_expr(std::string_view text) { return expr_from_sexpr(single(read_sexprs(text))); }
TypePtr parse_type(std::string_view text) { return type_from_sexpr(single(read_sexprs(text))); }

std::string print(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string print(const Type& t) {
  std::ostringstream os;
  print_type(os, t);
  return os.str();
}

CalcProgram parse_program(std::string_view text) {
  CalcProgram p;
  p.heap_type = Type::unit();
  p.heap_value = Expr::unit();
  for (const SNode& form : read_sexprs(text)) {
    const std::string& h = head(form);
    if (h == "struct") {
      if (form.items.size() < 2) throw ParseError(form.span, "'struct' expects a name");
      DatatypeDecl d{ident_of(form.items[1]), {}};
      for (std::size_t i = 2; i < form.items.size(); ++i) {
        const SNode& f = form.items[i];
        if (!f.is_list || f.items.size() != 2) throw ParseError(f.span, "expected a field (mode type)");
        d.fields.emplace_back(mode_of_atom(f.items[0]), type_from_sexpr(f.items[1]));
      }
      p.decls.push(std::move(d));
    } else if (h == "heap") {
      expect_arity(form, 3, "heap");
      p.heap_type = type_from_sexpr(form.items[1]);
      p.heap_value = expr_from_sexpr(form.items[2]);
    } else if (h == "perms") {
      for (std::size_t i = 1; i < form.items.size(); ++i) {
        const SNode& f = form.items[i];
        if (!f.is_list || f.items.size() != 2) throw ParseError(f.span, "expected (index usage)");
        auto idx = int_of(f.items[0]);
        if (p.perms.count(idx)) throw ParseError(f.span, "duplicate permission index");
        p.perms[idx] = usage_of_atom(f.items[1]);
      }
    } else if (h == "access") {
      expect_arity(form, 2, "access");
      p.access = mode_of_atom(form.items[1]);
    } else if (h == "expect") {
      expect_arity(form, 3, "expect");
      p.expect.emplace(mode_usage_from_sexpr(form.items[1]), type_from_sexpr(form.items[2]));
    } else if (h == "main") {
      expect_arity(form, 2, "main");
      if (p.main) throw ParseError(form.span, "duplicate 'main'");
      p.main = expr_from_sexpr(form.items[1]);
    } else {
      throw ParseError(form.span, "unknown top-level form");
    }
  }
  if (!p.main) throw ParseError(Span{1, 1}, "missing (main ...) form");
  return p;
}

std::string print_program(const CalcProgram& p) {
  std::ostringstream os;
  for (const auto& d : p.decls.decls()) {
    os << "(struct " << d.name;
    for (const auto& [m, t] : d.fields) os << " (" << to_string(m) << " " << print(*t) << ")";
    os << ")\n";
  }
  os << "(heap " << print(*p.heap_type) << " " << print(*p.heap_value) << ")\n";
  if (!p.perms.empty()) {
    os << "(perms";
    for (const auto& [i, u] : p.perms) os << " (" << i << " " << to_string(u) << ")";
    os << ")\n";
  }
  os << "(access " << to_string(p.access) << ")\n";
  if (p.expect) os << "(expect " << to_string(p.expect->first) << " " << print(*p.expect->second) << ")\n";
  os << "(main " << print(*p.main) << ")\n";
  return os.str();
}

}  // namespace mv::calc
