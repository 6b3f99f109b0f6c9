#include <cctype>
#include <set>
#include <sstream>

#include "mv/surface/ast.hpp"

namespace mv::surface {

SyntaxError::SyntaxError(Span s, const std::string& msg)
    : std::runtime_error(std::to_string(s.line) + ":" + std::to_string(s.col) + ": " + msg), span(s) {}

std::string to_string(const Type& t) {
  switch (t.kind) {
    case Type::Kind::bool_: return "bool";
    case Type::Kind::int_: return "int";
    case Type::Kind::nat: return "nat";
    case Type::Kind::uint: return "u" + std::to_string(t.bits);
    case Type::Kind::named: return t.name;
    case Type::Kind::unit: return "()";
  }
  return "?";
}

BigInt max_value(int bits) {
  BigInt one = 1;
  return (one << bits) - 1;
}

const Param* Function::param(const std::string& n) const {
  for (const auto& p : params)
    if (p.name == n) return &p;
  return nullptr;
}

const Function* Program::find(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

const StructDecl* Program::find_struct(const std::string& name) const {
  for (const auto& s : structs)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

struct Token {
  enum class Kind { ident, number, punct, end };
  Kind kind;
  std::string text;
  Span span;
};

std::vector<Token> lex(std::string_view src) {
  static const char* puncts[] = {"::", "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]",
                                 ",",  ";",  ":",  ".",  "&",  "*",  "+",  "-",  "/", "%", "<", ">", "!", "=",
                                 "|",  "#"};
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      Span at{line, col};
      auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw SyntaxError(at, "unterminated comment");
      advance(end + 2 - i);
      continue;
    }
    Span at{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Token::Kind::ident, std::string(src.substr(i, j - i)), at});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      std::string digits;
      bool hex = src.substr(i, 2) == "0x";
      if (hex) j += 2;
      while (j < src.size() && (std::isxdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        if (!hex && !std::isdigit(static_cast<unsigned char>(src[j])) && src[j] != '_') break;
        if (src[j] != '_') digits += src[j];
        ++j;
      }
      if (digits.empty()) throw SyntaxError(at, "malformed number");
      out.push_back({Token::Kind::number, hex ? BigInt(digits, 16).get_str() : BigInt(digits, 10).get_str(), at});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* p : puncts) {
      std::string_view pv(p);
      if (src.substr(i, pv.size()) == pv) {
        out.push_back({Token::Kind::punct, std::string(pv), at});
        advance(pv.size());
        matched = true;
        break;
      }
    }
    if (!matched) throw SyntaxError(at, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::Kind::end, "", {line, col}});
  return out;
}

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Program program() {
    Program p;
    while (!at_end()) {
      std::optional<Mode> mode;
      while (is("#")) {
        Span s = next().span;
        expect("[");
        Token a = ident();
        if (a.text == "spec") mode = Mode::spec;
        else if (a.text == "proof") mode = Mode::proof;
        else if (a.text == "exec") mode = Mode::exec;
        else throw SyntaxError(a.span, "unknown attribute '" + a.text + "'");
        expect("]");
        (void)s;
      }
      bool pub = accept("pub");
      if (is("struct")) {
        if (mode) throw SyntaxError(peek().span, "mode attribute on a struct");
        p.structs.push_back(struct_decl(pub));
      } else if (is("fn")) {
        p.functions.push_back(function(mode.value_or(Mode::exec), pub));
      } else {
        throw SyntaxError(peek().span, "expected 'fn' or 'struct', found '" + peek().text + "'");
      }
    }
    return p;
  }

private:
  std::vector<Token> t_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t k = 0) const { return t_[std::min(pos_ + k, t_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::end; }
  bool is(const char* s, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind != Token::Kind::end && t.kind != Token::Kind::number && t.text == s;
  }
  Token next() {
    Token t = peek();
    if (!at_end()) ++pos_;
    return t;
  }
  bool accept(const char* s) {
    if (!is(s)) return false;
    ++pos_;
    return true;
  }
  Token expect(const char* s) {
    if (!is(s)) throw SyntaxError(peek().span, std::string("expected '") + s + "', found '" + describe(peek()) + "'");
    return next();
  }
  static std::string describe(const Token& t) { return t.kind == Token::Kind::end ? "end of input" : t.text; }
  Token ident() {
    if (peek().kind != Token::Kind::ident) throw SyntaxError(peek().span, "expected identifier, found '" + describe(peek()) + "'");
    return next();
  }

  Type type() {
    Token t = ident();
    if (t.text == "bool") return Type::boolean();
    if (t.text == "int") return Type::integer();
    if (t.text == "nat") return Type::natural();
    for (int b : {8, 16, 32, 64})
      if (t.text == "u" + std::to_string(b)) return Type::unsigned_(b);
    return Type::named(t.text);
  }

  StructDecl struct_decl(bool pub) {
    StructDecl s;
    s.is_pub = pub;
    s.span = expect("struct").span;
    s.name = ident().text;
    expect("{");
    while (!is("}")) {
      accept("pub");
      std::string f = ident().text;
      expect(":");
      s.fields.emplace_back(f, type());
      if (!accept(",")) break;
    }
    expect("}");
    return s;
  }

  Function function(Mode mode, bool pub) {
    Function f;
    f.mode = mode;
    f.is_pub = pub;
    f.span = expect("fn").span;
    f.name = ident().text;
    expect("(");
    while (!is(")")) {
      Param p;
      Token n = ident();
      p.name = n.text;
      p.span = n.span;
      expect(":");
      if (accept("&")) p.passing = accept("mut") ? Passing::mut_ref : Passing::shared_ref;
      p.type = type();
      f.params.push_back(p);
      if (!accept(",")) break;
    }
    expect(")");
    if (accept("->")) f.ret = type();
    Span body_span = expect("{").span;
    while (true) {
      if (is("requires") && is("(", 1)) {
        next();
        expect("(");
        f.requires_ = expr_list();
        expect(")");
        expect(";");
      } else if (is("ensures") && is("(", 1)) {
        next();
        expect("(");
        if (accept("|")) {
          f.result_name = ident().text;
          expect(":");
          f.result_type = type();
          expect("|");
        }
        f.ensures = expr_list();
        expect(")");
        expect(";");
      } else if (is("decreases") && is("(", 1)) {
        next();
        expect("(");
        f.decreases = expr();
        expect(")");
        expect(";");
      } else {
        break;
      }
    }
    f.body = block_items(body_span);
    if (f.ret) lower_tail_if(f.body);
    return f;
  }

  /// A trailing if/else whose branches end in values yields the result.
  static void lower_tail_if(Block& b) {
    if (b.tail || b.stmts.empty() || b.stmts.back()->kind != Stmt::Kind::if_) return;
    Stmt& s = *b.stmts.back();
    if (!s.else_body) return;
    lower_branch(s.body);
    lower_branch(*s.else_body);
  }

  static void lower_branch(Block& b) {
    if (!b.tail) {
      lower_tail_if(b);
      return;
    }
    auto r = make(Stmt::Kind::return_, b.tail->span);
    r->expr = b.tail;
    b.tail = nullptr;
    b.stmts.push_back(r);
  }

  std::vector<ExprPtr> expr_list() {
    std::vector<ExprPtr> out;
    if (accept("[")) {
      while (!is("]")) {
        out.push_back(expr());
        if (!accept(",")) break;
      }
      expect("]");
    } else {
      out.push_back(expr());
    }
    return out;
  }

  Block block() {
    Span s = expect("{").span;
    return block_items(s);
  }

  /// Items up to and including the closing brace.
  Block block_items(Span open) {
    Block b;
    b.span = open;
    while (!accept("}")) {
      if (at_end()) throw SyntaxError(peek().span, "unclosed block");
      if (is("#") || is("let")) {
        b.stmts.push_back(let_stmt());
      } else if (is("while")) {
        b.stmts.push_back(while_stmt());
      } else if (is("assert") && is("(", 1)) {
        auto s = make(Stmt::Kind::assert_, next().span);
        expect("(");
        s->expr = expr();
        expect(")");
        expect(";");
        b.stmts.push_back(s);
      } else if (is("return")) {
        auto s = make(Stmt::Kind::return_, next().span);
        if (!is(";")) s->expr = expr();
        expect(";");
        b.stmts.push_back(s);
      } else if (is("reveal_with_fuel")) {
        auto s = make(Stmt::Kind::reveal, next().span);
        expect("(");
        s->name = ident().text;
        expect(",");
        Token n = next();
        if (n.kind != Token::Kind::number) throw SyntaxError(n.span, "expected a fuel amount");
        s->fuel = std::stol(n.text);
        expect(")");
        expect(";");
        b.stmts.push_back(s);
      } else if (is("if")) {
        auto s = if_stmt();
        if (is("}") && pure(*s)) {
          b.tail = to_expr(*s);
        } else {
          accept(";");
          b.stmts.push_back(s);
        }
      } else if (assignment_ahead()) {
        auto s = make(Stmt::Kind::assign, peek().span);
        s->deref = accept("*");
        s->name = ident().text;
        if (accept(".")) s->name += "." + ident().text;
        expect("=");
        s->expr = expr();
        expect(";");
        b.stmts.push_back(s);
      } else {
        Span at = peek().span;
        ExprPtr e = expr();
        if (accept(";")) {
          auto s = make(Stmt::Kind::expr, at);
          s->expr = e;
          b.stmts.push_back(s);
        } else if (is("}")) {
          b.tail = e;
        } else {
          throw SyntaxError(peek().span, "expected ';' or '}', found '" + describe(peek()) + "'");
        }
      }
    }
    return b;
  }

  static StmtPtr make(Stmt::Kind k, Span s) {
    auto st = std::make_shared<Stmt>();
    st->kind = k;
    st->span = s;
    return st;
  }

  bool assignment_ahead() const {
    std::size_t k = 0;
    if (is("*")) ++k;
    if (peek(k).kind != Token::Kind::ident) return false;
    ++k;
    if (is(".", k)) {
      if (peek(k + 1).kind != Token::Kind::ident) return false;
      k += 2;
    }
    return is("=", k);
  }

  StmtPtr let_stmt() {
    bool ghost = false;
    Span at = peek().span;
    while (is("#")) {
      next();
      expect("[");
      Token a = ident();
      if (a.text != "spec" && a.text != "proof") throw SyntaxError(a.span, "only #[spec] or #[proof] may mark a let");
      ghost = true;
      expect("]");
    }
    Span let_span = expect("let").span;
    auto s = make(Stmt::Kind::let_, ghost ? at : let_span);
    s->ghost = ghost;
    s->mut_ = accept("mut");
    s->name = ident().text;
    if (accept(":")) s->type = type();
    expect("=");
    s->expr = expr();
    expect(";");
    return s;
  }

  StmtPtr while_stmt() {
    auto s = make(Stmt::Kind::while_, expect("while").span);
    s->expr = expr(true);
    Span open = expect("{").span;
    if (is("invariant") && is("(", 1)) {
      next();
      expect("(");
      s->invariants = expr_list();
      expect(")");
      expect(";");
    }
    s->body = block_items(open);
    return s;
  }

  StmtPtr if_stmt() {
    auto s = make(Stmt::Kind::if_, expect("if").span);
    s->expr = expr(true);
    s->body = block();
    if (accept("else")) {
      if (is("if")) {
        Block b;
        b.span = peek().span;
        b.stmts.push_back(if_stmt());
        s->else_body = b;
      } else {
        s->else_body = block();
      }
    }
    return s;
  }

  /// An if-statement whose branches are bare expressions.
  static bool pure(const Stmt& s) {
    if (!s.body.stmts.empty() || !s.body.tail || !s.else_body) return false;
    const Block& e = *s.else_body;
    if (e.tail) return e.stmts.empty();
    return e.stmts.size() == 1 && e.stmts[0]->kind == Stmt::Kind::if_ && pure(*e.stmts[0]);
  }

  static ExprPtr to_expr(const Stmt& s) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::if_;
    e->span = s.span;
    const Block& el = *s.else_body;
    e->args = {s.expr, s.body.tail, el.tail ? el.tail : to_expr(*el.stmts[0])};
    return e;
  }

  static ExprPtr node(Expr::Kind k, Span s) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->span = s;
    return e;
  }

  ExprPtr binary(std::string op, ExprPtr l, ExprPtr r, Span s) {
    auto e = node(Expr::Kind::binary, s);
    e->op = std::move(op);
    e->args = {std::move(l), std::move(r)};
    return e;
  }

  ExprPtr expr(bool no_struct = false) {
    bool saved = no_struct_;
    no_struct_ = no_struct;
    ExprPtr e = or_expr();
    no_struct_ = saved;
    return e;
  }

  bool no_struct_ = false;

  ExprPtr or_expr() {
    ExprPtr l = and_expr();
    while (is("||")) {
      Span s = next().span;
      l = binary("||", l, and_expr(), s);
    }
    return l;
  }

  ExprPtr and_expr() {
    ExprPtr l = cmp_expr();
    while (is("&&")) {
      Span s = next().span;
      l = binary("&&", l, cmp_expr(), s);
    }
    return l;
  }

  ExprPtr cmp_expr() {
    ExprPtr l = add_expr();
    for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
      if (is(op)) {
        Span s = next().span;
        return binary(op, l, add_expr(), s);
      }
    }
    return l;
  }

  ExprPtr add_expr() {
    ExprPtr l = mul_expr();
    while (is("+") || is("-")) {
      Token t = next();
      l = binary(t.text, l, mul_expr(), t.span);
    }
    return l;
  }

  ExprPtr mul_expr() {
    ExprPtr l = cast_expr();
    while (is("*") || is("/") || is("%")) {
      Token t = next();
      l = binary(t.text, l, cast_expr(), t.span);
    }
    return l;
  }

  ExprPtr cast_expr() {
    ExprPtr e = unary_expr();
    while (is("as")) {
      Span s = next().span;
      auto c = node(Expr::Kind::cast, s);
      c->target = type();
      c->args = {e};
      e = c;
    }
    return e;
  }

  ExprPtr unary_expr() {
    if (is("!") || is("-")) {
      Token t = next();
      auto e = node(Expr::Kind::unary, t.span);
      e->op = t.text;
      e->args = {unary_expr()};
      return e;
    }
    if (is("*")) {
      Span s = next().span;
      auto e = node(Expr::Kind::deref, s);
      e->args = {unary_expr()};
      return e;
    }
    return postfix_expr();
  }

  ExprPtr postfix_expr() {
    ExprPtr e = primary();
    while (is(".")) {
      next();
      Token f = ident();
      auto fe = node(Expr::Kind::field, f.span);
      fe->name = f.text;
      fe->args = {e};
      e = fe;
    }
    return e;
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::number) {
      auto e = node(Expr::Kind::int_lit, t.span);
      e->value = BigInt(next().text);
      return e;
    }
    if (accept("(")) {
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    if (is("true") || is("false")) {
      auto e = node(Expr::Kind::bool_lit, t.span);
      e->flag = next().text == "true";
      return e;
    }
    if (is("if")) {
      Span s = next().span;
      auto e = node(Expr::Kind::if_, s);
      ExprPtr c = expr(true);
      expect("{");
      ExprPtr a = expr();
      expect("}");
      expect("else");
      ExprPtr b;
      if (is("if")) {
        b = primary();
      } else {
        expect("{");
        b = expr();
        expect("}");
      }
      e->args = {c, a, b};
      return e;
    }
    if (is("old") && is("(", 1)) {
      Span s = next().span;
      expect("(");
      auto e = node(Expr::Kind::old, s);
      e->name = ident().text;
      expect(")");
      return e;
    }
    Token id = ident();
    if (accept("::")) {
      Token m = ident();
      if (m.text != "MAX") throw SyntaxError(m.span, "only ::MAX constants are supported");
      for (int b : {8, 16, 32, 64}) {
        if (id.text == "u" + std::to_string(b)) {
          auto e = node(Expr::Kind::int_lit, id.span);
          e->value = max_value(b);
          return e;
        }
      }
      throw SyntaxError(id.span, "'" + id.text + "' has no MAX constant");
    }
    if (accept("(")) {
      auto e = node(Expr::Kind::call, id.span);
      e->name = id.text;
      while (!is(")")) {
        Passing p = Passing::value;
        Span at = peek().span;
        if (accept("&")) p = accept("mut") ? Passing::mut_ref : Passing::shared_ref;
        e->passing.push_back(p);
        e->args.push_back(expr());
        if (p != Passing::value) e->args.back()->span = at;
        if (!accept(",")) break;
      }
      expect(")");
      return e;
    }
    if (!no_struct_ && is("{") && std::isupper(static_cast<unsigned char>(id.text[0]))) {
      next();
      auto e = node(Expr::Kind::struct_lit, id.span);
      e->name = id.text;
      while (!is("}")) {
        e->fields.push_back(ident().text);
        expect(":");
        e->args.push_back(expr());
        if (!accept(",")) break;
      }
      expect("}");
      return e;
    }
    auto e = node(Expr::Kind::var, id.span);
    e->name = id.text;
    return e;
  }
};

int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::binary) {
    const std::string& o = e.op;
    if (o == "||") return 1;
    if (o == "&&") return 2;
    if (o == "==" || o == "!=" || o == "<" || o == "<=" || o == ">" || o == ">=") return 3;
    if (o == "+" || o == "-") return 4;
    return 5;
  }
  if (e.kind == Expr::Kind::cast) return 6;
  if (e.kind == Expr::Kind::unary || e.kind == Expr::Kind::deref) return 7;
  if (e.kind == Expr::Kind::if_) return 0;
  return 8;
}

void print_expr(std::ostream& os, const Expr& e);

void print_child(std::ostream& os, const Expr& c, int min_prec) {
  if (precedence(c) < min_prec) {
    os << "(";
    print_expr(os, c);
    os << ")";
  } else {
    print_expr(os, c);
  }
}

void print_expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::int_lit: os << e.value.get_str(); break;
    case Expr::Kind::bool_lit: os << (e.flag ? "true" : "false"); break;
    case Expr::Kind::var: os << e.name; break;
    case Expr::Kind::old: os << "old(" << e.name << ")"; break;
    case Expr::Kind::deref:
      os << "*";
      print_child(os, *e.args[0], 7);
      break;
    case Expr::Kind::unary:
      os << e.op;
      print_child(os, *e.args[0], 7);
      break;
    case Expr::Kind::binary: {
      int p = precedence(e);
      // Comparisons do not chain, and every operator here is left-associative.
      print_child(os, *e.args[0], p == 3 ? 4 : p);
      os << " " << e.op << " ";
      print_child(os, *e.args[1], p + 1);
      break;
    }
    case Expr::Kind::cast:
      print_child(os, *e.args[0], 6);
      os << " as " << to_string(e.target);
      break;
    case Expr::Kind::call:
      os << e.name << "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        if (e.passing[i] == Passing::mut_ref) os << "&mut ";
        if (e.passing[i] == Passing::shared_ref) os << "&";
        print_expr(os, *e.args[i]);
      }
      os << ")";
      break;
    case Expr::Kind::if_:
      os << "if ";
      print_expr(os, *e.args[0]);
      os << " { ";
      print_expr(os, *e.args[1]);
      os << " } else ";
      if (e.args[2]->kind == Expr::Kind::if_) {
        print_expr(os, *e.args[2]);
      } else {
        os << "{ ";
        print_expr(os, *e.args[2]);
        os << " }";
      }
      break;
    case Expr::Kind::field:
      print_child(os, *e.args[0], 8);
      os << "." << e.name;
      break;
    case Expr::Kind::struct_lit:
      os << e.name << " { ";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        os << e.fields[i] << ": ";
        print_expr(os, *e.args[i]);
      }
      os << " }";
      break;
  }
}

void print_list(std::ostream& os, const char* head, const std::vector<ExprPtr>& es, const std::string& ind) {
  os << ind << head << "(";
  if (es.size() == 1) {
    print_expr(os, *es[0]);
  } else {
    os << "[";
    for (std::size_t i = 0; i < es.size(); ++i) {
      if (i) os << ", ";
      print_expr(os, *es[i]);
    }
    os << "]";
  }
  os << ");\n";
}

void print_block(std::ostream& os, const Block& b, const std::string& ind);

void print_stmt(std::ostream& os, const Stmt& s, const std::string& ind) {
  switch (s.kind) {
    case Stmt::Kind::let_:
      os << ind << (s.ghost ? "#[spec] " : "") << "let " << (s.mut_ ? "mut " : "") << s.name;
      if (s.type) os << ": " << to_string(*s.type);
      os << " = ";
      print_expr(os, *s.expr);
      os << ";\n";
      break;
    case Stmt::Kind::assign:
      os << ind << (s.deref ? "*" : "") << s.name << " = ";
      print_expr(os, *s.expr);
      os << ";\n";
      break;
    case Stmt::Kind::while_:
      os << ind << "while ";
      print_expr(os, *s.expr);
      os << " {\n";
      if (!s.invariants.empty()) print_list(os, "invariant", s.invariants, ind + "    ");
      print_block(os, s.body, ind + "    ");
      os << ind << "}\n";
      break;
    case Stmt::Kind::assert_:
      os << ind << "assert(";
      print_expr(os, *s.expr);
      os << ");\n";
      break;
    case Stmt::Kind::return_:
      os << ind << "return";
      if (s.expr) {
        os << " ";
        print_expr(os, *s.expr);
      }
      os << ";\n";
      break;
    case Stmt::Kind::expr:
      os << ind;
      print_expr(os, *s.expr);
      os << ";\n";
      break;
    case Stmt::Kind::reveal:
      os << ind << "reveal_with_fuel(" << s.name << ", " << s.fuel << ");\n";
      break;
    case Stmt::Kind::if_: {
      os << ind << "if ";
      print_expr(os, *s.expr);
      os << " {\n";
      print_block(os, s.body, ind + "    ");
      os << ind << "}";
      if (s.else_body) {
        os << " else {\n";
        print_block(os, *s.else_body, ind + "    ");
        os << ind << "}";
      }
      os << "\n";
      break;
    }
  }
}

void print_block(std::ostream& os, const Block& b, const std::string& ind) {
  for (const auto& s : b.stmts) print_stmt(os, *s, ind);
  if (b.tail) {
    os << ind;
    print_expr(os, *b.tail);
    os << "\n";
  }
}

const char* mode_attr(Mode m) {
  switch (m) {
    case Mode::spec: return "#[spec] ";
    case Mode::proof: return "#[proof] ";
    case Mode::exec: return "";
  }
  return "";
}

}  // namespace

Program parse_surface(std::string_view text) { return Parser(lex(text)).program(); }

std::string print(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string print(const Program& p) {
  std::ostringstream os;
  bool first = true;
  for (const auto& s : p.structs) {
    if (!first) os << "\n";
    first = false;
    os << (s.is_pub ? "pub " : "") << "struct " << s.name << " {";
    for (std::size_t i = 0; i < s.fields.size(); ++i)
      os << (i ? ", " : " ") << s.fields[i].first << ": " << to_string(s.fields[i].second);
    os << " }\n";
  }
  for (const auto& f : p.functions) {
    if (!first) os << "\n";
    first = false;
    os << mode_attr(f.mode) << (f.is_pub ? "pub " : "") << "fn " << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      const Param& pa = f.params[i];
      if (i) os << ", ";
      os << pa.name << ": ";
      if (pa.passing == Passing::mut_ref) os << "&mut ";
      if (pa.passing == Passing::shared_ref) os << "&";
      os << to_string(pa.type);
    }
    os << ")";
    if (f.ret) os << " -> " << to_string(*f.ret);
    os << " {\n";
    const std::string ind = "    ";
    if (!f.requires_.empty()) print_list(os, "requires", f.requires_, ind);
    if (!f.ensures.empty()) {
      os << ind << "ensures(";
      if (!f.result_name.empty())
        os << "|" << f.result_name << ": " << to_string(f.result_type.value_or(f.ret.value_or(Type::unit()))) << "| ";
      if (f.ensures.size() == 1) {
        print_expr(os, *f.ensures[0]);
      } else {
        os << "[";
        for (std::size_t i = 0; i < f.ensures.size(); ++i) {
          if (i) os << ", ";
          print_expr(os, *f.ensures[i]);
        }
        os << "]";
      }
      os << ");\n";
    }
    if (f.decreases) {
      os << ind << "decreases(";
      print_expr(os, *f.decreases);
      os << ");\n";
    }
    print_block(os, f.body, ind);
    os << "}\n";
  }
  return os.str();
}

}  // namespace mv::surface
