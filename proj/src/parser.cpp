#include "hypersmc/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "hypersmc/error.hpp"
#include "hypersmc/semantics.hpp"

namespace hypersmc {
namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

struct Location {
  std::size_t line, column;
};

Location locate(std::string_view text, std::size_t offset) {
  Location loc{1, 1};
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      ++loc.column;
    }
  }
  return loc;
}

[[noreturn]] void hard_error(std::string_view text, std::size_t offset, const std::string& msg) {
  auto loc = locate(text, offset);
  throw ParseError(msg, loc.line, loc.column);
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && is_digit(i + 1))) {
      bool integral = true;
      while (is_digit(i)) ++i;
      if (i < s.size() && s[i] == '.') {
        integral = false;
        ++i;
        while (is_digit(i)) ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E') &&
          (is_digit(i + 1) || ((i + 1 < s.size()) && (s[i + 1] == '-' || s[i + 1] == '+') && is_digit(i + 2)))) {
        integral = false;
        i += 2;
        while (is_digit(i)) ++i;
      }
      // `a/b` written without spaces is a rational literal.
      if (integral && i < s.size() && s[i] == '/' && is_digit(i + 1)) {
        ++i;
        while (is_digit(i)) ++i;
      }
      out.push_back({Tok::Number, std::string(s.substr(start, i - start)), start});
      continue;
    }
    static const std::pair<std::string_view, std::string_view> utf8[] = {
        {"\xE2\x89\x88", "~"}, {"\xC2\xAC", "!"}, {"\xE2\x88\xA7", "&"}, {"\xE2\x88\xA8", "|"},
        {"\xE2\x89\xA4", "<="}, {"\xE2\x89\xA5", ">="}, {"\xE2\x87\x92", "=>"}};
    bool matched = false;
    for (auto [bytes, sym] : utf8) {
      if (s.substr(i, bytes.size()) == bytes) {
        out.push_back({Tok::Sym, std::string(sym), start});
        i += bytes.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static const std::string_view two[] = {"<=", ">=", "=>"};
    for (auto sym : two) {
      if (s.substr(i, 2) == sym) {
        out.push_back({Tok::Sym, std::string(sym), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static const std::string_view one = "()[],@!&|~+-*/^<>=";
    if (one.find(c) != std::string_view::npos) {
      out.push_back({Tok::Sym, std::string(1, c), start});
      ++i;
      continue;
    }
    hard_error(s, start, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

struct Fail {
  std::size_t pos;
  std::string msg;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), toks_(lex(text)) {}

  FormulaPtr run() {
    try {
      auto f = implication();
      if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
      return f;
    } catch (const Fail&) {
      hard_error(text_, toks_[best_.pos].offset, best_.msg);
    }
  }

 private:
  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Fail best_{0, "syntax error"};
  std::vector<PathVar> scope_;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<TermPtr, std::size_t>> term_memo_;
  std::set<std::pair<std::size_t, std::size_t>> term_fail_;

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Sym && peek(ahead).text == s;
  }
  bool is_ident(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == s;
  }
  bool accept(std::string_view s) {
    if (!is_sym(s)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(std::string msg) {
    Fail f{pos_, std::move(msg)};
    if (f.pos >= best_.pos) best_ = f;
    throw f;
  }

  void expect(std::string_view s) {
    if (!accept(s)) fail("expected '" + std::string(s) + "'" + (peek().kind == Tok::End ? " at end of input" : ""));
  }

  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    return toks_[pos_++].text;
  }

  std::size_t integer(const char* what) {
    const auto& t = peek();
    if (t.kind != Tok::Number || !std::all_of(t.text.begin(), t.text.end(), ::isdigit) || t.text.size() > 9)
      fail(std::string("expected ") + what);
    ++pos_;
    return static_cast<std::size_t>(std::stoul(t.text));
  }

  Rational number() {
    const auto& t = peek();
    if (t.kind != Tok::Number) fail("expected a number");
    ++pos_;
    try {
      return parse_probability(t.text);
    } catch (const Error& e) {
      hard_error(text_, t.offset, e.what());
    }
  }

  std::optional<std::size_t> bound() {
    if (!accept("<=")) return std::nullopt;
    return integer("a step bound");
  }

  // ---- path formulas ----

  FormulaPtr implication() {
    auto lhs = disjunction();
    if (accept("=>")) return implies(lhs, implication());
    return lhs;
  }

  FormulaPtr disjunction() {
    auto lhs = conjunction();
    while (accept("|")) lhs = disj(lhs, conjunction());
    return lhs;
  }

  FormulaPtr conjunction() {
    auto lhs = until_level();
    while (accept("&")) lhs = conj(lhs, until_level());
    return lhs;
  }

  FormulaPtr until_level() {
    auto lhs = unary();
    if (is_ident("U") && !is_sym("@", 1)) {
      ++pos_;
      auto k = bound();
      return until(lhs, unary(), k);
    }
    return lhs;
  }

  FormulaPtr unary() {
    if (accept("!")) return negate(unary());
    if (peek().kind == Tok::Ident && !is_sym("@", 1)) {
      const auto& kw = peek().text;
      if (kw == "X") {
        ++pos_;
        std::size_t times = 1;
        if (accept("^")) {
          if (accept("(")) {
            times = integer("a repetition count");
            expect(")");
          } else {
            times = integer("a repetition count");
          }
        }
        return next(unary(), times);
      }
      if (kw == "F" || kw == "G") {
        const bool f = kw == "F";
        ++pos_;
        auto k = bound();
        auto body = unary();
        return f ? eventually(body, k) : globally(body, k);
      }
    }
    return primary();
  }

  FormulaPtr primary() {
    const std::size_t start = pos_;
    if (starts_term()) {
      try {
        return comparison();
      } catch (const Fail&) {
        pos_ = start;
      }
    }
    if (accept("(")) {
      auto f = implication();
      expect(")");
      while (accept("@")) f = assoc(f, ident("a path variable"));
      return f;
    }
    if (peek().kind == Tok::Ident) {
      if (is_ident("true") && !is_sym("@", 1)) {
        ++pos_;
        return truth();
      }
      if (is_ident("false") && !is_sym("@", 1)) {
        ++pos_;
        return negate(truth());
      }
      auto ap = ident("an atomic proposition");
      if (!accept("@")) fail("expected '@' after atomic proposition '" + ap + "'");
      return atom(ap, ident("a path variable"));
    }
    fail(peek().kind == Tok::End ? "unexpected end of input" : "unexpected '" + peek().text + "'");
  }

  bool starts_term() const {
    const auto& t = peek();
    if (t.kind == Tok::Number) return true;
    if (t.kind == Tok::Sym) return t.text == "(" || t.text == "-";
    if (t.kind == Tok::Ident) {
      if (t.text == "P") return is_sym("[", 1);
      if (t.text == "pow" || t.text == "exp" || t.text == "ln") return is_sym("(", 1);
    }
    return false;
  }

  std::optional<Relation> relation() {
    static const std::pair<std::string_view, Relation> rels[] = {{"<=", Relation::LessEq}, {">=", Relation::GreaterEq},
                                                                 {"<", Relation::Less},    {">", Relation::Greater},
                                                                 {"=", Relation::Equal}};
    for (auto [s, r] : rels)
      if (accept(s)) return r;
    return std::nullopt;
  }

  FormulaPtr comparison() {
    auto lhs = term();
    if (is_sym("~")) {
      // a ~[e] b ~[e] c : pairwise conjunction of neighbours
      FormulaPtr out;
      while (accept("~")) {
        expect("[");
        auto eps = number();
        expect("]");
        auto rhs = term();
        auto link = approx_equal(lhs, rhs, eps);
        out = out ? conj(out, link) : link;
        lhs = rhs;
      }
      return out;
    }
    auto rel = relation();
    if (!rel) fail("expected a comparison operator");
    return compare(lhs, *rel, term());
  }

  // ---- probability terms ----

  std::size_t scope_key() const {
    std::size_t h = scope_.size();
    for (const auto& v : scope_) h = h * 131 + std::hash<std::string>{}(v);
    return h;
  }

  TermPtr term() {
    const auto key = std::make_pair(pos_, scope_key());
    if (auto it = term_memo_.find(key); it != term_memo_.end()) {
      pos_ = it->second.second;
      return it->second.first;
    }
    if (term_fail_.count(key)) fail("expected a probability term");
    try {
      auto t = additive();
      term_memo_[key] = {t, pos_};
      return t;
    } catch (const Fail&) {
      term_fail_.insert(key);
      throw;
    }
  }

  TermPtr additive() {
    auto lhs = multiplicative();
    for (;;) {
      if (accept("+"))
        lhs = func(FuncOp::Add, {lhs, multiplicative()});
      else if (accept("-"))
        lhs = func(FuncOp::Sub, {lhs, multiplicative()});
      else
        return lhs;
    }
  }

  TermPtr multiplicative() {
    auto lhs = signed_term();
    for (;;) {
      if (accept("*"))
        lhs = func(FuncOp::Mul, {lhs, signed_term()});
      else if (accept("/"))
        lhs = func(FuncOp::Div, {lhs, signed_term()});
      else
        return lhs;
    }
  }

  TermPtr signed_term() {
    if (accept("-")) return func(FuncOp::Sub, {constant(0), signed_term()});
    return primary_term();
  }

  TermPtr primary_term() {
    const auto& t = peek();
    if (t.kind == Tok::Number) return constant(number());
    if (accept("(")) {
      auto inner = term();
      expect(")");
      return inner;
    }
    if (t.kind == Tok::Ident && is_sym("[", 1) && t.text == "P") return probability();
    if (t.kind == Tok::Ident && is_sym("(", 1)) {
      const std::size_t at = t.offset;
      const std::string name = t.text;
      FuncOp op;
      std::size_t arity;
      if (name == "pow") {
        op = FuncOp::Pow;
        arity = 2;
      } else if (name == "exp") {
        op = FuncOp::Exp;
        arity = 1;
      } else if (name == "ln") {
        op = FuncOp::Ln;
        arity = 1;
      } else {
        fail("unknown function '" + name + "'");
      }
      pos_ += 2;
      std::vector<TermPtr> args{term()};
      while (accept(",")) args.push_back(term());
      expect(")");
      if (args.size() != arity)
        hard_error(text_, at, "'" + name + "' takes " + std::to_string(arity) + " argument(s)");
      return func(op, std::move(args));
    }
    fail("expected a probability term");
  }

  TermPtr probability() {
    const std::size_t at = peek().offset;
    pos_ += 2;
    std::vector<PathVar> vars;
    do {
      const std::size_t var_at = peek().offset;
      auto v = ident("a path variable");
      if (std::find(vars.begin(), vars.end(), v) != vars.end())
        hard_error(text_, var_at, "path variable '" + v + "' repeated in the same tuple");
      if (std::find(scope_.begin(), scope_.end(), v) != scope_.end())
        hard_error(text_, var_at, "path variable '" + v + "' is not fresh: already quantified by an enclosing P");
      vars.push_back(v);
    } while (accept(","));
    expect("]");
    expect("(");
    const std::size_t body_start = pos_;
    scope_.insert(scope_.end(), vars.begin(), vars.end());
    auto pop = [&] { scope_.resize(scope_.size() - vars.size()); };
    FormulaPtr body;
    try {
      body = implication();
      expect(")");
    } catch (const Fail& f) {
      // Distinguish a bare probability term from an ordinary syntax error.
      pos_ = body_start;
      bool bare_term = false;
      try {
        term();
        bare_term = is_sym(")");
      } catch (const Fail&) {
      }
      pop();
      if (bare_term) hard_error(text_, at, "the body of P[...] must be a path formula, not a probability term");
      throw f;
    } catch (...) {
      pop();
      throw;
    }
    pop();
    return prob(std::move(vars), std::move(body));
  }
};

}  // namespace

FormulaPtr parse_formula(std::string_view text) { return Parser(text).run(); }

FormulaPtr parse_closed_formula(std::string_view text) {
  auto f = parse_formula(text);
  auto fv = free_vars(*f);
  if (!fv.empty()) {
    std::string names;
    for (const auto& v : fv) names += (names.empty() ? "" : ", ") + v;
    throw ParseError("formula must be closed but has free path variable(s): " + names, 1, 1);
  }
  return f;
}

}  // namespace hypersmc
