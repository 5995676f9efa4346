#include "stlgame/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <limits>
#include <unordered_map>

namespace stlgame::stl {

namespace {

enum class Tok {
  End,
  Ident,
  Number,
  KwTrue,
  KwF,
  KwG,
  KwU,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Amp,
  Pipe,
  Bang,
  Arrow,
  Ge,
  Le,
  Plus,
  Minus,
  Star,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double value = 0.0;  // for Number
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= s_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = s_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        bump();
      }
      t.text = s_.substr(start, pos_ - start);
      if (t.text == "true") {
        t.kind = Tok::KwTrue;
      } else if (t.text == "F") {
        t.kind = Tok::KwF;
      } else if (t.text == "G") {
        t.kind = Tok::KwG;
      } else if (t.text == "U") {
        t.kind = Tok::KwU;
      } else {
        t.kind = Tok::Ident;
      }
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < s_.size() &&
         std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) bump();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        bump();
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) bump();
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t mark = pos_;
        bump();
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) bump();
        if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) bump();
        } else {
          // Not an exponent after all, e.g. "3eps"; back out.
          rewind_to(mark);
        }
      }
      t.kind = Tok::Number;
      t.text = s_.substr(start, pos_ - start);
      t.value = std::strtod(t.text.c_str(), nullptr);
      return t;
    }
    switch (c) {
      case '(': bump(); t.kind = Tok::LParen; return t;
      case ')': bump(); t.kind = Tok::RParen; return t;
      case '[': bump(); t.kind = Tok::LBracket; return t;
      case ']': bump(); t.kind = Tok::RBracket; return t;
      case ',': bump(); t.kind = Tok::Comma; return t;
      case '&': bump(); t.kind = Tok::Amp; return t;
      case '|': bump(); t.kind = Tok::Pipe; return t;
      case '!': bump(); t.kind = Tok::Bang; return t;
      case '+': bump(); t.kind = Tok::Plus; return t;
      case '*': bump(); t.kind = Tok::Star; return t;
      case '-':
        bump();
        if (pos_ < s_.size() && s_[pos_] == '>') {
          bump();
          t.kind = Tok::Arrow;
        } else {
          t.kind = Tok::Minus;
        }
        return t;
      case '>':
        bump();
        if (pos_ < s_.size() && s_[pos_] == '=') {
          bump();
          t.kind = Tok::Ge;
          return t;
        }
        throw ParseError("expected '>=' (predicates are non-strict)", t.line, t.col);
      case '<':
        bump();
        if (pos_ < s_.size() && s_[pos_] == '=') {
          bump();
          t.kind = Tok::Le;
          return t;
        }
        throw ParseError("expected '<=' (predicates are non-strict)", t.line, t.col);
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.col);
    }
  }

 private:
  void bump() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void rewind_to(std::size_t mark) {
    // Only used within a single line (number literals cannot span lines).
    col_ -= static_cast<int>(pos_ - mark);
    pos_ = mark;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) bump();
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct LinExpr {
  Eigen::VectorXd coeffs;
  double constant = 0.0;
};

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& names)
      : lex_(text), dim_(static_cast<Eigen::Index>(names.size())) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (is_reserved_word(names[i])) {
        throw InputError("state name '" + names[i] + "' is a reserved word");
      }
      index_[names[i]] = static_cast<Eigen::Index>(i);
    }
    advance();
  }

  FormulaPtr run() {
    FormulaPtr f = parse_implies();
    if (cur_.kind != Tok::End) {
      throw ParseError("unexpected trailing input '" + describe(cur_) + "'", cur_.line,
                       cur_.col);
    }
    return f;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  bool accept(Tok k) {
    if (cur_.kind != k) return false;
    advance();
    return true;
  }

  void expect(Tok k, const char* what) {
    if (cur_.kind != k) {
      throw ParseError(std::string("expected ") + what + ", found '" + describe(cur_) + "'",
                       cur_.line, cur_.col);
    }
    advance();
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::Ident:
      case Tok::Number: return t.text;
      case Tok::KwTrue: return "true";
      case Tok::KwF: return "F";
      case Tok::KwG: return "G";
      case Tok::KwU: return "U";
      case Tok::LParen: return "(";
      case Tok::RParen: return ")";
      case Tok::LBracket: return "[";
      case Tok::RBracket: return "]";
      case Tok::Comma: return ",";
      case Tok::Amp: return "&";
      case Tok::Pipe: return "|";
      case Tok::Bang: return "!";
      case Tok::Arrow: return "->";
      case Tok::Ge: return ">=";
      case Tok::Le: return "<=";
      case Tok::Plus: return "+";
      case Tok::Minus: return "-";
      case Tok::Star: return "*";
    }
    return "?";
  }

  FormulaPtr parse_implies() {
    FormulaPtr lhs = parse_or();
    if (accept(Tok::Arrow)) {
      FormulaPtr rhs = parse_implies();
      std::vector<FormulaPtr> cs;
      cs.push_back(Formula::make_not(std::move(lhs)));
      cs.push_back(std::move(rhs));
      return Formula::make_or(std::move(cs));
    }
    return lhs;
  }

  FormulaPtr parse_or() {
    FormulaPtr first = parse_and();
    if (cur_.kind != Tok::Pipe) return first;
    std::vector<FormulaPtr> cs;
    cs.push_back(std::move(first));
    while (accept(Tok::Pipe)) cs.push_back(parse_and());
    return Formula::make_or(std::move(cs));
  }

  FormulaPtr parse_and() {
    FormulaPtr first = parse_until();
    if (cur_.kind != Tok::Amp) return first;
    std::vector<FormulaPtr> cs;
    cs.push_back(std::move(first));
    while (accept(Tok::Amp)) cs.push_back(parse_until());
    return Formula::make_and(std::move(cs));
  }

  FormulaPtr parse_until() {
    FormulaPtr lhs = parse_unary();
    if (cur_.kind == Tok::KwU) {
      Token op = cur_;
      advance();
      auto [a, b] = parse_interval(op);
      FormulaPtr rhs = parse_until();
      return Formula::make_until(std::move(lhs), std::move(rhs), a, b);
    }
    return lhs;
  }

  FormulaPtr parse_unary() {
    if (accept(Tok::Bang)) return Formula::make_not(parse_unary());
    if (cur_.kind == Tok::KwF || cur_.kind == Tok::KwG) {
      Token op = cur_;
      advance();
      auto [a, b] = parse_interval(op);
      FormulaPtr body = parse_unary();
      return op.kind == Tok::KwF ? Formula::make_eventually(std::move(body), a, b)
                                 : Formula::make_always(std::move(body), a, b);
    }
    return parse_primary();
  }

  FormulaPtr parse_primary() {
    if (accept(Tok::KwTrue)) return Formula::make_true();
    if (accept(Tok::LParen)) {
      FormulaPtr f = parse_implies();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (cur_.kind == Tok::Ident || cur_.kind == Tok::Number || cur_.kind == Tok::Minus ||
        cur_.kind == Tok::Plus) {
      return parse_atom();
    }
    throw ParseError("expected a formula, found '" + describe(cur_) + "'", cur_.line, cur_.col);
  }

  std::pair<int, int> parse_interval(const Token& op) {
    expect(Tok::LBracket, "'[' after temporal operator");
    int a = parse_bound();
    expect(Tok::Comma, "','");
    int b = parse_bound();
    expect(Tok::RBracket, "']'");
    if (a > b) {
      throw ParseError("interval [" + std::to_string(a) + "," + std::to_string(b) +
                           "] has lower bound above upper bound",
                       op.line, op.col);
    }
    return {a, b};
  }

  int parse_bound() {
    if (cur_.kind != Tok::Number) {
      throw ParseError("expected an integer time bound, found '" + describe(cur_) + "'",
                       cur_.line, cur_.col);
    }
    Token t = cur_;
    advance();
    double v = t.value;
    if (v != static_cast<double>(static_cast<long long>(v)) || v < 0.0 ||
        v > static_cast<double>(std::numeric_limits<int>::max())) {
      throw ParseError("time bound '" + t.text + "' is not a nonnegative integer", t.line,
                       t.col);
    }
    return static_cast<int>(v);
  }

  FormulaPtr parse_atom() {
    Token start = cur_;
    LinExpr lhs = parse_linexpr();
    bool ge;
    if (accept(Tok::Ge)) {
      ge = true;
    } else if (accept(Tok::Le)) {
      ge = false;
    } else {
      throw ParseError("expected '>=' or '<=' in predicate, found '" + describe(cur_) + "'",
                       cur_.line, cur_.col);
    }
    LinExpr rhs = parse_linexpr();
    Eigen::VectorXd c = lhs.coeffs - rhs.coeffs;
    double k = lhs.constant - rhs.constant;
    if (!ge) {
      c = -c;
      k = -k;
    }
    bool any = false;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (c[i] != 0.0) any = true;
    }
    if (!any) {
      throw ParseError("predicate mentions no state variable", start.line, start.col);
    }
    return Formula::make_pred(Predicate(std::move(c), k));
  }

  LinExpr parse_linexpr() {
    LinExpr e;
    e.coeffs = Eigen::VectorXd::Zero(dim_);
    double sign = 1.0;
    if (accept(Tok::Minus)) {
      sign = -1.0;
    } else {
      accept(Tok::Plus);
    }
    parse_term(e, sign);
    for (;;) {
      if (accept(Tok::Plus)) {
        parse_term(e, 1.0);
      } else if (accept(Tok::Minus)) {
        parse_term(e, -1.0);
      } else {
        return e;
      }
    }
  }

  void parse_term(LinExpr& e, double sign) {
    if (cur_.kind == Tok::Number) {
      double v = cur_.value;
      advance();
      if (accept(Tok::Star)) {
        e.coeffs[expect_var()] += sign * v;
      } else {
        e.constant += sign * v;
      }
      return;
    }
    if (cur_.kind == Tok::Ident) {
      e.coeffs[expect_var()] += sign;
      return;
    }
    throw ParseError("expected a number or variable, found '" + describe(cur_) + "'",
                     cur_.line, cur_.col);
  }

  Eigen::Index expect_var() {
    if (cur_.kind != Tok::Ident) {
      throw ParseError("expected a variable name, found '" + describe(cur_) + "'", cur_.line,
                       cur_.col);
    }
    auto it = index_.find(cur_.text);
    if (it == index_.end()) {
      throw ParseError("unknown variable '" + cur_.text + "'", cur_.line, cur_.col);
    }
    advance();
    return it->second;
  }

  Lexer lex_;
  Token cur_;
  Eigen::Index dim_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

}  // namespace

FormulaPtr parse_formula(const std::string& text, const std::vector<std::string>& names) {
  return Parser(text, names).run();
}

bool is_reserved_word(const std::string& word) {
  return word == "true" || word == "F" || word == "G" || word == "U";
}

}  // namespace stlgame::stl
