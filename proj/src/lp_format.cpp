#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stlgame/milp.hpp"
#include "stlgame/numfmt.hpp"

namespace stlgame::milp {

namespace {

bool printable_name(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':' || c == '+' ||
        c == '-' || c == '*' || c == '<' || c == '>' || c == '=' || c == '\\') {
      return false;
    }
  }
  return true;
}

void write_terms(std::ostream& out, const std::vector<LinTerm>& terms,
                 const MilpModel& model, double constant) {
  bool first = true;
  for (const LinTerm& t : terms) {
    double c = t.coeff;
    if (first) {
      if (c < 0) out << "- ";
      first = false;
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    out << format_double(std::abs(c)) << ' ' << model.variable(t.var).name;
  }
  if (constant != 0.0 || terms.empty()) {
    if (!first) out << (constant < 0 ? " - " : " + ");
    else if (constant < 0) out << "- ";
    out << format_double(std::abs(constant));
  }
}

}  // namespace

void write_lp(std::ostream& out, const MilpModel& model) {
  out << (model.objective_sense() == ObjSense::Maximize ? "Maximize\n" : "Minimize\n");
  LinExpr obj;
  for (int j = 0; j < model.num_variables(); ++j) {
    double c = model.objective_coeffs()[static_cast<std::size_t>(j)];
    if (c != 0.0) obj.add(VarId{j}, c);
  }
  out << " obj: ";
  write_terms(out, obj.terms(), model, model.objective_offset());
  out << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const LinConstraint& c = model.constraints()[static_cast<std::size_t>(i)];
    std::string label = printable_name(c.name) ? c.name : "c" + std::to_string(i);
    out << ' ' << label << ": ";
    write_terms(out, c.terms, model, 0.0);
    switch (c.sense) {
      case Sense::Le: out << " <= "; break;
      case Sense::Ge: out << " >= "; break;
      case Sense::Eq: out << " = "; break;
    }
    out << format_double(c.rhs) << '\n';
  }
  // LP default bounds are [0, +inf); write every variable explicitly so the
  // round trip is exact.
  out << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[static_cast<std::size_t>(j)];
    out << ' ';
    if (std::isinf(v.lower) && std::isinf(v.upper)) {
      out << v.name << " free";
    } else if (v.lower == v.upper) {
      out << v.name << " = " << format_double(v.lower);
    } else if (std::isinf(v.lower)) {
      out << "-infinity <= " << v.name << " <= " << format_double(v.upper);
    } else if (std::isinf(v.upper)) {
      out << v.name << " >= " << format_double(v.lower);
    } else {
      out << format_double(v.lower) << " <= " << v.name << " <= "
          << format_double(v.upper);
    }
    out << '\n';
  }
  bool any_binary = false;
  for (const Variable& v : model.variables()) {
    if (v.kind == VarKind::Binary) {
      if (!any_binary) out << "Binaries\n";
      any_binary = true;
      out << ' ' << v.name << '\n';
    }
  }
  out << "End\n";
}

namespace {

struct Tok {
  enum Kind { Ident, Number, Op, Eof } kind = Eof;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
  bool bol = false;  // first token on its line
};

class LpLexer {
 public:
  explicit LpLexer(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    src_ = ss.str();
    scan();
  }
  const std::vector<Tok>& tokens() const { return toks_; }

 private:
  void scan() {
    int line = 1, col = 1;
    bool bol = true;
    std::size_t i = 0;
    auto advance = [&](std::size_t k) {
      for (std::size_t q = 0; q < k; ++q) {
        if (src_[i + q] == '\n') {
          ++line;
          col = 1;
          bol = true;
        } else {
          ++col;
        }
      }
      i += k;
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '\\') {  // comment to end of line
        std::size_t j = src_.find('\n', i);
        advance((j == std::string::npos ? src_.size() : j) - i);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      Tok t;
      t.line = line;
      t.col = col;
      t.bol = bol;
      bol = false;
      if (c == '<' || c == '>') {
        t.kind = Tok::Op;
        t.text = std::string(1, c) + "=";  // '<' and '<=' are synonyms
        advance(i + 1 < src_.size() && src_[i + 1] == '=' ? 2 : 1);
      } else if (c == '=' || c == '+' || c == '-' || c == '*' || c == ':') {
        t.kind = Tok::Op;
        t.text = std::string(1, c);
        advance(1);
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t j = i;
        while (j < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) {
          ++j;
        }
        if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
          if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
            ++k;
            while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
              ++k;
            }
            j = k;
          }
        }
        t.kind = Tok::Number;
        t.text = src_.substr(i, j - i);
        try {
          t.num = std::stod(t.text);
        } catch (const std::exception&) {
          throw ParseError("bad number '" + t.text + "'", line, col);
        }
        advance(j - i);
      } else {
        std::size_t j = i;
        auto is_ident = [&](char ch) {
          return !std::isspace(static_cast<unsigned char>(ch)) && ch != ':' &&
                 ch != '+' && ch != '-' && ch != '*' && ch != '<' && ch != '>' &&
                 ch != '=' && ch != '\\';
        };
        while (j < src_.size() && is_ident(src_[j])) ++j;
        t.kind = Tok::Ident;
        t.text = src_.substr(i, j - i);
        advance(j - i);
      }
      toks_.push_back(std::move(t));
    }
    Tok eof;
    eof.kind = Tok::Eof;
    eof.line = line;
    eof.col = col;
    eof.bol = true;
    toks_.push_back(eof);
  }

  std::string src_;
  std::vector<Tok> toks_;
};

std::string lowered(const std::string& s) {
  std::string r = s;
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

class LpParser {
 public:
  explicit LpParser(std::istream& in) : lex_(in) {}

  MilpModel parse() {
    parse_objective();
    parse_constraints();
    // Optional trailing sections in any order until End.
    while (true) {
      const Tok& t = cur();
      if (t.kind == Tok::Eof) break;
      std::string kw = section_keyword();
      if (kw == "bounds") {
        parse_bounds();
      } else if (kw == "binaries" || kw == "binary" || kw == "bin") {
        ++pos_;
        parse_binaries();
      } else if (kw == "end") {
        break;
      } else {
        throw ParseError("expected a section keyword, found '" + t.text + "'",
                         t.line, t.col);
      }
    }
    return build();
  }

 private:
  struct VarDraft {
    std::string name;
    double lower = 0.0;
    double upper = kInfinity;
    bool lower_set = false;
    bool upper_set = false;
    bool binary = false;
  };
  struct ConDraft {
    std::string name;
    std::vector<std::pair<int, double>> terms;  // draft-var index, coeff
    Sense sense = Sense::Le;
    double rhs = 0.0;
  };

  const Tok& cur() const { return lex_.tokens()[pos_]; }
  const Tok& peek(int k = 1) const {
    std::size_t p = pos_ + static_cast<std::size_t>(k);
    return lex_.tokens()[std::min(p, lex_.tokens().size() - 1)];
  }

  std::string section_keyword() const {
    const Tok& t = cur();
    if (t.kind != Tok::Ident || !t.bol) return "";
    return lowered(t.text);
  }

  bool at_section_boundary() const {
    std::string kw = section_keyword();
    return kw == "subject" || kw == "such" || kw == "st" || kw == "s.t." ||
           kw == "bounds" || kw == "binaries" || kw == "binary" || kw == "bin" ||
           kw == "end" || kw == "general" || kw == "generals" || cur().kind == Tok::Eof;
  }

  int draft_var(const std::string& name) {
    auto it = var_index_.find(name);
    if (it != var_index_.end()) return it->second;
    int idx = static_cast<int>(vars_.size());
    VarDraft v;
    v.name = name;
    vars_.push_back(std::move(v));
    var_index_.emplace(name, idx);
    return idx;
  }

  bool at_row_label() const {
    return cur().kind == Tok::Ident && peek().kind == Tok::Op && peek().text == ":";
  }

  // expr := (sign? number? ('*'? ident)?)* — numbers without a following
  // identifier accumulate into the constant. Returns the number of atoms
  // (terms plus standalone constants) consumed so callers can reject an
  // empty expression.
  int parse_expr(std::vector<std::pair<int, double>>& terms, double& constant) {
    int atoms = 0;
    while (true) {
      // A label like "name:" belongs to the next row, not this expression.
      if (at_section_boundary() || at_row_label()) return atoms;
      const Tok& t = cur();
      if (t.kind == Tok::Op && (t.text == "<=" || t.text == ">=" || t.text == "=")) {
        return atoms;
      }
      double sign = 1.0;
      while (cur().kind == Tok::Op && (cur().text == "+" || cur().text == "-")) {
        if (cur().text == "-") sign = -sign;
        ++pos_;
      }
      double coeff = 1.0;
      bool saw_number = false;
      if (cur().kind == Tok::Number) {
        coeff = cur().num;
        saw_number = true;
        ++pos_;
        if (cur().kind == Tok::Op && cur().text == "*") ++pos_;
      }
      if (cur().kind == Tok::Ident && !at_section_boundary() && !at_row_label()) {
        terms.emplace_back(draft_var(cur().text), sign * coeff);
        ++pos_;
        ++atoms;
      } else if (saw_number) {
        // Trailing constant: also reached when the next token starts a new
        // labelled row, so the pending number still lands here.
        constant += sign * coeff;
        ++atoms;
      } else {
        const Tok& bad = cur();
        throw ParseError("expected a term, found '" + bad.text + "'", bad.line,
                         bad.col);
      }
    }
  }

  void parse_objective() {
    std::string kw = section_keyword();
    if (kw == "minimize" || kw == "minimise" || kw == "min") {
      maximize_ = false;
    } else if (kw == "maximize" || kw == "maximise" || kw == "max") {
      maximize_ = true;
    } else {
      throw ParseError("expected Minimize or Maximize", cur().line, cur().col);
    }
    ++pos_;
    if (cur().kind == Tok::Ident && peek().kind == Tok::Op && peek().text == ":") {
      pos_ += 2;  // objective label
    }
    parse_expr(obj_terms_, obj_constant_);
  }

  void parse_constraints() {
    std::string kw = section_keyword();
    if (kw == "subject" || kw == "such") {
      ++pos_;
      ++pos_;  // "to" / "that"
    } else if (kw == "st" || kw == "s.t.") {
      ++pos_;
    } else {
      throw ParseError("expected Subject To", cur().line, cur().col);
    }
    while (!at_section_boundary()) {
      ConDraft c;
      if (cur().kind == Tok::Ident && peek().kind == Tok::Op && peek().text == ":") {
        c.name = cur().text;
        pos_ += 2;
      }
      double lhs_const = 0.0;
      int lhs_atoms = parse_expr(c.terms, lhs_const);
      const Tok& op = cur();
      if (op.kind != Tok::Op ||
          (op.text != "<=" && op.text != ">=" && op.text != "=")) {
        throw ParseError("expected <=, >= or = in constraint", op.line, op.col);
      }
      if (lhs_atoms == 0) {
        throw ParseError("constraint has an empty left-hand side", op.line, op.col);
      }
      c.sense = op.text == "<=" ? Sense::Le : op.text == ">=" ? Sense::Ge : Sense::Eq;
      ++pos_;
      std::vector<std::pair<int, double>> rhs_terms;
      double rhs_const = 0.0;
      if (parse_expr(rhs_terms, rhs_const) == 0) {
        throw ParseError("constraint has an empty right-hand side", cur().line,
                         cur().col);
      }
      for (auto& [v, coeff] : rhs_terms) c.terms.emplace_back(v, -coeff);
      c.rhs = rhs_const - lhs_const;
      cons_.push_back(std::move(c));
    }
  }

  // Bound value: optional sign, then a number or an infinity word.
  double parse_bound_value() {
    double sign = 1.0;
    while (cur().kind == Tok::Op && (cur().text == "+" || cur().text == "-")) {
      if (cur().text == "-") sign = -sign;
      ++pos_;
    }
    if (cur().kind == Tok::Number) {
      double v = cur().num;
      ++pos_;
      return sign * v;
    }
    std::string w = lowered(cur().text);
    if (cur().kind == Tok::Ident && (w == "inf" || w == "infinity")) {
      ++pos_;
      return sign * kInfinity;
    }
    throw ParseError("expected a bound value, found '" + cur().text + "'",
                     cur().line, cur().col);
  }

  bool starts_with_value() const {
    if (cur().kind == Tok::Number) return true;
    if (cur().kind == Tok::Op && (cur().text == "+" || cur().text == "-")) return true;
    std::string w = cur().kind == Tok::Ident ? lowered(cur().text) : "";
    return w == "inf" || w == "infinity";
  }

  void parse_bounds() {
    ++pos_;  // "Bounds"
    while (!at_section_boundary()) {
      if (starts_with_value()) {
        // value <= name [<= value]
        double l = parse_bound_value();
        if (!(cur().kind == Tok::Op && cur().text == "<=")) {
          throw ParseError("expected <= after bound value", cur().line, cur().col);
        }
        ++pos_;
        if (cur().kind != Tok::Ident) {
          throw ParseError("expected a variable name in bounds", cur().line, cur().col);
        }
        VarDraft& v = vars_[static_cast<std::size_t>(draft_var(cur().text))];
        ++pos_;
        v.lower = l;
        v.lower_set = true;
        if (cur().kind == Tok::Op && cur().text == "<=") {
          ++pos_;
          v.upper = parse_bound_value();
          v.upper_set = true;
        }
        continue;
      }
      if (cur().kind != Tok::Ident) {
        throw ParseError("expected a bounds line", cur().line, cur().col);
      }
      VarDraft& v = vars_[static_cast<std::size_t>(draft_var(cur().text))];
      ++pos_;
      if (cur().kind == Tok::Ident && lowered(cur().text) == "free") {
        v.lower = -kInfinity;
        v.upper = kInfinity;
        v.lower_set = v.upper_set = true;
        ++pos_;
        continue;
      }
      const Tok& op = cur();
      if (op.kind != Tok::Op || (op.text != "<=" && op.text != ">=" && op.text != "=")) {
        throw ParseError("expected a bound relation", op.line, op.col);
      }
      ++pos_;
      double val = parse_bound_value();
      if (op.text == "<=") {
        v.upper = val;
        v.upper_set = true;
      } else if (op.text == ">=") {
        v.lower = val;
        v.lower_set = true;
      } else {
        v.lower = v.upper = val;
        v.lower_set = v.upper_set = true;
      }
    }
  }

  void parse_binaries() {
    while (!at_section_boundary()) {
      if (cur().kind != Tok::Ident) {
        throw ParseError("expected a variable name in Binaries", cur().line, cur().col);
      }
      vars_[static_cast<std::size_t>(draft_var(cur().text))].binary = true;
      ++pos_;
    }
  }

  MilpModel build() {
    MilpModel model;
    std::vector<VarId> ids;
    ids.reserve(vars_.size());
    for (VarDraft& v : vars_) {
      if (v.binary) {
        // Binaries default to [0,1]; explicit bounds may only tighten.
        if (!v.lower_set || v.lower < 0.0) v.lower = 0.0;
        if (!v.upper_set || v.upper > 1.0) v.upper = 1.0;
        ids.push_back(model.add_variable(VarKind::Binary, v.lower, v.upper, v.name));
      } else {
        ids.push_back(model.add_variable(VarKind::Continuous, v.lower, v.upper, v.name));
      }
    }
    for (const ConDraft& c : cons_) {
      LinExpr e;
      for (const auto& [v, coeff] : c.terms) e.add(ids[static_cast<std::size_t>(v)], coeff);
      model.add_constraint(e, c.sense, c.rhs, c.name);
    }
    LinExpr obj;
    obj.set_constant(obj_constant_);
    for (const auto& [v, coeff] : obj_terms_) obj.add(ids[static_cast<std::size_t>(v)], coeff);
    model.set_objective(maximize_ ? ObjSense::Maximize : ObjSense::Minimize, obj);
    return model;
  }

  LpLexer lex_;
  std::size_t pos_ = 0;
  bool maximize_ = false;
  std::vector<std::pair<int, double>> obj_terms_;
  double obj_constant_ = 0.0;
  std::vector<VarDraft> vars_;
  std::map<std::string, int> var_index_;
  std::vector<ConDraft> cons_;
};

}  // namespace

MilpModel parse_lp(std::istream& in) { return LpParser(in).parse(); }

}  // namespace stlgame::milp
