#include "lipstick/pigparse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace lipstick::pig {

std::string_view to_string(AggOp op) {
  switch (op) {
    case AggOp::Sum: return "SUM";
    case AggOp::Count: return "COUNT";
    case AggOp::Min: return "MIN";
    case AggOp::Max: return "MAX";
  }
  return "?";
}

namespace {

// --- lexer -------------------------------------------------------------------

enum class Tok { Ident, Positional, Int, Float, String, Punct, End };

struct Token {
  Tok type = Tok::End;
  std::string text;  // identifier / punctuation / decoded string / number text
  int line = 1;
  int column = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
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
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (true) {
        while (j < src.size() && ident_char(src[j])) ++j;
        if (j + 2 < src.size() && src[j] == ':' && src[j + 1] == ':' && ident_start(src[j + 2])) {
          j += 2;
          continue;
        }
        break;
      }
      t.type = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '$') {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j == i + 1) throw ParseError("expected digits after '$'", line, col);
      t.type = Tok::Positional;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      bool is_float = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        is_float = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          is_float = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.type = is_float ? Tok::Float : Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '\'') {
      std::size_t j = i + 1;
      std::string value;
      while (true) {
        if (j >= src.size() || src[j] == '\n') throw ParseError("unterminated string literal", line, col);
        if (src[j] == '\'') break;
        if (src[j] == '\\' && j + 1 < src.size()) {
          char e = src[j + 1];
          value += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          j += 2;
          continue;
        }
        value += src[j++];
      }
      t.type = Tok::String;
      t.text = std::move(value);
      advance(j + 1 - i);
    } else {
      static constexpr std::string_view two[] = {"==", "!=", "<=", ">="};
      t.type = Tok::Punct;
      std::string_view rest = src.substr(i);
      bool matched = false;
      for (auto op : two) {
        if (rest.substr(0, 2) == op) {
          t.text = std::string(op);
          matched = true;
        }
      }
      if (!matched) {
        if (std::string_view("=;,().<>").find(c) == std::string_view::npos) {
          throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
         });
}

std::optional<AggOp> agg_from(std::string_view s) {
  if (iequals(s, "SUM")) return AggOp::Sum;
  if (iequals(s, "COUNT")) return AggOp::Count;
  if (iequals(s, "MIN")) return AggOp::Min;
  if (iequals(s, "MAX")) return AggOp::Max;
  return std::nullopt;
}

// --- parser ----------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    while (peek().type != Tok::End) p.statements.push_back(statement());
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& what, const Token& at) const {
    std::string found = at.type == Tok::End ? "end of input" : "'" + at.text + "'";
    throw ParseError(what + ", found " + found, at.line, at.column);
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).type == Tok::Punct && peek(ahead).text == p;
  }
  bool is_keyword(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).type == Tok::Ident && iequals(peek(ahead).text, kw);
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'", peek());
    next();
  }
  void expect_keyword(std::string_view kw) {
    if (!is_keyword(kw)) fail("expected " + std::string(kw), peek());
    next();
  }
  std::string ident(const char* what) {
    if (peek().type != Tok::Ident) fail(std::string("expected ") + what, peek());
    return next().text;
  }

  Statement statement() {
    Statement s;
    s.line = peek().line;
    s.alias = ident("alias");
    if (s.alias.find("::") != std::string::npos) fail("alias may not be qualified", toks_[pos_ - 1]);
    expect_punct("=");
    const Token& kw = peek();
    if (kw.type != Tok::Ident) fail("expected an operator keyword", kw);
    if (is_keyword("FOREACH")) s.op = foreach_op();
    else if (is_keyword("FILTER")) s.op = filter_op();
    else if (is_keyword("JOIN")) s.op = join_op();
    else if (is_keyword("GROUP")) s.op = group_op();
    else if (is_keyword("COGROUP")) s.op = cogroup_op();
    else if (is_keyword("UNION")) s.op = union_op();
    else if (is_keyword("DISTINCT")) s.op = distinct_op();
    else if (is_keyword("ORDER")) s.op = order_op();
    else throw ParseError("unknown keyword '" + kw.text + "'", kw.line, kw.column);
    expect_punct(";");
    return s;
  }

  FieldRef field() {
    if (peek().type == Tok::Positional) return {"$" + next().text};
    if (peek().type == Tok::Ident) return {next().text};
    fail("expected a field reference", peek());
  }

  std::optional<Literal> literal() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::Int: next(); return Literal{parse_atom(t.text, AtomKind::Int)};
      case Tok::Float: next(); return Literal{parse_atom(t.text, AtomKind::Float)};
      case Tok::String: next(); return Literal{t.text};
      case Tok::Ident:
        if (iequals(t.text, "true") || iequals(t.text, "false")) {
          bool v = iequals(t.text, "true");
          next();
          return Literal{v};
        }
        return std::nullopt;
      default: return std::nullopt;
    }
  }

  Operand operand() {
    if (auto lit = literal()) return *lit;
    return field();
  }

  BBCall bb_call() {
    BBCall call;
    call.name = ident("function name");
    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        call.args.push_back(ident("argument"));
        if (!is_punct(",")) break;
        next();
      }
    }
    expect_punct(")");
    return call;
  }

  GenItem gen_item() {
    GenItem item;
    if (is_keyword("FLATTEN") && is_punct("(", 1)) {
      next();
      next();
      item.flatten = true;
      if (peek().type == Tok::Ident && is_punct("(", 1)) {
        item.expr = bb_call();
      } else {
        item.expr = field();
      }
      expect_punct(")");
    } else if (peek().type == Tok::Ident && is_punct("(", 1)) {
      if (auto op = agg_from(peek().text)) {
        next();
        next();
        AggCall call{*op, field(), std::nullopt};
        if (is_punct(".")) {
          next();
          call.attr = ident("attribute name");
        }
        expect_punct(")");
        item.expr = std::move(call);
      } else {
        item.expr = bb_call();
      }
    } else if (auto lit = literal()) {
      item.expr = *lit;
    } else {
      item.expr = field();
    }
    if (is_keyword("AS")) {
      next();
      item.alias = ident("name after AS");
    }
    return item;
  }

  Foreach foreach_op() {
    next();
    Foreach f;
    f.src = ident("relation alias");
    expect_keyword("GENERATE");
    while (true) {
      f.items.push_back(gen_item());
      if (!is_punct(",")) break;
      next();
    }
    if (is_keyword("BAG")) {
      next();
      f.bag_mode = true;
    }
    return f;
  }

  Comparison comparison() {
    Comparison c;
    c.lhs = operand();
    const Token& t = peek();
    static const std::pair<std::string_view, CmpOp> ops[] = {
        {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<", CmpOp::Lt},
        {"<=", CmpOp::Le}, {">", CmpOp::Gt},  {">=", CmpOp::Ge}};
    bool found = false;
    if (t.type == Tok::Punct) {
      for (auto [text, op] : ops) {
        if (t.text == text) {
          c.op = op;
          found = true;
        }
      }
    }
    if (!found) fail("expected a comparison operator", t);
    next();
    c.rhs = operand();
    return c;
  }

  Filter filter_op() {
    next();
    Filter f;
    f.src = ident("relation alias");
    expect_keyword("BY");
    f.cond.conjuncts.push_back(comparison());
    while (is_keyword("AND")) {
      next();
      f.cond.conjuncts.push_back(comparison());
    }
    return f;
  }

  std::pair<std::string, FieldRef> keyed_source() {
    std::string src = ident("relation alias");
    expect_keyword("BY");
    return {src, field()};
  }

  Join join_op() {
    next();
    Join j;
    std::tie(j.left, j.left_key) = keyed_source();
    expect_punct(",");
    std::tie(j.right, j.right_key) = keyed_source();
    return j;
  }

  Group group_op() {
    next();
    Group g;
    std::tie(g.src, g.key) = keyed_source();
    return g;
  }

  Cogroup cogroup_op() {
    next();
    Cogroup c;
    c.sources.push_back(keyed_source());
    while (is_punct(",")) {
      next();
      c.sources.push_back(keyed_source());
    }
    return c;
  }

  Union union_op() {
    next();
    Union u;
    u.sources.push_back(ident("relation alias"));
    while (is_punct(",")) {
      next();
      u.sources.push_back(ident("relation alias"));
    }
    return u;
  }

  Distinct distinct_op() {
    next();
    return {ident("relation alias")};
  }

  Order order_op() {
    next();
    Order o;
    std::tie(o.src, o.key) = keyed_source();
    if (is_keyword("DESC")) {
      next();
      o.descending = true;
    } else if (is_keyword("ASC")) {
      next();
    }
    return o;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// --- printer ------------------------------------------------------------------

std::string literal_text(const Atom& a) {
  switch (kind_of(a)) {
    case AtomKind::Text: {
      std::string out = "'";
      for (char c : std::get<std::string>(a)) {
        if (c == '\'' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        if (c == '\t') {
          out += "\\t";
          continue;
        }
        out += c;
      }
      return out + "'";
    }
    case AtomKind::Float: {
      std::string s = atom_to_string(a);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    default: return atom_to_string(a);
  }
}

std::string operand_text(const Operand& o) {
  if (const auto* f = std::get_if<FieldRef>(&o)) return f->text;
  return literal_text(std::get<Literal>(o).value);
}

std::string item_text(const GenItem& item) {
  std::string body = std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FieldRef>) {
          return e.text;
        } else if constexpr (std::is_same_v<T, Literal>) {
          return literal_text(e.value);
        } else if constexpr (std::is_same_v<T, AggCall>) {
          return std::string(to_string(e.op)) + "(" + e.bag.text + (e.attr ? "." + *e.attr : "") + ")";
        } else {
          std::string s = e.name + "(";
          for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + e.args[i];
          return s + ")";
        }
      },
      item.expr);
  if (item.flatten) body = "FLATTEN(" + body + ")";
  if (item.alias) body += " AS " + *item.alias;
  return body;
}

std::string_view cmp_text(CmpOp op) {
  static constexpr std::string_view t[] = {"==", "!=", "<", "<=", ">", ">="};
  return t[static_cast<int>(op)];
}

}  // namespace

Program parse(std::string_view text) { return Parser(lex(text)).program(); }

std::string pretty_print(const Statement& s) {
  std::string body = std::visit(
      [](const auto& op) -> std::string {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Foreach>) {
          std::string out = "FOREACH " + op.src + " GENERATE ";
          for (std::size_t i = 0; i < op.items.size(); ++i) out += (i ? ", " : "") + item_text(op.items[i]);
          return op.bag_mode ? out + " BAG" : out;
        } else if constexpr (std::is_same_v<T, Filter>) {
          std::string out = "FILTER " + op.src + " BY ";
          for (std::size_t i = 0; i < op.cond.conjuncts.size(); ++i) {
            const auto& c = op.cond.conjuncts[i];
            out += (i ? " AND " : "") + operand_text(c.lhs) + " " + std::string(cmp_text(c.op)) + " " +
                   operand_text(c.rhs);
          }
          return out;
        } else if constexpr (std::is_same_v<T, Join>) {
          return "JOIN " + op.left + " BY " + op.left_key.text + ", " + op.right + " BY " + op.right_key.text;
        } else if constexpr (std::is_same_v<T, Group>) {
          return "GROUP " + op.src + " BY " + op.key.text;
        } else if constexpr (std::is_same_v<T, Cogroup>) {
          std::string out = "COGROUP ";
          for (std::size_t i = 0; i < op.sources.size(); ++i) {
            out += (i ? ", " : "") + op.sources[i].first + " BY " + op.sources[i].second.text;
          }
          return out;
        } else if constexpr (std::is_same_v<T, Union>) {
          std::string out = "UNION ";
          for (std::size_t i = 0; i < op.sources.size(); ++i) out += (i ? ", " : "") + op.sources[i];
          return out;
        } else if constexpr (std::is_same_v<T, Distinct>) {
          return "DISTINCT " + op.src;
        } else {
          return "ORDER " + op.src + " BY " + op.key.text + (op.descending ? " DESC" : "");
        }
      },
      s.op);
  return s.alias + " = " + body + ";";
}

std::string pretty_print(const Program& p) {
  std::string out;
  for (const auto& s : p.statements) out += pretty_print(s) + "\n";
  return out;
}

// --- registry --------------------------------------------------------------------

void BBRegistry::add(BBSpec spec) {
  auto name = spec.name;
  specs_[name] = std::make_shared<const BBSpec>(std::move(spec));
}

const BBSpec* BBRegistry::find(const std::string& name) const {
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : it->second.get();
}

// --- resolution -------------------------------------------------------------------

std::size_t resolve_field(const Schema& schema, const FieldRef& ref) {
  const std::string& t = ref.text;
  if (!t.empty() && t[0] == '$') {
    std::size_t k = 0;
    auto [p, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), k);
    if (ec != std::errc{} || p != t.data() + t.size() || k >= schema.arity()) {
      throw TypeError("position " + t + " out of range for " + schema.to_string());
    }
    return k;
  }
  if (auto idx = schema.index_of(t)) return *idx;
  std::optional<std::size_t> found;
  const std::string suffix = "::" + t;
  for (std::size_t i = 0; i < schema.arity(); ++i) {
    const std::string& n = schema.attributes[i].name;
    if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (found) throw TypeError("field '" + t + "' is ambiguous in " + schema.to_string());
      found = i;
    }
  }
  if (!found) throw TypeError("unknown field '" + t + "' in " + schema.to_string());
  return *found;
}

namespace {

bool comparable(AtomKind a, AtomKind b) { return a == b || (is_numeric(a) && is_numeric(b)); }

class Checker {
 public:
  Checker(const std::map<std::string, Schema>& env, const BBRegistry& bbs) : bbs_(bbs) {
    out_.schemas = env;
  }

  CheckedProgram run(const Program& prog) {
    out_.program = prog;
    for (const auto& s : prog.statements) {
      try {
        StatementPlan plan = std::visit([&](const auto& op) { return check(op); }, s.op);
        plan.output.name = s.alias;
        bind(s.alias);
        out_.schemas[s.alias] = plan.output;
        out_.plans.push_back(std::move(plan));
      } catch (const TypeError& e) {
        throw TypeError("statement '" + s.alias + "' (line " + std::to_string(s.line) + "): " + e.what());
      }
    }
    return std::move(out_);
  }

 private:
  void bind(const std::string& alias) {
    if (defined_.count(alias)) throw TypeError("alias '" + alias + "' assigned more than once");
    defined_.insert(alias);
  }

  const Schema& source(const std::string& alias) const {
    auto it = out_.schemas.find(alias);
    if (it == out_.schemas.end()) throw TypeError("unresolved alias '" + alias + "'");
    return it->second;
  }

  static const Attribute& atom_attr(const Schema& s, std::size_t i, const char* role) {
    const Attribute& a = s.attributes[i];
    if (a.is_bag()) throw TypeError(std::string(role) + " '" + a.name + "' must be an atom, not a bag");
    return a;
  }

  static void add_attr(Schema& s, Attribute a) {
    if (s.index_of(a.name)) throw TypeError("duplicate field name '" + a.name + "' in output");
    s.attributes.push_back(std::move(a));
  }

  StatementPlan check(const Foreach& f) {
    const Schema& src = source(f.src);
    StatementPlan plan;
    plan.inputs = {f.src};
    plan.bag_mode = f.bag_mode;

    int n_agg = 0, n_bb = 0, n_flatten_field = 0;
    for (const auto& item : f.items) {
      if (std::holds_alternative<AggCall>(item.expr)) ++n_agg;
      if (std::holds_alternative<BBCall>(item.expr)) ++n_bb;
      if (item.flatten && std::holds_alternative<FieldRef>(item.expr)) ++n_flatten_field;
    }
    if (n_bb > 1) throw TypeError("at most one black-box call per FOREACH");
    if (n_flatten_field > 1) throw TypeError("at most one FLATTEN per FOREACH");
    if ((n_agg > 0) + (n_bb > 0) + (n_flatten_field > 0) > 1) {
      throw TypeError("FOREACH mixes aggregation, black-box calls and FLATTEN");
    }
    if (f.bag_mode && (n_agg || n_bb || n_flatten_field)) {
      throw TypeError("BAG modifier applies to projections only");
    }
    plan.foreach_kind = n_agg ? ForeachKind::Aggregate
                        : n_bb ? ForeachKind::BlackBox
                        : n_flatten_field ? ForeachKind::FlattenField
                                          : ForeachKind::Project;

    for (std::size_t pos = 0; pos < f.items.size(); ++pos) {
      const GenItem& item = f.items[pos];
      ItemPlan ip;
      ip.flatten = item.flatten;
      if (const auto* ref = std::get_if<FieldRef>(&item.expr)) {
        ip.kind = ItemPlan::Kind::Field;
        ip.field = resolve_field(src, *ref);
        const Attribute& a = src.attributes[ip.field];
        if (item.flatten) {
          if (!a.is_bag()) throw TypeError("FLATTEN needs a nested bag, '" + a.name + "' is an atom");
          if (item.alias) throw TypeError("FLATTEN of a field cannot be renamed");
          for (const auto& inner : a.nested().attributes) add_attr(plan.output, inner);
        } else {
          add_attr(plan.output, {item.alias.value_or(a.name), a.type});
        }
      } else if (const auto* lit = std::get_if<Literal>(&item.expr)) {
        ip.kind = ItemPlan::Kind::Literal;
        ip.literal = lit->value;
        add_attr(plan.output, {item.alias.value_or("col" + std::to_string(pos)), kind_of(lit->value)});
      } else if (const auto* agg = std::get_if<AggCall>(&item.expr)) {
        ip.kind = ItemPlan::Kind::Agg;
        ip.op = agg->op;
        ip.field = resolve_field(src, agg->bag);
        const Attribute& bag = src.attributes[ip.field];
        if (!bag.is_bag()) throw TypeError(std::string(to_string(agg->op)) + " needs a nested bag, '" + bag.name + "' is an atom");
        const Schema& inner = bag.nested();
        if (agg->attr) {
          ip.attr = resolve_field(inner, FieldRef{*agg->attr});
        } else if (agg->op != AggOp::Count) {
          if (inner.arity() != 1) {
            throw TypeError(std::string(to_string(agg->op)) + "(" + bag.name + ") needs an attribute");
          }
          ip.attr = 0;
        }
        AtomKind result = AtomKind::Int;
        if (agg->op != AggOp::Count) {
          const Attribute& a = inner.attributes[*ip.attr];
          if (a.is_bag() || !is_numeric(a.atom_kind())) {
            throw TypeError(std::string(to_string(agg->op)) + " over non-numeric field '" + a.name + "'");
          }
          result = a.atom_kind();
        } else if (ip.attr) {
          atom_attr(inner, *ip.attr, "COUNT attribute");
        }
        ip.result_kind = result;
        std::string name = std::string(to_string(agg->op));
        std::transform(name.begin(), name.end(), name.begin(), ::tolower);
        add_attr(plan.output, {item.alias.value_or(name), result});
      } else {
        const auto& call = std::get<BBCall>(item.expr);
        ip.kind = ItemPlan::Kind::BlackBox;
        ip.bb = bbs_.find(call.name);
        if (!ip.bb) throw TypeError("black box '" + call.name + "' is not registered");
        for (const auto& arg : call.args) {
          BBArgPlan ap;
          try {
            ap.field = resolve_field(src, FieldRef{arg});
          } catch (const TypeError&) {
            if (!out_.schemas.count(arg)) throw TypeError("unknown argument '" + arg + "' to " + call.name);
            ap.whole_relation = true;
            ap.relation = arg;
          }
          ip.args.push_back(std::move(ap));
        }
        if (item.flatten) {
          if (item.alias) throw TypeError("FLATTEN of a black box cannot be renamed");
          for (const auto& a : ip.bb->output.attributes) add_attr(plan.output, a);
        } else {
          add_attr(plan.output, {item.alias.value_or(call.name),
                                 std::make_shared<const Schema>(ip.bb->output)});
        }
      }
      plan.items.push_back(std::move(ip));
    }
    return plan;
  }

  OperandPlan operand(const Schema& s, const Operand& o, AtomKind& kind) {
    OperandPlan p;
    if (const auto* ref = std::get_if<FieldRef>(&o)) {
      p.is_field = true;
      p.field = resolve_field(s, *ref);
      kind = atom_attr(s, p.field, "comparison field").atom_kind();
    } else {
      p.literal = std::get<Literal>(o).value;
      kind = kind_of(p.literal);
    }
    return p;
  }

  StatementPlan check(const Filter& f) {
    const Schema& src = source(f.src);
    StatementPlan plan;
    plan.inputs = {f.src};
    for (const auto& c : f.cond.conjuncts) {
      AtomKind lk, rk;
      ComparisonPlan cp{operand(src, c.lhs, lk), c.op, operand(src, c.rhs, rk)};
      if (!comparable(lk, rk)) {
        throw TypeError("cannot compare " + std::string(to_string(lk)) + " with " + std::string(to_string(rk)));
      }
      plan.cond.push_back(std::move(cp));
    }
    plan.output = src;
    return plan;
  }

  StatementPlan check(const Join& j) {
    const Schema& l = source(j.left);
    const Schema& r = source(j.right);
    StatementPlan plan;
    plan.inputs = {j.left, j.right};
    std::size_t lk = resolve_field(l, j.left_key);
    std::size_t rk = resolve_field(r, j.right_key);
    AtomKind lkind = atom_attr(l, lk, "join key").atom_kind();
    AtomKind rkind = atom_attr(r, rk, "join key").atom_kind();
    if (lkind != rkind) {
      throw TypeError("join key kinds differ: " + std::string(to_string(lkind)) + " vs " +
                      std::string(to_string(rkind)));
    }
    plan.keys = {lk, rk};
    std::map<std::string, int> uses;
    for (const auto& a : l.attributes) ++uses[a.name];
    for (const auto& a : r.attributes) ++uses[a.name];
    auto emit = [&](const Schema& s, const std::string& alias, std::size_t key) {
      for (std::size_t i = 0; i < s.arity(); ++i) {
        Attribute a = s.attributes[i];
        if (i == key || uses[a.name] > 1) a.name = alias + "::" + a.name;
        add_attr(plan.output, std::move(a));
      }
    };
    emit(l, j.left, lk);
    emit(r, j.right, rk);
    return plan;
  }

  StatementPlan grouped(const std::vector<std::pair<std::string, FieldRef>>& sources) {
    StatementPlan plan;
    std::optional<AtomKind> key_kind;
    std::set<std::string> seen;
    for (const auto& [alias, key] : sources) {
      const Schema& s = source(alias);
      if (!seen.insert(alias).second) throw TypeError("relation '" + alias + "' grouped twice");
      std::size_t k = resolve_field(s, key);
      AtomKind kind = atom_attr(s, k, "grouping key").atom_kind();
      if (key_kind && *key_kind != kind) throw TypeError("grouping key kinds differ across sources");
      key_kind = kind;
      plan.inputs.push_back(alias);
      plan.keys.push_back(k);
    }
    plan.output.attributes.push_back({"group", *key_kind});
    for (const auto& [alias, key] : sources) {
      Schema nested = source(alias);
      nested.name = alias;
      add_attr(plan.output, {alias, std::make_shared<const Schema>(std::move(nested))});
    }
    return plan;
  }

  StatementPlan check(const Group& g) { return grouped({{g.src, g.key}}); }

  StatementPlan check(const Cogroup& c) {
    if (c.sources.size() < 2) throw TypeError("COGROUP needs at least two sources");
    return grouped(c.sources);
  }

  StatementPlan check(const Union& u) {
    if (u.sources.size() < 2) throw TypeError("UNION needs at least two sources");
    StatementPlan plan;
    const Schema& first = source(u.sources[0]);
    for (const auto& alias : u.sources) {
      if (!same_shape(first, source(alias))) {
        throw TypeError("UNION schemas differ: " + first.to_string() + " vs " + source(alias).to_string());
      }
      plan.inputs.push_back(alias);
    }
    plan.output = first;
    return plan;
  }

  StatementPlan check(const Distinct& d) {
    StatementPlan plan;
    plan.inputs = {d.src};
    plan.output = source(d.src);
    return plan;
  }

  StatementPlan check(const Order& o) {
    StatementPlan plan;
    const Schema& s = source(o.src);
    plan.inputs = {o.src};
    plan.keys = {resolve_field(s, o.key)};
    atom_attr(s, plan.keys[0], "ORDER key");
    plan.descending = o.descending;
    plan.output = s;
    return plan;
  }

  const BBRegistry& bbs_;
  CheckedProgram out_;
  std::set<std::string> defined_;
};

}  // namespace

CheckedProgram resolve_and_typecheck(const Program& prog, const std::map<std::string, Schema>& env,
                                     const BBRegistry& bbs) {
  return Checker(env, bbs).run(prog);
}

}  // namespace lipstick::pig
