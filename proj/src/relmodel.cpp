#include "lipstick/relmodel.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lipstick {

std::string_view to_string(AtomKind kind) {
  switch (kind) {
    case AtomKind::Int: return "int";
    case AtomKind::Float: return "float";
    case AtomKind::Text: return "text";
    case AtomKind::Bool: return "bool";
  }
  return "?";
}

AtomKind atom_kind_from_string(std::string_view text) {
  if (text == "int" || text == "long") return AtomKind::Int;
  if (text == "float" || text == "double") return AtomKind::Float;
  if (text == "text" || text == "chararray") return AtomKind::Text;
  if (text == "bool" || text == "boolean") return AtomKind::Bool;
  throw FormatError("unknown atom type '" + std::string(text) + "'");
}

bool is_numeric(AtomKind kind) { return kind == AtomKind::Int || kind == AtomKind::Float; }

std::string atom_to_string(const Atom& a) {
  switch (a.index()) {
    case 0: return std::to_string(std::get<0>(a));
    case 1: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, std::get<1>(a));
      return std::string(buf, res.ptr);
    }
    case 2: return std::get<2>(a);
    default: return std::get<3>(a) ? "true" : "false";
  }
}

Atom parse_atom(std::string_view text, AtomKind kind) {
  auto fail = [&] {
    return FormatError("cannot read '" + std::string(text) + "' as " + std::string(to_string(kind)));
  };
  switch (kind) {
    case AtomKind::Int: {
      std::int64_t v{};
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) throw fail();
      return v;
    }
    case AtomKind::Float: {
      double v{};
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) throw fail();
      return v;
    }
    case AtomKind::Text: return std::string(text);
    case AtomKind::Bool:
      if (text == "true") return true;
      if (text == "false") return false;
      throw fail();
  }
  throw fail();
}

std::strong_ordering compare_atoms(const Atom& a, const Atom& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  switch (a.index()) {
    case 0: return std::get<0>(a) <=> std::get<0>(b);
    case 1: {
      // Exact comparison; NaN is not a legal data value so weak_order is fine.
      double x = std::get<1>(a), y = std::get<1>(b);
      return x < y ? std::strong_ordering::less
                   : (y < x ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    case 2: return std::get<2>(a).compare(std::get<2>(b)) <=> 0;
    default: return std::get<3>(a) <=> std::get<3>(b);
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view attr) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == attr) return i;
  }
  return std::nullopt;
}

std::string Schema::to_string() const {
  std::string out = name + "(";
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (i) out += ", ";
    out += attributes[i].name + ":";
    if (attributes[i].is_bag()) {
      out += "{" + attributes[i].nested().to_string() + "}";
    } else {
      out += lipstick::to_string(attributes[i].atom_kind());
    }
  }
  return out + ")";
}

bool same_shape(const Schema& a, const Schema& b) {
  if (a.arity() != b.arity()) return false;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    const auto& x = a.attributes[i];
    const auto& y = b.attributes[i];
    if (x.is_bag() != y.is_bag()) return false;
    if (x.is_bag() ? !same_shape(x.nested(), y.nested()) : x.atom_kind() != y.atom_kind()) {
      return false;
    }
  }
  return true;
}

bool operator==(const Schema& a, const Schema& b) {
  if (a.name != b.name || a.arity() != b.arity()) return false;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    const auto& x = a.attributes[i];
    const auto& y = b.attributes[i];
    if (x.name != y.name || x.is_bag() != y.is_bag()) return false;
    if (x.is_bag() ? !(x.nested() == y.nested()) : x.atom_kind() != y.atom_kind()) return false;
  }
  return true;
}

Bag canonicalize(const Bag& bag) {
  Bag out;
  out.tuples.reserve(bag.tuples.size());
  for (const Tuple* t : canonical_order(bag)) {
    Tuple copy;
    copy.values.reserve(t->values.size());
    for (const auto& v : t->values) {
      if (v.index() == 0) {
        copy.values.push_back(v);
      } else {
        copy.values.emplace_back(make_bag(canonicalize(*std::get<1>(v))));
      }
    }
    out.tuples.push_back(std::move(copy));
  }
  return out;
}

namespace {

ValidationReport validate_bag(const Bag& bag, const Schema& schema, const std::string& prefix) {
  for (std::size_t i = 0; i < bag.tuples.size(); ++i) {
    const Tuple& t = bag.tuples[i];
    const std::string where = prefix + "tuple " + std::to_string(i);
    if (t.arity() != schema.arity()) {
      return {false, where + " / position " + std::to_string(std::min(t.arity(), schema.arity())),
              "arity mismatch: expected " + std::to_string(schema.arity()) + ", got " +
                  std::to_string(t.arity())};
    }
    for (std::size_t f = 0; f < t.arity(); ++f) {
      const Attribute& attr = schema.attributes[f];
      const std::string fpath = where + " / field " + std::to_string(f);
      if (attr.is_bag()) {
        if (t.values[f].index() != 1) {
          return {false, fpath, "expected nested bag for '" + attr.name + "'"};
        }
        auto nested = validate_bag(t.bag(f), attr.nested(), fpath + " / ");
        if (!nested.ok) {
          nested.reason = "nested-bag schema mismatch: " + nested.reason;
          return nested;
        }
      } else {
        if (t.values[f].index() != 0) {
          return {false, fpath, "expected " + std::string(to_string(attr.atom_kind())) +
                                    " for '" + attr.name + "', got bag"};
        }
        if (kind_of(t.atom(f)) != attr.atom_kind()) {
          return {false, fpath, "atom-kind mismatch for '" + attr.name + "': expected " +
                                    std::string(to_string(attr.atom_kind())) + ", got " +
                                    std::string(to_string(kind_of(t.atom(f))))};
        }
      }
    }
  }
  return {};
}

bool is_special(char c) {
  switch (c) {
    case '\\': case '\t': case '\n': case '\r':
    case '(': case ')': case '{': case '}': case ',':
      return true;
    default:
      return false;
  }
}

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    if (!is_special(c)) {
      out += c;
      continue;
    }
    out += '\\';
    switch (c) {
      case '\t': out += 't'; break;
      case '\n': out += 'n'; break;
      case '\r': out += 'r'; break;
      default: out += c; break;
    }
  }
}

void append_value(std::string& out, const Value& v);

void append_nested(std::string& out, const Bag& bag) {
  out += '{';
  bool first = true;
  for (const Tuple* t : canonical_order(bag)) {
    if (!first) out += ',';
    first = false;
    out += '(';
    for (std::size_t i = 0; i < t->values.size(); ++i) {
      if (i) out += ',';
      append_value(out, t->values[i]);
    }
    out += ')';
  }
  out += '}';
}

void append_value(std::string& out, const Value& v) {
  if (v.index() == 0) {
    const Atom& a = std::get<0>(v);
    if (a.index() == 2) {
      append_escaped(out, std::get<2>(a));
    } else {
      out += atom_to_string(a);
    }
  } else {
    append_nested(out, *std::get<1>(v));
  }
}

// Cursor-based reader for one line of the text format.
class LineReader {
 public:
  explicit LineReader(std::string_view line) : s_(line) {}

  Value read_value(const Attribute& attr, bool nested) {
    if (attr.is_bag()) return read_bag(attr.nested());
    return parse_atom(read_atom_text(nested), attr.atom_kind());
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) {
      throw FormatError("expected '" + std::string(1, c) + "' at offset " + std::to_string(pos_));
    }
    ++pos_;
  }
  bool at_end() const { return pos_ >= s_.size(); }
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }

 private:
  std::string read_atom_text(bool nested) {
    std::string out;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '\\') {
        if (pos_ + 1 >= s_.size()) throw FormatError("dangling escape");
        char e = s_[pos_ + 1];
        out += e == 't' ? '\t' : e == 'n' ? '\n' : e == 'r' ? '\r' : e;
        pos_ += 2;
        continue;
      }
      if (c == '\t') break;
      if (nested && (c == ',' || c == ')')) break;
      if (is_special(c)) throw FormatError("unescaped '" + std::string(1, c) + "'");
      out += c;
      ++pos_;
    }
    return out;
  }

  Value read_bag(const Schema& schema) {
    expect('{');
    Bag bag;
    if (peek('}')) {
      ++pos_;
      return make_bag(std::move(bag));
    }
    while (true) {
      expect('(');
      Tuple t;
      for (std::size_t i = 0; i < schema.arity(); ++i) {
        if (i) expect(',');
        t.values.push_back(read_value(schema.attributes[i], true));
      }
      expect(')');
      bag.tuples.push_back(std::move(t));
      if (peek(',')) {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    return make_bag(std::move(bag));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

ValidationReport validate_against_schema(const Bag& bag, const Schema& schema) {
  return validate_bag(bag, schema, "");
}

std::string format_tuple(const Tuple& t) {
  std::string out;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (i) out += '\t';
    append_value(out, t.values[i]);
  }
  return out;
}

std::string format_bag(const Bag& bag) {
  std::string out;
  for (const Tuple* t : canonical_order(bag)) {
    out += format_tuple(*t);
    out += '\n';
  }
  return out;
}

Tuple parse_tuple_line(std::string_view line, const Schema& schema) {
  LineReader reader(line);
  Tuple t;
  for (std::size_t i = 0; i < schema.arity(); ++i) {
    if (i) reader.expect('\t');
    t.values.push_back(reader.read_value(schema.attributes[i], false));
  }
  if (!reader.at_end()) {
    throw FormatError("too many fields for schema " + schema.to_string());
  }
  return t;
}

Bag parse_bag_text(std::string_view text, const Schema& schema) {
  Bag bag;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() && schema.arity() != 0) continue;
    try {
      bag.tuples.push_back(parse_tuple_line(line, schema));
    } catch (const FormatError& e) {
      throw FormatError(schema.name + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return bag;
}

Bag read_bag_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_bag_text(ss.str(), schema);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_bag_file(const std::string& path, const Bag& bag) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << format_bag(bag);
}

}  // namespace lipstick
