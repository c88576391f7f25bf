#include "lipstick/provgraph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lipstick {

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Input: return "i";
    case NodeClass::Output: return "o";
    case NodeClass::State: return "s";
    case NodeClass::Module: return "m";
    case NodeClass::Plain: return "plain";
    case NodeClass::Meta: return "meta";
  }
  return "?";
}

std::string_view to_string(NodeKind k) { return k == NodeKind::P ? "P" : "V"; }

std::string_view label_tag(const Label& l) {
  static constexpr std::string_view tags[] = {"Token", "Plus",  "Times", "Delta", "Tensor",
                                              "Agg",   "BB",    "Const", "Inv",   "Meta"};
  return tags[l.index()];
}

namespace {

std::optional<NodeKind> fixed_kind(const Label& l) {
  if (std::holds_alternative<label::Tensor>(l) || std::holds_alternative<label::Agg>(l) ||
      std::holds_alternative<label::Const>(l)) {
    return NodeKind::V;
  }
  if (std::holds_alternative<label::BlackBox>(l)) return std::nullopt;
  return NodeKind::P;
}

}  // namespace

// --- graph ---------------------------------------------------------------------

NodeId ProvGraph::append(ProvNode node, std::span<const NodeId> predecessors) {
  const std::uint32_t id = raw(node.id);
  if (id >= slots_.size()) slots_.resize(id + 1);
  Slot& slot = slots_[id];
  if (slot.present) throw FormatError("duplicate node id " + std::to_string(id));
  slot.present = true;
  slot.pred_begin = static_cast<std::uint32_t>(preds_.size());
  slot.pred_count = static_cast<std::uint32_t>(predecessors.size());
  preds_.insert(preds_.end(), predecessors.begin(), predecessors.end());
  std::sort(preds_.begin() + slot.pred_begin, preds_.end());
  slot.node = std::move(node);
  ++node_count_;
  edge_count_ += predecessors.size();
  if (const auto* tok = std::get_if<label::Token>(&slot.node.label)) {
    next_token_ = std::max(next_token_, tok->token_id + 1);
  }
  return slot.node.id;
}

NodeId ProvGraph::fresh_token(NodeClass cls, std::string display) {
  if (cls != NodeClass::Input && cls != NodeClass::State) {
    throw EvalError("tokens must be of class i or s");
  }
  ProvNode n{node_id(slots_.size()), NodeKind::P, cls,
             label::Token{next_token_, std::move(display)}};
  return append(std::move(n), {});
}

NodeId ProvGraph::extend(NodeSpec spec, std::span<const NodeId> predecessors) {
  for (NodeId p : predecessors) {
    if (!contains(p)) throw EvalError("unknown predecessor id " + std::to_string(raw(p)));
  }
  if (std::holds_alternative<label::Token>(spec.label)) {
    throw EvalError("token nodes are created with fresh_token");
  }
  if (predecessors.empty() && (std::holds_alternative<label::Plus>(spec.label) ||
                               std::holds_alternative<label::Times>(spec.label) ||
                               std::holds_alternative<label::Delta>(spec.label) ||
                               std::holds_alternative<label::Tensor>(spec.label))) {
    throw EvalError(std::string(label_tag(spec.label)) + " node needs at least one predecessor");
  }
  auto kind = fixed_kind(spec.label);
  if (!kind) {
    if (!spec.kind) throw EvalError("black-box node needs an explicit kind");
    kind = spec.kind;
  }
  ProvNode n{node_id(slots_.size()), *kind, spec.cls, std::move(spec.label)};
  return append(std::move(n), predecessors);
}

void ProvGraph::insert(ProvNode node, std::span<const NodeId> predecessors) {
  append(std::move(node), predecessors);
}

const ProvNode& ProvGraph::node(NodeId id) const {
  if (!contains(id)) throw FormatError("unknown node id " + std::to_string(raw(id)));
  return slots_[raw(id)].node;
}

std::span<const NodeId> ProvGraph::predecessors(NodeId id) const {
  if (!contains(id)) throw FormatError("unknown node id " + std::to_string(raw(id)));
  const Slot& s = slots_[raw(id)];
  return {preds_.data() + s.pred_begin, s.pred_count};
}

void ProvGraph::set_label(NodeId id, Label label) {
  if (!contains(id)) throw FormatError("unknown node id " + std::to_string(raw(id)));
  slots_[raw(id)].node.label = std::move(label);
}

void ProvGraph::bind(std::uint32_t relation, std::uint32_t ordinal, NodeId node) {
  bindings_.push_back({relation, ordinal, node});
  next_relation_ = std::max(next_relation_, relation + 1);
}

bool identical(const ProvGraph& a, const ProvGraph& b) {
  if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
  if (a.view() != b.view()) return false;
  const std::uint32_t bound = std::max(a.id_bound(), b.id_bound());
  for (std::uint32_t i = 0; i < bound; ++i) {
    NodeId id{i};
    if (a.contains(id) != b.contains(id)) return false;
    if (!a.contains(id)) continue;
    if (!(a.node(id) == b.node(id))) return false;
    auto pa = a.predecessors(id);
    auto pb = b.predecessors(id);
    if (!std::equal(pa.begin(), pa.end(), pb.begin(), pb.end())) return false;
  }
  auto ba = a.bindings();
  auto bb = b.bindings();
  std::sort(ba.begin(), ba.end());
  std::sort(bb.begin(), bb.end());
  return ba == bb;
}

// --- stats -----------------------------------------------------------------------

std::string stats_key(const ProvNode& n) {
  std::string key(label_tag(n.label));
  if (const auto* agg = std::get_if<label::Agg>(&n.label)) key += "(" + agg->op + ")";
  if (const auto* bb = std::get_if<label::BlackBox>(&n.label)) key += "(" + bb->name + ")";
  return key;
}

GraphStats stats(const ProvGraph& g) {
  GraphStats s;
  s.nodes = g.node_count();
  s.edges = g.edge_count();
  s.bindings = g.bindings().size();
  g.for_each_node([&](const ProvNode& n) {
    ++s.per_label[stats_key(n)];
    ++s.per_class[std::string(to_string(n.cls))];
  });
  return s;
}

std::string format_stats(const GraphStats& s) {
  std::ostringstream out;
  out << "nodes " << s.nodes << "\nedges " << s.edges << "\nbindings " << s.bindings << "\n";
  for (const auto& [k, v] : s.per_class) out << "class " << k << " " << v << "\n";
  for (const auto& [k, v] : s.per_label) out << "label " << k << " " << v << "\n";
  return out.str();
}

// --- serialization ------------------------------------------------------------------

std::string percent_encode(std::string_view s) {
  if (s.empty()) return "%";
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (c <= 0x20 || c == 0x7F || c == '%') {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string percent_decode(std::string_view s) {
  if (s == "%") return {};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    if (i + 2 >= s.size()) throw FormatError("truncated escape");
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
    if (ec != std::errc{} || p != s.data() + i + 3) throw FormatError("bad escape in '" + std::string(s) + "'");
    out += static_cast<char>(v);
    i += 2;
  }
  return out;
}

std::string encode_atom(const Atom& a) {
  static constexpr const char* prefix[] = {"i:", "f:", "s:", "b:"};
  return prefix[a.index()] + percent_encode(atom_to_string(a));
}

Atom decode_atom(std::string_view s) {
  if (s.size() < 2 || s[1] != ':') throw FormatError("bad atom '" + std::string(s) + "'");
  std::string body = percent_decode(s.substr(2));
  switch (s[0]) {
    case 'i': return parse_atom(body, AtomKind::Int);
    case 'f': return parse_atom(body, AtomKind::Float);
    case 's': return body;
    case 'b': return parse_atom(body, AtomKind::Bool);
    default: throw FormatError("bad atom kind in '" + std::string(s) + "'");
  }
}

namespace {

template <typename... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <typename... F>
Overloaded(F...) -> Overloaded<F...>;

std::string invocation_args(const label::Invocation& m) {
  return " " + percent_encode(m.module) + " " + percent_encode(m.node) + " " + std::to_string(m.index);
}

std::string label_args(const Label& l) {
  return std::visit(
      Overloaded{
          [](const label::Token& t) {
            return " " + std::to_string(t.token_id) + " " + percent_encode(t.display);
          },
          [](const label::Agg& a) { return " " + percent_encode(a.op) + " " + encode_atom(a.value); },
          [](const label::BlackBox& b) { return " " + percent_encode(b.name); },
          [](const label::Const& c) { return " " + encode_atom(c.value); },
          [](const label::Invocation& m) { return invocation_args(m); },
          [](const label::Meta& m) { return invocation_args(m.of); },
          [](const auto&) { return std::string(); },
      },
      l);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw FormatError("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

NodeClass class_from(std::string_view s) {
  for (auto c : {NodeClass::Input, NodeClass::Output, NodeClass::State, NodeClass::Module,
                 NodeClass::Plain, NodeClass::Meta}) {
    if (to_string(c) == s) return c;
  }
  throw FormatError("unknown node class '" + std::string(s) + "'");
}

label::Invocation invocation_from(const std::vector<std::string_view>& f, std::size_t at) {
  if (f.size() != at + 3) throw FormatError("invocation label needs module, node and index");
  return {percent_decode(f[at]), percent_decode(f[at + 1]), to_u64(f[at + 2])};
}

Label label_from(const std::vector<std::string_view>& f) {
  const std::string_view tag = f[4];
  auto want = [&](std::size_t n) {
    if (f.size() != 5 + n) {
      throw FormatError("label " + std::string(tag) + " expects " + std::to_string(n) + " argument(s)");
    }
  };
  if (tag == "Token") { want(2); return label::Token{to_u64(f[5]), percent_decode(f[6])}; }
  if (tag == "Plus") { want(0); return label::Plus{}; }
  if (tag == "Times") { want(0); return label::Times{}; }
  if (tag == "Delta") { want(0); return label::Delta{}; }
  if (tag == "Tensor") { want(0); return label::Tensor{}; }
  if (tag == "Agg") { want(2); return label::Agg{percent_decode(f[5]), decode_atom(f[6])}; }
  if (tag == "BB") { want(1); return label::BlackBox{percent_decode(f[5])}; }
  if (tag == "Const") { want(1); return label::Const{decode_atom(f[5])}; }
  if (tag == "Inv") return invocation_from(f, 5);
  if (tag == "Meta") return label::Meta{invocation_from(f, 5)};
  throw FormatError("unknown label tag '" + std::string(tag) + "'");
}

}  // namespace

void serialize(const ProvGraph& g, std::ostream& out) {
  auto bindings = g.bindings();
  std::sort(bindings.begin(), bindings.end());
  out << "PG 1 " << g.node_count() << ' ' << g.edge_count() << ' ' << bindings.size() << '\n';
  if (const auto& view = g.view()) {
    out << "VIEW " << view->collapsed.size() << '\n';
    for (const auto& c : view->collapsed) {
      out << "C " << raw(c.meta) << ' ' << percent_encode(c.invocation.module) << ' '
          << percent_encode(c.invocation.node) << ' ' << c.invocation.index << '\n';
    }
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(g.edge_count());
  g.for_each_node([&](const ProvNode& n) {
    out << "N " << raw(n.id) << ' ' << to_string(n.kind) << ' ' << to_string(n.cls) << ' '
        << label_tag(n.label) << label_args(n.label) << '\n';
    for (NodeId p : g.predecessors(n.id)) edges.emplace_back(raw(p), raw(n.id));
  });
  std::sort(edges.begin(), edges.end());
  for (const auto& [s, d] : edges) out << "E " << s << ' ' << d << '\n';
  for (const auto& b : bindings) {
    out << "B " << b.relation << ' ' << b.ordinal << ' ' << raw(b.node) << '\n';
  }
}

std::string serialize(const ProvGraph& g) {
  std::ostringstream out;
  serialize(g, out);
  return out.str();
}

ProvGraph deserialize(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    return FormatError("graph line " + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw FormatError("graph line 1: missing header");
  ++line_no;
  auto header = split_ws(line);
  if (header.size() != 5 || header[0] != "PG") throw fail("expected 'PG <version> <nodes> <edges> <bindings>'");
  std::uint64_t n_nodes, n_edges, n_bindings;
  try {
    if (to_u64(header[1]) != 1) throw fail("unsupported version " + std::string(header[1]));
    n_nodes = to_u64(header[2]);
    n_edges = to_u64(header[3]);
    n_bindings = to_u64(header[4]);
  } catch (const FormatError& e) {
    throw fail(e.what());
  }

  struct PendingNode {
    ProvNode node;
    std::vector<NodeId> preds;
  };
  std::vector<PendingNode> nodes;
  std::unordered_map<std::uint32_t, std::size_t> index;
  std::vector<Binding> bindings;
  std::optional<ViewInfo> view;
  std::size_t edges = 0;
  std::size_t expected_collapsed = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_ws(line);
    try {
      if (f[0] == "VIEW" && f.size() == 2 && !view && nodes.empty()) {
        view.emplace();
        expected_collapsed = to_u64(f[1]);
      } else if (f[0] == "C" && view && f.size() == 5) {
        view->collapsed.push_back({invocation_from(f, 2), node_id(to_u64(f[1]))});
      } else if (f[0] == "N" && f.size() >= 5) {
        ProvNode n;
        n.id = node_id(to_u64(f[1]));
        if (f[2] == "P") n.kind = NodeKind::P;
        else if (f[2] == "V") n.kind = NodeKind::V;
        else throw FormatError("node kind must be P or V");
        n.cls = class_from(f[3]);
        n.label = label_from(f);
        if (index.count(raw(n.id))) throw FormatError("duplicate node id " + std::string(f[1]));
        index.emplace(raw(n.id), nodes.size());
        nodes.push_back({std::move(n), {}});
      } else if (f[0] == "E" && f.size() == 3) {
        auto src = to_u64(f[1]);
        auto dst = to_u64(f[2]);
        auto si = index.find(static_cast<std::uint32_t>(src));
        auto di = index.find(static_cast<std::uint32_t>(dst));
        if (si == index.end() || di == index.end()) {
          throw FormatError("dangling edge " + std::to_string(src) + " -> " + std::to_string(dst));
        }
        nodes[di->second].preds.push_back(node_id(src));
        ++edges;
      } else if (f[0] == "B" && f.size() == 4) {
        auto target = to_u64(f[3]);
        if (!index.count(static_cast<std::uint32_t>(target))) {
          throw FormatError("binding to unknown node " + std::to_string(target));
        }
        bindings.push_back({static_cast<std::uint32_t>(to_u64(f[1])),
                            static_cast<std::uint32_t>(to_u64(f[2])), node_id(target)});
      } else {
        throw FormatError("malformed line '" + line + "'");
      }
    } catch (const FormatError& e) {
      throw fail(e.what());
    }
  }
  if (nodes.size() != n_nodes || edges != n_edges || bindings.size() != n_bindings) {
    throw FormatError("graph header counts do not match contents");
  }
  if (view && view->collapsed.size() != expected_collapsed) {
    throw FormatError("VIEW count does not match C lines");
  }

  ProvGraph g;
  for (auto& p : nodes) g.insert(std::move(p.node), p.preds);
  g.set_bindings(std::move(bindings));
  g.set_view(std::move(view));
  return g;
}

ProvGraph deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  return deserialize(in);
}

void write_graph_file(const std::string& path, const ProvGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  serialize(g, out);
}

ProvGraph read_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return deserialize(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// --- polynomials --------------------------------------------------------------------

bool operator==(const PolyAtom& a, const PolyAtom& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const PolyAtom& a, const PolyAtom& b) {
  if (auto c = a.kind <=> b.kind; c != 0) return c;
  if (auto c = a.id <=> b.id; c != 0) return c;
  if (auto c = a.name.compare(b.name) <=> 0; c != 0) return c;
  return std::lexicographical_compare_three_way(a.args.begin(), a.args.end(), b.args.begin(),
                                                b.args.end());
}

bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

std::strong_ordering operator<=>(const Polynomial& a, const Polynomial& b) {
  return std::lexicographical_compare_three_way(
      a.terms_.begin(), a.terms_.end(), b.terms_.begin(), b.terms_.end(),
      [](const auto& x, const auto& y) {
        auto c = std::lexicographical_compare_three_way(x.first.begin(), x.first.end(),
                                                        y.first.begin(), y.first.end());
        return c != 0 ? c : x.second <=> y.second;
      });
}

Polynomial Polynomial::from_terms(std::vector<std::pair<Monomial, std::uint64_t>> raw) {
  for (auto& t : raw) std::sort(t.first.begin(), t.first.end());
  std::sort(raw.begin(), raw.end(), [](const auto& x, const auto& y) {
    return std::lexicographical_compare_three_way(x.first.begin(), x.first.end(), y.first.begin(),
                                                  y.first.end()) < 0;
  });
  Polynomial p;
  for (auto& t : raw) {
    if (t.second == 0) continue;
    if (!p.terms_.empty() && p.terms_.back().first == t.first) {
      p.terms_.back().second += t.second;
    } else {
      p.terms_.push_back(std::move(t));
    }
  }
  return p;
}

Polynomial Polynomial::one() {
  Polynomial p;
  p.terms_.push_back({{}, 1});
  return p;
}

Polynomial Polynomial::token(std::uint64_t token_id) {
  Polynomial p;
  p.terms_.push_back({{PolyAtom{PolyAtom::Kind::Token, token_id, {}, {}}}, 1});
  return p;
}

Polynomial Polynomial::invocation(std::uint64_t node) {
  Polynomial p;
  p.terms_.push_back({{PolyAtom{PolyAtom::Kind::Invocation, node, {}, {}}}, 1});
  return p;
}

Polynomial Polynomial::delta(Polynomial arg) {
  if (arg.is_zero()) return zero();
  Polynomial p;
  p.terms_.push_back({{PolyAtom{PolyAtom::Kind::Delta, 0, {}, {std::move(arg)}}}, 1});
  return p;
}

Polynomial Polynomial::black_box(std::string name, std::vector<Polynomial> args) {
  for (const auto& a : args) {
    if (a.is_zero()) return zero();
  }
  std::sort(args.begin(), args.end());
  Polynomial p;
  p.terms_.push_back({{PolyAtom{PolyAtom::Kind::BlackBox, 0, std::move(name), std::move(args)}}, 1});
  return p;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  auto raw = a.terms_;
  raw.insert(raw.end(), b.terms_.begin(), b.terms_.end());
  return Polynomial::from_terms(std::move(raw));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<std::pair<Polynomial::Monomial, std::uint64_t>> raw;
  raw.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      Polynomial::Monomial m = ma;
      m.insert(m.end(), mb.begin(), mb.end());
      raw.emplace_back(std::move(m), ca * cb);
    }
  }
  return Polynomial::from_terms(std::move(raw));
}

Polynomial Polynomial::substitute(
    const std::function<std::optional<Polynomial>(std::uint64_t)>& f) const {
  Polynomial sum;
  for (const auto& [mono, coeff] : terms_) {
    Polynomial prod;
    prod.terms_.push_back({{}, coeff});
    for (const auto& atom : mono) {
      switch (atom.kind) {
        case PolyAtom::Kind::Token: {
          auto r = f(atom.id);
          prod = prod * (r ? *r : token(atom.id));
          break;
        }
        case PolyAtom::Kind::Invocation:
          prod = prod * invocation(atom.id);
          break;
        case PolyAtom::Kind::Delta:
          prod = prod * delta(atom.args.front().substitute(f));
          break;
        case PolyAtom::Kind::BlackBox: {
          std::vector<Polynomial> args;
          for (const auto& a : atom.args) args.push_back(a.substitute(f));
          prod = prod * black_box(atom.name, std::move(args));
          break;
        }
      }
    }
    sum = sum + prod;
  }
  return sum;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto& [mono, coeff] = terms_[t];
    if (t) out += " + ";
    if (coeff != 1 || mono.empty()) out += std::to_string(coeff);
    for (std::size_t i = 0; i < mono.size();) {
      std::size_t j = i;
      while (j < mono.size() && mono[j] == mono[i]) ++j;
      if (i || (coeff != 1)) out += "*";
      const auto& a = mono[i];
      switch (a.kind) {
        case PolyAtom::Kind::Token: out += "x" + std::to_string(a.id); break;
        case PolyAtom::Kind::Invocation: out += "m" + std::to_string(a.id); break;
        case PolyAtom::Kind::Delta: out += "d(" + a.args.front().to_string() + ")"; break;
        case PolyAtom::Kind::BlackBox: {
          out += a.name + "[";
          for (std::size_t k = 0; k < a.args.size(); ++k) {
            if (k) out += "; ";
            out += a.args[k].to_string();
          }
          out += "]";
          break;
        }
      }
      if (j - i > 1) out += "^" + std::to_string(j - i);
      i = j;
    }
  }
  return out;
}

PolynomialEvaluator::PolynomialEvaluator(const ProvGraph& g, PolynomialOptions opts)
    : g_(g), opts_(std::move(opts)) {}

const Polynomial& PolynomialEvaluator::operator()(NodeId node) {
  const ProvNode& n = g_.node(node);
  if (n.kind == NodeKind::V) {
    throw EvalError("node " + std::to_string(raw(node)) + " is a value node, not provenance");
  }
  return eval_child(node);
}

const Polynomial& PolynomialEvaluator::eval_child(NodeId id) {
  if (auto it = memo_.find(raw(id)); it != memo_.end()) return it->second;
  const ProvNode& n = g_.node(id);
  auto preds = g_.predecessors(id);

  // P-children contribute their polynomial; black-box v-nodes contribute an
  // opaque atom; other v-nodes (aggregates, constants) carry values only.
  auto children = [&] {
    std::vector<Polynomial> out;
    for (NodeId p : preds) {
      const ProvNode& c = g_.node(p);
      if (c.kind == NodeKind::P || c.is<label::BlackBox>()) out.push_back(eval_child(p));
    }
    return out;
  };

  const auto& assignment = opts_.assignment;
  const bool track = opts_.track_invocations;
  Polynomial result = std::visit(
      Overloaded{
          [&](const label::Token& t) {
            auto it = assignment.find(t.token_id);
            return it != assignment.end() ? it->second : Polynomial::token(t.token_id);
          },
          [&](const label::Plus&) {
            Polynomial s;
            for (auto& c : children()) s += c;
            return s;
          },
          [&](const label::Times&) {
            Polynomial p = Polynomial::one();
            for (auto& c : children()) p *= c;
            return p;
          },
          [&](const label::Delta&) {
            Polynomial s;
            for (auto& c : children()) s += c;
            return Polynomial::delta(std::move(s));
          },
          [&](const label::Invocation&) {
            return track ? Polynomial::invocation(raw(n.id)) : Polynomial::one();
          },
          [&](const label::BlackBox& b) { return Polynomial::black_box(b.name, children()); },
          [&](const label::Meta& m) { return Polynomial::black_box("Meta:" + m.of.module, children()); },
          [&](const auto&) -> Polynomial {
            throw EvalError("node " + std::to_string(raw(n.id)) + " is a value node, not provenance");
          },
      },
      n.label);
  return memo_.emplace(raw(id), std::move(result)).first->second;
}

Polynomial eval_polynomial(const ProvGraph& g, NodeId node, const PolynomialOptions& opts) {
  PolynomialEvaluator ev(g, opts);
  return ev(node);
}

}  // namespace lipstick
