#pragma once

// Provenance graph: p-nodes (derivation structure) and v-nodes (values),
// labelled with semiring operations, aggregation pieces, black boxes and
// module invocations.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "lipstick/relmodel.hpp"

namespace lipstick {

enum class NodeId : std::uint32_t {};
inline constexpr NodeId kNoNode{0xFFFFFFFFu};

inline std::uint32_t raw(NodeId id) { return static_cast<std::uint32_t>(id); }
inline NodeId node_id(std::uint64_t v) { return NodeId{static_cast<std::uint32_t>(v)}; }

enum class NodeKind : std::uint8_t { P, V };
enum class NodeClass : std::uint8_t { Input, Output, State, Module, Plain, Meta };

std::string_view to_string(NodeClass c);
std::string_view to_string(NodeKind k);

namespace label {
struct Token {
  std::uint64_t token_id;
  std::string display;
  friend bool operator==(const Token&, const Token&) = default;
};
struct Plus {
  friend bool operator==(const Plus&, const Plus&) = default;
};
struct Times {
  friend bool operator==(const Times&, const Times&) = default;
};
struct Delta {
  friend bool operator==(const Delta&, const Delta&) = default;
};
struct Tensor {
  friend bool operator==(const Tensor&, const Tensor&) = default;
};
struct Agg {
  std::string op;  // SUM | COUNT | MIN | MAX
  Atom value;      // aggregate value as computed (or recomputed after deletion)
  friend bool operator==(const Agg&, const Agg&) = default;
};
struct BlackBox {
  std::string name;
  friend bool operator==(const BlackBox&, const BlackBox&) = default;
};
struct Const {
  Atom value;
  friend bool operator==(const Const&, const Const&) = default;
};
/// Identifies one invocation of a module at a workflow node.
struct Invocation {
  std::string module;
  std::string node;
  std::uint64_t index = 0;
  friend bool operator==(const Invocation&, const Invocation&) = default;
  friend auto operator<=>(const Invocation&, const Invocation&) = default;
};
struct Meta {
  Invocation of;
  friend bool operator==(const Meta&, const Meta&) = default;
};
}  // namespace label

using Label = std::variant<label::Token, label::Plus, label::Times, label::Delta, label::Tensor,
                           label::Agg, label::BlackBox, label::Const, label::Invocation,
                           label::Meta>;

std::string_view label_tag(const Label& l);

struct ProvNode {
  NodeId id{};
  NodeKind kind = NodeKind::P;
  NodeClass cls = NodeClass::Plain;
  Label label;

  template <typename L>
  bool is() const { return std::holds_alternative<L>(label); }
  friend bool operator==(const ProvNode&, const ProvNode&) = default;
};

struct NodeSpec {
  NodeSpec(Label l, NodeClass c = NodeClass::Plain, std::optional<NodeKind> k = std::nullopt)
      : label(std::move(l)), cls(c), kind(k) {}

  Label label;
  NodeClass cls = NodeClass::Plain;
  // Required for BlackBox labels; every other label fixes its kind.
  std::optional<NodeKind> kind;
};

struct Binding {
  std::uint32_t relation = 0;  // relation-instance id
  std::uint32_t ordinal = 0;   // tuple position within that instance
  NodeId node{};
  friend auto operator<=>(const Binding&, const Binding&) = default;
};

/// Marks a graph as a zoomed view: which invocations are collapsed and the
/// meta node standing in for each.
struct ViewInfo {
  struct Collapsed {
    label::Invocation invocation;
    NodeId meta{};
    friend bool operator==(const Collapsed&, const Collapsed&) = default;
  };
  std::vector<Collapsed> collapsed;
  friend bool operator==(const ViewInfo&, const ViewInfo&) = default;
};

class ProvGraph {
 public:
  NodeId fresh_token(NodeClass cls, std::string display);
  NodeId extend(NodeSpec spec, std::span<const NodeId> predecessors);
  NodeId extend(NodeSpec spec, std::initializer_list<NodeId> predecessors) {
    return extend(std::move(spec), std::span<const NodeId>(predecessors.begin(), predecessors.size()));
  }

  /// Inserts a node under a caller-chosen id (deserialization and derived
  /// views). Ids may be sparse; predecessors must already exist.
  void insert(ProvNode node, std::span<const NodeId> predecessors);

  bool contains(NodeId id) const {
    return raw(id) < slots_.size() && slots_[raw(id)].present;
  }
  const ProvNode& node(NodeId id) const;
  std::span<const NodeId> predecessors(NodeId id) const;
  /// Relabel in place (used when deletion recomputes aggregate values).
  void set_label(NodeId id, Label label);

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edge_count_; }
  /// One past the largest id ever assigned.
  std::uint32_t id_bound() const { return static_cast<std::uint32_t>(slots_.size()); }

  template <typename F>
  void for_each_node(F&& f) const {
    for (const auto& s : slots_) {
      if (s.present) f(s.node);
    }
  }

  std::uint32_t new_relation_instance() { return next_relation_++; }
  void bind(std::uint32_t relation, std::uint32_t ordinal, NodeId node);
  const std::vector<Binding>& bindings() const { return bindings_; }
  void set_bindings(std::vector<Binding> b) { bindings_ = std::move(b); }

  const std::optional<ViewInfo>& view() const { return view_; }
  void set_view(std::optional<ViewInfo> v) { view_ = std::move(v); }

  std::uint64_t token_count() const { return next_token_; }

 private:
  struct Slot {
    bool present = false;
    std::uint32_t pred_begin = 0;
    std::uint32_t pred_count = 0;
    ProvNode node;
  };

  NodeId append(ProvNode node, std::span<const NodeId> predecessors);

  std::vector<Slot> slots_;
  std::vector<NodeId> preds_;
  std::vector<Binding> bindings_;
  std::optional<ViewInfo> view_;
  std::size_t node_count_ = 0;
  std::size_t edge_count_ = 0;
  std::uint64_t next_token_ = 0;
  std::uint32_t next_relation_ = 0;
};

/// Structural equality: same ids, kinds, classes, labels, predecessor
/// multisets, bindings and view marker.
bool identical(const ProvGraph& a, const ProvGraph& b);

// --- statistics -----------------------------------------------------------

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t bindings = 0;
  std::map<std::string, std::size_t> per_label;  // "Times", "Agg(COUNT)", "BB(CalcBid)", ...
  std::map<std::string, std::size_t> per_class;  // "i", "o", "s", "m", "plain", "meta"

  std::size_t label(const std::string& key) const {
    auto it = per_label.find(key);
    return it == per_label.end() ? 0 : it->second;
  }
  std::size_t cls(const std::string& key) const {
    auto it = per_class.find(key);
    return it == per_class.end() ? 0 : it->second;
  }
};

std::string stats_key(const ProvNode& n);
GraphStats stats(const ProvGraph& g);
std::string format_stats(const GraphStats& s);

// --- serialization ------------------------------------------------------------
//
//   PG <version> <nodes> <edges> <bindings>
//   [VIEW <count>]  followed by <count> lines  C <meta-id> <module> <node> <index>
//   N <id> <P|V> <class> <label-tag> [label-args...]
//   E <src> <dst>
//   B <relation-instance-id> <tuple-ordinal> <node-id>
//
// Label args are percent-encoded when they contain whitespace or '%'.

void serialize(const ProvGraph& g, std::ostream& out);
std::string serialize(const ProvGraph& g);
ProvGraph deserialize(std::istream& in);
ProvGraph deserialize(std::string_view text);
void write_graph_file(const std::string& path, const ProvGraph& g);
ProvGraph read_graph_file(const std::string& path);

std::string percent_encode(std::string_view s);
std::string percent_decode(std::string_view s);
std::string encode_atom(const Atom& a);
Atom decode_atom(std::string_view s);

// --- polynomial semantics --------------------------------------------------------

class Polynomial;

/// Indeterminate or opaque factor of a monomial.
struct PolyAtom {
  enum class Kind : std::uint8_t { Token, Invocation, Delta, BlackBox };
  Kind kind = Kind::Token;
  std::uint64_t id = 0;               // token id / invocation node id
  std::string name;                   // black-box name
  std::vector<Polynomial> args;       // delta: one argument; black box: its inputs

  friend bool operator==(const PolyAtom& a, const PolyAtom& b);
  friend std::strong_ordering operator<=>(const PolyAtom& a, const PolyAtom& b);
};

/// Element of N[X] extended with symbolic delta and black-box atoms, kept in a
/// unique normal form: monomials are sorted atom multisets with positive
/// coefficients.
class Polynomial {
 public:
  using Monomial = std::vector<PolyAtom>;

  static Polynomial zero() { return {}; }
  static Polynomial one();
  static Polynomial token(std::uint64_t token_id);
  static Polynomial invocation(std::uint64_t node);
  /// delta(0) = 0, otherwise symbolic.
  static Polynomial delta(Polynomial arg);
  /// Zero if any argument is zero (the black box has a missing input).
  static Polynomial black_box(std::string name, std::vector<Polynomial> args);

  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }
  const std::vector<std::pair<Monomial, std::uint64_t>>& terms() const { return terms_; }

  /// Substitute tokens (absent tokens keep their identity); recurses into
  /// delta and black-box arguments.
  Polynomial substitute(const std::function<std::optional<Polynomial>(std::uint64_t)>& f) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial& operator+=(const Polynomial& b) { return *this = *this + b; }
  Polynomial& operator*=(const Polynomial& b) { return *this = *this * b; }

  friend bool operator==(const Polynomial& a, const Polynomial& b);
  friend std::strong_ordering operator<=>(const Polynomial& a, const Polynomial& b);

  std::string to_string() const;

 private:
  static Polynomial from_terms(std::vector<std::pair<Monomial, std::uint64_t>> raw);
  std::vector<std::pair<Monomial, std::uint64_t>> terms_;  // sorted by monomial
};

struct PolynomialOptions {
  // Treat ModuleInvocation nodes as indeterminates instead of 1.
  bool track_invocations = false;
  // Per-token overrides (e.g. 0 for deleted tokens).
  std::unordered_map<std::uint64_t, Polynomial> assignment;
};

/// Polynomial denoted by a p-node. Throws EvalError for v-nodes.
Polynomial eval_polynomial(const ProvGraph& g, NodeId node, const PolynomialOptions& opts = {});

/// Memoizing evaluator for many nodes of one graph.
class PolynomialEvaluator {
 public:
  PolynomialEvaluator(const ProvGraph& g, PolynomialOptions opts = {});
  const Polynomial& operator()(NodeId node);

 private:
  const Polynomial& eval_child(NodeId child);
  const ProvGraph& g_;
  PolynomialOptions opts_;
  std::unordered_map<std::uint32_t, Polynomial> memo_;
};

}  // namespace lipstick
