#pragma once

// Evaluates checked Pig Latin programs over annotated relations and extends
// the provenance graph as it goes. A null graph pointer turns tracking off:
// tuples then carry kNoNode and no nodes are created.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lipstick/pigparse.hpp"
#include "lipstick/provgraph.hpp"
#include "lipstick/relmodel.hpp"

namespace lipstick {

struct TupleProv {
  NodeId pnode = kNoNode;
  // field index -> v-node holding that field's value (aggregates)
  std::vector<std::pair<std::uint32_t, NodeId>> values;

  NodeId value_node(std::size_t field) const {
    for (const auto& [f, n] : values) {
      if (f == field) return n;
    }
    return kNoNode;
  }
  friend bool operator==(const TupleProv&, const TupleProv&) = default;
};

using ATuple = BasicTuple<TupleProv>;
using ABag = BasicBag<TupleProv>;
using AValue = BasicValue<TupleProv>;

struct AnnotatedRelation {
  Schema schema;
  ABag bag;
};
using RelRef = std::shared_ptr<const AnnotatedRelation>;
using Env = std::map<std::string, RelRef>;

struct EvalOptions {
  // Aggregates get a bare Agg node over the member p-nodes (no tensors/constants).
  bool simplified_agg = false;
};

/// Shared state of one evaluation: where nodes go and how aggregates look.
class OpContext {
 public:
  OpContext(ProvGraph* graph, EvalOptions opts = {}) : graph_(graph), opts_(opts) {}

  bool tracking() const { return graph_ != nullptr; }
  ProvGraph* graph() const { return graph_; }
  const EvalOptions& options() const { return opts_; }

  NodeId node(NodeSpec spec, std::span<const NodeId> preds) const;
  NodeId node(NodeSpec spec, std::initializer_list<NodeId> preds) const {
    return node(std::move(spec), std::span<const NodeId>(preds.begin(), preds.size()));
  }

 private:
  ProvGraph* graph_;
  EvalOptions opts_;
};

// --- operators ----------------------------------------------------------------
// Each returns a fresh bag; inputs are never modified.

/// Projection onto `items` (fields or literals). Equal projected tuples are
/// merged under one Plus node unless `bag_mode`, which keeps one unary Plus
/// per source tuple.
ABag op_project(const OpContext& ctx, const ABag& in, const std::vector<pig::ItemPlan>& items,
                bool bag_mode);
ABag op_filter(const ABag& in, const std::vector<pig::ComparisonPlan>& cond);
ABag op_join(const OpContext& ctx, const ABag& left, std::size_t lkey, const ABag& right,
             std::size_t rkey);
/// GROUP (one source) and COGROUP (several): (key, bag per source), p-node
/// Delta over Plus over every contributing tuple.
ABag op_group(const OpContext& ctx, const std::vector<std::pair<const ABag*, std::size_t>>& sources);
ABag op_aggregate(const OpContext& ctx, const ABag& in, const std::vector<pig::ItemPlan>& items);
ABag op_foreach_bb(const OpContext& ctx, const ABag& in, const std::vector<pig::ItemPlan>& items,
                   const Env& env);
ABag op_flatten_field(const OpContext& ctx, const ABag& in, const std::vector<pig::ItemPlan>& items);
ABag op_union(const std::vector<const ABag*>& sources);
ABag op_distinct(const OpContext& ctx, const ABag& in);
ABag op_order(const ABag& in, std::size_t key, bool descending);

/// Left fold of `op` over values in the given order; nullopt for MIN/MAX of
/// nothing. `kind` is the result kind (COUNT is always int).
std::optional<Atom> fold_aggregate(pig::AggOp op, AtomKind kind, const std::vector<Atom>& values);

/// Evaluates one statement against `env` (which must hold its inputs).
RelRef eval_statement(const OpContext& ctx, const pig::Statement& s, const pig::StatementPlan& plan,
                      const Env& env);

/// Evaluates all statements in order, binding each alias in `env`.
void eval_program(const OpContext& ctx, const pig::CheckedProgram& prog, Env& env);

/// Wraps plain bags as relations with no provenance (kNoNode).
RelRef unannotated(const Schema& schema, const Bag& bag);

}  // namespace lipstick
