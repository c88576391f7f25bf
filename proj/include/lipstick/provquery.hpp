#pragma once

// Queries over frozen provenance graphs: zoom views, deletion propagation,
// subgraph extraction and dependency tests. Nothing here mutates its input.

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipstick/provgraph.hpp"

namespace lipstick {

/// Module names recorded by the graph's invocation nodes.
std::set<std::string> invoked_modules(const ProvGraph& g);

/// Resolves `a,b,dealer*` against `known`. A bare name must be known; a
/// trailing `*` matches by prefix and must match at least one module.
std::set<std::string> resolve_selector(std::string_view selector, const std::set<std::string>& known);

// --- zoom ---------------------------------------------------------------------

/// A base graph with some modules collapsed. Every invocation of a collapsed
/// module has its internal plain nodes hidden behind one Meta node.
class ZoomView {
 public:
  explicit ZoomView(std::shared_ptr<const ProvGraph> base, std::set<std::string> known_modules = {});

  const ProvGraph& base() const { return *base_; }
  const std::shared_ptr<const ProvGraph>& base_ptr() const { return base_; }
  const std::set<std::string>& known_modules() const { return known_; }
  const std::set<std::string>& collapsed() const { return collapsed_; }
  /// The materialized view (the base graph itself when nothing is collapsed).
  const ProvGraph& graph() const { return view_ ? *view_ : *base_; }
  /// Hidden base nodes, per collapsed invocation node.
  const std::map<NodeId, std::vector<NodeId>>& hidden() const { return hidden_; }
  std::size_t hidden_count() const;

  ZoomView with_collapsed(std::set<std::string> modules) const;

 private:
  void materialize();

  std::shared_ptr<const ProvGraph> base_;
  std::set<std::string> known_;
  std::set<std::string> collapsed_;
  std::shared_ptr<const ProvGraph> view_;
  std::map<NodeId, std::vector<NodeId>> hidden_;
};

/// Plain nodes that belong to one invocation: reachable from its class-i/s
/// nodes through plain nodes (plus constants used only there), minus nodes
/// that other invocations or relation bindings still reference.
std::vector<NodeId> invocation_internals(const ProvGraph& g, NodeId invocation);

ZoomView zoom_out(const ZoomView& view, std::string_view selector);
ZoomView zoom_in(const ZoomView& view, std::string_view selector);

/// Rebuilds a view from a serialized view graph and its base.
ZoomView reopen_view(std::shared_ptr<const ProvGraph> base, const ProvGraph& view);

// --- deletion -------------------------------------------------------------------

struct DeletionResult {
  ProvGraph surviving;
  std::vector<NodeId> deleted;          // ascending
  std::map<NodeId, Atom> recomputed;    // Agg node -> new value (only changed ones)

  bool is_deleted(NodeId n) const { return std::binary_search(deleted.begin(), deleted.end(), n); }
};

/// Seeds must be tokens or class-i/s nodes; anything else throws FormatError.
void check_deletable(const ProvGraph& g, std::span<const NodeId> seeds);

/// Deleted flags indexed by raw node id, without building the surviving graph.
std::vector<bool> deletion_mask(const ProvGraph& g, std::span<const NodeId> seeds);

DeletionResult delete_propagate(const ProvGraph& g, std::span<const NodeId> seeds);

/// True iff `n` disappears once `seeds` are deleted.
bool depends_on(const ProvGraph& g, NodeId n, std::span<const NodeId> seeds);
inline bool depends_on(const ProvGraph& g, NodeId n, NodeId seed) {
  return depends_on(g, n, std::span<const NodeId>(&seed, 1));
}

/// Every token whose deletion alone removes `n`, in one pass over the
/// ancestors of `n` (agrees with depends_on for single seeds).
std::vector<NodeId> dependency_set(const ProvGraph& g, NodeId n);

// --- subgraph --------------------------------------------------------------------

/// Ancestors, descendants, the node itself and every predecessor of a
/// descendant; edges and bindings induced.
ProvGraph subgraph(const ProvGraph& g, NodeId n);

/// Induced subgraph on `keep` (indexed by raw id). Bindings and view entries
/// survive when their node does.
ProvGraph induced(const ProvGraph& g, const std::vector<bool>& keep);

/// Kahn order over present nodes, ties by ascending id.
std::vector<NodeId> topological_nodes(const ProvGraph& g);

/// Successor lists indexed by raw id.
std::vector<std::vector<NodeId>> successors(const ProvGraph& g);

}  // namespace lipstick
