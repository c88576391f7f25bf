#include "lipstick/provquery.hpp"

#include <deque>
#include <queue>
#include <unordered_set>

#include "lipstick/evalengine.hpp"

namespace lipstick {

namespace {

bool is_boundary(NodeClass c) { return c == NodeClass::Input || c == NodeClass::State; }

pig::AggOp agg_op(const std::string& s) {
  if (s == "SUM") return pig::AggOp::Sum;
  if (s == "MIN") return pig::AggOp::Min;
  if (s == "MAX") return pig::AggOp::Max;
  return pig::AggOp::Count;
}

std::vector<bool> bound_mask(const ProvGraph& g) {
  std::vector<bool> out(g.id_bound(), false);
  for (const auto& b : g.bindings()) {
    if (raw(b.node) < out.size()) out[raw(b.node)] = true;
  }
  return out;
}

std::vector<NodeId> internals(const ProvGraph& g, NodeId inv, const std::vector<std::vector<NodeId>>& succ,
                              const std::vector<bool>& bound) {
  std::vector<NodeId> boundary_out;
  std::deque<NodeId> queue;
  std::unordered_set<std::uint32_t> reach;
  for (NodeId s : succ[raw(inv)]) {
    const ProvNode& n = g.node(s);
    if (n.cls == NodeClass::Output) boundary_out.push_back(s);
    if (!is_boundary(n.cls)) continue;
    for (NodeId t : succ[raw(s)]) {
      if (g.node(t).cls == NodeClass::Plain && reach.insert(raw(t)).second) queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    for (NodeId t : succ[raw(n)]) {
      if (g.node(t).cls == NodeClass::Plain && reach.insert(raw(t)).second) queue.push_back(t);
    }
  }
  // Constants have no predecessors; they belong here when only internals use them.
  std::vector<NodeId> consts;
  for (std::uint32_t r : reach) {
    for (NodeId p : g.predecessors(node_id(r))) {
      const ProvNode& pn = g.node(p);
      if (pn.is<label::Const>() && pn.cls == NodeClass::Plain && !reach.count(raw(p))) consts.push_back(p);
    }
  }
  for (NodeId c : consts) {
    bool only_here = std::all_of(succ[raw(c)].begin(), succ[raw(c)].end(),
                                 [&](NodeId t) { return reach.count(raw(t)) > 0; });
    if (only_here) reach.insert(raw(c));
  }

  std::unordered_set<std::uint32_t> outs;
  for (NodeId o : boundary_out) outs.insert(raw(o));
  std::vector<NodeId> hidden;
  for (std::uint32_t r : reach) {
    if (bound[r]) continue;
    bool exposed = false;
    for (NodeId t : succ[r]) {
      if (!reach.count(raw(t)) && !outs.count(raw(t))) {
        exposed = true;
        break;
      }
    }
    if (!exposed) hidden.push_back(node_id(r));
  }
  std::sort(hidden.begin(), hidden.end());
  return hidden;
}

std::vector<NodeId> invocations_of(const ProvGraph& g, const std::set<std::string>& modules) {
  std::vector<NodeId> out;
  g.for_each_node([&](const ProvNode& n) {
    if (const auto* m = std::get_if<label::Invocation>(&n.label); m && modules.count(m->module)) out.push_back(n.id);
  });
  return out;
}

}  // namespace

std::vector<std::vector<NodeId>> successors(const ProvGraph& g) {
  std::vector<std::vector<NodeId>> succ(g.id_bound());
  g.for_each_node([&](const ProvNode& n) {
    for (NodeId p : g.predecessors(n.id)) {
      if (raw(p) < succ.size()) succ[raw(p)].push_back(n.id);
    }
  });
  return succ;
}

std::vector<NodeId> topological_nodes(const ProvGraph& g) {
  std::vector<NodeId> ascending;
  bool ordered = true;
  g.for_each_node([&](const ProvNode& n) {
    ascending.push_back(n.id);
    for (NodeId p : g.predecessors(n.id)) {
      if (p >= n.id) ordered = false;
    }
  });
  if (ordered) return ascending;

  const auto succ = successors(g);
  std::vector<std::uint32_t> indeg(g.id_bound(), 0);
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (NodeId n : ascending) {
    indeg[raw(n)] = static_cast<std::uint32_t>(g.predecessors(n).size());
    if (indeg[raw(n)] == 0) ready.push(raw(n));
  }
  std::vector<NodeId> order;
  order.reserve(ascending.size());
  while (!ready.empty()) {
    std::uint32_t n = ready.top();
    ready.pop();
    order.push_back(node_id(n));
    for (NodeId s : succ[n]) {
      if (--indeg[raw(s)] == 0) ready.push(raw(s));
    }
  }
  if (order.size() != ascending.size()) throw FormatError("graph has a cycle");
  return order;
}

std::set<std::string> invoked_modules(const ProvGraph& g) {
  std::set<std::string> out;
  g.for_each_node([&](const ProvNode& n) {
    if (const auto* m = std::get_if<label::Invocation>(&n.label)) out.insert(m->module);
  });
  return out;
}

std::set<std::string> resolve_selector(std::string_view selector, const std::set<std::string>& known) {
  std::set<std::string> out;
  std::size_t start = 0;
  bool any = false;
  while (start <= selector.size()) {
    std::size_t comma = selector.find(',', start);
    if (comma == std::string_view::npos) comma = selector.size();
    std::string item(selector.substr(start, comma - start));
    start = comma + 1;
    if (item.empty()) continue;
    any = true;
    if (item.back() == '*') {
      const std::string prefix = item.substr(0, item.size() - 1);
      bool matched = false;
      for (const auto& m : known) {
        if (m.rfind(prefix, 0) == 0) {
          out.insert(m);
          matched = true;
        }
      }
      if (!matched) throw FormatError("no module matches '" + item + "'");
    } else {
      if (!known.count(item)) throw FormatError("unknown module '" + item + "'");
      out.insert(item);
    }
  }
  if (!any) throw FormatError("empty module selector");
  return out;
}

// --- zoom --------------------------------------------------------------------------

ZoomView::ZoomView(std::shared_ptr<const ProvGraph> base, std::set<std::string> known_modules)
    : base_(std::move(base)), known_(std::move(known_modules)) {
  if (base_->view()) throw FormatError("a zoom view needs a base graph, not a view");
  for (const auto& m : invoked_modules(*base_)) known_.insert(m);
}

std::size_t ZoomView::hidden_count() const {
  std::size_t n = 0;
  for (const auto& [inv, nodes] : hidden_) n += nodes.size();
  return n;
}

ZoomView ZoomView::with_collapsed(std::set<std::string> modules) const {
  ZoomView out = *this;
  out.collapsed_ = std::move(modules);
  out.materialize();
  return out;
}

void ZoomView::materialize() {
  view_.reset();
  hidden_.clear();
  const ProvGraph& g = *base_;
  const auto invs = invocations_of(g, collapsed_);
  if (invs.empty()) return;

  const auto succ = successors(g);
  const auto bound = bound_mask(g);
  std::vector<std::uint32_t> owner(g.id_bound(), UINT32_MAX);  // hidden node -> meta id
  ViewInfo info;
  std::uint32_t next_meta = g.id_bound();
  for (NodeId inv : invs) {
    auto hidden = internals(g, inv, succ, bound);
    for (NodeId h : hidden) owner[raw(h)] = next_meta;
    info.collapsed.push_back({std::get<label::Invocation>(g.node(inv).label), node_id(next_meta)});
    hidden_[inv] = std::move(hidden);
    ++next_meta;
  }

  auto view = std::make_shared<ProvGraph>();
  std::vector<std::vector<NodeId>> meta_preds(info.collapsed.size());
  g.for_each_node([&](const ProvNode& n) {
    if (owner[raw(n.id)] != UINT32_MAX) {
      for (NodeId p : g.predecessors(n.id)) {
        if (owner[raw(p)] == UINT32_MAX) meta_preds[owner[raw(n.id)] - g.id_bound()].push_back(p);
      }
      return;
    }
    std::vector<NodeId> preds;
    for (NodeId p : g.predecessors(n.id)) {
      preds.push_back(owner[raw(p)] == UINT32_MAX ? p : node_id(owner[raw(p)]));
    }
    // Several hidden predecessors of one invocation collapse into one edge.
    std::vector<NodeId> seen_meta;
    std::vector<NodeId> kept;
    for (NodeId p : preds) {
      if (raw(p) >= g.id_bound()) {
        if (std::find(seen_meta.begin(), seen_meta.end(), p) != seen_meta.end()) continue;
        seen_meta.push_back(p);
      }
      kept.push_back(p);
    }
    std::sort(kept.begin(), kept.end());
    view->insert(n, kept);
  });
  for (std::size_t i = 0; i < info.collapsed.size(); ++i) {
    auto& preds = meta_preds[i];
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    ProvNode meta{info.collapsed[i].meta, NodeKind::P, NodeClass::Meta, label::Meta{info.collapsed[i].invocation}};
    view->insert(meta, preds);
  }
  view->set_bindings(g.bindings());
  view->set_view(std::move(info));
  view_ = std::move(view);
}

std::vector<NodeId> invocation_internals(const ProvGraph& g, NodeId invocation) {
  if (!g.node(invocation).is<label::Invocation>()) {
    throw FormatError("node " + std::to_string(raw(invocation)) + " is not a module invocation");
  }
  return internals(g, invocation, successors(g), bound_mask(g));
}

ZoomView zoom_out(const ZoomView& view, std::string_view selector) {
  auto modules = resolve_selector(selector, view.known_modules());
  modules.insert(view.collapsed().begin(), view.collapsed().end());
  return view.with_collapsed(std::move(modules));
}

ZoomView zoom_in(const ZoomView& view, std::string_view selector) {
  auto modules = resolve_selector(selector, view.known_modules());
  auto remaining = view.collapsed();
  for (const auto& m : modules) {
    if (!remaining.erase(m)) throw FormatError("module '" + m + "' is not zoomed out");
  }
  return view.with_collapsed(std::move(remaining));
}

ZoomView reopen_view(std::shared_ptr<const ProvGraph> base, const ProvGraph& view) {
  ZoomView out(std::move(base));
  if (!view.view()) return out;
  std::set<std::string> modules;
  for (const auto& c : view.view()->collapsed) modules.insert(c.invocation.module);
  out = out.with_collapsed(std::move(modules));
  if (!identical(out.graph(), view)) throw FormatError("view does not match its base graph");
  return out;
}

// --- deletion ----------------------------------------------------------------------

void check_deletable(const ProvGraph& g, std::span<const NodeId> seeds) {
  for (NodeId s : seeds) {
    const ProvNode& n = g.node(s);
    if (!n.is<label::Token>() && !is_boundary(n.cls)) {
      throw FormatError("node " + std::to_string(raw(s)) + " is not a deletable base fact (" +
                        std::string(label_tag(n.label)) + ", class " + std::string(to_string(n.cls)) + ")");
    }
  }
}

namespace {

void propagate(const ProvGraph& g, const std::vector<NodeId>& order, std::vector<bool>& del) {
  for (NodeId id : order) {
    if (del[raw(id)]) continue;
    const ProvNode& n = g.node(id);
    auto preds = g.predecessors(id);
    auto any = [&] { return std::any_of(preds.begin(), preds.end(), [&](NodeId p) { return del[raw(p)]; }); };
    auto all = [&] {
      return !preds.empty() && std::all_of(preds.begin(), preds.end(), [&](NodeId p) { return del[raw(p)]; });
    };
    bool d = false;
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, label::Times> || std::is_same_v<L, label::BlackBox>) {
            d = any();
          } else if constexpr (std::is_same_v<L, label::Plus> || std::is_same_v<L, label::Delta> ||
                               std::is_same_v<L, label::Meta>) {
            d = all();
          } else if constexpr (std::is_same_v<L, label::Tensor>) {
            for (NodeId p : preds) {
              if (g.node(p).kind == NodeKind::P && del[raw(p)]) d = true;
            }
          } else if constexpr (std::is_same_v<L, label::Agg>) {
            bool has_tensor = false, alive = false;
            for (NodeId p : preds) {
              if (!g.node(p).is<label::Tensor>()) continue;
              has_tensor = true;
              if (!del[raw(p)]) alive = true;
            }
            d = has_tensor ? !alive : all();
          }
          // Tokens, constants and invocations only go away as seeds.
        },
        n.label);
    del[raw(id)] = d;
  }
}

}  // namespace

std::vector<bool> deletion_mask(const ProvGraph& g, std::span<const NodeId> seeds) {
  check_deletable(g, seeds);
  std::vector<bool> del(g.id_bound(), false);
  if (seeds.empty()) return del;
  for (NodeId s : seeds) del[raw(s)] = true;
  propagate(g, topological_nodes(g), del);
  return del;
}

DeletionResult delete_propagate(const ProvGraph& g, std::span<const NodeId> seeds) {
  auto del = deletion_mask(g, seeds);
  DeletionResult out;
  std::vector<bool> keep(g.id_bound(), false);
  g.for_each_node([&](const ProvNode& n) {
    if (del[raw(n.id)]) {
      out.deleted.push_back(n.id);
    } else {
      keep[raw(n.id)] = true;
    }
  });
  out.surviving = induced(g, keep);

  g.for_each_node([&](const ProvNode& n) {
    const auto* agg = std::get_if<label::Agg>(&n.label);
    if (!agg || del[raw(n.id)]) return;
    std::vector<Atom> values;
    bool lost = false, tensors = false;
    std::size_t live_members = 0;
    for (NodeId p : g.predecessors(n.id)) {
      const ProvNode& pn = g.node(p);
      if (!pn.is<label::Tensor>()) {
        if (pn.kind == NodeKind::P) {
          if (del[raw(p)]) lost = true;
          else ++live_members;
        }
        continue;
      }
      tensors = true;
      if (del[raw(p)]) {
        lost = true;
        continue;
      }
      for (NodeId q : g.predecessors(p)) {
        if (const auto* c = std::get_if<label::Const>(&g.node(q).label)) values.push_back(c->value);
      }
    }
    if (!lost) return;
    std::optional<Atom> v;
    const auto op = agg_op(agg->op);
    if (tensors) {
      v = fold_aggregate(op, kind_of(agg->value), values);
    } else if (op == pig::AggOp::Count) {
      v = Atom{static_cast<std::int64_t>(live_members)};
    }
    // Simplified aggregates carry no member values; SUM/MIN/MAX keep theirs.
    if (!v || *v == agg->value) return;
    out.recomputed[n.id] = *v;
    out.surviving.set_label(n.id, label::Agg{agg->op, *v});
  });
  return out;
}

bool depends_on(const ProvGraph& g, NodeId n, std::span<const NodeId> seeds) {
  g.node(n);
  return deletion_mask(g, seeds)[raw(n)];
}

std::vector<NodeId> dependency_set(const ProvGraph& g, NodeId target) {
  g.node(target);
  std::vector<bool> anc(g.id_bound(), false);
  std::deque<NodeId> queue{target};
  anc[raw(target)] = true;
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    for (NodeId p : g.predecessors(n)) {
      if (!anc[raw(p)]) {
        anc[raw(p)] = true;
        queue.push_back(p);
      }
    }
  }

  // kill[n]: tokens whose deletion alone removes n (sorted).
  std::unordered_map<std::uint32_t, std::vector<NodeId>> kill;
  auto unite = [](std::vector<NodeId> a, const std::vector<NodeId>& b) {
    std::vector<NodeId> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  };
  auto intersect = [](const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::vector<NodeId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  };
  for (NodeId id : topological_nodes(g)) {
    if (!anc[raw(id)]) continue;
    const ProvNode& n = g.node(id);
    auto preds = g.predecessors(id);
    std::vector<NodeId> k;
    auto over = [&](auto keep, bool conj) {
      bool first = true;
      for (NodeId p : preds) {
        if (!keep(p)) continue;
        const auto& kp = kill[raw(p)];
        if (first) {
          k = kp;
          first = false;
        } else {
          k = conj ? unite(std::move(k), kp) : intersect(k, kp);
        }
      }
    };
    auto every = [](NodeId) { return true; };
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, label::Token>) {
            k = {id};
          } else if constexpr (std::is_same_v<L, label::Times> || std::is_same_v<L, label::BlackBox>) {
            over(every, true);
          } else if constexpr (std::is_same_v<L, label::Plus> || std::is_same_v<L, label::Delta> ||
                               std::is_same_v<L, label::Meta>) {
            over(every, false);
          } else if constexpr (std::is_same_v<L, label::Tensor>) {
            over([&](NodeId p) { return g.node(p).kind == NodeKind::P; }, true);
          } else if constexpr (std::is_same_v<L, label::Agg>) {
            bool tensors = std::any_of(preds.begin(), preds.end(),
                                       [&](NodeId p) { return g.node(p).is<label::Tensor>(); });
            if (tensors) {
              over([&](NodeId p) { return g.node(p).is<label::Tensor>(); }, false);
            } else {
              over(every, false);
            }
          }
        },
        n.label);
    kill[raw(id)] = std::move(k);
  }
  return kill[raw(target)];
}

// --- subgraph -------------------------------------------------------------------------

ProvGraph induced(const ProvGraph& g, const std::vector<bool>& keep) {
  ProvGraph out;
  std::vector<NodeId> preds;
  g.for_each_node([&](const ProvNode& n) {
    if (!keep[raw(n.id)]) return;
    preds.clear();
    for (NodeId p : g.predecessors(n.id)) {
      if (raw(p) < keep.size() && keep[raw(p)]) preds.push_back(p);
    }
    out.insert(n, preds);
  });
  std::vector<Binding> bindings;
  for (const auto& b : g.bindings()) {
    if (keep[raw(b.node)]) bindings.push_back(b);
  }
  out.set_bindings(std::move(bindings));
  if (g.view()) {
    ViewInfo info;
    for (const auto& c : g.view()->collapsed) {
      if (keep[raw(c.meta)]) info.collapsed.push_back(c);
    }
    out.set_view(std::move(info));
  }
  return out;
}

ProvGraph subgraph(const ProvGraph& g, NodeId target) {
  g.node(target);
  const auto succ = successors(g);
  std::vector<bool> keep(g.id_bound(), false);
  keep[raw(target)] = true;

  std::deque<NodeId> queue{target};
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    for (NodeId p : g.predecessors(n)) {
      if (!keep[raw(p)]) {
        keep[raw(p)] = true;
        queue.push_back(p);
      }
    }
  }
  std::vector<bool> desc(g.id_bound(), false);
  queue.push_back(target);
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    for (NodeId s : succ[raw(n)]) {
      if (!desc[raw(s)]) {
        desc[raw(s)] = true;
        queue.push_back(s);
      }
    }
  }
  g.for_each_node([&](const ProvNode& n) {
    if (!desc[raw(n.id)]) return;
    keep[raw(n.id)] = true;
    for (NodeId p : g.predecessors(n.id)) keep[raw(p)] = true;
  });
  return induced(g, keep);
}

}  // namespace lipstick
