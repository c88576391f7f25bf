#include <gtest/gtest.h>

#include <random>

#include "lipstick/provquery.hpp"
#include "lipstick/workflowgen.hpp"
#include "oracle.hpp"

using namespace lipstick;

namespace {

std::shared_ptr<const ProvGraph> example_graph() {
  static const auto g = [] {
    const std::string dir = oracle::fixture_dir("dealers4");
    const WorkflowDef def = read_workflow_file(dir + "/workflow.lp");
    static const pig::BBRegistry bbs = gen::dealership_black_boxes();
    WorkflowRunner run(def, bbs);
    run.load_state(read_state_dir(dir + "/state", def));
    run.execute_sequence(read_input_sequence(dir + "/input", def, 1));
    return std::make_shared<const ProvGraph>(run.graph());
  }();
  return g;
}

// Random graph over tokens with every deletion-relevant label.
ProvGraph random_graph(std::mt19937_64& rng) {
  ProvGraph g;
  std::vector<NodeId> ps;
  for (int i = 0; i < 5; ++i) ps.push_back(g.fresh_token(i % 2 ? NodeClass::State : NodeClass::Input, "t"));
  NodeId c = g.extend(NodeSpec(label::Const{Atom{std::int64_t{1}}}), {});
  for (int i = 0; i < 14; ++i) {
    std::vector<NodeId> preds;
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int j = 0; j < k; ++j) preds.push_back(ps[std::uniform_int_distribution<std::size_t>(0, ps.size() - 1)(rng)]);
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
      case 0: ps.push_back(g.extend(NodeSpec(label::Plus{}), preds)); break;
      case 1: ps.push_back(g.extend(NodeSpec(label::Times{}), preds)); break;
      case 2: ps.push_back(g.extend(NodeSpec(label::Delta{}), preds)); break;
      case 3: ps.push_back(g.extend({label::BlackBox{"F"}, NodeClass::Plain, NodeKind::P}, preds)); break;
      default: {
        std::vector<NodeId> tensors;
        for (NodeId p : preds) tensors.push_back(g.extend(NodeSpec(label::Tensor{}), {p, c}));
        NodeId agg = g.extend(NodeSpec(label::Agg{"COUNT", Atom{std::int64_t(tensors.size())}}), tensors);
        ps.push_back(g.extend(NodeSpec(label::Times{}), {preds[0], agg}));
      }
    }
  }
  return g;
}

// Independent deletion oracle: a node survives unless its label's rule says otherwise.
std::vector<bool> oracle_mask(const ProvGraph& g, const std::set<NodeId>& seeds) {
  std::vector<bool> dead(g.id_bound(), false);
  for (NodeId n : topological_nodes(g)) {
    const ProvNode& node = g.node(n);
    const auto preds = g.predecessors(n);
    if (seeds.count(n)) {
      dead[raw(n)] = true;
      continue;
    }
    if (preds.empty()) continue;
    std::size_t d = 0;
    for (NodeId p : preds) d += dead[raw(p)];
    if (node.is<label::Tensor>()) {
      bool p_dead = false;
      for (NodeId p : preds) p_dead |= g.node(p).kind == NodeKind::P && dead[raw(p)];
      dead[raw(n)] = p_dead;
    } else if (node.is<label::Times>() || node.is<label::BlackBox>()) {
      dead[raw(n)] = d > 0;
    } else {
      dead[raw(n)] = d == preds.size();
    }
  }
  return dead;
}

}  // namespace

TEST(Selector, ResolvesNamesAndPrefixes) {
  const std::set<std::string> known = {"agg", "dealer1", "dealer2", "xor"};
  EXPECT_EQ(resolve_selector("dealer*", known), (std::set<std::string>{"dealer1", "dealer2"}));
  EXPECT_EQ(resolve_selector("agg,xor", known), (std::set<std::string>{"agg", "xor"}));
  EXPECT_EQ(resolve_selector("*", known), known);
  EXPECT_THROW(resolve_selector("car", known), Error);
  EXPECT_THROW(resolve_selector("foo*", known), Error);
}

TEST(Zoom, DealerRoundTripOnFixture) {
  auto base = example_graph();
  ZoomView v(base);
  ZoomView out = zoom_out(v, "dealer*");
  EXPECT_GT(out.hidden_count(), 0u);
  EXPECT_LT(out.graph().node_count(), base->node_count());
  const GraphStats s = stats(out.graph());
  EXPECT_EQ(s.cls("meta"), 8u);  // four dealers, bid and sale invocations
  EXPECT_EQ(s.label("BB(CalcBid)"), 0u);
  for (const char* c : {"i", "o", "s", "m"}) EXPECT_EQ(s.cls(c), stats(*base).cls(c)) << c;
  EXPECT_TRUE(identical(zoom_in(out, "dealer*").graph(), *base));
  // Zooming in on one module leaves the others collapsed.
  ZoomView partial = zoom_in(out, "dealer1");
  EXPECT_EQ(partial.collapsed(), (std::set<std::string>{"dealer2", "dealer3", "dealer4"}));
}

TEST(Zoom, ReopenFromSerializedView) {
  auto base = example_graph();
  ZoomView out = zoom_out(ZoomView(base), "dealer*,agg");
  const ProvGraph loaded = deserialize(serialize(out.graph()));
  ASSERT_TRUE(loaded.view());
  ZoomView again = reopen_view(base, loaded);
  EXPECT_EQ(again.collapsed(), out.collapsed());
  EXPECT_TRUE(identical(again.graph(), out.graph()));
  EXPECT_TRUE(identical(zoom_in(again, "dealer*,agg").graph(), *base));
  EXPECT_THROW(zoom_in(again, "and"), Error);
}

TEST(Zoom, InternalsExcludeBoundaryNodes) {
  auto base = example_graph();
  for (const auto& n : topological_nodes(*base)) {
    if (!base->node(n).is<label::Invocation>()) continue;
    for (NodeId h : invocation_internals(*base, n)) {
      EXPECT_EQ(base->node(h).cls, NodeClass::Plain);
      EXPECT_FALSE(base->node(h).is<label::Token>());
    }
  }
}

TEST(Deletion, RulesPerLabel) {
  ProvGraph g;
  NodeId x = g.fresh_token(NodeClass::Input, "x");
  NodeId y = g.fresh_token(NodeClass::Input, "y");
  NodeId c = g.extend(NodeSpec(label::Const{Atom{std::int64_t{3}}}), {});
  NodeId plus = g.extend(NodeSpec(label::Plus{}), {x, y});
  NodeId times = g.extend(NodeSpec(label::Times{}), {x, y});
  NodeId tx = g.extend(NodeSpec(label::Tensor{}), {x, c});
  NodeId ty = g.extend(NodeSpec(label::Tensor{}), {y, c});
  NodeId agg = g.extend(NodeSpec(label::Agg{"SUM", Atom{std::int64_t{6}}}), {tx, ty});
  const NodeId seed[] = {x};
  auto r = delete_propagate(g, seed);
  EXPECT_FALSE(r.is_deleted(plus));
  EXPECT_TRUE(r.is_deleted(times));
  EXPECT_TRUE(r.is_deleted(tx));
  EXPECT_FALSE(r.is_deleted(agg));
  EXPECT_FALSE(r.is_deleted(c));
  ASSERT_TRUE(r.recomputed.count(agg));
  EXPECT_EQ(r.recomputed.at(agg), Atom{std::int64_t{3}});
  EXPECT_EQ(std::get<label::Agg>(r.surviving.node(agg).label).value, Atom{std::int64_t{3}});
  const NodeId both[] = {x, y};
  EXPECT_TRUE(depends_on(g, agg, both));
  EXPECT_TRUE(depends_on(g, plus, both));
  EXPECT_THROW(check_deletable(g, std::vector<NodeId>{plus}), FormatError);
}

TEST(Deletion, MatchesIndependentRulesOnRandomGraphs) {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 200; ++round) {
    ProvGraph g = random_graph(rng);
    std::set<NodeId> seeds;
    for (std::uint32_t t = 0; t < 5; ++t) {
      if (std::bernoulli_distribution(0.35)(rng)) seeds.insert(node_id(t));
    }
    const std::vector<NodeId> sv(seeds.begin(), seeds.end());
    const auto mask = deletion_mask(g, sv);
    const auto want = oracle_mask(g, seeds);
    for (std::uint32_t i = 0; i < g.id_bound(); ++i) EXPECT_EQ(mask[i], want[i]) << "node " << i;
    auto res = delete_propagate(g, sv);
    EXPECT_EQ(res.surviving.node_count() + res.deleted.size(), g.node_count());
  }
}

TEST(Dependency, SetAgreesWithSingleSeedQueries) {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 100; ++round) {
    ProvGraph g = random_graph(rng);
    for (NodeId n : topological_nodes(g)) {
      auto deps = dependency_set(g, n);
      std::set<NodeId> got(deps.begin(), deps.end());
      std::set<NodeId> want;
      for (std::uint32_t t = 0; t < 5; ++t) {
        if (depends_on(g, n, node_id(t))) want.insert(node_id(t));
      }
      EXPECT_EQ(got, want);
    }
  }
}

TEST(Subgraph, ContainsAncestorsAndDescendants) {
  ProvGraph g;
  NodeId x = g.fresh_token(NodeClass::Input, "x");
  NodeId y = g.fresh_token(NodeClass::Input, "y");
  NodeId z = g.fresh_token(NodeClass::Input, "z");
  NodeId a = g.extend(NodeSpec(label::Times{}), {x, y});
  NodeId b = g.extend(NodeSpec(label::Plus{}), {a, z});
  NodeId unrelated = g.extend(NodeSpec(label::Plus{}), {z});
  ProvGraph s = subgraph(g, a);
  for (NodeId n : {x, y, z, a, b}) EXPECT_TRUE(s.contains(n));
  EXPECT_FALSE(s.contains(unrelated));
  EXPECT_EQ(s.edge_count(), 4u);
  std::vector<bool> keep(g.id_bound(), false);
  keep[raw(x)] = keep[raw(y)] = keep[raw(a)] = true;
  EXPECT_EQ(induced(g, keep).edge_count(), 2u);
}

TEST(Topology, OrderRespectsEdges) {
  std::mt19937_64 rng(2);
  ProvGraph g = random_graph(rng);
  std::map<NodeId, std::size_t> pos;
  const auto order = topological_nodes(g);
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  EXPECT_EQ(order.size(), g.node_count());
  for (NodeId n : order) {
    for (NodeId p : g.predecessors(n)) EXPECT_LT(pos.at(p), pos.at(n));
  }
  const auto succ = successors(g);
  std::size_t edges = 0;
  for (const auto& s : succ) edges += s.size();
  EXPECT_EQ(edges, g.edge_count());
}
