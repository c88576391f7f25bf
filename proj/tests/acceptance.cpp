// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "lipstick/pigparse.hpp"
#include "lipstick/provquery.hpp"
#include "lipstick/workflowgen.hpp"
#include "oracle.hpp"

using namespace lipstick;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail.str("");
      detail << what;
    }
  }
};

// Graphs produced by criteria 1-6, re-checked by criterion 7.
std::vector<ProvGraph> g_produced;

const pig::BBRegistry& bbs() {
  static const pig::BBRegistry r = gen::dealership_black_boxes();
  return r;
}

struct Dealers4 {
  WorkflowDef def;
  std::unique_ptr<WorkflowRunner> runner;
  const InvocationRecord* dealer1 = nullptr;
  NodeId begin{}, end{};  // node id range of dealer1's bid invocation
  NodeId request_token{}, c2_token{}, c3_token{};
};

Dealers4 run_dealers4() {
  const std::string dir = oracle::fixture_dir("dealers4");
  Dealers4 ex;
  ex.def = read_workflow_file(dir + "/workflow.lp");
  RunOptions opts;
  opts.keep_intermediates = true;
  ex.runner = std::make_unique<WorkflowRunner>(ex.def, bbs(), opts);
  ex.runner->load_state(read_state_dir(dir + "/state", ex.def));
  ex.runner->execute_sequence(read_input_sequence(dir + "/input", ex.def, 1));
  const RunLog& log = ex.runner->log();
  for (const auto& inv : log.invocations) {
    if (inv.node == "dealer1") ex.dealer1 = &inv;
  }
  ex.begin = ex.dealer1->invocation;
  ex.end = node_id(ex.runner->graph().id_bound());
  ex.runner->graph().for_each_node([&](const ProvNode& n) {
    if (n.is<label::Invocation>() && raw(n.id) > raw(ex.begin) && raw(n.id) < raw(ex.end)) ex.end = n.id;
  });
  const StateData state = ex.runner->state_data();
  for (const auto& [tok, o] : log.tokens) {
    if (!o.state && o.owner == "request") ex.request_token = o.node;
    if (o.state && o.owner == "dealer1" && o.relation == "Cars") {
      const auto& bag = state.at("dealer1").at("Cars");
      const auto& id = std::get<std::string>(bag.tuples.at(o.ordinal).atom(0));
      if (id == "C_2") ex.c2_token = o.node;
      if (id == "C_3") ex.c3_token = o.node;
    }
  }
  return ex;
}

// --- 1 --------------------------------------------------------------------------

Outcome golden_tables() {
  Outcome out;
  const auto start = clock_type::now();
  Dealers4 ex = run_dealers4();
  const double elapsed = seconds_since(start);
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"ReqModel", "Civic\n"},
      {"Inventory", "C_2\tCivic\nC_3\tCivic\n"},
      {"SoldInventory", ""},
      {"CarsByModel", "Civic\t{(C_2,Civic),(C_3,Civic)}\n"},
      {"SoldByModel", ""},
      {"NumCarsByModel", "Civic\t2\n"},
      {"NumSoldByModel", ""},
      {"AllInfoByModel", "Civic\t{(P_1,B_1,Civic)}\t{(Civic,2)}\t{}\n"},
      {"InventoryBids", "B_1\tP_1\tCivic\t20800\n"},
  };
  for (const auto& [alias, text] : expected) {
    const auto it = ex.dealer1->env.find(alias);
    out.require(it != ex.dealer1->env.end(), alias + " missing");
    if (it == ex.dealer1->env.end()) break;
    const std::string got = format_bag(strip(it->second->bag));
    out.require(got == text, alias + " = '" + got + "'");
  }
  out.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  if (out.ok) out.detail << "9 tables match, " << static_cast<int>(elapsed * 1000) << " ms";
  g_produced.push_back(ex.runner->graph());
  return out;
}

// --- 2 --------------------------------------------------------------------------

Outcome figure_structure() {
  Outcome out;
  Dealers4 ex = run_dealers4();
  const ProvGraph& g = ex.runner->graph();
  std::size_t inv = 0, cls_i_req = 0, s_c2 = 0, s_c3 = 0, join_times = 0, delta = 0, count = 0, bb = 0, cls_o = 0;
  for (std::uint32_t id = raw(ex.begin); id < raw(ex.end); ++id) {
    const NodeId n = node_id(id);
    if (!g.contains(n)) continue;
    const ProvNode& node = g.node(n);
    const auto preds = g.predecessors(n);
    if (node.is<label::Invocation>()) ++inv;
    if (node.cls == NodeClass::Input && depends_on(g, n, ex.request_token)) ++cls_i_req;
    if (node.cls == NodeClass::State) {
      if (std::count(preds.begin(), preds.end(), ex.c2_token)) ++s_c2;
      if (std::count(preds.begin(), preds.end(), ex.c3_token)) ++s_c3;
    }
    if (node.cls == NodeClass::Plain && node.is<label::Times>() &&
        std::none_of(preds.begin(), preds.end(), [&](NodeId p) { return g.node(p).is<label::BlackBox>(); }))
      ++join_times;
    if (node.is<label::Delta>()) ++delta;
    if (const auto* a = std::get_if<label::Agg>(&node.label); a && a->op == "COUNT") ++count;
    if (const auto* b = std::get_if<label::BlackBox>(&node.label); b && b->name == "CalcBid") ++bb;
    if (node.cls == NodeClass::Output) ++cls_o;
  }
  out.require(inv == 1, "invocation nodes " + std::to_string(inv));
  out.require(cls_i_req >= 1, "no class-i node over the request");
  out.require(s_c2 == 1 && s_c3 == 1, "class-s wrappers of C_2/C_3: " + std::to_string(s_c2) + "/" + std::to_string(s_c3));
  out.require(join_times == 2, "join Times nodes " + std::to_string(join_times));
  out.require(delta == 2, "Delta nodes " + std::to_string(delta));
  out.require(count == 1, "Agg(COUNT) nodes " + std::to_string(count));
  out.require(bb == 1, "BB(CalcBid) nodes " + std::to_string(bb));
  out.require(cls_o == 1, "class-o nodes " + std::to_string(cls_o));
  if (out.ok) {
    out.detail << "1 m, " << cls_i_req << " i, s(C_2)=1, s(C_3)=1, 2 Times, 2 Delta, 1 COUNT, 1 CalcBid, 1 o";
  }
  return out;
}

// --- 3 --------------------------------------------------------------------------

Outcome single_request_deletion() {
  Outcome out;
  Dealers4 ex = run_dealers4();
  const ProvGraph& g = ex.runner->graph();
  NodeId bid = kNoNode, count_node = kNoNode;
  for (std::uint32_t id = raw(ex.begin); id < raw(ex.end); ++id) {
    if (!g.contains(node_id(id))) continue;
    const ProvNode& n = g.node(node_id(id));
    if (n.cls == NodeClass::Output) bid = n.id;
    if (const auto* a = std::get_if<label::Agg>(&n.label); a && a->op == "COUNT") count_node = n.id;
  }
  out.require(bid != kNoNode && count_node != kNoNode, "bid or COUNT node not found");
  if (!out.ok) return out;
  const bool dep_c2 = depends_on(g, bid, ex.c2_token);
  const bool dep_req = depends_on(g, bid, ex.request_token);
  out.require(!dep_c2, "bid depends on C_2");
  out.require(dep_req, "bid does not depend on the request");
  const NodeId seeds[] = {ex.c2_token};
  auto res = delete_propagate(g, seeds);
  const auto it = res.recomputed.find(count_node);
  const bool count_one = it != res.recomputed.end() && it->second == Atom{std::int64_t{1}};
  out.require(count_one, "COUNT not recomputed to 1");
  out.require(!res.is_deleted(bid), "bid deleted with C_2");
  if (out.ok) out.detail << "depends(bid,C_2)=false, depends(bid,request)=true, COUNT 2 -> 1";
  g_produced.push_back(std::move(res.surviving));
  return out;
}

// --- 4 --------------------------------------------------------------------------

Outcome polynomial_oracle() {
  Outcome out;
  const auto start = clock_type::now();
  std::mt19937_64 rng(20240611);
  const std::map<std::string, Schema> env = {
      {"R", Schema{"R", {{"a", AtomKind::Int}, {"b", AtomKind::Int}}}},
      {"S", Schema{"S", {{"c", AtomKind::Int}, {"d", AtomKind::Int}}}},
  };
  std::map<std::string, std::size_t> kinds;
  std::size_t programs = 0, tuples = 0;
  while (programs < 400) {
    oracle::GenOptions opts;
    if (programs % 2) {
      using K = oracle::Step::Kind;
      opts.max_ops = 5;
      opts.kinds = {K::Group, K::Cogroup, K::Aggregate, K::Flatten, K::Filter, K::Project};
    }
    auto prog = oracle::random_program(rng, env, opts);
    if (prog.steps.empty()) continue;
    ++programs;
    for (const auto& s : prog.steps) ++kinds[oracle::kind_name(s.kind)];

    ProvGraph g;
    Env eng;
    oracle::OEnv orc;
    for (const auto& [name, schema] : env) {
      Bag data = oracle::random_flat_bag(rng, 2, 8);
      auto rel = std::make_shared<AnnotatedRelation>();
      rel->schema = schema;
      orc[name];
      for (std::size_t i = 0; i < data.tuples.size(); ++i) {
        ATuple t;
        for (const auto& v : data.tuples[i].values) t.values.emplace_back(std::get<Atom>(v));
        t.ann.pnode = g.fresh_token(NodeClass::Input, name + "#" + std::to_string(i));
        rel->bag.tuples.push_back(t);
        oracle::OTuple o;
        for (const auto& v : data.tuples[i].values) o.values.push_back({std::get<Atom>(v), nullptr});
        o.ann = oracle::Poly::var(oracle::token_name(std::get<label::Token>(g.node(t.ann.pnode).label).token_id));
        orc[name].push_back(std::move(o));
      }
      eng[name] = rel;
    }
    auto checked = pig::resolve_and_typecheck(pig::parse(prog.text), env);
    eval_program(OpContext(&g), checked, eng);
    oracle::evaluate(prog.steps, orc);
    for (const auto& s : prog.steps) {
      auto got = oracle::graph_view(g, eng.at(s.alias)->bag);
      auto want = oracle::oracle_view(orc.at(s.alias));
      tuples += got.size();
      out.require(got == want, "program mismatch at " + s.alias + ":\n" + prog.text);
    }
    g_produced.push_back(std::move(g));
    if (!out.ok) break;
  }
  const double elapsed = seconds_since(start);
  out.require(kinds.size() == 9, "not every operator kind was generated");
  out.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  if (out.ok) {
    out.detail << programs << " programs, " << tuples << " tuples, ops:";
    for (const auto& [k, n] : kinds) out.detail << " " << k << "=" << n;
    out.detail << ", " << static_cast<int>(elapsed * 1000) << " ms";
  }
  return out;
}

// --- 5 --------------------------------------------------------------------------

Outcome deletion_vs_reexecution() {
  Outcome out;
  std::mt19937_64 rng(77);
  const pig::BBRegistry none;
  std::size_t workflows = 0, deleted_total = 0, compared = 0;
  while (workflows < 60 && out.ok) {
    auto w = oracle::random_workflow(rng);
    WorkflowRunner run(w.def, none);
    run.load_state(w.state);
    run.execute_sequence(w.inputs);
    const RunLog& log = run.log();
    if (log.tokens.empty()) continue;
    ++workflows;

    std::vector<std::uint64_t> doomed;
    std::vector<NodeId> seeds;
    std::bernoulli_distribution coin(0.3);
    for (const auto& [tok, o] : log.tokens) {
      if (coin(rng)) {
        doomed.push_back(tok);
        seeds.push_back(o.node);
      }
    }
    deleted_total += seeds.size();
    const ProvGraph& g = run.graph();
    auto res = delete_propagate(g, seeds);
    std::vector<bool> mask(g.id_bound(), false);
    for (NodeId n : res.deleted) mask[raw(n)] = true;

    auto inputs = w.inputs;
    auto state = w.state;
    oracle::remove_tokens(log, doomed, inputs, state);
    RunOptions off;
    off.provenance = false;
    WorkflowRunner again(w.def, none, off);
    again.load_state(state);
    again.execute_sequence(inputs);

    for (std::size_t e = 0; e < log.executions.size(); ++e) {
      const auto& before = log.executions[e].outputs.at("b").at("P")->bag;
      const auto& after = again.log().executions.at(e).outputs.at("b").at("P")->bag;
      auto got = oracle::surviving_keys(before, mask, res.recomputed);
      auto want = oracle::plain_keys(strip(after));
      compared += want.size();
      out.require(got == want, "mismatch in execution " + std::to_string(e) + " of\n" + w.text);
    }
    g_produced.push_back(g);
    g_produced.push_back(std::move(res.surviving));
  }
  if (out.ok) out.detail << workflows << " workflows, " << deleted_total << " deleted facts, " << compared
                         << " surviving tuples compared";
  return out;
}

// --- 6 --------------------------------------------------------------------------

std::map<std::string, std::size_t> boundary_counts(const ProvGraph& g) {
  std::map<std::string, std::size_t> c;
  g.for_each_node([&](const ProvNode& n) {
    if (n.cls == NodeClass::Input || n.cls == NodeClass::Output || n.cls == NodeClass::State ||
        n.cls == NodeClass::Module)
      ++c[std::string(to_string(n.cls))];
  });
  return c;
}

Outcome zoom_roundtrip() {
  Outcome out;
  std::mt19937_64 rng(4242);
  const pig::BBRegistry none;
  std::size_t checks = 0, hidden = 0;
  for (int r = 0; r < 20 && out.ok; ++r) {
    gen::GeneratedRun run;
    const pig::BBRegistry* reg = &none;
    if (r % 2 == 0) {
      gen::DealershipParams p;
      p.num_cars = 4 * std::uniform_int_distribution<std::size_t>(5, 25)(rng);
      p.num_exec = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
      p.seed = rng();
      p.accept_lo = 0.3;
      p.accept_hi = 0.9;
      run = gen::gen_dealerships(p);
      reg = &bbs();
    } else {
      gen::ArcticParams p;
      p.topology = static_cast<gen::Topology>(std::uniform_int_distribution<int>(0, 2)(rng));
      p.num_stations = std::uniform_int_distribution<std::size_t>(1, 3)(rng) * 2;
      p.fanout = 2;
      p.selectivity = static_cast<gen::Selectivity>(std::uniform_int_distribution<int>(1, 3)(rng));
      p.num_exec = 2;
      p.seed = rng();
      run = gen::gen_arctic(p);
    }
    WorkflowRunner runner(run.def, *reg);
    runner.load_state(run.state);
    runner.execute_sequence(run.inputs);
    auto base = std::make_shared<const ProvGraph>(runner.graph());
    const auto base_bound = boundary_counts(*base);
    ZoomView view(base);
    for (const auto& m : invoked_modules(*base)) {
      ZoomView zoomed = zoom_out(view, m);
      ZoomView back = zoom_in(zoomed, m);
      hidden += zoomed.hidden_count();
      ++checks;
      out.require(identical(back.graph(), *base), "zoom_in(zoom_out(" + m + ")) differs from the base");
      out.require(boundary_counts(zoomed.graph()) == base_bound, "boundary counts change when zooming " + m);
      if (m.rfind("dealer", 0) == 0 || m == "sta1") g_produced.push_back(zoomed.graph());
    }
    ZoomView all = zoom_out(view, "*");
    out.require(identical(zoom_in(all, "*").graph(), *base), "zoom of all modules does not round-trip");
    out.require(boundary_counts(all.graph()) == base_bound, "boundary counts change when zooming all");
    g_produced.push_back(all.graph());
    g_produced.push_back(*base);
  }
  if (out.ok) out.detail << "20 runs, " << checks << " module zooms, " << hidden << " nodes hidden in total";
  return out;
}

// --- 7 --------------------------------------------------------------------------

Outcome serialization() {
  Outcome out;
  std::size_t bytes = 0;
  for (const auto& g : g_produced) {
    const std::string first = serialize(g);
    ProvGraph again = deserialize(first);
    const std::string second = serialize(again);
    bytes += first.size();
    out.require(first == second, "serialize/deserialize/serialize not byte-identical");
    out.require(identical(g, again), "deserialized graph differs");
    if (!out.ok) break;
  }
  out.require(g_produced.size() > 100, "too few graphs collected");
  if (out.ok) out.detail << g_produced.size() << " graphs, " << bytes << " bytes";
  return out;
}

// --- 8 --------------------------------------------------------------------------

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
}

gen::DealershipParams no_sale(std::size_t num_exec) {
  gen::DealershipParams p;
  p.num_cars = 2000;
  p.num_exec = num_exec;
  p.seed = 5;
  p.accept_lo = p.accept_hi = 0.0;
  return p;
}

Outcome linear_growth() {
  Outcome out;
  const auto start = clock_type::now();
  std::vector<double> execs, nodes, build;
  for (std::size_t n = 10; n <= 100; n += 10) {
    auto run = gen::gen_dealerships(no_sale(n));
    WorkflowRunner runner(run.def, bbs());
    runner.load_state(run.state);
    runner.execute_sequence(run.inputs);
    const std::string text = serialize(runner.graph());
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t = clock_type::now();
      ProvGraph g = deserialize(text);
      times.push_back(seconds_since(t) * 1000.0);
    }
    std::sort(times.begin(), times.end());
    execs.push_back(static_cast<double>(runner.log().executions.size()));
    nodes.push_back(static_cast<double>(runner.graph().node_count()));
    build.push_back(times[times.size() / 2]);
  }
  const double r_build = r_squared(nodes, build);
  const double r_nodes = r_squared(execs, nodes);
  const double elapsed = seconds_since(start);
  out.require(r_build >= 0.9, "build time vs nodes R^2 = " + std::to_string(r_build));
  out.require(r_nodes >= 0.95, "nodes vs numExec R^2 = " + std::to_string(r_nodes));
  out.require(elapsed < 120, "took " + std::to_string(elapsed) + " s");
  char buf[200];
  std::snprintf(buf, sizeof buf, "R^2(build~nodes)=%.4f, R^2(nodes~numExec)=%.4f, %.0f..%.0f nodes, %.1f s", r_build,
                r_nodes, nodes.front(), nodes.back(), elapsed);
  if (out.ok) out.detail << buf;
  return out;
}

// --- 9 --------------------------------------------------------------------------

Outcome sparsity() {
  Outcome out;
  std::unique_ptr<WorkflowRunner> runner;
  gen::GeneratedRun run;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    gen::DealershipParams p;
    p.num_cars = 2000;
    p.num_exec = 100;
    p.seed = seed;
    run = gen::gen_dealerships(p);
    runner = std::make_unique<WorkflowRunner>(run.def, bbs());
    runner->load_state(run.state);
    runner->execute_sequence(run.inputs);
    if (runner->log().executions.back().has_output()) break;
  }
  const RunLog& log = runner->log();
  out.require(log.executions.back().has_output(), "no seed produced a sale");
  if (!out.ok) return out;
  const ProvGraph& g = runner->graph();
  const std::size_t e = log.executions.size() - 1;
  std::set<NodeId> state_tokens, path_inputs, all_inputs;
  for (const auto& [tok, o] : log.tokens) {
    if (o.state) {
      state_tokens.insert(o.node);
    } else {
      all_inputs.insert(o.node);
      if (o.execution == e) path_inputs.insert(o.node);
    }
  }
  double worst = 0;
  std::size_t sales = 0;
  for (const auto& t : log.executions.back().outputs.at("car").at("SoldCar")->bag.tuples) {
    ++sales;
    std::set<NodeId> deps_state, deps_input;
    for (NodeId d : dependency_set(g, t.ann.pnode)) {
      if (state_tokens.count(d)) deps_state.insert(d);
      if (all_inputs.count(d)) deps_input.insert(d);
    }
    const double frac = static_cast<double>(deps_state.size()) / static_cast<double>(state_tokens.size());
    worst = std::max(worst, frac);
    out.require(frac < 0.10, "sale depends on " + std::to_string(frac * 100) + "% of state");
    out.require(deps_input == path_inputs, "sale input dependencies differ from its request/choice");
  }
  // Consistency of the sale with the accepted bid.
  std::size_t sold_rows = 0;
  std::string sold_bid;
  const StateData final_state = runner->state_data();
  for (const auto& [module, rels] : final_state) {
    if (auto it = rels.find("SoldCars"); it != rels.end()) {
      sold_rows += it->second.size();
      for (const auto& t : it->second.tuples) sold_bid = std::get<std::string>(t.atom(1));
    }
  }
  const auto& sale = log.executions.back().outputs.at("car").at("SoldCar")->bag.tuples.front();
  out.require(sales == 1 && sold_rows == 1, "expected exactly one sale");
  out.require(sold_bid == std::get<std::string>(sale.atom(1)), "sold BidId differs from the accepted bid");
  if (out.ok) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "sale after %zu executions depends on %.2f%% of %zu state tuples and %zu inputs (coarse: 100%%)",
                  log.executions.size(), worst * 100, state_tokens.size(), path_inputs.size());
    out.detail << buf;
  }
  return out;
}

// --- 10 -------------------------------------------------------------------------

Outcome overhead() {
  Outcome out;
  std::vector<gen::BenchmarkSpec> specs;
  specs.push_back(gen::dealership_benchmark(no_sale(100)));
  for (auto topo : {gen::Topology::Parallel, gen::Topology::Serial, gen::Topology::Dense}) {
    gen::ArcticParams p;
    p.topology = topo;
    p.num_stations = 24;
    p.fanout = 6;
    p.selectivity = gen::Selectivity::Month;
    p.num_exec = 10;
    specs.push_back(gen::arctic_benchmark(p));
  }
  std::ostringstream summary;
  for (const auto& spec : specs) {
    auto means = gen::run_benchmark(spec, 3).means();
    const double off = means.at(0).exec_time_ms, on = means.at(1).exec_time_ms;
    const double ratio = on / off;
    char buf[100];
    std::snprintf(buf, sizeof buf, "%s%s %.2fx", summary.str().empty() ? "" : ", ",
                  (spec.family == "arctic" ? spec.topology : spec.family).c_str(), ratio);
    summary << buf;
    out.require(ratio <= 5.0, spec.family + "/" + spec.topology + " overhead " + std::to_string(ratio));
  }
  if (out.ok) out.detail << summary.str();
  return out;
}

// --- 11 -------------------------------------------------------------------------

Outcome arctic_semantics() {
  Outcome out;
  std::size_t runs = 0, outputs = 0;
  for (auto topo : {gen::Topology::Parallel, gen::Topology::Serial, gen::Topology::Dense}) {
    for (std::size_t stations : {2, 4, 12, 24}) {
      std::vector<std::size_t> edges, selected;
      for (auto sel : {gen::Selectivity::Year, gen::Selectivity::Month, gen::Selectivity::Season, gen::Selectivity::All}) {
        gen::ArcticParams p;
        p.topology = topo;
        p.num_stations = stations;
        p.fanout = stations == 24 ? 6 : 2;
        p.selectivity = sel;
        p.num_exec = 3;
        p.seed = 11 + stations;
        auto run = gen::gen_arctic(p);
        const pig::BBRegistry none;
        WorkflowRunner runner(run.def, none);
        runner.load_state(run.state);
        runner.execute_sequence(run.inputs);
        ++runs;
        for (std::size_t e = 0; e < runner.log().executions.size(); ++e) {
          const auto& bag = runner.log().executions[e].outputs.at("out").at("Result")->bag;
          const auto want = oracle::arctic_direct_min(run, p, e);
          const bool match = want && bag.size() == 1 && std::get<double>(bag.tuples[0].atom(1)) == *want;
          ++outputs;
          out.require(match, gen::to_string(topo) + "/" + std::to_string(stations) + "/" + gen::to_string(sel) +
                                 " execution " + std::to_string(e) + " differs from the direct scan");
        }
        edges.push_back(runner.graph().edge_count());
        selected.push_back(oracle::arctic_selected_count(run, p, 0));
      }
      for (std::size_t i = 1; i < edges.size(); ++i) {
        out.require(selected[i - 1] < selected[i], "selected subsets not nested by size");
        out.require(edges[i - 1] < edges[i], gen::to_string(topo) + "/" + std::to_string(stations) +
                                                 ": edge counts not increasing with selectivity");
      }
    }
  }
  if (out.ok) out.detail << runs << " runs, " << outputs << " outputs match the direct scan; edges year < month < season < all";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"golden dealership tables", golden_tables},
      {"dealer invocation graph structure", figure_structure},
      {"single-request deletion semantics", single_request_deletion},
      {"polynomial oracle equivalence", polynomial_oracle},
      {"deletion vs re-execution", deletion_vs_reexecution},
      {"zoom roundtrip", zoom_roundtrip},
      {"serialization round trip", serialization},
      {"linear graph growth", linear_growth},
      {"fine-grained sparsity", sparsity},
      {"provenance overhead bound", overhead},
      {"Arctic semantics and selectivity", arctic_semantics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail.str("");
      o.detail << "exception: " << e.what();
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
