// lipstick: run workflows with provenance tracking, query provenance graphs,
// and generate or benchmark the WorkflowGen families.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lipstick/provquery.hpp"
#include "lipstick/workflowgen.hpp"

namespace fs = std::filesystem;
using namespace lipstick;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kEval = 3;

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

std::string exec_dir(std::size_t e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "exec-%04zu", e + 1);
  return buf;
}

NodeId parse_node(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v >= raw(kNoNode)) throw FormatError("bad node id '" + s + "'");
  return node_id(v);
}

std::vector<NodeId> parse_node_list(const std::string& s) {
  std::vector<NodeId> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse_node(item));
  }
  return out;
}

void emit_graph(const ProvGraph& g, const std::string& path) {
  if (path.empty() || path == "-") {
    serialize(g, std::cout);
  } else {
    write_graph_file(path, g);
  }
}

// --- run ------------------------------------------------------------------------

struct RunArgs {
  std::string workflow, input, state, out, graph;
  std::size_t num_exec = 0;
  bool no_prov = false;
  bool trace = false;
  bool simplified_agg = false;
};

int cmd_run(const RunArgs& a) {
  WorkflowDef def = read_workflow_file(a.workflow);
  StateData state = read_state_dir(a.state, def);
  auto inputs = read_input_sequence(a.input, def, a.num_exec);
  const auto bbs = gen::dealership_black_boxes();

  RunOptions opts;
  opts.provenance = !a.no_prov;
  opts.keep_intermediates = a.trace;
  opts.eval.simplified_agg = a.simplified_agg;
  WorkflowRunner runner(def, bbs, opts);
  runner.load_state(state);
  const RunLog& log = runner.execute_sequence(inputs);

  if (!a.out.empty()) {
    for (std::size_t e = 0; e < log.executions.size(); ++e) {
      std::map<std::string, RelationData> outs;
      for (const auto& [node, env] : log.executions[e].outputs) {
        for (const auto& [rel, r] : env) outs[node][rel] = strip(r->bag);
      }
      write_relation_dir((fs::path(a.out) / "output" / exec_dir(e)).string(), outs);
    }
    write_relation_dir((fs::path(a.out) / "state").string(), runner.state_data());
    if (a.trace) {
      for (const auto& inv : log.invocations) {
        std::map<std::string, RelationData> rels;
        for (const auto& [alias, r] : inv.env) rels[inv.node][alias] = strip(r->bag);
        write_relation_dir((fs::path(a.out) / "trace" / exec_dir(inv.execution)).string(), rels);
      }
    }
  }
  if (!a.no_prov && !a.graph.empty()) write_graph_file(a.graph, runner.graph());
  std::cout << "executions: " << log.executions.size() << "\n";
  if (!a.no_prov) std::cout << format_stats(stats(runner.graph()));
  return kOk;
}

// --- query ------------------------------------------------------------------------

struct QueryArgs {
  std::string graph, base, out = "-";
  std::string zoom_out, zoom_in, del, sub;
  std::vector<std::string> depends;
  bool stats = false;
  bool has_delete = false;
};

ZoomView open_view(const std::string& graph_path, const std::string& base_path) {
  ProvGraph g = read_graph_file(graph_path);
  if (!g.view()) return ZoomView(std::make_shared<const ProvGraph>(std::move(g)));
  if (base_path.empty()) throw UsageError("graph is a zoom view; pass its base graph with --base");
  auto base = std::make_shared<const ProvGraph>(read_graph_file(base_path));
  return reopen_view(base, g);
}

int cmd_query(const QueryArgs& a) {
  ZoomView view = open_view(a.graph, a.base);
  const ProvGraph& g = view.graph();
  if (!a.zoom_out.empty()) {
    emit_graph(zoom_out(view, a.zoom_out).graph(), a.out);
  } else if (!a.zoom_in.empty()) {
    emit_graph(zoom_in(view, a.zoom_in).graph(), a.out);
  } else if (a.has_delete) {
    auto seeds = parse_node_list(a.del);
    emit_graph(delete_propagate(g, seeds).surviving, a.out);
  } else if (!a.sub.empty()) {
    emit_graph(subgraph(g, parse_node(a.sub)), a.out);
  } else if (!a.depends.empty()) {
    std::cout << (depends_on(g, parse_node(a.depends.at(0)), parse_node(a.depends.at(1))) ? "true" : "false")
              << "\n";
  } else {
    std::cout << format_stats(stats(g));
  }
  return kOk;
}

// --- shell ----------------------------------------------------------------------------

const char* kShellHelp =
    "commands:\n"
    "  zoom-out <modules>     collapse modules (comma list, trailing * matches a prefix)\n"
    "  zoom-in <modules>      expand previously collapsed modules\n"
    "  delete <id,id,...>     propagate deletion and show what disappears\n"
    "  subgraph <id>          ancestors and descendants of a node\n"
    "  depends <n> <seed>     does n disappear when seed is deleted?\n"
    "  stats                  node and edge counts of the current view\n"
    "  node <id>              show a node and its predecessors\n"
    "  save <path>            write the current view graph\n"
    "  reset                  back to the base graph\n"
    "  quit\n";

void show_node(const ProvGraph& g, NodeId n) {
  const ProvNode& node = g.node(n);
  std::cout << raw(n) << " " << to_string(node.kind) << " " << to_string(node.cls) << " "
            << stats_key(node) << " <-";
  for (NodeId p : g.predecessors(n)) std::cout << " " << raw(p);
  std::cout << "\n";
}

int cmd_shell(const std::string& graph_path, std::istream& in) {
  auto base = std::make_shared<const ProvGraph>(read_graph_file(graph_path));
  ZoomView view(base);
  std::optional<ProvGraph> derived;  // result of the last delete/subgraph
  auto current = [&]() -> const ProvGraph& { return derived ? *derived : view.graph(); };
  std::string line;
  std::cout << "lipstick> " << std::flush;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string cmd, arg1, arg2;
    words >> cmd >> arg1 >> arg2;
    try {
      if (cmd.empty()) {
      } else if (cmd == "quit" || cmd == "exit") {
        break;
      } else if (cmd == "help") {
        std::cout << kShellHelp;
      } else if (cmd == "zoom-out") {
        view = zoom_out(view, arg1);
        derived.reset();
        std::cout << "hidden nodes: " << view.hidden_count() << "\n";
      } else if (cmd == "zoom-in") {
        view = zoom_in(view, arg1);
        derived.reset();
        std::cout << "hidden nodes: " << view.hidden_count() << "\n";
      } else if (cmd == "delete") {
        auto r = delete_propagate(view.graph(), parse_node_list(arg1));
        std::cout << "deleted " << r.deleted.size() << " nodes:";
        for (NodeId n : r.deleted) std::cout << " " << raw(n);
        std::cout << "\n";
        for (const auto& [n, v] : r.recomputed) std::cout << "  " << raw(n) << " -> " << atom_to_string(v) << "\n";
        derived = std::move(r.surviving);
      } else if (cmd == "subgraph") {
        derived = subgraph(view.graph(), parse_node(arg1));
        std::cout << derived->node_count() << " nodes, " << derived->edge_count() << " edges\n";
      } else if (cmd == "depends") {
        std::cout << (depends_on(current(), parse_node(arg1), parse_node(arg2)) ? "true" : "false") << "\n";
      } else if (cmd == "stats") {
        std::cout << format_stats(stats(current()));
      } else if (cmd == "node") {
        show_node(current(), parse_node(arg1));
      } else if (cmd == "save") {
        write_graph_file(arg1, current());
      } else if (cmd == "reset") {
        view = ZoomView(base);
        derived.reset();
      } else {
        std::cout << "unknown command '" << cmd << "' (try help)\n";
      }
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    std::cout << "lipstick> " << std::flush;
  }
  return kOk;
}

// --- gen / bench ---------------------------------------------------------------------

void write_generated(const gen::GeneratedRun& run, const std::string& out) {
  fs::create_directories(out);
  std::ofstream(fs::path(out) / "workflow.lp") << format_workflow(run.def);
  write_relation_dir((fs::path(out) / "state").string(), run.state);
  for (std::size_t e = 0; e < run.inputs.size(); ++e) {
    write_relation_dir((fs::path(out) / "input" / exec_dir(e)).string(), run.inputs[e]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipstick: fine-grained workflow provenance"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "execute a workflow and record provenance");
  run_cmd->add_option("workflow", run.workflow, "workflow definition file")->required();
  run_cmd->add_option("input", run.input, "input directory")->required();
  run_cmd->add_option("state", run.state, "initial state directory")->required();
  run_cmd->add_option("-n,--num-exec", run.num_exec, "number of executions (0: one per input subdirectory)");
  run_cmd->add_flag("--no-prov", run.no_prov, "do not track provenance");
  run_cmd->add_option("-o,--out", run.out, "directory for outputs and final state");
  run_cmd->add_option("-g,--graph", run.graph, "provenance graph file to write");
  run_cmd->add_flag("--trace", run.trace, "also write every intermediate relation under <out>/trace");
  run_cmd->add_flag("--simplified-agg", run.simplified_agg, "record aggregates without tensors");
  run_cmd->add_option("--seed", seed, "unused; accepted for uniformity");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "query a provenance graph");
  query_cmd->add_option("graph", query.graph, "graph file")->required();
  query_cmd->add_option("--base", query.base, "base graph when <graph> is a zoom view");
  query_cmd->add_option("-o,--out", query.out, "where graph-valued results go (default stdout)");
  auto* q1 = query_cmd->add_option("--zoom-out", query.zoom_out, "collapse modules");
  auto* q2 = query_cmd->add_option("--zoom-in", query.zoom_in, "expand collapsed modules");
  auto* q3 = query_cmd->add_option("--delete", query.del, "delete base facts (comma list)");
  auto* q4 = query_cmd->add_option("--subgraph", query.sub, "subgraph around a node");
  auto* q5 = query_cmd->add_option("--depends", query.depends, "n seed: does n depend on seed")->expected(2);
  auto* q6 = query_cmd->add_flag("--stats", query.stats, "graph statistics");
  for (auto* a : {q1, q2, q3, q4, q5, q6}) {
    for (auto* b : {q1, q2, q3, q4, q5, q6}) {
      if (a != b) a->excludes(b);
    }
  }

  auto* gen_cmd = app.add_subcommand("gen", "generate a benchmark workflow with data");
  gen_cmd->require_subcommand(1);
  std::string gen_out;
  gen::DealershipParams dp;
  auto* gen_d = gen_cmd->add_subcommand("dealerships", "car dealerships");
  gen_d->add_option("-o,--out", gen_out, "output directory")->required();
  gen::ArcticParams ap;
  std::string topology = "parallel", selectivity = "month";
  auto* gen_a = gen_cmd->add_subcommand("arctic", "Arctic stations");
  gen_a->add_option("-o,--out", gen_out, "output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark setting and print CSV");
  bench_cmd->require_subcommand(1);
  std::size_t repetitions = 5;
  std::string csv;
  bool header = true;
  bench_cmd->add_option("-r,--repetitions", repetitions, "runs per setting");
  bench_cmd->add_option("--csv", csv, "append rows to this file instead of stdout");
  bench_cmd->add_flag("!--no-header", header, "omit the CSV header");
  auto* bench_d = bench_cmd->add_subcommand("dealerships", "car dealerships");
  auto* bench_a = bench_cmd->add_subcommand("arctic", "Arctic stations");

  for (auto* c : {gen_d, bench_d}) {
    c->add_option("--num-cars", dp.num_cars, "cars over all four dealers");
    c->add_option("--num-exec", dp.num_exec, "maximum number of executions");
    c->add_option("--reserve-lo", dp.reserve_lo, "reserve price factor, low end");
    c->add_option("--reserve-hi", dp.reserve_hi, "reserve price factor, high end");
    c->add_option("--accept-lo", dp.accept_lo, "acceptance probability, low end");
    c->add_option("--accept-hi", dp.accept_hi, "acceptance probability, high end");
    c->add_option("--seed", seed, "RNG seed");
  }
  for (auto* c : {gen_a, bench_a}) {
    c->add_option("--topology", topology, "parallel | serial | dense");
    c->add_option("--stations", ap.num_stations, "number of station modules (2..24)");
    c->add_option("--fanout", ap.fanout, "stations per layer (dense)");
    c->add_option("--selectivity", selectivity, "all | season | month | year");
    c->add_option("--num-exec", ap.num_exec, "number of executions");
    c->add_option("--seed", seed, "RNG seed");
  }

  std::string shell_graph;
  auto* shell_cmd = app.add_subcommand("shell", "interactive provenance queries");
  shell_cmd->add_option("graph", shell_graph, "graph file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (query_cmd->parsed()) {
      query.has_delete = q3->count() > 0;
      return cmd_query(query);
    }
    if (shell_cmd->parsed()) return cmd_shell(shell_graph, std::cin);
    dp.seed = seed;
    ap.seed = seed;
    if (gen_a->parsed() || bench_a->parsed()) {
      ap.topology = gen::topology_from_string(topology);
      ap.selectivity = gen::selectivity_from_string(selectivity);
    }
    if (gen_d->parsed()) write_generated(gen::gen_dealerships(dp), gen_out);
    if (gen_a->parsed()) write_generated(gen::gen_arctic(ap), gen_out);
    if (bench_cmd->parsed()) {
      auto spec = bench_d->parsed() ? gen::dealership_benchmark(dp) : gen::arctic_benchmark(ap);
      auto report = gen::run_benchmark(spec, repetitions);
      std::ofstream file;
      if (!csv.empty()) file.open(csv, std::ios::app);
      std::ostream& out = csv.empty() ? std::cout : file;
      if (header) gen::write_csv_header(out);
      gen::write_csv(out, report.rows);
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << "lipstick: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Usage: return kUsage;
      case ErrorKind::Evaluation: return kEval;
      default: return kData;
    }
  } catch (const std::exception& e) {
    std::cerr << "lipstick: " << e.what() << "\n";
    return kData;
  }
}
