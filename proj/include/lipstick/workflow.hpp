#pragma once

// Modules, workflows and their execution. One WorkflowRunner owns the state
// and (optionally) the provenance graph of one run; executions thread state
// from one to the next.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lipstick/evalengine.hpp"
#include "lipstick/pigparse.hpp"
#include "lipstick/provgraph.hpp"
#include "lipstick/relmodel.hpp"

namespace lipstick {

struct ModuleSpec {
  std::string name;
  std::vector<Schema> inputs;
  std::vector<Schema> state;
  std::vector<Schema> outputs;
  pig::Program qstate;
  pig::Program qout;

  const Schema* input(const std::string& rel) const;
  const Schema* state_rel(const std::string& rel) const;
  const Schema* output(const std::string& rel) const;
};

struct WorkflowEdge {
  std::string from;
  std::string to;
  std::vector<std::string> relations;
};

struct Workflow {
  std::vector<std::pair<std::string, std::string>> nodes;  // node id -> module name
  std::vector<WorkflowEdge> edges;
  std::vector<std::string> in;
  std::vector<std::string> out;
  // Stop a sequence after the first execution whose Out nodes emit a tuple.
  bool until_output = false;

  const std::string& module_of(const std::string& node) const;
};

struct WorkflowDef {
  std::map<std::string, ModuleSpec> modules;
  Workflow workflow;
};

/// Reads the workflow definition format (MODULE blocks then a WORKFLOW block).
WorkflowDef parse_workflow(std::string_view text);
WorkflowDef read_workflow_file(const std::string& path);
std::string format_workflow(const WorkflowDef& def);

/// `name:type` lists, e.g. `Cars(CarId:text, Model:text)`; nested bags as
/// `attr:{a:int, b:text}`.
Schema parse_schema_decl(std::string_view text);
std::string format_schema_decl(const Schema& s);

struct WorkflowReport {
  bool ok = true;
  std::string problem;
  explicit operator bool() const { return ok; }
};

WorkflowReport validate_workflow(const Workflow& wf, const std::map<std::string, ModuleSpec>& modules);

/// Deterministic topological order, ties broken by ascending node id.
std::vector<std::string> topological_order(const Workflow& wf);

// --- data ---------------------------------------------------------------------

using RelationData = std::map<std::string, Bag>;            // relation -> bag
using WorkflowInput = std::map<std::string, RelationData>;  // In node -> relations
using StateData = std::map<std::string, RelationData>;      // module -> relations

/// `<owner>.<Rel>.txt` files; owner is a node id (inputs) or module (state).
/// Missing files read as empty relations.
WorkflowInput read_input_dir(const std::string& dir, const WorkflowDef& def);
StateData read_state_dir(const std::string& dir, const WorkflowDef& def);
void write_relation_dir(const std::string& dir, const std::map<std::string, RelationData>& data);

/// Executions read from `dir`: sorted subdirectories, one per execution, or
/// the flat directory itself as a single input reused every time.
std::vector<WorkflowInput> read_input_sequence(const std::string& dir, const WorkflowDef& def,
                                               std::size_t num_exec);

// --- execution ------------------------------------------------------------------

struct RunOptions {
  bool provenance = true;
  EvalOptions eval;
  // Keep every alias of every invocation (for inspection and golden tests).
  bool keep_intermediates = false;
  // Explicit topological order; empty means topological_order().
  std::vector<std::string> order;
};

struct InvocationRecord {
  std::size_t execution = 0;
  std::string node;
  std::string module;
  std::uint64_t index = 0;
  NodeId invocation = kNoNode;
  Env env;  // filled when keep_intermediates
};

struct ExecutionRecord {
  std::map<std::string, Env> outputs;  // Out node -> output relations (class-o p-nodes)
  std::vector<std::size_t> invocations;  // indices into RunLog::invocations
  bool has_output() const;
};

/// Where a token came from: an external input tuple or an initial state tuple.
struct TokenOrigin {
  bool state = false;
  std::string owner;  // In node id or module name
  std::string relation;
  std::size_t execution = 0;  // inputs only
  std::size_t ordinal = 0;    // position in the source bag
  NodeId node = kNoNode;
};

struct RunLog {
  std::vector<ExecutionRecord> executions;
  std::vector<InvocationRecord> invocations;
  std::map<std::uint64_t, TokenOrigin> tokens;
};

class WorkflowRunner {
 public:
  WorkflowRunner(const WorkflowDef& def, const pig::BBRegistry& bbs, RunOptions opts = {});

  /// Installs the initial state; state tuples get fresh class-s tokens.
  void load_state(const StateData& state);

  const ExecutionRecord& execute_once(const WorkflowInput& input);
  /// Runs the inputs in order, honouring the workflow's UNTIL OUTPUT rule.
  const RunLog& execute_sequence(const std::vector<WorkflowInput>& inputs);

  const RunLog& log() const { return log_; }
  ProvGraph& graph() { return graph_; }
  const ProvGraph& graph() const { return graph_; }
  const std::map<std::string, Env>& state() const { return state_; }
  StateData state_data() const;
  const WorkflowDef& definition() const { return def_; }

 private:
  struct CheckedModule {
    pig::CheckedProgram program;
  };

  ProvGraph* graph_ptr() { return opts_.provenance ? &graph_ : nullptr; }
  RelRef wrap(const RelRef& rel, NodeId inv, NodeClass cls,
              std::unordered_map<std::uint32_t, NodeId>* unwrap);
  void bind(const RelRef& rel);
  void invoke(const std::string& node, std::size_t execution, const WorkflowInput& input,
              std::map<std::string, Env>& pending, ExecutionRecord& rec);

  WorkflowDef def_;
  const pig::BBRegistry& bbs_;
  RunOptions opts_;
  std::vector<std::string> order_;
  std::map<std::string, CheckedModule> checked_;
  std::map<std::string, Env> state_;  // module -> state relations
  std::map<std::string, std::uint64_t> invocation_counter_;
  ProvGraph graph_;
  RunLog log_;
};

}  // namespace lipstick
