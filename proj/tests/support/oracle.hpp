#pragma once

// Independent reference implementations used by the tests: an annotated
// nested-relation evaluator over N[X] (no provenance graph involved), a
// random program generator, and helpers for re-executing workflows.

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lipstick/evalengine.hpp"
#include "lipstick/provgraph.hpp"
#include "lipstick/workflow.hpp"
#include "lipstick/workflowgen.hpp"

namespace oracle {

using lipstick::Atom;

// --- polynomials -----------------------------------------------------------------------------

/// Polynomial over named atoms; monomials are sorted atom lists.
class Poly {
 public:
  static Poly zero() { return {}; }
  static Poly one();
  static Poly var(const std::string& name);
  /// delta(0) = 0; otherwise one opaque atom naming its argument.
  static Poly delta(const Poly& p);

  bool is_zero() const { return terms_.empty(); }
  std::string str() const;

  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

 private:
  std::map<std::vector<std::string>, std::uint64_t> terms_;
};

std::string token_name(std::uint64_t token_id);

/// Re-expresses a graph polynomial in oracle terms (tokens, deltas).
Poly from_graph(const lipstick::Polynomial& p);

// --- annotated nested relations ------------------------------------------------------------------

struct OTuple;
using OBag = std::vector<OTuple>;

struct OValue {
  std::optional<Atom> atom;
  std::shared_ptr<const OBag> bag;
};

struct OTuple {
  std::vector<OValue> values;
  Poly ann;
};

/// Canonical text of a tuple's values (nested bags sorted), annotations ignored.
std::string value_key(const OTuple& t);
std::string value_key(const lipstick::Tuple& t);

// --- random programs -------------------------------------------------------------------------------

struct Step {
  enum class Kind { Project, Filter, Join, Group, Cogroup, Aggregate, Union, Distinct, Flatten };
  Kind kind = Kind::Project;
  std::string alias;
  std::vector<std::string> src;
  std::vector<std::size_t> cols;  // project columns, join/group keys, filter column, flatten: {kept, bag}
  lipstick::pig::CmpOp cmp = lipstick::pig::CmpOp::Eq;
  std::int64_t literal = 0;
  lipstick::pig::AggOp agg = lipstick::pig::AggOp::Count;
  std::optional<std::size_t> attr;  // aggregate attribute inside the bag
};

std::string kind_name(Step::Kind k);

struct GenOptions {
  int max_ops = 4;
  bool allow_agg = true;
  // Aggregates only as the last statement, over GROUP results.
  bool agg_last_only = false;
  // Projection and DISTINCT never merge tuples that carry nested bags.
  bool flat_merges = false;
  // Name of the last statement's alias (default A<n>).
  std::string final_alias;
  std::vector<Step::Kind> kinds;  // empty: all
};

struct RandomProgram {
  std::string text;
  std::vector<Step> steps;
};

/// Generates a well-typed program over `env`; every alias is fresh.
RandomProgram random_program(std::mt19937_64& rng, const std::map<std::string, lipstick::Schema>& env,
                             const GenOptions& opts);

using OEnv = std::map<std::string, OBag>;

/// Evaluates the steps directly on annotated bags.
void evaluate(const std::vector<Step>& steps, OEnv& env);

lipstick::Bag random_flat_bag(std::mt19937_64& rng, std::size_t arity, std::size_t max_tuples,
                              std::int64_t max_value = 3);

// --- comparisons -------------------------------------------------------------------------------------

/// Sorted (value key, polynomial) pairs of an engine bag, polynomials read off the graph.
std::vector<std::pair<std::string, std::string>> graph_view(const lipstick::ProvGraph& g,
                                                            const lipstick::ABag& bag);
std::vector<std::pair<std::string, std::string>> oracle_view(const OBag& bag);

/// Output tuples of a run that survive `mask`, as canonical value keys with
/// nested deleted tuples dropped and aggregate values replaced by `recomputed`.
std::vector<std::string> surviving_keys(const lipstick::ABag& bag, const std::vector<bool>& mask,
                                        const std::map<lipstick::NodeId, Atom>& recomputed);
std::vector<std::string> plain_keys(const lipstick::Bag& bag);

/// Removes the tuples behind `tokens` from an input sequence and initial state.
void remove_tokens(const lipstick::RunLog& log, const std::vector<std::uint64_t>& tokens,
                   std::vector<lipstick::WorkflowInput>& inputs, lipstick::StateData& state);

// --- random deletion workflows ----------------------------------------------------------------------

struct RandomWorkflow {
  lipstick::WorkflowDef def;
  lipstick::StateData state;
  std::vector<lipstick::WorkflowInput> inputs;
  std::string text;
};

/// Two modules: an In module over R, S and state T, feeding an Out module.
RandomWorkflow random_workflow(std::mt19937_64& rng);

// --- Arctic ---------------------------------------------------------------------------------------

/// Global minimum air temperature over every station's selected observations
/// for execution `exec`, by a direct scan of the generated state.
std::optional<double> arctic_direct_min(const lipstick::gen::GeneratedRun& run,
                                        const lipstick::gen::ArcticParams& p, std::size_t exec);
std::size_t arctic_selected_count(const lipstick::gen::GeneratedRun& run,
                                  const lipstick::gen::ArcticParams& p, std::size_t exec);

// --- fixtures ---------------------------------------------------------------------------------------

std::string fixture_dir(const std::string& name);

}  // namespace oracle
