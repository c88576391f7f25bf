#pragma once

// Parser, resolver and type checker for the Pig Latin fragment:
//   Alias = FOREACH src GENERATE item, ... [BAG];
//   Alias = FILTER src BY cond;
//   Alias = JOIN a BY f, b BY g;
//   Alias = GROUP src BY f;
//   Alias = COGROUP a BY f, b BY g [, ...];
//   Alias = UNION a, b [, ...];
//   Alias = DISTINCT src;
//   Alias = ORDER src BY f [ASC|DESC];
// Keywords are case-insensitive, aliases and field names are not.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lipstick/provgraph.hpp"
#include "lipstick/relmodel.hpp"

namespace lipstick::pig {

// --- syntax tree ------------------------------------------------------------

/// `name`, `Left::name`, `$k` (0-based) or `group`.
struct FieldRef {
  std::string text;
  friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

struct Literal {
  Atom value;
  friend bool operator==(const Literal&, const Literal&) = default;
};

using Operand = std::variant<FieldRef, Literal>;

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Comparison {
  Operand lhs;
  CmpOp op = CmpOp::Eq;
  Operand rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Conjunction of comparisons.
struct Condition {
  std::vector<Comparison> conjuncts;
  friend bool operator==(const Condition&, const Condition&) = default;
};

enum class AggOp { Sum, Count, Min, Max };
std::string_view to_string(AggOp op);

/// COUNT(bag), SUM(bag.attr), ...
struct AggCall {
  AggOp op = AggOp::Count;
  FieldRef bag;
  std::optional<std::string> attr;
  friend bool operator==(const AggCall&, const AggCall&) = default;
};

/// Argument names resolve to a field of the current tuple first, then to a
/// relation alias (passed as a whole bag).
struct BBCall {
  std::string name;
  std::vector<std::string> args;
  friend bool operator==(const BBCall&, const BBCall&) = default;
};

struct GenItem {
  std::variant<FieldRef, Literal, AggCall, BBCall> expr;
  bool flatten = false;  // FLATTEN(bb call) or FLATTEN(nested field)
  std::optional<std::string> alias;
  friend bool operator==(const GenItem&, const GenItem&) = default;
};

struct Foreach {
  std::string src;
  std::vector<GenItem> items;
  // Trailing BAG: projection keeps one output tuple per source tuple.
  bool bag_mode = false;
  friend bool operator==(const Foreach&, const Foreach&) = default;
};
struct Filter {
  std::string src;
  Condition cond;
  friend bool operator==(const Filter&, const Filter&) = default;
};
struct Join {
  std::string left;
  FieldRef left_key;
  std::string right;
  FieldRef right_key;
  friend bool operator==(const Join&, const Join&) = default;
};
struct Group {
  std::string src;
  FieldRef key;
  friend bool operator==(const Group&, const Group&) = default;
};
struct Cogroup {
  std::vector<std::pair<std::string, FieldRef>> sources;
  friend bool operator==(const Cogroup&, const Cogroup&) = default;
};
struct Union {
  std::vector<std::string> sources;
  friend bool operator==(const Union&, const Union&) = default;
};
struct Distinct {
  std::string src;
  friend bool operator==(const Distinct&, const Distinct&) = default;
};
struct Order {
  std::string src;
  FieldRef key;
  bool descending = false;
  friend bool operator==(const Order&, const Order&) = default;
};

using Operation = std::variant<Foreach, Filter, Join, Group, Cogroup, Union, Distinct, Order>;

struct Statement {
  std::string alias;
  Operation op;
  int line = 0;
  friend bool operator==(const Statement& a, const Statement& b) {
    return a.alias == b.alias && a.op == b.op;  // positions are not part of identity
  }
};

struct Program {
  std::vector<Statement> statements;
  friend bool operator==(const Program&, const Program&) = default;
};

Program parse(std::string_view text);
std::string pretty_print(const Program& p);
std::string pretty_print(const Statement& s);

// --- black boxes -----------------------------------------------------------------

/// A user-defined function: takes the argument values (atoms, or bags for
/// nested fields and whole relations) and returns a bag of `output` tuples.
struct BBSpec {
  std::string name;
  Schema output;
  NodeKind kind = NodeKind::V;
  // Also draw graph edges from every tuple nested in bag arguments.
  bool expand_nested = false;
  std::function<Bag(const std::vector<Value>&)> fn;
};

class BBRegistry {
 public:
  void add(BBSpec spec);
  const BBSpec* find(const std::string& name) const;
  bool empty() const { return specs_.empty(); }

 private:
  std::map<std::string, std::shared_ptr<const BBSpec>> specs_;
};

// --- resolution and type checking ------------------------------------------------

/// Resolves a field against a schema: `$k`, exact name, then a unique
/// `...::name` suffix match.
std::size_t resolve_field(const Schema& schema, const FieldRef& ref);

struct OperandPlan {
  bool is_field = false;
  std::size_t field = 0;
  Atom literal;
};

struct ComparisonPlan {
  OperandPlan lhs;
  CmpOp op = CmpOp::Eq;
  OperandPlan rhs;
};

struct BBArgPlan {
  bool whole_relation = false;
  std::size_t field = 0;     // when !whole_relation
  std::string relation;      // when whole_relation
};

struct ItemPlan {
  enum class Kind { Field, Literal, Agg, BlackBox } kind = Kind::Field;
  std::size_t field = 0;              // Field; Agg: the bag field
  std::optional<std::size_t> attr;    // Agg: attribute inside the bag (absent for COUNT(*))
  Atom literal;                       // Literal
  AggOp op = AggOp::Count;            // Agg
  AtomKind result_kind = AtomKind::Int;  // Agg
  const BBSpec* bb = nullptr;         // BlackBox
  std::vector<BBArgPlan> args;        // BlackBox
  bool flatten = false;
};

enum class ForeachKind { Project, Aggregate, BlackBox, FlattenField };

struct StatementPlan {
  std::vector<std::string> inputs;  // source aliases, in operator order
  std::vector<std::size_t> keys;    // JOIN/GROUP/COGROUP/ORDER key per input
  ForeachKind foreach_kind = ForeachKind::Project;
  std::vector<ItemPlan> items;
  std::vector<ComparisonPlan> cond;
  bool bag_mode = false;
  bool descending = false;
  Schema output;
};

struct CheckedProgram {
  Program program;
  std::vector<StatementPlan> plans;  // parallel to program.statements
  std::map<std::string, Schema> schemas;  // env plus every alias (last binding)
};

/// Computes every alias's schema and the evaluation plan of every statement.
/// `env` must cover the program's free relation names. Throws TypeError.
CheckedProgram resolve_and_typecheck(const Program& prog, const std::map<std::string, Schema>& env,
                                     const BBRegistry& bbs = {});

}  // namespace lipstick::pig
