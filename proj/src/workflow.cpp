#include "lipstick/workflow.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace lipstick {

namespace {

const Schema* find_schema(const std::vector<Schema>& v, const std::string& rel) {
  for (const auto& s : v) {
    if (s.name == rel) return &s;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      auto part = trim(s.substr(start, i - start));
      if (!part.empty()) out.emplace_back(part);
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

const Schema* ModuleSpec::input(const std::string& rel) const { return find_schema(inputs, rel); }
const Schema* ModuleSpec::state_rel(const std::string& rel) const { return find_schema(state, rel); }
const Schema* ModuleSpec::output(const std::string& rel) const { return find_schema(outputs, rel); }

const std::string& Workflow::module_of(const std::string& node) const {
  for (const auto& [id, module] : nodes) {
    if (id == node) return module;
  }
  throw FormatError("unknown workflow node '" + node + "'");
}

// --- schema declarations -------------------------------------------------------------

namespace {

class SchemaReader {
 public:
  explicit SchemaReader(std::string_view s) : s_(s) {}

  Schema top() {
    Schema out;
    out.name = name();
    expect('(');
    out.attributes = attrs(')');
    skip();
    if (pos_ != s_.size()) fail("trailing text");
    return out;
  }

 private:
  std::vector<Attribute> attrs(char close) {
    std::vector<Attribute> out;
    skip();
    if (peek() == close) {
      ++pos_;
      return out;
    }
    while (true) {
      Attribute a;
      a.name = name();
      expect(':');
      skip();
      if (peek() == '{') {
        ++pos_;
        auto nested = std::make_shared<Schema>();
        nested->name = a.name;
        nested->attributes = attrs('}');
        a.type = std::shared_ptr<const Schema>(std::move(nested));
      } else {
        a.type = atom_kind_from_string(name());
      }
      for (const auto& prev : out) {
        if (prev.name == a.name) fail("duplicate attribute '" + a.name + "'");
      }
      out.push_back(std::move(a));
      skip();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(close);
      return out;
    }
  }

  std::string name() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                (s_[pos_] == ':' && pos_ + 1 < s_.size() && s_[pos_ + 1] == ':'))) {
      pos_ += s_[pos_] == ':' ? 2 : 1;
    }
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("schema '" + std::string(s_) + "': " + why + " at offset " + std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string format_attrs(const std::vector<Attribute>& attrs) {
  std::string out;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i) out += ", ";
    out += attrs[i].name + ":";
    if (attrs[i].is_bag()) {
      out += "{" + format_attrs(attrs[i].nested().attributes) + "}";
    } else {
      out += to_string(attrs[i].atom_kind());
    }
  }
  return out;
}

}  // namespace

Schema parse_schema_decl(std::string_view text) { return SchemaReader(text).top(); }

std::string format_schema_decl(const Schema& s) { return s.name + "(" + format_attrs(s.attributes) + ")"; }

// --- workflow files -------------------------------------------------------------------

WorkflowDef parse_workflow(std::string_view text) {
  WorkflowDef def;
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == '\n') {
        lines.emplace_back(text.substr(start, i - start));
        start = i + 1;
      }
    }
  }
  ModuleSpec* module = nullptr;
  bool in_workflow = false;
  auto fail = [](std::size_t line, const std::string& why) {
    return FormatError("workflow line " + std::to_string(line + 1) + ": " + why);
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty() || line.substr(0, 2) == "--") continue;
    auto w = words(line);
    const std::string& kw = w[0];
    try {
      if (kw == "MODULE") {
        if (w.size() != 2) throw fail(i, "expected MODULE <name>");
        if (in_workflow) throw fail(i, "MODULE after WORKFLOW");
        if (def.modules.count(w[1])) throw fail(i, "module '" + w[1] + "' defined twice");
        module = &def.modules[w[1]];
        module->name = w[1];
      } else if (kw == "INPUT" || kw == "STATE" || kw == "OUTPUT") {
        if (!module || in_workflow) throw fail(i, kw + " outside a MODULE block");
        Schema s = parse_schema_decl(trim(line.substr(kw.size())));
        auto& list = kw == "INPUT" ? module->inputs : kw == "STATE" ? module->state : module->outputs;
        list.push_back(std::move(s));
      } else if (kw == "QSTATE" || kw == "QOUT") {
        if (!module || in_workflow) throw fail(i, kw + " outside a MODULE block");
        auto brace = line.find('{');
        if (brace == std::string_view::npos) throw fail(i, "expected '{' after " + kw);
        std::string body;
        std::string_view rest = trim(line.substr(brace + 1));
        const std::size_t first = i;
        bool closed = false;
        if (!rest.empty() && rest.back() == '}') {
          body = std::string(rest.substr(0, rest.size() - 1));
          closed = true;
        } else {
          body = std::string(rest) + "\n";
          for (++i; i < lines.size(); ++i) {
            if (trim(lines[i]) == "}") {
              closed = true;
              break;
            }
            body += lines[i] + "\n";
          }
        }
        if (!closed) throw fail(first, kw + " block is not closed");
        try {
          (kw == "QSTATE" ? module->qstate : module->qout) = pig::parse(body);
        } catch (const ParseError& e) {
          throw fail(first, "module " + module->name + " " + kw + " block, " + e.what());
        }
      } else if (kw == "WORKFLOW") {
        in_workflow = true;
        module = nullptr;
      } else if (!in_workflow) {
        throw fail(i, "unknown directive '" + kw + "'");
      } else if (kw == "NODE") {
        // NODE id : module
        if (w.size() != 4 || w[2] != ":") throw fail(i, "expected NODE <id> : <module>");
        def.workflow.nodes.emplace_back(w[1], w[3]);
      } else if (kw == "EDGE") {
        // EDGE a -> b : R1,R2
        auto colon = line.find(':');
        if (colon == std::string_view::npos) throw fail(i, "expected EDGE <a> -> <b> : <relations>");
        auto ends = words(line.substr(4, colon - 4));
        if (ends.size() != 3 || ends[1] != "->") throw fail(i, "expected EDGE <a> -> <b> : <relations>");
        auto rels = split(line.substr(colon + 1), ',');
        if (rels.empty()) throw fail(i, "edge carries no relations");
        def.workflow.edges.push_back({ends[0], ends[2], rels});
      } else if (kw == "IN" || kw == "OUT") {
        auto& list = kw == "IN" ? def.workflow.in : def.workflow.out;
        list.insert(list.end(), w.begin() + 1, w.end());
      } else if (kw == "UNTIL") {
        if (w.size() != 2 || w[1] != "OUTPUT") throw fail(i, "expected UNTIL OUTPUT");
        def.workflow.until_output = true;
      } else {
        throw fail(i, "unknown directive '" + kw + "'");
      }
    } catch (const FormatError& e) {
      const std::string what = e.what();
      if (what.rfind("workflow line", 0) == 0) throw;
      throw fail(i, what);
    }
  }
  return def;
}

WorkflowDef read_workflow_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_workflow(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string format_workflow(const WorkflowDef& def) {
  std::string out;
  auto program = [](const pig::Program& p) {
    std::string s;
    for (const auto& st : p.statements) s += "    " + pig::pretty_print(st) + "\n";
    return s;
  };
  for (const auto& [name, m] : def.modules) {
    out += "MODULE " + name + "\n";
    for (const auto& s : m.inputs) out += "  INPUT " + format_schema_decl(s) + "\n";
    for (const auto& s : m.state) out += "  STATE " + format_schema_decl(s) + "\n";
    for (const auto& s : m.outputs) out += "  OUTPUT " + format_schema_decl(s) + "\n";
    out += "  QSTATE {\n" + program(m.qstate) + "  }\n";
    out += "  QOUT {\n" + program(m.qout) + "  }\n\n";
  }
  out += "WORKFLOW\n";
  for (const auto& [id, module] : def.workflow.nodes) out += "  NODE " + id + " : " + module + "\n";
  for (const auto& e : def.workflow.edges) {
    out += "  EDGE " + e.from + " -> " + e.to + " :";
    for (std::size_t i = 0; i < e.relations.size(); ++i) out += (i ? "," : " ") + e.relations[i];
    out += "\n";
  }
  if (!def.workflow.in.empty()) {
    out += "  IN";
    for (const auto& n : def.workflow.in) out += " " + n;
    out += "\n";
  }
  if (!def.workflow.out.empty()) {
    out += "  OUT";
    for (const auto& n : def.workflow.out) out += " " + n;
    out += "\n";
  }
  if (def.workflow.until_output) out += "  UNTIL OUTPUT\n";
  return out;
}

// --- validation --------------------------------------------------------------------------

std::vector<std::string> topological_order(const Workflow& wf) {
  std::map<std::string, int> indeg;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [id, m] : wf.nodes) indeg[id];
  for (const auto& e : wf.edges) {
    ++indeg[e.to];
    succ[e.from].push_back(e.to);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& s : succ[n]) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (order.size() != indeg.size()) throw FormatError("workflow graph has a cycle");
  return order;
}

WorkflowReport validate_workflow(const Workflow& wf, const std::map<std::string, ModuleSpec>& modules) {
  auto bad = [](std::string why) { return WorkflowReport{false, std::move(why)}; };
  if (wf.nodes.empty()) return bad("workflow has no nodes");
  std::set<std::string> ids;
  for (const auto& [id, module] : wf.nodes) {
    if (!ids.insert(id).second) return bad("node '" + id + "' declared twice");
    if (!modules.count(module)) return bad("node '" + id + "' uses unknown module '" + module + "'");
  }
  for (const auto& [name, m] : modules) {
    std::set<std::string> rels;
    for (const auto* list : {&m.inputs, &m.state, &m.outputs}) {
      for (const auto& s : *list) {
        if (!rels.insert(s.name).second) {
          return bad("module '" + name + "' declares relation '" + s.name + "' more than once");
        }
      }
    }
  }
  for (const auto& e : wf.edges) {
    if (!ids.count(e.from) || !ids.count(e.to)) {
      return bad("edge " + e.from + " -> " + e.to + " references an unknown node");
    }
    if (e.from == e.to) return bad("edge " + e.from + " -> " + e.to + " is a cycle");
  }
  for (const auto* list : {&wf.in, &wf.out}) {
    for (const auto& n : *list) {
      if (!ids.count(n)) return bad("IN/OUT names unknown node '" + n + "'");
    }
  }
  try {
    topological_order(wf);
  } catch (const FormatError&) {
    return bad("workflow graph has a cycle");
  }

  // Connectivity, ignoring direction.
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : wf.edges) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::set<std::string> seen{wf.nodes.front().first};
  std::deque<std::string> queue{wf.nodes.front().first};
  while (!queue.empty()) {
    auto n = queue.front();
    queue.pop_front();
    for (const auto& m : adj[n]) {
      if (seen.insert(m).second) queue.push_back(m);
    }
  }
  if (seen.size() != ids.size()) return bad("workflow graph is not connected");

  std::set<std::string> in(wf.in.begin(), wf.in.end());
  std::set<std::string> out(wf.out.begin(), wf.out.end());
  std::map<std::string, std::set<std::string>> incoming;
  for (const auto& e : wf.edges) {
    const std::string edge = e.from + " -> " + e.to;
    if (in.count(e.to)) return bad("input node '" + e.to + "' has incoming edge " + edge);
    if (out.count(e.from)) return bad("output node '" + e.from + "' has outgoing edge " + edge);
    const ModuleSpec& src = modules.at(wf.module_of(e.from));
    const ModuleSpec& dst = modules.at(wf.module_of(e.to));
    for (const auto& r : e.relations) {
      const Schema* so = src.output(r);
      const Schema* si = dst.input(r);
      if (!so) return bad("edge " + edge + ": '" + r + "' is not an output of " + src.name);
      if (!si) return bad("edge " + edge + ": '" + r + "' is not an input of " + dst.name);
      if (!same_shape(*so, *si)) return bad("edge " + edge + ": schemas of '" + r + "' differ");
      if (!incoming[e.to].insert(r).second) {
        return bad("node '" + e.to + "' receives '" + r + "' on two incoming edges");
      }
    }
  }
  for (const auto& [id, module] : wf.nodes) {
    if (in.count(id)) continue;
    for (const auto& s : modules.at(module).inputs) {
      if (!incoming[id].count(s.name)) return bad("input '" + s.name + "' of node '" + id + "' receives no data");
    }
  }
  return {};
}

// --- data directories ----------------------------------------------------------------------

namespace {

RelationData read_owner(const std::string& dir, const std::string& owner, const std::vector<Schema>& schemas) {
  RelationData out;
  for (const auto& s : schemas) {
    fs::path p = fs::path(dir) / (owner + "." + s.name + ".txt");
    out[s.name] = fs::exists(p) ? read_bag_file(p.string(), s) : Bag{};
  }
  return out;
}

void require_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir);
}

}  // namespace

WorkflowInput read_input_dir(const std::string& dir, const WorkflowDef& def) {
  require_dir(dir);
  WorkflowInput out;
  for (const auto& n : def.workflow.in) {
    out[n] = read_owner(dir, n, def.modules.at(def.workflow.module_of(n)).inputs);
  }
  return out;
}

StateData read_state_dir(const std::string& dir, const WorkflowDef& def) {
  require_dir(dir);
  StateData out;
  for (const auto& [name, m] : def.modules) out[name] = read_owner(dir, name, m.state);
  return out;
}

void write_relation_dir(const std::string& dir, const std::map<std::string, RelationData>& data) {
  fs::create_directories(dir);
  for (const auto& [owner, rels] : data) {
    for (const auto& [rel, bag] : rels) write_bag_file((fs::path(dir) / (owner + "." + rel + ".txt")).string(), bag);
  }
}

std::vector<WorkflowInput> read_input_sequence(const std::string& dir, const WorkflowDef& def,
                                               std::size_t num_exec) {
  require_dir(dir);
  std::vector<std::string> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path().string());
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<WorkflowInput> out;
  if (subdirs.empty()) {
    WorkflowInput one = read_input_dir(dir, def);
    out.assign(num_exec == 0 ? 1 : num_exec, one);
    return out;
  }
  for (const auto& d : subdirs) {
    if (num_exec && out.size() == num_exec) break;
    out.push_back(read_input_dir(d, def));
  }
  return out;
}

// --- execution ---------------------------------------------------------------------------

bool ExecutionRecord::has_output() const {
  for (const auto& [node, env] : outputs) {
    for (const auto& [rel, r] : env) {
      if (!r->bag.empty()) return true;
    }
  }
  return false;
}

WorkflowRunner::WorkflowRunner(const WorkflowDef& def, const pig::BBRegistry& bbs, RunOptions opts)
    : def_(def), bbs_(bbs), opts_(std::move(opts)) {
  if (auto report = validate_workflow(def_.workflow, def_.modules); !report) {
    throw FormatError("invalid workflow: " + report.problem);
  }
  order_ = opts_.order.empty() ? topological_order(def_.workflow) : opts_.order;
  if (order_.size() != def_.workflow.nodes.size()) throw FormatError("explicit order must list every node once");

  for (const auto& [name, m] : def_.modules) {
    std::map<std::string, Schema> env;
    for (const auto* list : {&m.inputs, &m.state}) {
      for (const auto& s : *list) env[s.name] = s;
    }
    pig::Program all = m.qstate;
    all.statements.insert(all.statements.end(), m.qout.statements.begin(), m.qout.statements.end());
    CheckedModule cm;
    try {
      cm.program = pig::resolve_and_typecheck(all, env, bbs_);
    } catch (const TypeError& e) {
      throw TypeError("module " + name + ": " + e.what());
    }
    for (const auto* list : {&m.state, &m.outputs}) {
      for (const auto& s : *list) {
        auto it = cm.program.schemas.find(s.name);
        if (it == cm.program.schemas.end()) throw TypeError("module " + name + " never produces '" + s.name + "'");
        if (!same_shape(it->second, s)) {
          throw TypeError("module " + name + ": '" + s.name + "' computed as " + it->second.to_string() +
                          ", declared " + s.to_string());
        }
      }
    }
    checked_.emplace(name, std::move(cm));
    Env& st = state_[name];
    for (const auto& s : m.state) st[s.name] = unannotated(s, Bag{});
  }
}

void WorkflowRunner::load_state(const StateData& data) {
  for (const auto& [module, rels] : data) {
    auto mit = def_.modules.find(module);
    if (mit == def_.modules.end()) throw FormatError("state for unknown module '" + module + "'");
    for (const auto& [rel, bag] : rels) {
      const Schema* schema = mit->second.state_rel(rel);
      if (!schema) throw FormatError("module " + module + " has no state relation '" + rel + "'");
      if (auto r = validate_against_schema(bag, *schema); !r) {
        throw FormatError("state " + module + "." + rel + ": " + r.path + ": " + r.reason);
      }
      auto out = std::const_pointer_cast<AnnotatedRelation>(unannotated(*schema, bag));
      if (graph_ptr()) {
        for (std::size_t j = 0; j < out->bag.tuples.size(); ++j) {
          NodeId tok = graph_.fresh_token(NodeClass::State, module + "." + rel + "#" + std::to_string(j));
          out->bag.tuples[j].ann.pnode = tok;
          log_.tokens[graph_.token_count() - 1] = {true, module, rel, 0, j, tok};
        }
      }
      state_[module][rel] = out;
    }
  }
}

RelRef WorkflowRunner::wrap(const RelRef& rel, NodeId inv, NodeClass cls,
                            std::unordered_map<std::uint32_t, NodeId>* unwrap) {
  if (!graph_ptr()) return rel;
  auto out = std::make_shared<AnnotatedRelation>();
  out->schema = rel->schema;
  out->bag.tuples.reserve(rel->bag.tuples.size());
  for (const auto& t : rel->bag.tuples) {
    ATuple copy = t;
    copy.ann.pnode = graph_.extend({label::Times{}, cls}, {t.ann.pnode, inv});
    if (unwrap) (*unwrap)[raw(copy.ann.pnode)] = t.ann.pnode;
    out->bag.tuples.push_back(std::move(copy));
  }
  return out;
}

void WorkflowRunner::bind(const RelRef& rel) {
  if (!graph_ptr()) return;
  const std::uint32_t instance = graph_.new_relation_instance();
  for (std::size_t j = 0; j < rel->bag.tuples.size(); ++j) {
    graph_.bind(instance, static_cast<std::uint32_t>(j), rel->bag.tuples[j].ann.pnode);
  }
}

void WorkflowRunner::invoke(const std::string& node, std::size_t execution, const WorkflowInput& input,
                            std::map<std::string, Env>& pending, ExecutionRecord& rec) {
  const std::string& module_name = def_.workflow.module_of(node);
  const ModuleSpec& m = def_.modules.at(module_name);
  const std::uint64_t index = invocation_counter_[module_name]++;
  OpContext ctx(graph_ptr(), opts_.eval);
  const NodeId inv = ctx.node({label::Invocation{module_name, node, index}, NodeClass::Module}, {});
  const bool is_input = std::find(def_.workflow.in.begin(), def_.workflow.in.end(), node) != def_.workflow.in.end();

  Env env;
  for (const auto& s : m.inputs) {
    RelRef rel;
    if (is_input) {
      Bag bag;
      if (auto it = input.find(node); it != input.end()) {
        if (auto r = it->second.find(s.name); r != it->second.end()) bag = r->second;
      }
      if (auto r = validate_against_schema(bag, s); !r) {
        throw FormatError("input " + node + "." + s.name + ": " + r.path + ": " + r.reason);
      }
      auto fresh = std::const_pointer_cast<AnnotatedRelation>(unannotated(s, bag));
      if (graph_ptr()) {
        for (std::size_t j = 0; j < fresh->bag.tuples.size(); ++j) {
          NodeId tok = graph_.fresh_token(
              NodeClass::Input, node + "." + s.name + "#" + std::to_string(execution) + "." + std::to_string(j));
          fresh->bag.tuples[j].ann.pnode = tok;
          log_.tokens[graph_.token_count() - 1] = {false, node, s.name, execution, j, tok};
        }
      }
      rel = fresh;
    } else {
      auto& p = pending[node];
      auto it = p.find(s.name);
      rel = it != p.end() ? it->second : unannotated(s, Bag{});
    }
    env[s.name] = wrap(rel, inv, NodeClass::Input, nullptr);
    bind(env[s.name]);
  }

  std::unordered_map<std::uint32_t, NodeId> unwrap;
  for (const auto& s : m.state) {
    env[s.name] = wrap(state_[module_name][s.name], inv, NodeClass::State, &unwrap);
    bind(env[s.name]);
  }

  try {
    eval_program(ctx, checked_.at(module_name).program, env);
  } catch (const Error& e) {
    throw EvalError("node " + node + " (module " + module_name + "): " + e.what());
  }

  for (const auto& s : m.state) {
    const RelRef& now = env.at(s.name);
    auto stored = std::make_shared<AnnotatedRelation>();
    stored->schema = s;
    stored->bag.tuples = now->bag.tuples;
    for (auto& t : stored->bag.tuples) {
      if (auto it = unwrap.find(raw(t.ann.pnode)); it != unwrap.end()) t.ann.pnode = it->second;
    }
    state_[module_name][s.name] = stored;
    bind(stored);
  }

  Env outputs;
  for (const auto& s : m.outputs) {
    auto produced = std::make_shared<AnnotatedRelation>(*env.at(s.name));
    produced->schema = s;
    RelRef out = wrap(produced, inv, NodeClass::Output, nullptr);
    bind(out);
    outputs[s.name] = out;
  }
  for (const auto& e : def_.workflow.edges) {
    if (e.from != node) continue;
    for (const auto& r : e.relations) pending[e.to][r] = outputs.at(r);
  }
  if (std::find(def_.workflow.out.begin(), def_.workflow.out.end(), node) != def_.workflow.out.end()) {
    rec.outputs[node] = outputs;
  }

  InvocationRecord ir{execution, node, module_name, index, inv, {}};
  if (opts_.keep_intermediates) ir.env = std::move(env);
  rec.invocations.push_back(log_.invocations.size());
  log_.invocations.push_back(std::move(ir));
}

const ExecutionRecord& WorkflowRunner::execute_once(const WorkflowInput& input) {
  for (const auto& [node, rels] : input) {
    if (std::find(def_.workflow.in.begin(), def_.workflow.in.end(), node) == def_.workflow.in.end()) {
      throw FormatError("input given for '" + node + "', which is not an input node");
    }
  }
  const std::size_t execution = log_.executions.size();
  ExecutionRecord rec;
  std::map<std::string, Env> pending;
  for (const auto& node : order_) invoke(node, execution, input, pending, rec);
  log_.executions.push_back(std::move(rec));
  return log_.executions.back();
}

const RunLog& WorkflowRunner::execute_sequence(const std::vector<WorkflowInput>& inputs) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      const auto& rec = execute_once(inputs[i]);
      if (def_.workflow.until_output && rec.has_output()) break;
    } catch (const EvalError& e) {
      throw EvalError("execution " + std::to_string(i) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("execution " + std::to_string(i) + ": " + e.what());
    }
  }
  return log_;
}

StateData WorkflowRunner::state_data() const {
  StateData out;
  for (const auto& [module, env] : state_) {
    for (const auto& [rel, r] : env) out[module][rel] = strip(r->bag);
  }
  return out;
}

}  // namespace lipstick
