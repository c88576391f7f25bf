#include "lipstick/evalengine.hpp"

#include <algorithm>
#include <map>

namespace lipstick {

using pig::AggOp;
using pig::ItemPlan;

NodeId OpContext::node(NodeSpec spec, std::span<const NodeId> preds) const {
  if (!graph_) return kNoNode;
  return graph_->extend(std::move(spec), preds);
}

namespace {

struct ValuesLess {
  bool operator()(const std::vector<AValue>& a, const std::vector<AValue>& b) const {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (auto c = compare_values(a[i], b[i]); c != 0) return c < 0;
    }
    return a.size() < b.size();
  }
};

struct AtomLess {
  bool operator()(const Atom& a, const Atom& b) const { return compare_atoms(a, b) < 0; }
};

double as_double(const Atom& a) {
  return kind_of(a) == AtomKind::Int ? static_cast<double>(std::get<std::int64_t>(a)) : std::get<double>(a);
}

std::strong_ordering compare_for_filter(const Atom& a, const Atom& b) {
  if (kind_of(a) != kind_of(b) && is_numeric(kind_of(a)) && is_numeric(kind_of(b))) {
    double x = as_double(a), y = as_double(b);
    return x < y ? std::strong_ordering::less
                 : (y < x ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
  return compare_atoms(a, b);
}

bool holds(pig::CmpOp op, std::strong_ordering c) {
  switch (op) {
    case pig::CmpOp::Eq: return c == 0;
    case pig::CmpOp::Ne: return c != 0;
    case pig::CmpOp::Lt: return c < 0;
    case pig::CmpOp::Le: return c <= 0;
    case pig::CmpOp::Gt: return c > 0;
    case pig::CmpOp::Ge: return c >= 0;
  }
  return false;
}

const Atom& operand_value(const pig::OperandPlan& p, const ATuple& t) {
  return p.is_field ? t.atom(p.field) : p.literal;
}

// Copies the value binding of `from.field` (if any) to output position `to`.
void carry_binding(const ATuple& from, std::size_t field, ATuple& out, std::size_t to) {
  NodeId v = from.ann.value_node(field);
  if (v != kNoNode) out.ann.values.emplace_back(static_cast<std::uint32_t>(to), v);
}

void carry_all(const ATuple& from, ATuple& out, std::size_t shift) {
  for (const auto& [f, n] : from.ann.values) out.ann.values.emplace_back(f + shift, n);
}

std::string describe(const ATuple& t) { return "(" + format_tuple(strip(t)) + ")"; }

}  // namespace

// --- projection / filter -------------------------------------------------------------

ABag op_project(const OpContext& ctx, const ABag& in, const std::vector<ItemPlan>& items, bool bag_mode) {
  auto project = [&](const ATuple& t) {
    ATuple out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].kind == ItemPlan::Kind::Literal) {
        out.values.emplace_back(items[i].literal);
      } else {
        out.values.push_back(t.values[items[i].field]);
        carry_binding(t, items[i].field, out, i);
      }
    }
    return out;
  };

  ABag result;
  if (bag_mode) {
    for (const auto& t : in.tuples) {
      ATuple out = project(t);
      out.ann.pnode = ctx.node({label::Plus{}}, {t.ann.pnode});
      result.tuples.push_back(std::move(out));
    }
    return result;
  }

  std::map<std::vector<AValue>, std::size_t, ValuesLess> index;
  std::vector<std::vector<NodeId>> members;
  for (const auto& t : in.tuples) {
    ATuple out = project(t);
    auto [it, fresh] = index.emplace(out.values, result.tuples.size());
    if (fresh) {
      result.tuples.push_back(std::move(out));
      members.emplace_back();
    }
    members[it->second].push_back(t.ann.pnode);
  }
  for (std::size_t i = 0; i < result.tuples.size(); ++i) {
    result.tuples[i].ann.pnode = ctx.node({label::Plus{}}, members[i]);
  }
  return result;
}

ABag op_filter(const ABag& in, const std::vector<pig::ComparisonPlan>& cond) {
  ABag result;
  for (const auto& t : in.tuples) {
    bool keep = std::all_of(cond.begin(), cond.end(), [&](const pig::ComparisonPlan& c) {
      return holds(c.op, compare_for_filter(operand_value(c.lhs, t), operand_value(c.rhs, t)));
    });
    if (keep) result.tuples.push_back(t);
  }
  return result;
}

// --- join / group ----------------------------------------------------------------------

ABag op_join(const OpContext& ctx, const ABag& left, std::size_t lkey, const ABag& right, std::size_t rkey) {
  std::map<Atom, std::vector<const ATuple*>, AtomLess> by_key;
  for (const auto& r : right.tuples) by_key[r.atom(rkey)].push_back(&r);
  ABag result;
  for (const auto& l : left.tuples) {
    auto it = by_key.find(l.atom(lkey));
    if (it == by_key.end()) continue;
    for (const ATuple* r : it->second) {
      ATuple out;
      out.values = l.values;
      out.values.insert(out.values.end(), r->values.begin(), r->values.end());
      carry_all(l, out, 0);
      carry_all(*r, out, l.arity());
      out.ann.pnode = ctx.node({label::Times{}}, {l.ann.pnode, r->ann.pnode});
      result.tuples.push_back(std::move(out));
    }
  }
  return result;
}

ABag op_group(const OpContext& ctx, const std::vector<std::pair<const ABag*, std::size_t>>& sources) {
  std::map<Atom, std::vector<ABag>, AtomLess> groups;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& [bag, key] = sources[s];
    for (const auto& t : bag->tuples) {
      auto& slot = groups[t.atom(key)];
      if (slot.empty()) slot.resize(sources.size());
      slot[s].tuples.push_back(t);
    }
  }
  ABag result;
  for (auto& [key, bags] : groups) {
    ATuple out;
    out.values.emplace_back(key);
    std::vector<NodeId> members;
    for (auto& b : bags) {
      for (const auto& t : b.tuples) members.push_back(t.ann.pnode);
      out.values.emplace_back(make_bag(std::move(b)));
    }
    if (ctx.tracking()) {
      NodeId plus = ctx.node({label::Plus{}}, members);
      out.ann.pnode = ctx.node({label::Delta{}}, {plus});
    }
    result.tuples.push_back(std::move(out));
  }
  return result;
}

// --- aggregation ---------------------------------------------------------------------

std::optional<Atom> fold_aggregate(AggOp op, AtomKind kind, const std::vector<Atom>& values) {
  if (op == AggOp::Count) return Atom{static_cast<std::int64_t>(values.size())};
  if (op == AggOp::Sum) {
    if (kind == AtomKind::Int) {
      std::int64_t s = 0;
      for (const auto& v : values) s += std::get<std::int64_t>(v);
      return Atom{s};
    }
    double s = 0;
    for (const auto& v : values) s += as_double(v);
    return Atom{s};
  }
  if (values.empty()) return std::nullopt;
  Atom best = values.front();
  for (std::size_t i = 1; i < values.size(); ++i) {
    auto c = compare_atoms(values[i], best);
    if ((op == AggOp::Min && c < 0) || (op == AggOp::Max && c > 0)) best = values[i];
  }
  return best;
}

ABag op_aggregate(const OpContext& ctx, const ABag& in, const std::vector<ItemPlan>& items) {
  // Constant v-nodes are shared within one statement.
  std::map<Atom, NodeId, AtomLess> consts;
  auto const_node = [&](const Atom& v) {
    auto it = consts.find(v);
    if (it != consts.end()) return it->second;
    NodeId n = ctx.node({label::Const{v}}, {});
    consts.emplace(v, n);
    return n;
  };

  ABag result;
  for (const auto& t : in.tuples) {
    // First pass: values only, so omitted tuples leave no nodes behind.
    std::vector<std::optional<Atom>> agg_values(items.size());
    std::vector<std::vector<const ATuple*>> agg_members(items.size());
    bool omit = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const ItemPlan& ip = items[i];
      if (ip.kind != ItemPlan::Kind::Agg) continue;
      agg_members[i] = canonical_order(t.bag(ip.field));
      std::vector<Atom> vals;
      if (ip.op == AggOp::Count) {
        vals.resize(agg_members[i].size(), Atom{std::int64_t{1}});
      } else {
        for (const ATuple* m : agg_members[i]) vals.push_back(m->atom(*ip.attr));
      }
      if (ip.op == AggOp::Sum && vals.empty()) {
        agg_values[i] = ip.result_kind == AtomKind::Float ? Atom{0.0} : Atom{std::int64_t{0}};
        continue;
      }
      agg_values[i] = fold_aggregate(ip.op, ip.result_kind, vals);
      if (!agg_values[i]) omit = true;
    }
    if (omit) continue;

    ATuple out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const ItemPlan& ip = items[i];
      switch (ip.kind) {
        case ItemPlan::Kind::Literal: out.values.emplace_back(ip.literal); break;
        case ItemPlan::Kind::Field:
          out.values.push_back(t.values[ip.field]);
          carry_binding(t, ip.field, out, i);
          break;
        default: {
          out.values.emplace_back(*agg_values[i]);
          if (!ctx.tracking() || agg_members[i].empty()) break;
          std::vector<NodeId> parts;
          for (const ATuple* m : agg_members[i]) {
            if (ctx.options().simplified_agg) {
              parts.push_back(m->ann.pnode);
              continue;
            }
            Atom v = ip.op == AggOp::Count ? Atom{std::int64_t{1}} : m->atom(*ip.attr);
            parts.push_back(ctx.node({label::Tensor{}}, {m->ann.pnode, const_node(v)}));
          }
          NodeId agg = ctx.node({label::Agg{std::string(pig::to_string(ip.op)), *agg_values[i]}}, parts);
          out.ann.values.emplace_back(static_cast<std::uint32_t>(i), agg);
        }
      }
    }
    out.ann.pnode = ctx.node({label::Plus{}}, {t.ann.pnode});
    result.tuples.push_back(std::move(out));
  }
  return result;
}

// --- black boxes / flatten ----------------------------------------------------------------

namespace {

void collect_bag_nodes(const ABag& bag, bool pnodes, std::vector<NodeId>& out) {
  for (const auto& t : bag.tuples) {
    if (pnodes) out.push_back(t.ann.pnode);
    for (const auto& [f, v] : t.ann.values) out.push_back(v);
  }
}

}  // namespace

ABag op_foreach_bb(const OpContext& ctx, const ABag& in, const std::vector<ItemPlan>& items, const Env& env) {
  const ItemPlan* call = nullptr;
  for (const auto& ip : items) {
    if (ip.kind == ItemPlan::Kind::BlackBox) call = &ip;
  }
  if (!call) throw EvalError("FOREACH has no black-box call");
  const pig::BBSpec& bb = *call->bb;

  // Whole-relation arguments are the same for every tuple. They are context
  // the call runs with or without, so their tuples join the calling tuple
  // under a Plus instead of becoming conjuncts of the black box.
  std::vector<std::optional<Value>> fixed(call->args.size());
  std::vector<std::vector<NodeId>> context;
  for (std::size_t a = 0; a < call->args.size(); ++a) {
    const auto& arg = call->args[a];
    if (!arg.whole_relation) continue;
    auto it = env.find(arg.relation);
    if (it == env.end()) throw EvalError("relation '" + arg.relation + "' is not bound");
    fixed[a] = Value{make_bag(strip(it->second->bag))};
    if (ctx.tracking() && !it->second->bag.empty()) {
      auto& nodes = context.emplace_back();
      for (const auto& rt : it->second->bag.tuples) nodes.push_back(rt.ann.pnode);
    }
  }

  ABag result;
  for (const auto& t : in.tuples) {
    std::vector<Value> args;
    std::vector<NodeId> preds;
    if (ctx.tracking()) {
      preds.push_back(t.ann.pnode);
      for (const auto& nodes : context) {
        std::vector<NodeId> alt = nodes;
        alt.push_back(t.ann.pnode);
        std::sort(alt.begin(), alt.end());
        alt.erase(std::unique(alt.begin(), alt.end()), alt.end());
        preds.push_back(ctx.node({label::Plus{}}, alt));
      }
    }
    for (std::size_t a = 0; a < call->args.size(); ++a) {
      if (fixed[a]) {
        args.push_back(*fixed[a]);
        continue;
      }
      std::size_t f = call->args[a].field;
      if (const auto* atom = std::get_if<Atom>(&t.values[f])) {
        args.emplace_back(*atom);
        if (ctx.tracking() && t.ann.value_node(f) != kNoNode) preds.push_back(t.ann.value_node(f));
      } else {
        const ABag& nested = t.bag(f);
        args.emplace_back(make_bag(strip(nested)));
        if (ctx.tracking()) collect_bag_nodes(nested, bb.expand_nested, preds);
      }
    }

    Bag produced;
    try {
      produced = bb.fn(args);
    } catch (const std::exception& e) {
      throw EvalError("black box " + bb.name + " failed on tuple " + describe(t) + ": " + e.what());
    }
    if (auto report = validate_against_schema(produced, bb.output); !report) {
      throw EvalError("black box " + bb.name + " output violates " + bb.output.to_string() + " at " +
                      report.path + ": " + report.reason);
    }

    NodeId bb_node = kNoNode;
    if (ctx.tracking()) {
      std::sort(preds.begin(), preds.end());
      preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
      bb_node = ctx.node({label::BlackBox{bb.name}, NodeClass::Plain, bb.kind}, preds);
    }

    auto prefix = [&](ATuple& out) {
      for (std::size_t i = 0; i < items.size(); ++i) {
        const ItemPlan& ip = items[i];
        if (ip.kind == ItemPlan::Kind::BlackBox) return;
        if (ip.kind == ItemPlan::Kind::Literal) {
          out.values.emplace_back(ip.literal);
        } else {
          out.values.push_back(t.values[ip.field]);
          carry_binding(t, ip.field, out, out.values.size() - 1);
        }
      }
    };
    auto suffix = [&](ATuple& out) {
      bool after = false;
      for (const auto& ip : items) {
        if (ip.kind == ItemPlan::Kind::BlackBox) {
          after = true;
          continue;
        }
        if (!after) continue;
        if (ip.kind == ItemPlan::Kind::Literal) {
          out.values.emplace_back(ip.literal);
        } else {
          out.values.push_back(t.values[ip.field]);
          carry_binding(t, ip.field, out, out.values.size() - 1);
        }
      }
    };

    if (call->flatten) {
      for (const auto& p : produced.tuples) {
        ATuple out;
        prefix(out);
        for (const auto& v : p.values) {
          if (const auto* atom = std::get_if<Atom>(&v)) {
            out.values.emplace_back(*atom);
          } else {
            ABag nested;
            for (const auto& inner : std::get<BagRef<NoAnnotation>>(v)->tuples) {
              ATuple copy;
              for (const auto& iv : inner.values) copy.values.emplace_back(std::get<Atom>(iv));
              copy.ann.pnode = bb_node;
              nested.tuples.push_back(std::move(copy));
            }
            out.values.emplace_back(make_bag(std::move(nested)));
          }
        }
        suffix(out);
        out.ann.pnode = ctx.node({label::Times{}}, {t.ann.pnode, bb_node});
        result.tuples.push_back(std::move(out));
      }
    } else {
      ATuple out;
      prefix(out);
      ABag nested;
      for (const auto& p : produced.tuples) {
        ATuple copy;
        for (const auto& v : p.values) {
          if (const auto* atom = std::get_if<Atom>(&v)) {
            copy.values.emplace_back(*atom);
          } else {
            throw EvalError("black box " + bb.name + " returned doubly nested output");
          }
        }
        copy.ann.pnode = bb_node;
        nested.tuples.push_back(std::move(copy));
      }
      out.values.emplace_back(make_bag(std::move(nested)));
      suffix(out);
      out.ann.pnode = ctx.node({label::Times{}}, {t.ann.pnode, bb_node});
      result.tuples.push_back(std::move(out));
    }
  }
  return result;
}

ABag op_flatten_field(const OpContext& ctx, const ABag& in, const std::vector<ItemPlan>& items) {
  ABag result;
  for (const auto& t : in.tuples) {
    const ItemPlan* flat = nullptr;
    for (const auto& ip : items) {
      if (ip.flatten) flat = &ip;
    }
    for (const auto& inner : t.bag(flat->field).tuples) {
      ATuple out;
      for (const auto& ip : items) {
        if (&ip == flat) {
          const std::size_t shift = out.values.size();
          out.values.insert(out.values.end(), inner.values.begin(), inner.values.end());
          carry_all(inner, out, shift);
        } else if (ip.kind == ItemPlan::Kind::Literal) {
          out.values.emplace_back(ip.literal);
        } else {
          out.values.push_back(t.values[ip.field]);
          carry_binding(t, ip.field, out, out.values.size() - 1);
        }
      }
      out.ann.pnode = ctx.node({label::Times{}}, {t.ann.pnode, inner.ann.pnode});
      result.tuples.push_back(std::move(out));
    }
  }
  return result;
}

// --- union / distinct / order ----------------------------------------------------------

ABag op_union(const std::vector<const ABag*>& sources) {
  ABag result;
  for (const ABag* b : sources) result.tuples.insert(result.tuples.end(), b->tuples.begin(), b->tuples.end());
  return result;
}

ABag op_distinct(const OpContext& ctx, const ABag& in) {
  std::map<std::vector<AValue>, std::size_t, ValuesLess> index;
  std::vector<std::vector<NodeId>> members;
  ABag result;
  for (const auto& t : in.tuples) {
    auto [it, fresh] = index.emplace(t.values, result.tuples.size());
    if (fresh) {
      ATuple out;
      out.values = t.values;
      out.ann.values = t.ann.values;
      result.tuples.push_back(std::move(out));
      members.emplace_back();
    }
    members[it->second].push_back(t.ann.pnode);
  }
  if (ctx.tracking()) {
    for (std::size_t i = 0; i < result.tuples.size(); ++i) {
      NodeId plus = ctx.node({label::Plus{}}, members[i]);
      result.tuples[i].ann.pnode = ctx.node({label::Delta{}}, {plus});
    }
  }
  return result;
}

ABag op_order(const ABag& in, std::size_t key, bool descending) {
  ABag result = in;
  std::stable_sort(result.tuples.begin(), result.tuples.end(), [&](const ATuple& a, const ATuple& b) {
    auto c = compare_atoms(a.atom(key), b.atom(key));
    return descending ? c > 0 : c < 0;
  });
  return result;
}

// --- statements ------------------------------------------------------------------------

RelRef eval_statement(const OpContext& ctx, const pig::Statement& s, const pig::StatementPlan& plan,
                      const Env& env) {
  std::vector<const ABag*> in;
  for (const auto& alias : plan.inputs) {
    auto it = env.find(alias);
    if (it == env.end()) throw EvalError("relation '" + alias + "' is not bound");
    in.push_back(&it->second->bag);
  }
  auto out = std::make_shared<AnnotatedRelation>();
  out->schema = plan.output;
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, pig::Foreach>) {
          switch (plan.foreach_kind) {
            case pig::ForeachKind::Project: out->bag = op_project(ctx, *in[0], plan.items, plan.bag_mode); break;
            case pig::ForeachKind::Aggregate: out->bag = op_aggregate(ctx, *in[0], plan.items); break;
            case pig::ForeachKind::BlackBox: out->bag = op_foreach_bb(ctx, *in[0], plan.items, env); break;
            case pig::ForeachKind::FlattenField: out->bag = op_flatten_field(ctx, *in[0], plan.items); break;
          }
        } else if constexpr (std::is_same_v<T, pig::Filter>) {
          out->bag = op_filter(*in[0], plan.cond);
        } else if constexpr (std::is_same_v<T, pig::Join>) {
          out->bag = op_join(ctx, *in[0], plan.keys[0], *in[1], plan.keys[1]);
        } else if constexpr (std::is_same_v<T, pig::Group> || std::is_same_v<T, pig::Cogroup>) {
          std::vector<std::pair<const ABag*, std::size_t>> sources;
          for (std::size_t i = 0; i < in.size(); ++i) sources.emplace_back(in[i], plan.keys[i]);
          out->bag = op_group(ctx, sources);
        } else if constexpr (std::is_same_v<T, pig::Union>) {
          out->bag = op_union(in);
        } else if constexpr (std::is_same_v<T, pig::Distinct>) {
          out->bag = op_distinct(ctx, *in[0]);
        } else {
          out->bag = op_order(*in[0], plan.keys[0], plan.descending);
        }
      },
      s.op);
  return out;
}

void eval_program(const OpContext& ctx, const pig::CheckedProgram& prog, Env& env) {
  const auto& stmts = prog.program.statements;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    env[stmts[i].alias] = eval_statement(ctx, stmts[i], prog.plans[i], env);
  }
}

RelRef unannotated(const Schema& schema, const Bag& bag) {
  auto rel = std::make_shared<AnnotatedRelation>();
  rel->schema = schema;
  std::function<ABag(const Bag&)> convert = [&](const Bag& b) {
    ABag out;
    for (const auto& t : b.tuples) {
      ATuple a;
      for (const auto& v : t.values) {
        if (const auto* atom = std::get_if<Atom>(&v)) {
          a.values.emplace_back(*atom);
        } else {
          a.values.emplace_back(make_bag(convert(*std::get<BagRef<NoAnnotation>>(v))));
        }
      }
      out.tuples.push_back(std::move(a));
    }
    return out;
  };
  rel->bag = convert(bag);
  return rel;
}

}  // namespace lipstick
