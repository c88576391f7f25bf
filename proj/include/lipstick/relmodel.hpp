#pragma once

// Nested-relational bag data model shared by the parser, evaluator and
// workflow layers. Tuples and bags are templates over an annotation type so
// the evaluator can attach provenance without a second data model; plain
// (unannotated) relations use `NoAnnotation`.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lipstick/error.hpp"

namespace lipstick {

enum class AtomKind : std::uint8_t { Int, Float, Text, Bool };

std::string_view to_string(AtomKind kind);
AtomKind atom_kind_from_string(std::string_view text);

/// A scalar data value. The variant index order (int, float, text, bool)
/// doubles as the cross-kind canonical order.
using Atom = std::variant<std::int64_t, double, std::string, bool>;

inline AtomKind kind_of(const Atom& a) { return static_cast<AtomKind>(a.index()); }
bool is_numeric(AtomKind kind);

/// Renders an atom the way the nested-relation text format does (no
/// escaping). Floats use the shortest round-trip representation.
std::string atom_to_string(const Atom& a);
Atom parse_atom(std::string_view text, AtomKind kind);

std::strong_ordering compare_atoms(const Atom& a, const Atom& b);

struct Schema;

struct Attribute {
  std::string name;
  // Either an atom kind or the schema of a nested bag.
  std::variant<AtomKind, std::shared_ptr<const Schema>> type;

  bool is_bag() const { return type.index() == 1; }
  AtomKind atom_kind() const { return std::get<AtomKind>(type); }
  const Schema& nested() const { return *std::get<1>(type); }
};

struct Schema {
  std::string name;
  std::vector<Attribute> attributes;

  std::size_t arity() const { return attributes.size(); }
  /// Exact-name lookup only; qualified/suffix resolution lives in pigparse.
  std::optional<std::size_t> index_of(std::string_view attr) const;
  std::string to_string() const;
};

/// Structural equality of attribute kinds, ignoring names.
bool same_shape(const Schema& a, const Schema& b);
bool operator==(const Schema& a, const Schema& b);

struct NoAnnotation {
  friend bool operator==(NoAnnotation, NoAnnotation) = default;
};

template <typename Ann>
struct BasicBag;

template <typename Ann>
using BagRef = std::shared_ptr<const BasicBag<Ann>>;

template <typename Ann>
using BasicValue = std::variant<Atom, BagRef<Ann>>;

template <typename Ann>
struct BasicTuple {
  std::vector<BasicValue<Ann>> values;
  [[no_unique_address]] Ann ann{};

  std::size_t arity() const { return values.size(); }
  const Atom& atom(std::size_t i) const { return std::get<Atom>(values[i]); }
  const BasicBag<Ann>& bag(std::size_t i) const { return *std::get<BagRef<Ann>>(values[i]); }
};

template <typename Ann>
struct BasicBag {
  std::vector<BasicTuple<Ann>> tuples;

  bool empty() const { return tuples.empty(); }
  std::size_t size() const { return tuples.size(); }
};

using Value = BasicValue<NoAnnotation>;
using Tuple = BasicTuple<NoAnnotation>;
using Bag = BasicBag<NoAnnotation>;

template <typename Ann>
BagRef<Ann> make_bag(BasicBag<Ann> bag) {
  return std::make_shared<const BasicBag<Ann>>(std::move(bag));
}

template <typename Ann>
std::strong_ordering compare_values(const BasicValue<Ann>& a, const BasicValue<Ann>& b);

template <typename Ann>
std::strong_ordering compare_tuples(const BasicTuple<Ann>& a, const BasicTuple<Ann>& b) {
  const std::size_t n = std::min(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = compare_values(a.values[i], b.values[i]); c != 0) return c;
  }
  return a.values.size() <=> b.values.size();
}

/// Returns pointers into `bag` in canonical order (lexicographic over values,
/// nested bags compared by their canonical forms). Stable for equal tuples.
template <typename Ann>
std::vector<const BasicTuple<Ann>*> canonical_order(const BasicBag<Ann>& bag);

template <typename Ann>
std::strong_ordering compare_bags(const BasicBag<Ann>& a, const BasicBag<Ann>& b) {
  auto ca = canonical_order(a);
  auto cb = canonical_order(b);
  const std::size_t n = std::min(ca.size(), cb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = compare_tuples(*ca[i], *cb[i]); c != 0) return c;
  }
  return ca.size() <=> cb.size();
}

template <typename Ann>
std::strong_ordering compare_values(const BasicValue<Ann>& a, const BasicValue<Ann>& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  if (a.index() == 0) return compare_atoms(std::get<0>(a), std::get<0>(b));
  return compare_bags(*std::get<1>(a), *std::get<1>(b));
}

template <typename Ann>
std::vector<const BasicTuple<Ann>*> canonical_order(const BasicBag<Ann>& bag) {
  std::vector<const BasicTuple<Ann>*> out;
  out.reserve(bag.tuples.size());
  for (const auto& t : bag.tuples) out.push_back(&t);
  std::stable_sort(out.begin(), out.end(), [](const auto* x, const auto* y) {
    return compare_tuples(*x, *y) < 0;
  });
  return out;
}

/// Value-only copy of an annotated tuple.
template <typename Ann>
Tuple strip(const BasicTuple<Ann>& t);

template <typename Ann>
Bag strip(const BasicBag<Ann>& b) {
  Bag out;
  out.tuples.reserve(b.tuples.size());
  for (const auto& t : b.tuples) out.tuples.push_back(strip(t));
  return out;
}

template <typename Ann>
Tuple strip(const BasicTuple<Ann>& t) {
  Tuple out;
  out.values.reserve(t.values.size());
  for (const auto& v : t.values) {
    if (const auto* a = std::get_if<Atom>(&v)) {
      out.values.emplace_back(*a);
    } else {
      out.values.emplace_back(make_bag(strip(*std::get<BagRef<Ann>>(v))));
    }
  }
  return out;
}

/// Canonical, fully ordered copy: nested bags are canonicalized as well.
Bag canonicalize(const Bag& bag);

struct ValidationReport {
  bool ok = true;
  std::string path;  // e.g. "tuple 3 / field 1" ; empty when ok
  std::string reason;

  explicit operator bool() const { return ok; }
};

ValidationReport validate_against_schema(const Bag& bag, const Schema& schema);

// --- nested-relation text format ---------------------------------------
// One tuple per line, TAB-separated fields; nested bags as {(v,...),(v,...)}.
// Text atoms escape '\\', TAB, LF, CR and, inside nested bags, the
// structural characters '(', ')', '{', '}' and ','.

std::string format_tuple(const Tuple& t);
std::string format_bag(const Bag& bag);  // canonical order, trailing LF per tuple
Tuple parse_tuple_line(std::string_view line, const Schema& schema);
Bag parse_bag_text(std::string_view text, const Schema& schema);

Bag read_bag_file(const std::string& path, const Schema& schema);
void write_bag_file(const std::string& path, const Bag& bag);

/// Named relation instances (e.g. all input relations of one module).
using Instance = std::vector<std::pair<std::string, Bag>>;

}  // namespace lipstick
