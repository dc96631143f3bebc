#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace lark {

// Abstract entity identifier, rendered as "e<value>".
struct EntityId {
  std::uint32_t value = 0;
  auto operator<=>(const EntityId&) const = default;
};

// Abstract relation identifier, rendered as "r<value>".
struct RelationId {
  std::uint32_t value = 0;
  auto operator<=>(const RelationId&) const = default;
};

// Ordering is lexicographic on (head, relation, tail) numeric values; the
// retrieval tie-breaking and the sorted indexes both depend on it.
struct Triplet {
  EntityId head;
  RelationId relation;
  EntityId tail;
  auto operator<=>(const Triplet&) const = default;
};

std::string to_string(EntityId id);
std::string to_string(RelationId id);
// "(h,r,t)" with abstract IDs, no spaces.
std::string to_string(const Triplet& t);

std::optional<EntityId> parse_entity_id(std::string_view text);
std::optional<RelationId> parse_relation_id(std::string_view text);

}  // namespace lark

template <>
struct std::hash<lark::EntityId> {
  std::size_t operator()(lark::EntityId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<lark::RelationId> {
  std::size_t operator()(lark::RelationId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<lark::Triplet> {
  std::size_t operator()(const lark::Triplet& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.head.value) << 32) ^ t.tail.value;
    h ^= static_cast<std::uint64_t>(t.relation.value) * 0x9e3779b97f4a7c15ULL;
    return std::hash<std::uint64_t>{}(h);
  }
};
