#include "lark/ids.hpp"

#include <charconv>
#include <limits>

#include "lark/error.hpp"

namespace lark {

namespace {

std::optional<std::uint32_t> parse_prefixed(std::string_view text, char prefix) {
  if (text.size() < 2 || text.front() != prefix) return std::nullopt;
  std::string_view digits = text.substr(1);
  // Reject signs, leading zeros ("e01") and trailing junk so that the
  // textual form round-trips exactly.
  if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string to_string(EntityId id) { return "e" + std::to_string(id.value); }
std::string to_string(RelationId id) { return "r" + std::to_string(id.value); }

std::string to_string(const Triplet& t) {
  return "(" + to_string(t.head) + "," + to_string(t.relation) + "," + to_string(t.tail) + ")";
}

std::optional<EntityId> parse_entity_id(std::string_view text) {
  if (auto v = parse_prefixed(text, 'e')) return EntityId{*v};
  return std::nullopt;
}

std::optional<RelationId> parse_relation_id(std::string_view text) {
  if (auto v = parse_prefixed(text, 'r')) return RelationId{*v};
  return std::nullopt;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kEmptyGraph: return "EmptyGraph";
    case ErrorKind::kUnknownId: return "UnknownId";
    case ErrorKind::kUnknownType: return "UnknownType";
    case ErrorKind::kSlotMismatch: return "SlotMismatch";
    case ErrorKind::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorKind::kBackendFailure: return "BackendFailure";
    case ErrorKind::kCyclicDependency: return "CyclicDependency";
    case ErrorKind::kEmptyBucket: return "EmptyBucket";
    case ErrorKind::kMissingGold: return "MissingGold";
    case ErrorKind::kMissingTrace: return "MissingTrace";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kParse: return "Parse";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace lark
