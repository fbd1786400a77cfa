#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrec/errors.hpp"

namespace ctxrec {

// Namespace prefix reserved for virtual items. Actual item ids may never
// start with it.
inline constexpr std::string_view kVirtualPrefix = "ctx:";

inline bool is_virtual_token(std::string_view token) {
    return token.substr(0, kVirtualPrefix.size()) == kVirtualPrefix;
}

// Opaque item identifier. Non-empty, never in the virtual namespace,
// compared by exact string equality.
class ItemId {
public:
    explicit ItemId(std::string id);

    const std::string& str() const { return id_; }

    friend bool operator==(const ItemId&, const ItemId&) = default;
    friend auto operator<=>(const ItemId&, const ItemId&) = default;

private:
    std::string id_;
};

// A context (dimension, value) pair encoded as an item token
// `ctx:<dimension>=<value>`. Dimension names never contain '=', so the first
// '=' after the prefix splits the token unambiguously and the encoding is
// injective.
struct VirtualItemId {
    std::string dimension;
    std::string value;
    std::string encoded;

    static std::string encode(std::string_view dimension, std::string_view value);
    static std::optional<VirtualItemId> decode(std::string_view token);
};

// One user-item interaction event.
struct Access {
    std::string session_id;
    std::string user_id;
    ItemId item;
    // UTC epoch seconds. Required only when temporal dimensions are derived.
    std::optional<std::int64_t> timestamp;
    // Pre-resolved context attributes (temporal values land here too, once
    // derived from the timestamp).
    std::map<std::string, std::string> raw_context;
};

enum class DimensionSource { temporal, item_attribute, session_attribute };

std::string_view to_string(DimensionSource source);
DimensionSource dimension_source_from_string(std::string_view s);

struct ContextDimension {
    std::string name;
    DimensionSource source = DimensionSource::session_attribute;
    std::optional<std::set<std::string>> domain;
};

class DimensionRegistry {
public:
    // Rejects duplicate names and names containing '='.
    void add(ContextDimension dim);

    bool contains(std::string_view name) const;
    const ContextDimension& at(std::string_view name) const;
    const std::vector<ContextDimension>& all() const { return dims_; }
    std::size_t size() const { return dims_.size(); }

    // Checks registration, then encodes. The low-level encoder is
    // VirtualItemId::encode.
    std::string encode_virtual_item(std::string_view dimension, std::string_view value) const;

private:
    std::vector<ContextDimension> dims_;
};

// dimension name -> set of values active for a session.
using ContextMap = std::map<std::string, std::set<std::string>>;

// The training and evaluation unit: deduplicated item set plus context.
struct Session {
    std::string session_id;
    std::string user_id;
    std::vector<ItemId> items;  // deduplicated, insertion-ordered
    ContextMap context;

    bool contains(const ItemId& item) const;
};

struct DatasetStats {
    std::size_t accesses = 0;
    std::size_t distinct_items = 0;
    std::size_t distinct_users = 0;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

using AttributeMap = std::map<std::string, std::string>;
using ItemCatalog = std::map<ItemId, AttributeMap>;

struct Dataset {
    std::vector<Session> sessions;
    ItemCatalog catalog;
    DimensionRegistry dimensions;
    DatasetStats stats;
};

struct BuildReport {
    std::vector<std::string> warnings;
};

// Groups accesses by session id, dedups items, derives per-session context
// from raw_context (temporal + session attributes) and from the catalog
// (item attributes, unioned over the session's items), and computes stats.
// Catalog misses are warnings, not errors.
Dataset build_dataset(const std::vector<Access>& accesses, ItemCatalog catalog,
                      DimensionRegistry dimensions, BuildReport* report = nullptr);

// Recount-based consistency check for DatasetStats.
DatasetStats recount_stats(const std::vector<Access>& accesses);

}  // namespace ctxrec
