#include "ctxrec/domain.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace ctxrec {

ItemId::ItemId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) {
        throw ValidationError("item id must be non-empty");
    }
    if (is_virtual_token(id_)) {
        throw ValidationError("item id '" + id_ + "' uses the reserved prefix '" +
                              std::string(kVirtualPrefix) + "'");
    }
}

std::string VirtualItemId::encode(std::string_view dimension, std::string_view value) {
    if (dimension.empty()) {
        throw EncodingError("dimension name must be non-empty");
    }
    if (dimension.find('=') != std::string_view::npos) {
        throw EncodingError("dimension name '" + std::string(dimension) +
                            "' contains '='");
    }
    std::string token;
    token.reserve(kVirtualPrefix.size() + dimension.size() + 1 + value.size());
    token.append(kVirtualPrefix);
    token.append(dimension);
    token.push_back('=');
    token.append(value);
    return token;
}

std::optional<VirtualItemId> VirtualItemId::decode(std::string_view token) {
    if (!is_virtual_token(token)) {
        return std::nullopt;
    }
    std::string_view rest = token.substr(kVirtualPrefix.size());
    std::size_t eq = rest.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        return std::nullopt;
    }
    VirtualItemId v;
    v.dimension = std::string(rest.substr(0, eq));
    v.value = std::string(rest.substr(eq + 1));
    v.encoded = std::string(token);
    return v;
}

std::string_view to_string(DimensionSource source) {
    switch (source) {
        case DimensionSource::temporal: return "temporal";
        case DimensionSource::item_attribute: return "item_attribute";
        case DimensionSource::session_attribute: return "session_attribute";
    }
    return "session_attribute";
}

DimensionSource dimension_source_from_string(std::string_view s) {
    if (s == "temporal") return DimensionSource::temporal;
    if (s == "item_attribute") return DimensionSource::item_attribute;
    if (s == "session_attribute") return DimensionSource::session_attribute;
    throw ValidationError("unknown dimension source '" + std::string(s) + "'");
}

void DimensionRegistry::add(ContextDimension dim) {
    if (dim.name.empty()) {
        throw RegistryError("dimension name must be non-empty");
    }
    if (dim.name.find('=') != std::string::npos) {
        throw RegistryError("dimension name '" + dim.name + "' contains '='");
    }
    if (contains(dim.name)) {
        throw RegistryError("dimension '" + dim.name + "' already registered");
    }
    dims_.push_back(std::move(dim));
}

bool DimensionRegistry::contains(std::string_view name) const {
    return std::any_of(dims_.begin(), dims_.end(),
                       [&](const ContextDimension& d) { return d.name == name; });
}

const ContextDimension& DimensionRegistry::at(std::string_view name) const {
    for (const ContextDimension& d : dims_) {
        if (d.name == name) return d;
    }
    throw RegistryError("dimension '" + std::string(name) + "' not registered");
}

std::string DimensionRegistry::encode_virtual_item(std::string_view dimension,
                                                   std::string_view value) const {
    if (!contains(dimension)) {
        throw RegistryError("dimension '" + std::string(dimension) + "' not registered");
    }
    return VirtualItemId::encode(dimension, value);
}

bool Session::contains(const ItemId& item) const {
    return std::find(items.begin(), items.end(), item) != items.end();
}

DatasetStats recount_stats(const std::vector<Access>& accesses) {
    DatasetStats stats;
    stats.accesses = accesses.size();
    std::unordered_set<std::string> items;
    std::unordered_set<std::string> users;
    for (const Access& a : accesses) {
        items.insert(a.item.str());
        users.insert(a.user_id);
    }
    stats.distinct_items = items.size();
    stats.distinct_users = users.size();
    return stats;
}

Dataset build_dataset(const std::vector<Access>& accesses, ItemCatalog catalog,
                      DimensionRegistry dimensions, BuildReport* report) {
    Dataset ds;
    ds.catalog = std::move(catalog);
    ds.dimensions = std::move(dimensions);
    ds.stats = recount_stats(accesses);

    std::unordered_map<std::string, std::size_t> index;  // session id -> slot
    for (const Access& a : accesses) {
        if (a.session_id.empty()) {
            throw ValidationError("access has empty session_id");
        }
        if (a.user_id.empty()) {
            throw ValidationError("access has empty user_id");
        }
        auto [it, inserted] = index.emplace(a.session_id, ds.sessions.size());
        if (inserted) {
            Session s;
            s.session_id = a.session_id;
            s.user_id = a.user_id;
            ds.sessions.push_back(std::move(s));
        }
        Session& session = ds.sessions[it->second];
        if (session.user_id != a.user_id && report != nullptr) {
            report->warnings.push_back("session '" + a.session_id +
                                       "' spans users '" + session.user_id + "' and '" +
                                       a.user_id + "'; keeping the first");
        }
        if (!session.contains(a.item)) {
            session.items.push_back(a.item);
        }
        // Temporal and session-attribute values arrive through raw_context.
        for (const ContextDimension& dim : ds.dimensions.all()) {
            if (dim.source == DimensionSource::item_attribute) continue;
            auto value = a.raw_context.find(dim.name);
            if (value != a.raw_context.end()) {
                session.context[dim.name].insert(value->second);
            }
        }
    }

    // Item-attribute context is the union of attribute values over the
    // session's items; items missing from the catalog are warned about.
    std::set<std::string> missing_items;
    for (Session& session : ds.sessions) {
        for (const ContextDimension& dim : ds.dimensions.all()) {
            if (dim.source != DimensionSource::item_attribute) continue;
            for (const ItemId& item : session.items) {
                auto entry = ds.catalog.find(item);
                if (entry == ds.catalog.end()) {
                    missing_items.insert(item.str());
                    continue;
                }
                auto attr = entry->second.find(dim.name);
                if (attr != entry->second.end()) {
                    session.context[dim.name].insert(attr->second);
                }
            }
        }
    }
    if (report != nullptr) {
        for (const std::string& item : missing_items) {
            report->warnings.push_back("item '" + item +
                                       "' not in catalog; item-attribute context omitted");
        }
    }
    return ds;
}

}  // namespace ctxrec
