#include "ctxrec/davi.hpp"

#include <unordered_set>

namespace ctxrec::davi {

void validate_config(const DaviConfig& config, const DimensionRegistry& dimensions) {
    std::unordered_set<std::string> seen;
    for (const std::string& name : config.active_dimensions) {
        if (!dimensions.contains(name)) {
            throw RegistryError("dimension '" + name + "' not registered");
        }
        if (!seen.insert(name).second) {
            throw RegistryError("dimension '" + name + "' listed twice");
        }
    }
}

namespace {

void append_virtual_tokens(const ContextMap& context, const DaviConfig& config,
                           std::vector<std::string>& out) {
    for (const std::string& dimension : config.active_dimensions) {
        auto values = context.find(dimension);
        if (values == context.end()) continue;
        for (const std::string& value : values->second) {
            out.push_back(VirtualItemId::encode(dimension, value));
        }
    }
}

}  // namespace

std::vector<std::string> augment_session(const Session& session, const DaviConfig& config) {
    std::vector<std::string> tokens;
    tokens.reserve(session.items.size());
    for (const ItemId& item : session.items) {
        tokens.push_back(item.str());
    }
    append_virtual_tokens(session.context, config, tokens);
    return tokens;
}

std::vector<AugmentedSession> augment_sessions(std::span<const Session> sessions,
                                               const DaviConfig& config) {
    std::vector<AugmentedSession> out;
    out.reserve(sessions.size());
    for (const Session& session : sessions) {
        out.push_back({session.session_id, session.user_id, augment_session(session, config)});
    }
    return out;
}

std::vector<AugmentedSession> augment_dataset(const Dataset& dataset, const DaviConfig& config) {
    return augment_sessions(dataset.sessions, config);
}

std::vector<std::string> observables_with_context(const std::vector<std::string>& observed_items,
                                                  const ContextMap& active_context,
                                                  const DaviConfig& config) {
    std::vector<std::string> out = observed_items;
    append_virtual_tokens(active_context, config, out);
    return out;
}

}  // namespace ctxrec::davi
