#pragma once

#include <span>
#include <string>
#include <vector>

#include "ctxrec/domain.hpp"

namespace ctxrec::davi {

// Which context dimensions get injected as virtual items.
struct DaviConfig {
    std::vector<std::string> active_dimensions;

    bool empty() const { return active_dimensions.empty(); }
};

// Throws RegistryError on unknown or duplicate dimension names.
void validate_config(const DaviConfig& config, const DimensionRegistry& dimensions);

// A session after injection: real items plus one virtual token per active
// (dimension, value) pair present in the session's context.
struct AugmentedSession {
    std::string session_id;
    std::string user_id;
    std::vector<std::string> tokens;
};

// Items in insertion order, then virtual tokens in config order with values
// sorted within a dimension. The input session is untouched; a dimension
// with no context simply contributes nothing.
std::vector<std::string> augment_session(const Session& session, const DaviConfig& config);

std::vector<AugmentedSession> augment_sessions(std::span<const Session> sessions,
                                               const DaviConfig& config);

std::vector<AugmentedSession> augment_dataset(const Dataset& dataset, const DaviConfig& config);

// The observable set O for an active session: observed items plus the
// virtual tokens of the active context. Callers must derive item-attribute
// context from the observed items only, never from a hidden item.
std::vector<std::string> observables_with_context(const std::vector<std::string>& observed_items,
                                                  const ContextMap& active_context,
                                                  const DaviConfig& config);

}  // namespace ctxrec::davi
