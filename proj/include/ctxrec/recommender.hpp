#pragma once

#include <string>
#include <vector>

#include "ctxrec/domain.hpp"

namespace ctxrec {

struct Scored {
    std::string item;
    double score = 0.0;

    friend bool operator==(const Scored&, const Scored&) = default;
};

// What a recommender sees about the active session. observables already
// carries any virtual tokens the caller injected; active_context is kept
// separate for model-routing strategies that never inject tokens.
struct Query {
    std::vector<std::string> observables;
    ContextMap active_context;
};

class TopNRecommender {
public:
    virtual ~TopNRecommender() = default;

    // Ranked list of at most n actual items, never an observable and never a
    // virtual token.
    virtual std::vector<Scored> recommend(const Query& query, int n) const = 0;
};

}  // namespace ctxrec
