#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxrec/davi.hpp"
#include "ctxrec/domain.hpp"
#include "ctxrec/recommender.hpp"

namespace ctxrec::eval {

struct EvalSplit {
    std::vector<Session> train;
    std::vector<Session> test;
    std::uint64_t seed = 0;
};

// Seeded uniform shuffle then prefix split; deterministic for a fixed seed.
// Both sides are always non-empty. Throws SplitError below 2 sessions.
EvalSplit split_sessions(std::span<const Session> sessions, double ratio, std::uint64_t seed);
EvalSplit split_sessions(const Dataset& dataset, double ratio, std::uint64_t seed);

// Stable fingerprint of the split membership, for cross-run comparisons.
std::string split_digest(const EvalSplit& split);

struct HiddenCase {
    std::string session_id;
    std::string user_id;
    std::vector<std::string> observables;  // actual items only
    std::string hidden;
    ContextMap active_context;
};

// Per-case seed derived from the split seed and the session id, so results
// do not depend on evaluation order.
std::uint64_t case_seed(std::uint64_t split_seed, std::string_view session_id);

// All But One: remove one uniformly chosen item. Sessions with fewer than
// two items are skipped (nullopt). Item-attribute context is recomputed from the
// remaining items so the hidden item's attributes never leak into O.
std::optional<HiddenCase> hide_one(const Session& session, const Dataset& dataset,
                                   std::uint64_t seed);

struct Metrics {
    double recall = 0.0;
    double precision = 0.0;
};

// Truncates to the first n recommendations; recall is the single-hidden-item
// hit, precision divides by the actual returned length. Empty lists give
// (0, 0).
Metrics metrics_for_case(const std::vector<std::string>& recommendations,
                         const std::string& hidden, int n);

// Harmonic mean; 0 when both inputs are 0.
double f1(double recall, double precision);

struct EvalRow {
    int n = 0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;

    friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // one per configured N
    std::size_t cases = 0;
    std::size_t skipped = 0;

    const EvalRow& at(int n) const;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
    std::vector<int> n_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // Average per user first, then across users, instead of per test session.
    bool per_user = false;
    int threads = 1;
};

// Runs every test session through hide_one, queries the recommender once at
// max N, macro-averages recall/precision and reports F1 of the macro
// averages. Throws EvaluationError when no test case survives skipping.
EvalReport evaluate(const TopNRecommender& recommender, std::span<const Session> test,
                    const Dataset& dataset, const davi::DaviConfig& config,
                    std::uint64_t split_seed, const EvalOptions& options = {});

}  // namespace ctxrec::eval
