#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxrec/ar_engine.hpp"
#include "ctxrec/cf_engine.hpp"
#include "ctxrec/evaluation.hpp"

namespace ctxrec::strategy {

enum class Algorithm { cf, ar };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

struct EngineOptions {
    Algorithm algorithm = Algorithm::cf;
    cf::BuildOptions::Unit cf_unit = cf::BuildOptions::Unit::session;
    std::size_t cf_neighbors = 0;  // 0 = unlimited
    // When unset, AR thresholds come from choose_thresholds on the training
    // sessions.
    std::optional<double> min_support;
    std::optional<double> min_confidence;
    std::size_t max_itemsets = 1'000'000;
    int threads = 1;
};

// Augments the training sessions with the given DaVI config and trains the
// configured engine behind the common recommender interface.
std::unique_ptr<TopNRecommender> train_recommender(std::span<const Session> train,
                                                   const davi::DaviConfig& config,
                                                   const EngineOptions& options);

// Key used for the no-context run in sweep results.
inline constexpr std::string_view kBaselineKey = "";

struct SweepEntry {
    std::optional<eval::EvalReport> report;
    std::string error;  // non-empty when the run failed (e.g. itemset cap)
};

// One train+evaluate run per dimension plus the baseline, all on the same
// seeded split. Per-dimension failures are recorded, not propagated.
std::map<std::string, SweepEntry> sweep_single_dimensions(const Dataset& dataset,
                                                          const EngineOptions& engine,
                                                          const std::vector<std::string>& dims,
                                                          double ratio, std::uint64_t seed,
                                                          const eval::EvalOptions& eval_options);

// Argmax of F1 at n_select over the per-dimension reports (the baseline key
// is ignored); ties go to the lexicographically first dimension name.
std::string best_context(const std::map<std::string, SweepEntry>& sweep, int n_select);

// Greedy wrapper selection over an arbitrary objective. Adds the candidate
// with the highest objective as long as it strictly improves, ties broken by
// name. Objectives may return -inf to veto a candidate.
std::vector<std::string> forward_select(
    const std::vector<std::string>& dims,
    const std::function<double(const std::vector<std::string>&)>& objective);

// The real objective: train on `train` with the candidate set, F1@n_select
// on `validation`. Candidate failures count as -inf; a failing empty-set
// baseline propagates.
std::vector<std::string> forward_select(std::span<const Session> train,
                                        std::span<const Session> validation,
                                        const Dataset& dataset,
                                        const std::vector<std::string>& dims,
                                        const EngineOptions& engine, int n_select,
                                        std::uint64_t seed,
                                        const eval::EvalOptions& eval_options);

struct SegmentInfo {
    std::string dimension;
    std::string value;
    std::size_t train_sessions = 0;
    std::optional<double> validation_f1;
    bool retained = false;
    std::string note;
};

struct SegmentCandidate {
    std::string dimension;
    std::string value;
    std::size_t train_sessions = 0;
    // Validation F1 of a plain model trained on the segment, or nullopt when
    // it could not be evaluated; second value is the traditional model's F1
    // on the same validation subset.
    std::optional<double> validation_f1;
    std::optional<double> traditional_f1;
};

// Size gate plus strict-improvement comparison; pure so the selection rule
// can be tested with scripted candidates.
std::vector<SegmentInfo> select_segments(const std::vector<SegmentCandidate>& candidates,
                                         std::size_t min_segment_sessions);

// Routes each query to the retained segment model matching the active
// context with the highest validation F1, falling back to the traditional
// model when nothing matches.
class CombinedReductionRecommender final : public TopNRecommender {
public:
    struct Segment {
        std::string dimension;
        std::string value;
        double validation_f1 = 0.0;
        std::shared_ptr<const TopNRecommender> model;
    };

    CombinedReductionRecommender(std::shared_ptr<const TopNRecommender> traditional,
                                 std::vector<Segment> segments);

    std::vector<Scored> recommend(const Query& query, int n) const override;

    // The model recommend() would use for this context; exposed for tests.
    const TopNRecommender& route(const ContextMap& active_context) const;
    std::size_t segment_count() const { return segments_.size(); }

private:
    std::shared_ptr<const TopNRecommender> traditional_;
    std::vector<Segment> segments_;  // sorted by (f1 desc, dimension asc, value asc)
};

struct CombinedReductionResult {
    std::unique_ptr<CombinedReductionRecommender> recommender;
    std::vector<SegmentInfo> segments;
    double traditional_validation_f1 = 0.0;
};

// Trains a plain model per (dimension, value) segment with enough training
// sessions and retains those that strictly beat the traditional model on the
// matching validation sessions.
CombinedReductionResult combined_reduction_train(std::span<const Session> train,
                                                 std::span<const Session> validation,
                                                 const Dataset& dataset,
                                                 const std::vector<std::string>& dims,
                                                 const EngineOptions& engine, int n_select,
                                                 std::uint64_t seed,
                                                 const eval::EvalOptions& eval_options,
                                                 std::size_t min_segment_sessions = 30);

struct StrategyOptions {
    std::vector<std::string> dims;  // candidate dimensions; default all registered
    eval::EvalOptions eval;
    int n_select = 1;
    double ratio = 0.8;
    double validation_fraction = 0.25;  // carved out of train for selection
    std::uint64_t seed = 0;
    std::size_t min_segment_sessions = 30;
};

struct StrategyResult {
    std::string strategy;
    std::string algorithm;
    std::vector<std::string> chosen_dims;
    std::vector<SegmentInfo> segments;
    eval::EvalReport report;  // on the held-out test set
    std::string split_digest;
};

// strategy_spec: baseline | single:<dim> | best | forward | all | combined.
// Selection only ever sees a carve-out of the training split; the final
// model is retrained on the full training split (combined reduction keeps
// its carve-trained models since routing needs their validation scores).
StrategyResult run_strategy(const Dataset& dataset, const EngineOptions& engine,
                            std::string_view strategy_spec, const StrategyOptions& options);

}  // namespace ctxrec::strategy
