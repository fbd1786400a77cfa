#include "ctxrec/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ctxrec/rng.hpp"

namespace ctxrec::strategy {

std::string_view to_string(Algorithm algorithm) {
    return algorithm == Algorithm::cf ? "cf" : "ar";
}

Algorithm algorithm_from_string(std::string_view name) {
    if (name == "cf") return Algorithm::cf;
    if (name == "ar") return Algorithm::ar;
    throw ValidationError("unknown algorithm '" + std::string(name) + "' (expected cf or ar)");
}

std::unique_ptr<TopNRecommender> train_recommender(std::span<const Session> train,
                                                   const davi::DaviConfig& config,
                                                   const EngineOptions& options) {
    auto augmented = davi::augment_sessions(train, config);
    if (options.algorithm == Algorithm::cf) {
        cf::BuildOptions build;
        build.unit = options.cf_unit;
        build.threads = options.threads;
        auto model = cf::SimilarityModel::build(augmented, build);
        return std::make_unique<cf::CfRecommender>(std::move(model), options.cf_neighbors);
    }
    ar::Thresholds thresholds;
    if (options.min_support && options.min_confidence) {
        thresholds = {*options.min_support, *options.min_confidence};
    } else {
        thresholds = ar::choose_thresholds(augmented);
        if (options.min_support) thresholds.min_support = *options.min_support;
        if (options.min_confidence) thresholds.min_confidence = *options.min_confidence;
    }
    ar::MineOptions mine;
    mine.max_itemsets = options.max_itemsets;
    mine.threads = options.threads;
    auto itemsets = ar::mine_frequent_itemsets(augmented, thresholds.min_support, mine);
    auto model = ar::generate_rules(itemsets, thresholds.min_confidence,
                                    thresholds.min_support);
    return std::make_unique<ar::ArRecommender>(std::move(model));
}

std::map<std::string, SweepEntry> sweep_single_dimensions(const Dataset& dataset,
                                                          const EngineOptions& engine,
                                                          const std::vector<std::string>& dims,
                                                          double ratio, std::uint64_t seed,
                                                          const eval::EvalOptions& eval_options) {
    const eval::EvalSplit split = eval::split_sessions(dataset, ratio, seed);
    std::map<std::string, SweepEntry> out;

    auto run_one = [&](const std::string& key, const davi::DaviConfig& config) {
        SweepEntry entry;
        try {
            auto recommender = train_recommender(split.train, config, engine);
            entry.report = eval::evaluate(*recommender, split.test, dataset, config, seed,
                                          eval_options);
        } catch (const Error& e) {
            entry.error = e.what();
        }
        out.emplace(key, std::move(entry));
    };

    run_one(std::string(kBaselineKey), davi::DaviConfig{});
    for (const std::string& dim : dims) {
        davi::DaviConfig config{{dim}};
        davi::validate_config(config, dataset.dimensions);
        run_one(dim, config);
    }
    return out;
}

std::string best_context(const std::map<std::string, SweepEntry>& sweep, int n_select) {
    std::string best;
    double best_f1 = -1.0;
    for (const auto& [dim, entry] : sweep) {  // map order = name ascending
        if (dim == kBaselineKey || !entry.report) continue;
        const double f1 = entry.report->at(n_select).f1;
        if (f1 > best_f1) {
            best_f1 = f1;
            best = dim;
        }
    }
    if (best.empty()) {
        throw EvaluationError("best_context: no dimension produced a report");
    }
    return best;
}

std::vector<std::string> forward_select(
    const std::vector<std::string>& dims,
    const std::function<double(const std::vector<std::string>&)>& objective) {
    std::vector<std::string> chosen;
    std::vector<std::string> remaining = dims;
    std::sort(remaining.begin(), remaining.end());
    double current = objective(chosen);

    while (!remaining.empty()) {
        std::string best_dim;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const std::string& dim : remaining) {  // ascending, so ties keep the first
            std::vector<std::string> candidate = chosen;
            candidate.push_back(dim);
            const double score = objective(candidate);
            if (score > best_score) {
                best_score = score;
                best_dim = dim;
            }
        }
        if (!(best_score > current)) break;
        chosen.push_back(best_dim);
        current = best_score;
        remaining.erase(std::find(remaining.begin(), remaining.end(), best_dim));
    }
    return chosen;
}

std::vector<std::string> forward_select(std::span<const Session> train,
                                        std::span<const Session> validation,
                                        const Dataset& dataset,
                                        const std::vector<std::string>& dims,
                                        const EngineOptions& engine, int n_select,
                                        std::uint64_t seed,
                                        const eval::EvalOptions& eval_options) {
    bool baseline = true;
    auto objective = [&](const std::vector<std::string>& active) -> double {
        davi::DaviConfig config{active};
        const bool is_baseline = baseline;
        baseline = false;
        try {
            auto recommender = train_recommender(train, config, engine);
            return eval::evaluate(*recommender, validation, dataset, config, seed,
                                  eval_options)
                .at(n_select)
                .f1;
        } catch (const Error&) {
            if (is_baseline) throw;
            return -std::numeric_limits<double>::infinity();
        }
    };
    return forward_select(dims, objective);
}

std::vector<SegmentInfo> select_segments(const std::vector<SegmentCandidate>& candidates,
                                         std::size_t min_segment_sessions) {
    std::vector<SegmentInfo> out;
    out.reserve(candidates.size());
    for (const SegmentCandidate& c : candidates) {
        SegmentInfo info;
        info.dimension = c.dimension;
        info.value = c.value;
        info.train_sessions = c.train_sessions;
        info.validation_f1 = c.validation_f1;
        if (c.train_sessions < min_segment_sessions) {
            info.note = "segment below minimum size";
        } else if (!c.validation_f1 || !c.traditional_f1) {
            info.note = "segment not evaluable on validation";
        } else if (*c.validation_f1 > *c.traditional_f1) {
            info.retained = true;
        } else {
            info.note = "no improvement over traditional model";
        }
        out.push_back(std::move(info));
    }
    return out;
}

CombinedReductionRecommender::CombinedReductionRecommender(
    std::shared_ptr<const TopNRecommender> traditional, std::vector<Segment> segments)
    : traditional_(std::move(traditional)), segments_(std::move(segments)) {
    std::sort(segments_.begin(), segments_.end(), [](const Segment& a, const Segment& b) {
        if (a.validation_f1 != b.validation_f1) return a.validation_f1 > b.validation_f1;
        if (a.dimension != b.dimension) return a.dimension < b.dimension;
        return a.value < b.value;
    });
}

const TopNRecommender& CombinedReductionRecommender::route(
    const ContextMap& active_context) const {
    for (const Segment& segment : segments_) {
        auto values = active_context.find(segment.dimension);
        if (values != active_context.end() && values->second.count(segment.value) != 0) {
            return *segment.model;
        }
    }
    return *traditional_;
}

std::vector<Scored> CombinedReductionRecommender::recommend(const Query& query, int n) const {
    return route(query.active_context).recommend(query, n);
}

CombinedReductionResult combined_reduction_train(std::span<const Session> train,
                                                 std::span<const Session> validation,
                                                 const Dataset& dataset,
                                                 const std::vector<std::string>& dims,
                                                 const EngineOptions& engine, int n_select,
                                                 std::uint64_t seed,
                                                 const eval::EvalOptions& eval_options,
                                                 std::size_t min_segment_sessions) {
    const davi::DaviConfig plain;
    std::shared_ptr<const TopNRecommender> traditional =
        train_recommender(train, plain, engine);

    CombinedReductionResult result;
    result.traditional_validation_f1 =
        eval::evaluate(*traditional, validation, dataset, plain, seed, eval_options)
            .at(n_select)
            .f1;

    // Segment labels come from the stored session context.
    std::map<std::pair<std::string, std::string>, std::vector<Session>> segment_train;
    for (const Session& session : train) {
        for (const std::string& dim : dims) {
            auto values = session.context.find(dim);
            if (values == session.context.end()) continue;
            for (const std::string& value : values->second) {
                segment_train[{dim, value}].push_back(session);
            }
        }
    }

    std::vector<SegmentCandidate> candidates;
    std::vector<std::shared_ptr<const TopNRecommender>> models;
    for (const auto& [label, sessions] : segment_train) {
        SegmentCandidate candidate;
        candidate.dimension = label.first;
        candidate.value = label.second;
        candidate.train_sessions = sessions.size();
        models.push_back(nullptr);
        if (sessions.size() < min_segment_sessions) {
            candidates.push_back(std::move(candidate));
            continue;
        }
        std::vector<Session> matching_validation;
        for (const Session& session : validation) {
            auto values = session.context.find(label.first);
            if (values != session.context.end() && values->second.count(label.second) != 0) {
                matching_validation.push_back(session);
            }
        }
        try {
            std::shared_ptr<const TopNRecommender> model =
                train_recommender(sessions, plain, engine);
            candidate.validation_f1 =
                eval::evaluate(*model, matching_validation, dataset, plain, seed, eval_options)
                    .at(n_select)
                    .f1;
            candidate.traditional_f1 =
                eval::evaluate(*traditional, matching_validation, dataset, plain, seed,
                               eval_options)
                    .at(n_select)
                    .f1;
            models.back() = std::move(model);
        } catch (const Error&) {
            // Not evaluable (too small, all singletons, mining failure):
            // leave the scores unset and let selection drop it.
        }
        candidates.push_back(std::move(candidate));
    }

    result.segments = select_segments(candidates, min_segment_sessions);
    std::vector<CombinedReductionRecommender::Segment> retained;
    for (std::size_t i = 0; i < result.segments.size(); ++i) {
        if (!result.segments[i].retained) continue;
        retained.push_back({result.segments[i].dimension, result.segments[i].value,
                            *result.segments[i].validation_f1, models[i]});
    }
    result.recommender = std::make_unique<CombinedReductionRecommender>(std::move(traditional),
                                                                        std::move(retained));
    return result;
}

namespace {

std::vector<std::string> all_dimension_names(const Dataset& dataset) {
    std::vector<std::string> names;
    names.reserve(dataset.dimensions.size());
    for (const ContextDimension& dim : dataset.dimensions.all()) {
        names.push_back(dim.name);
    }
    return names;
}

}  // namespace

StrategyResult run_strategy(const Dataset& dataset, const EngineOptions& engine,
                            std::string_view strategy_spec, const StrategyOptions& options) {
    const std::vector<std::string> dims =
        options.dims.empty() ? all_dimension_names(dataset) : options.dims;
    for (const std::string& dim : dims) {
        if (!dataset.dimensions.contains(dim)) {
            throw RegistryError("dimension '" + dim + "' not registered");
        }
    }

    const eval::EvalSplit split = eval::split_sessions(dataset, options.ratio, options.seed);

    StrategyResult result;
    result.strategy = std::string(strategy_spec);
    result.algorithm = std::string(to_string(engine.algorithm));
    result.split_digest = eval::split_digest(split);

    auto carve = [&]() {
        return eval::split_sessions(std::span<const Session>(split.train),
                                    1.0 - options.validation_fraction,
                                    mix_seed(options.seed, "validation"));
    };
    // Selection only ever looks at F1@n_select.
    eval::EvalOptions selection_eval = options.eval;
    selection_eval.n_values = {options.n_select};

    davi::DaviConfig config;
    std::unique_ptr<TopNRecommender> recommender;

    if (strategy_spec == "baseline") {
        // user x item only
    } else if (strategy_spec.rfind("single:", 0) == 0) {
        config.active_dimensions = {std::string(strategy_spec.substr(7))};
    } else if (strategy_spec == "all") {
        config.active_dimensions = dims;
    } else if (strategy_spec == "best") {
        const eval::EvalSplit inner = carve();
        std::map<std::string, SweepEntry> sweep;
        for (const std::string& dim : dims) {
            SweepEntry entry;
            davi::DaviConfig candidate{{dim}};
            try {
                auto model = train_recommender(inner.train, candidate, engine);
                entry.report = eval::evaluate(*model, inner.test, dataset, candidate,
                                              inner.seed, selection_eval);
            } catch (const Error& e) {
                entry.error = e.what();
            }
            sweep.emplace(dim, std::move(entry));
        }
        config.active_dimensions = {best_context(sweep, options.n_select)};
    } else if (strategy_spec == "forward") {
        const eval::EvalSplit inner = carve();
        config.active_dimensions =
            forward_select(inner.train, inner.test, dataset, dims, engine, options.n_select,
                           inner.seed, selection_eval);
    } else if (strategy_spec == "combined") {
        const eval::EvalSplit inner = carve();
        auto combined =
            combined_reduction_train(inner.train, inner.test, dataset, dims, engine,
                                     options.n_select, inner.seed, selection_eval,
                                     options.min_segment_sessions);
        result.segments = std::move(combined.segments);
        recommender = std::move(combined.recommender);
    } else {
        throw ValidationError("unknown strategy '" + std::string(strategy_spec) + "'");
    }

    davi::validate_config(config, dataset.dimensions);
    result.chosen_dims = config.active_dimensions;
    if (!recommender) {
        recommender = train_recommender(split.train, config, engine);
    }
    result.report = eval::evaluate(*recommender, split.test, dataset, config, options.seed,
                                   options.eval);
    return result;
}

}  // namespace ctxrec::strategy
