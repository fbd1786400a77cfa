#include "ctxrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "ctxrec/parallel.hpp"
#include "ctxrec/rng.hpp"

namespace ctxrec::eval {

EvalSplit split_sessions(std::span<const Session> sessions, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || !(ratio < 1.0)) {
        throw SplitError("split ratio must be in (0, 1)");
    }
    if (sessions.size() < 2) {
        throw SplitError("need at least 2 sessions to split, got " +
                         std::to_string(sessions.size()));
    }
    std::vector<std::size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, seed);

    auto train_size = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(sessions.size())));
    train_size = std::clamp<std::size_t>(train_size, 1, sessions.size() - 1);

    EvalSplit split;
    split.seed = seed;
    split.train.reserve(train_size);
    split.test.reserve(sessions.size() - train_size);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < train_size ? split.train : split.test).push_back(sessions[order[i]]);
    }
    return split;
}

EvalSplit split_sessions(const Dataset& dataset, double ratio, std::uint64_t seed) {
    return split_sessions(std::span<const Session>(dataset.sessions), ratio, seed);
}

std::string split_digest(const EvalSplit& split) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    };
    mix("train");
    for (const Session& s : split.train) mix(s.session_id);
    mix("test");
    for (const Session& s : split.test) mix(s.session_id);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t case_seed(std::uint64_t split_seed, std::string_view session_id) {
    return mix_seed(split_seed, session_id);
}

std::optional<HiddenCase> hide_one(const Session& session, const Dataset& dataset,
                                   std::uint64_t seed) {
    if (session.items.size() < 2) {
        return std::nullopt;
    }
    SplitMix64 g(seed);
    const std::size_t hidden_index = static_cast<std::size_t>(g.bounded(session.items.size()));

    HiddenCase out;
    out.session_id = session.session_id;
    out.user_id = session.user_id;
    out.hidden = session.items[hidden_index].str();
    out.observables.reserve(session.items.size() - 1);
    for (std::size_t i = 0; i < session.items.size(); ++i) {
        if (i != hidden_index) out.observables.push_back(session.items[i].str());
    }

    for (const ContextDimension& dim : dataset.dimensions.all()) {
        if (dim.source == DimensionSource::item_attribute) {
            // Leakage rule: recompute from the observable items only.
            std::set<std::string> values;
            for (const std::string& item : out.observables) {
                auto entry = dataset.catalog.find(ItemId(item));
                if (entry == dataset.catalog.end()) continue;
                auto attr = entry->second.find(dim.name);
                if (attr != entry->second.end()) values.insert(attr->second);
            }
            if (!values.empty()) out.active_context[dim.name] = std::move(values);
        } else {
            auto stored = session.context.find(dim.name);
            if (stored != session.context.end() && !stored->second.empty()) {
                out.active_context[dim.name] = stored->second;
            }
        }
    }
    return out;
}

Metrics metrics_for_case(const std::vector<std::string>& recommendations,
                         const std::string& hidden, int n) {
    if (n < 1) {
        throw ValidationError("top-N size must be at least 1");
    }
    const std::size_t length = std::min<std::size_t>(recommendations.size(),
                                                     static_cast<std::size_t>(n));
    bool hit = false;
    for (std::size_t i = 0; i < length; ++i) {
        if (recommendations[i] == hidden) {
            hit = true;
            break;
        }
    }
    Metrics m;
    m.recall = hit ? 1.0 : 0.0;
    m.precision = (hit && length > 0) ? 1.0 / static_cast<double>(length) : 0.0;
    return m;
}

double f1(double recall, double precision) {
    if (recall == 0.0 && precision == 0.0) return 0.0;
    return 2.0 * recall * precision / (recall + precision);
}

const EvalRow& EvalReport::at(int n) const {
    for (const EvalRow& row : rows) {
        if (row.n == n) return row;
    }
    throw EvaluationError("report has no row for N=" + std::to_string(n));
}

EvalReport evaluate(const TopNRecommender& recommender, std::span<const Session> test,
                    const Dataset& dataset, const davi::DaviConfig& config,
                    std::uint64_t split_seed, const EvalOptions& options) {
    if (options.n_values.empty()) {
        throw EvaluationError("no N values configured");
    }
    const int max_n = *std::max_element(options.n_values.begin(), options.n_values.end());
    if (max_n < 1) {
        throw EvaluationError("N values must be at least 1");
    }

    struct CaseResult {
        bool used = false;
        std::string user_id;
        std::vector<Metrics> per_n;
    };
    std::vector<CaseResult> results(test.size());

    parallel_blocks(test.size(), options.threads,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                        for (std::size_t i = begin; i < end; ++i) {
                            const Session& session = test[i];
                            auto hidden = hide_one(session, dataset,
                                                   case_seed(split_seed, session.session_id));
                            if (!hidden) continue;
                            Query query;
                            query.observables = davi::observables_with_context(
                                hidden->observables, hidden->active_context, config);
                            query.active_context = hidden->active_context;
                            std::vector<Scored> recs = recommender.recommend(query, max_n);
                            std::vector<std::string> ranked;
                            ranked.reserve(recs.size());
                            for (const Scored& r : recs) ranked.push_back(r.item);

                            CaseResult& out = results[i];
                            out.used = true;
                            out.user_id = hidden->user_id;
                            out.per_n.reserve(options.n_values.size());
                            for (int n : options.n_values) {
                                out.per_n.push_back(metrics_for_case(ranked, hidden->hidden, n));
                            }
                        }
                    });

    EvalReport report;
    for (const CaseResult& r : results) {
        r.used ? ++report.cases : ++report.skipped;
    }
    if (report.cases == 0) {
        throw EvaluationError("no usable test cases (all sessions were singletons)");
    }

    report.rows.reserve(options.n_values.size());
    for (std::size_t ni = 0; ni < options.n_values.size(); ++ni) {
        double recall_sum = 0.0;
        double precision_sum = 0.0;
        double denom = 0.0;
        if (options.per_user) {
            std::map<std::string, std::pair<Metrics, std::size_t>> by_user;
            for (const CaseResult& r : results) {
                if (!r.used) continue;
                auto& [sum, count] = by_user[r.user_id];
                sum.recall += r.per_n[ni].recall;
                sum.precision += r.per_n[ni].precision;
                ++count;
            }
            for (const auto& [user, entry] : by_user) {
                recall_sum += entry.first.recall / static_cast<double>(entry.second);
                precision_sum += entry.first.precision / static_cast<double>(entry.second);
            }
            denom = static_cast<double>(by_user.size());
        } else {
            for (const CaseResult& r : results) {
                if (!r.used) continue;
                recall_sum += r.per_n[ni].recall;
                precision_sum += r.per_n[ni].precision;
            }
            denom = static_cast<double>(report.cases);
        }
        EvalRow row;
        row.n = options.n_values[ni];
        row.recall = recall_sum / denom;
        row.precision = precision_sum / denom;
        row.f1 = f1(row.recall, row.precision);
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace ctxrec::eval
