#include "ctxrec/ar_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "ctxrec/parallel.hpp"

namespace ctxrec::ar {

namespace {

constexpr std::string_view kModelMagic = "ctxrec-ar-model 1";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_serializable(const std::string& token) {
    if (token.find_first_of(",\t\n") != std::string::npos) {
        throw ParseError("token '" + token + "' contains a delimiter character");
    }
}

double parse_double_field(const std::string& text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("rule model: bad numeric field '" + text + "'");
    }
    return v;
}

}  // namespace

Thresholds choose_thresholds(std::span<const davi::AugmentedSession> sessions) {
    std::unordered_map<std::string, std::size_t> item_counts;
    for (const auto& session : sessions) {
        for (const std::string& token : session.tokens) {
            if (!is_virtual_token(token)) ++item_counts[token];
        }
    }
    if (item_counts.size() < 3) {
        throw ThresholdError("threshold heuristic needs at least 3 distinct items, got " +
                             std::to_string(item_counts.size()));
    }
    const double n = static_cast<double>(sessions.size());
    std::vector<double> supports;
    supports.reserve(item_counts.size());
    for (const auto& [item, count] : item_counts) {
        supports.push_back(static_cast<double>(count) / n);
    }
    std::sort(supports.begin(), supports.end());  // ascending

    const std::size_t m = supports.size();
    const std::size_t percentile_rank = (m + 1) / 2;  // ceil(m/2), 1-based from the bottom
    Thresholds t;
    t.min_support = supports[percentile_rank - 1];
    t.min_confidence = supports[m - 3];  // third most frequent
    return t;
}

double FrequentItemsets::support(std::vector<std::string> itemset) const {
    std::sort(itemset.begin(), itemset.end());
    auto it = counts.find(itemset);
    if (it == counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(session_count);
}

bool FrequentItemsets::contains(std::vector<std::string> itemset) const {
    std::sort(itemset.begin(), itemset.end());
    return counts.find(itemset) != counts.end();
}

std::map<std::vector<std::string>, double> FrequentItemsets::as_support_map() const {
    std::map<std::vector<std::string>, double> out;
    for (const auto& [itemset, count] : counts) {
        out.emplace(itemset,
                    static_cast<double>(count) / static_cast<double>(session_count));
    }
    return out;
}

FrequentItemsets mine_frequent_itemsets(std::span<const davi::AugmentedSession> sessions,
                                        double min_support, const MineOptions& options) {
    if (!(min_support > 0.0) || min_support > 1.0) {
        throw ValidationError("min_support must be in (0, 1]");
    }
    FrequentItemsets result;
    result.session_count = sessions.size();
    if (sessions.empty()) return result;

    const double n = static_cast<double>(sessions.size());
    auto frequent = [&](std::size_t count) {
        return static_cast<double>(count) / n >= min_support;
    };

    // Dense ids over the sorted token universe.
    std::vector<std::string> tokens;
    {
        std::set<std::string> universe;
        for (const auto& s : sessions) universe.insert(s.tokens.begin(), s.tokens.end());
        tokens.assign(universe.begin(), universe.end());
    }
    std::unordered_map<std::string, std::uint32_t> token_ids;
    for (std::uint32_t id = 0; id < tokens.size(); ++id) token_ids.emplace(tokens[id], id);

    // Tid-lists per single token.
    std::vector<std::vector<std::uint32_t>> token_tids(tokens.size());
    for (std::uint32_t sid = 0; sid < sessions.size(); ++sid) {
        std::vector<std::uint32_t> ids;
        ids.reserve(sessions[sid].tokens.size());
        for (const std::string& token : sessions[sid].tokens) {
            ids.push_back(token_ids.at(token));
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (std::uint32_t id : ids) token_tids[id].push_back(sid);
    }

    struct Node {
        std::vector<std::uint32_t> itemset;  // sorted token ids
        std::vector<std::uint32_t> tids;     // sorted session ids
    };

    std::size_t total = 0;
    auto note_kept = [&](std::size_t kept) {
        total += kept;
        if (total > options.max_itemsets) {
            throw ResourceLimitError("frequent itemset cap of " +
                                     std::to_string(options.max_itemsets) + " exceeded");
        }
    };

    std::vector<Node> level;
    for (std::uint32_t id = 0; id < tokens.size(); ++id) {
        if (frequent(token_tids[id].size())) {
            level.push_back({{id}, std::move(token_tids[id])});
        }
    }
    note_kept(level.size());
    for (const Node& node : level) {
        result.counts.emplace(std::vector<std::string>{tokens[node.itemset[0]]},
                              node.tids.size());
    }

    while (level.size() >= 2) {
        // Join nodes sharing the (k-1)-prefix; the level is lexicographically
        // sorted, so joinable nodes form contiguous groups.
        std::vector<std::pair<std::size_t, std::size_t>> joins;
        for (std::size_t a = 0; a + 1 < level.size(); ++a) {
            for (std::size_t b = a + 1; b < level.size(); ++b) {
                const auto& x = level[a].itemset;
                const auto& y = level[b].itemset;
                if (!std::equal(x.begin(), x.end() - 1, y.begin(), y.end() - 1)) break;
                joins.emplace_back(a, b);
            }
        }
        if (joins.empty()) break;

        std::vector<Node> next(joins.size());
        parallel_blocks(joins.size(), options.threads,
                        [&](std::size_t, std::size_t begin, std::size_t end) {
                            for (std::size_t idx = begin; idx < end; ++idx) {
                                const auto& [a, b] = joins[idx];
                                Node candidate;
                                candidate.itemset = level[a].itemset;
                                candidate.itemset.push_back(level[b].itemset.back());
                                std::set_intersection(level[a].tids.begin(),
                                                      level[a].tids.end(),
                                                      level[b].tids.begin(),
                                                      level[b].tids.end(),
                                                      std::back_inserter(candidate.tids));
                                if (frequent(candidate.tids.size())) {
                                    next[idx] = std::move(candidate);
                                }
                            }
                        });
        std::vector<Node> kept;
        kept.reserve(next.size());
        for (Node& node : next) {
            if (!node.itemset.empty()) kept.push_back(std::move(node));
        }
        note_kept(kept.size());
        for (const Node& node : kept) {
            std::vector<std::string> names;
            names.reserve(node.itemset.size());
            for (std::uint32_t id : node.itemset) names.push_back(tokens[id]);
            result.counts.emplace(std::move(names), node.tids.size());
        }
        level = std::move(kept);
    }
    return result;
}

RuleModel generate_rules(const FrequentItemsets& itemsets, double min_confidence,
                         double min_support) {
    RuleModel model;
    model.thresholds = {min_support, min_confidence};
    for (const auto& [itemset, union_count] : itemsets.counts) {
        if (itemset.size() < 2) continue;
        for (std::size_t drop = 0; drop < itemset.size(); ++drop) {
            const std::string& consequent = itemset[drop];
            if (is_virtual_token(consequent)) continue;
            std::vector<std::string> antecedent;
            antecedent.reserve(itemset.size() - 1);
            for (std::size_t i = 0; i < itemset.size(); ++i) {
                if (i != drop) antecedent.push_back(itemset[i]);
            }
            auto ant = itemsets.counts.find(antecedent);
            if (ant == itemsets.counts.end()) {
                throw ValidationError("itemset collection is not downward closed");
            }
            const double confidence = static_cast<double>(union_count) /
                                      static_cast<double>(ant->second);
            if (confidence >= min_confidence) {
                const double support = static_cast<double>(union_count) /
                                       static_cast<double>(itemsets.session_count);
                model.rules.push_back({std::move(antecedent), consequent, support, confidence});
            }
        }
    }
    std::sort(model.rules.begin(), model.rules.end(), [](const Rule& a, const Rule& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.support != b.support) return a.support > b.support;
        if (a.consequent != b.consequent) return a.consequent < b.consequent;
        return a.antecedent < b.antecedent;
    });
    return model;
}

namespace {

std::vector<Scored> fire_rules(const std::vector<std::string>& observables, int n,
                               const std::function<void(
                                   const std::unordered_set<std::string_view>&,
                                   const std::function<void(const Rule&)>&)>& for_candidates) {
    if (n < 1) {
        throw ValidationError("top-N size must be at least 1");
    }
    std::unordered_set<std::string_view> obs(observables.begin(), observables.end());

    // consequent -> best (confidence, support)
    std::unordered_map<std::string_view, std::pair<double, double>> best;
    for_candidates(obs, [&](const Rule& rule) {
        if (obs.count(rule.consequent) != 0) return;
        bool applies = true;
        for (const std::string& token : rule.antecedent) {
            if (obs.count(token) == 0) {
                applies = false;
                break;
            }
        }
        if (!applies) return;
        const std::pair<double, double> key{rule.confidence, rule.support};
        auto [it, inserted] = best.emplace(rule.consequent, key);
        if (!inserted && key > it->second) it->second = key;
    });

    std::vector<Scored> out;
    out.reserve(best.size());
    std::vector<std::pair<std::pair<double, double>, std::string_view>> ranked;
    ranked.reserve(best.size());
    for (const auto& [consequent, key] : best) {
        ranked.emplace_back(key, consequent);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first.first != b.first.first) return a.first.first > b.first.first;
        if (a.first.second != b.first.second) return a.first.second > b.first.second;
        return a.second < b.second;
    });
    for (const auto& [key, consequent] : ranked) {
        if (out.size() == static_cast<std::size_t>(n)) break;
        out.push_back({std::string(consequent), key.first});
    }
    return out;
}

}  // namespace

std::vector<Scored> recommend_topn(const RuleModel& model,
                                   const std::vector<std::string>& observables, int n) {
    return fire_rules(observables, n,
                      [&](const std::unordered_set<std::string_view>&,
                          const std::function<void(const Rule&)>& visit) {
                          for (const Rule& rule : model.rules) visit(rule);
                      });
}

ArRecommender::ArRecommender(RuleModel model) : model_(std::move(model)) {
    for (std::size_t i = 0; i < model_.rules.size(); ++i) {
        by_first_token_[model_.rules[i].antecedent.front()].push_back(i);
    }
}

std::vector<Scored> ArRecommender::recommend(const Query& query, int n) const {
    return fire_rules(query.observables, n,
                      [&](const std::unordered_set<std::string_view>& obs,
                          const std::function<void(const Rule&)>& visit) {
                          for (std::string_view token : obs) {
                              auto it = by_first_token_.find(std::string(token));
                              if (it == by_first_token_.end()) continue;
                              for (std::size_t i : it->second) visit(model_.rules[i]);
                          }
                      });
}

void RuleModel::save(std::ostream& out) const {
    out << kModelMagic << "\n";
    out << "thresholds\t" << format_double(thresholds.min_support) << "\t"
        << format_double(thresholds.min_confidence) << "\n";
    out << "rules " << rules.size() << "\n";
    for (const Rule& rule : rules) {
        check_serializable(rule.consequent);
        for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
            check_serializable(rule.antecedent[i]);
            out << (i == 0 ? "" : ",") << rule.antecedent[i];
        }
        out << "\t" << rule.consequent << "\t" << format_double(rule.support) << "\t"
            << format_double(rule.confidence) << "\n";
    }
    if (!out) {
        throw ParseError("failed to write rule model");
    }
}

RuleModel RuleModel::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) {
        throw ParseError("not a rule model file");
    }
    RuleModel model;
    if (!std::getline(in, line)) {
        throw ParseError("rule model truncated");
    }
    {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3 || fields[0] != "thresholds") {
            throw ParseError("rule model: expected thresholds line");
        }
        model.thresholds.min_support = parse_double_field(fields[1]);
        model.thresholds.min_confidence = parse_double_field(fields[2]);
    }
    if (!std::getline(in, line) || line.rfind("rules ", 0) != 0) {
        throw ParseError("rule model: expected 'rules' section");
    }
    std::size_t n_rules = 0;
    {
        auto [ptr, ec] = std::from_chars(line.data() + 6, line.data() + line.size(), n_rules);
        if (ec != std::errc() || ptr != line.data() + line.size()) {
            throw ParseError("rule model: bad rule count in '" + line + "'");
        }
    }
    model.rules.reserve(n_rules);
    for (std::size_t r = 0; r < n_rules; ++r) {
        if (!std::getline(in, line)) {
            throw ParseError("rule model truncated in rule section");
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4) {
            throw ParseError("rule model: bad rule line '" + line + "'");
        }
        Rule rule;
        std::size_t pos = 0;
        while (pos <= fields[0].size() && !fields[0].empty()) {
            std::size_t comma = fields[0].find(',', pos);
            rule.antecedent.push_back(fields[0].substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (rule.antecedent.empty()) {
            throw ParseError("rule model: rule with empty antecedent");
        }
        rule.consequent = fields[1];
        if (is_virtual_token(rule.consequent)) {
            throw ParseError("rule model: virtual consequent '" + rule.consequent + "'");
        }
        rule.support = parse_double_field(fields[2]);
        rule.confidence = parse_double_field(fields[3]);
        model.rules.push_back(std::move(rule));
    }
    return model;
}

}  // namespace ctxrec::ar
