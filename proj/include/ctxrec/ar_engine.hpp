#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxrec/davi.hpp"
#include "ctxrec/recommender.hpp"

namespace ctxrec::ar {

struct Thresholds {
    double min_support = 0.0;
    double min_confidence = 0.0;

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// The support heuristic: min_support is the support of the 50th-percentile
// actual item (nearest rank, so at least half the items stay frequent);
// min_confidence is the support of the third most frequent actual item.
// Virtual tokens are ignored. Throws ThresholdError below 3 distinct items.
Thresholds choose_thresholds(std::span<const davi::AugmentedSession> sessions);

// Frequent itemsets keyed by sorted token vector, with raw session counts so
// supports and confidences stay exact fractions of session_count.
struct FrequentItemsets {
    std::map<std::vector<std::string>, std::size_t> counts;
    std::size_t session_count = 0;

    double support(std::vector<std::string> itemset) const;
    bool contains(std::vector<std::string> itemset) const;
    std::map<std::vector<std::string>, double> as_support_map() const;
};

struct MineOptions {
    // Guardrail converting combinatorial blow-ups into a clean
    // ResourceLimitError instead of an out-of-memory grind.
    std::size_t max_itemsets = 1'000'000;
    int threads = 1;
};

// Level-wise mining with tid-list intersections; output is exactly the
// itemsets whose relative session frequency reaches min_support.
FrequentItemsets mine_frequent_itemsets(std::span<const davi::AugmentedSession> sessions,
                                        double min_support, const MineOptions& options = {});

struct Rule {
    std::vector<std::string> antecedent;  // sorted; actual and/or virtual tokens
    std::string consequent;               // always an actual item
    double support = 0.0;
    double confidence = 0.0;

    friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleModel {
    std::vector<Rule> rules;
    Thresholds thresholds;

    void save(std::ostream& out) const;
    static RuleModel load(std::istream& in);
};

// All rules X\{y} -> y with y actual, |X| >= 2 and confidence >= the
// threshold. min_support is recorded in the model for provenance.
RuleModel generate_rules(const FrequentItemsets& itemsets, double min_confidence,
                         double min_support = 0.0);

// Fires rules with antecedent ⊆ observables and consequent outside them,
// keeps each consequent's best (confidence, support), ranks by confidence
// desc, support desc, token asc.
std::vector<Scored> recommend_topn(const RuleModel& model,
                                   const std::vector<std::string>& observables, int n);

class ArRecommender final : public TopNRecommender {
public:
    explicit ArRecommender(RuleModel model);

    std::vector<Scored> recommend(const Query& query, int n) const override;

    const RuleModel& model() const { return model_; }

private:
    RuleModel model_;
    // antecedent's first token -> rule indices, so a query only checks rules
    // that can possibly fire.
    std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

}  // namespace ctxrec::ar
