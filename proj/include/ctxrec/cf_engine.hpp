#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctxrec/davi.hpp"
#include "ctxrec/recommender.hpp"

namespace ctxrec::cf {

struct BuildOptions {
    // Co-occurrence unit: one binary-vector position per session (default) or
    // per user.
    enum class Unit { session, user };
    Unit unit = Unit::session;
    int threads = 1;
};

// |a ∩ b| / sqrt(|a|·|b|), the cosine of two binary occurrence vectors.
// Throws UndefinedSimilarityError on an empty set.
double cosine_similarity(const std::unordered_set<std::string>& a,
                         const std::unordered_set<std::string>& b);

// Symmetric item-item cosine matrix over actual and virtual tokens. Zero
// entries and the diagonal are never stored; every indexed token appeared in
// at least one training session.
class SimilarityModel {
public:
    static SimilarityModel build(std::span<const davi::AugmentedSession> sessions,
                                 const BuildOptions& options = {});

    std::size_t token_count() const { return tokens_.size(); }
    std::size_t pair_count() const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    bool contains(std::string_view token) const;
    bool is_actual(std::string_view token) const;

    // 1 for a known token with itself, stored value for a stored pair,
    // otherwise 0.
    double similarity(std::string_view a, std::string_view b) const;

    // Mean of sim(candidate, o) over o in observables; missing pairs count 0.
    // neighbors > 0 keeps only that many of the most similar observables in
    // the numerator. Unknown candidates score 0.
    double score_candidate(std::string_view candidate,
                           const std::vector<std::string>& observables,
                           std::size_t neighbors = 0) const;

    // Actual tokens only, observables excluded, zero scores dropped, ranked
    // by score descending with ties broken by token ascending.
    std::vector<Scored> recommend_topn(const std::vector<std::string>& observables, int n,
                                       std::size_t neighbors = 0) const;

    // Stored pairs with i < j in index order.
    void for_each_pair(
        const std::function<void(const std::string&, const std::string&, double)>& fn) const;

    void save(std::ostream& out) const;
    static SimilarityModel load(std::istream& in);

private:
    std::uint32_t require_id(std::string_view token) const;
    const std::vector<std::pair<std::uint32_t, double>>* row(std::string_view token) const;

    std::vector<std::string> tokens_;  // sorted; position = dense id
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<bool> is_virtual_;
    // Per token, neighbors sorted by id; both directions stored.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows_;
};

class CfRecommender final : public TopNRecommender {
public:
    CfRecommender(SimilarityModel model, std::size_t neighbors = 0)
        : model_(std::move(model)), neighbors_(neighbors) {}

    std::vector<Scored> recommend(const Query& query, int n) const override {
        return model_.recommend_topn(query.observables, n, neighbors_);
    }

    const SimilarityModel& model() const { return model_; }

private:
    SimilarityModel model_;
    std::size_t neighbors_;
};

}  // namespace ctxrec::cf
