#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ctxrec/ar_engine.hpp"
#include "oracles.hpp"

using namespace ctxrec;
using namespace ctxrec::ar;
using oracles::to_sessions;

TEST_CASE("choose_thresholds implements the 50%-of-items heuristic") {
    SUBCASE("mixed supports") {
        // Item supports over 10 sessions: a 0.8, b 0.6, c 0.5, d 0.2.
        std::vector<std::vector<std::string>> sets;
        for (int i = 0; i < 10; ++i) {
            std::vector<std::string> tokens;
            if (i < 8) tokens.push_back("a");
            if (i < 6) tokens.push_back("b");
            if (i < 5) tokens.push_back("c");
            if (i >= 8) tokens.push_back("d");
            sets.push_back(std::move(tokens));
        }
        const auto t = choose_thresholds(to_sessions(sets));
        CHECK(t.min_support == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t.min_confidence == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("all items equally frequent") {
        // a, b, c, x each in 2 of 5 sessions: every support is 0.4.
        const auto t = choose_thresholds(to_sessions({{"a", "b"},
                                                      {"b", "c"},
                                                      {"c", "a"},
                                                      {"x"},
                                                      {"x"}}));
        CHECK(t.min_support == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(t.min_confidence == doctest::Approx(0.4).epsilon(1e-15));
    }
    SUBCASE("third-ranked support sets the confidence") {
        std::vector<std::vector<std::string>> sets;
        for (int i = 0; i < 10; ++i) {
            std::vector<std::string> tokens;
            if (i < 9) {
                tokens.push_back("a");
                tokens.push_back("b");
            }
            if (i == 9) tokens.push_back("c");
            sets.push_back(std::move(tokens));
        }
        const auto t = choose_thresholds(to_sessions(sets));
        CHECK(t.min_confidence == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(t.min_support == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("fewer than three distinct items is an error") {
        CHECK_THROWS_AS(choose_thresholds(to_sessions({{"a", "b"}, {"a"}})), ThresholdError);
    }
    SUBCASE("virtual tokens are excluded from the ranking") {
        const auto plain = choose_thresholds(to_sessions({{"a", "b", "c"}, {"a"}, {"b"}}));
        const auto augmented = choose_thresholds(
            to_sessions({{"a", "b", "c", "ctx:day=05"}, {"a", "ctx:day=06"}, {"b"}}));
        CHECK(plain == augmented);
    }
}

TEST_CASE("mine_frequent_itemsets on the worked example") {
    const auto sessions = to_sessions({{"A", "B"}, {"A", "B"}, {"A", "C"}});

    SUBCASE("min_support 0.6") {
        const auto itemsets = mine_frequent_itemsets(sessions, 0.6);
        REQUIRE(itemsets.counts.size() == 3);
        CHECK(itemsets.support({"A"}) == 1.0);
        CHECK(itemsets.support({"B"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(itemsets.support({"A", "B"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK_FALSE(itemsets.contains({"C"}));
        CHECK_FALSE(itemsets.contains({"A", "C"}));
    }
    SUBCASE("min_support 1.0 keeps only the universal item") {
        const auto itemsets = mine_frequent_itemsets(sessions, 1.0);
        REQUIRE(itemsets.counts.size() == 1);
        CHECK(itemsets.support({"A"}) == 1.0);
    }
    SUBCASE("min_support above the max item support yields nothing") {
        const auto itemsets = mine_frequent_itemsets(to_sessions({{"A", "B"}, {"B", "C"},
                                                                  {"C", "A"}}),
                                                     0.7);
        CHECK(itemsets.counts.empty());
    }
    SUBCASE("invalid support is rejected") {
        CHECK_THROWS_AS(mine_frequent_itemsets(sessions, 0.0), ValidationError);
        CHECK_THROWS_AS(mine_frequent_itemsets(sessions, 1.5), ValidationError);
    }
}

TEST_CASE("mining equals brute-force enumeration on random data") {
    SplitMix64 rng(777);
    for (int round = 0; round < 25; ++round) {
        const auto sessions = oracles::random_sessions(rng, 10, 30, 6);
        const double min_support = 0.05 + 0.4 * rng.uniform();
        const auto mined = mine_frequent_itemsets(sessions, min_support);
        const auto expected = oracles::brute_force_itemsets(sessions, min_support);

        REQUIRE(mined.counts.size() == expected.size());
        for (const auto& [itemset, count] : expected) {
            REQUIRE(mined.counts.count(itemset) == 1);
            CHECK(mined.counts.at(itemset) == count);
        }

        // Downward closure with monotone supports.
        for (const auto& [itemset, count] : mined.counts) {
            if (itemset.size() < 2) continue;
            for (std::size_t drop = 0; drop < itemset.size(); ++drop) {
                std::vector<std::string> subset;
                for (std::size_t i = 0; i < itemset.size(); ++i) {
                    if (i != drop) subset.push_back(itemset[i]);
                }
                REQUIRE(mined.counts.count(subset) == 1);
                CHECK(mined.counts.at(subset) >= count);
            }
        }
    }
}

TEST_CASE("the itemset cap raises a resource-limit error") {
    // 12 items all together in every session: 2^12 - 1 frequent itemsets.
    std::vector<std::string> tokens;
    for (int i = 0; i < 12; ++i) tokens.push_back("i" + std::to_string(i));
    const auto sessions = to_sessions({tokens, tokens});
    MineOptions options;
    options.max_itemsets = 100;
    CHECK_THROWS_AS(mine_frequent_itemsets(sessions, 0.5, options), ResourceLimitError);
    CHECK_NOTHROW(mine_frequent_itemsets(sessions, 0.5, {}));
}

TEST_CASE("generate_rules") {
    const auto sessions = to_sessions({{"A", "B"}, {"A", "B"}, {"A", "C"}});
    const auto itemsets = mine_frequent_itemsets(sessions, 0.6);

    SUBCASE("confidence filter keeps only B->A") {
        const auto model = generate_rules(itemsets, 0.7, 0.6);
        REQUIRE(model.rules.size() == 1);
        CHECK(model.rules[0].antecedent == std::vector<std::string>{"B"});
        CHECK(model.rules[0].consequent == "A");
        CHECK(model.rules[0].confidence == 1.0);
        CHECK(model.rules[0].support == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(model.thresholds == Thresholds{0.6, 0.7});
    }
    SUBCASE("min_confidence 0 emits every eligible rule") {
        const auto model = generate_rules(itemsets, 0.0);
        REQUIRE(model.rules.size() == 2);  // A->B and B->A
    }
    SUBCASE("virtual tokens may appear only in antecedents") {
        const auto ctx_sessions = to_sessions({{"A", "ctx:day=05"}, {"A", "ctx:day=05"}});
        const auto ctx_itemsets = mine_frequent_itemsets(ctx_sessions, 0.5);
        const auto model = generate_rules(ctx_itemsets, 0.0);
        REQUIRE(model.rules.size() == 1);
        CHECK(model.rules[0].antecedent == std::vector<std::string>{"ctx:day=05"});
        CHECK(model.rules[0].consequent == "A");
        for (const Rule& rule : model.rules) {
            CHECK_FALSE(is_virtual_token(rule.consequent));
        }
    }
    SUBCASE("non-closed input is rejected") {
        FrequentItemsets broken;
        broken.session_count = 3;
        broken.counts[{"A", "B"}] = 2;
        CHECK_THROWS_AS(generate_rules(broken, 0.0), ValidationError);
    }
}

TEST_CASE("rules match exhaustive enumeration with exact confidences") {
    SplitMix64 rng(31337);
    for (int round = 0; round < 25; ++round) {
        const auto sessions = oracles::random_sessions(rng, 9, 25, 5);
        const double min_support = 0.05 + 0.3 * rng.uniform();
        const double min_confidence = 0.2 + 0.6 * rng.uniform();

        const auto itemsets = mine_frequent_itemsets(sessions, min_support);
        const auto model = generate_rules(itemsets, min_confidence, min_support);

        const auto expected_sets = oracles::brute_force_itemsets(sessions, min_support);
        auto expected = oracles::brute_force_rules(expected_sets, sessions.size(),
                                                   min_confidence);

        REQUIRE(model.rules.size() == expected.size());
        auto find_expected = [&](const Rule& rule) -> const oracles::OracleRule* {
            for (const auto& e : expected) {
                if (e.antecedent == rule.antecedent && e.consequent == rule.consequent) {
                    return &e;
                }
            }
            return nullptr;
        };
        for (const Rule& rule : model.rules) {
            const auto* e = find_expected(rule);
            REQUIRE(e != nullptr);
            CHECK(rule.support == e->support);        // exact: same integer ratios
            CHECK(rule.confidence == e->confidence);  // exact
            CHECK_FALSE(is_virtual_token(rule.consequent));
            // confidence * support(antecedent) == support(union), in counts.
            const std::size_t ant = expected_sets.at(rule.antecedent);
            std::vector<std::string> whole = rule.antecedent;
            whole.push_back(rule.consequent);
            std::sort(whole.begin(), whole.end());
            const std::size_t uni = expected_sets.at(whole);
            CHECK(rule.confidence ==
                  static_cast<double>(uni) / static_cast<double>(ant));
        }
    }
}

TEST_CASE("recommend_topn fires rules over the observables") {
    SUBCASE("single rule") {
        RuleModel model;
        model.rules.push_back({{"B"}, "A", 2.0 / 3.0, 1.0});
        const auto recs = recommend_topn(model, {"B"}, 1);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].item == "A");
        CHECK(recs[0].score == 1.0);
    }
    SUBCASE("context rule outranks the plain rule") {
        RuleModel model;
        model.rules.push_back({{"B"}, "A", 0.4, 0.6});
        model.rules.push_back({{"B", "ctx:day=05"}, "C", 0.3, 0.9});
        const auto recs = recommend_topn(model, {"B", "ctx:day=05"}, 2);
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].item == "C");
        CHECK(recs[1].item == "A");
    }
    SUBCASE("disjoint observables fire nothing") {
        RuleModel model;
        model.rules.push_back({{"B"}, "A", 0.4, 0.6});
        CHECK(recommend_topn(model, {"Z"}, 3).empty());
    }
    SUBCASE("consequents already observed are excluded") {
        RuleModel model;
        model.rules.push_back({{"B"}, "A", 0.4, 0.6});
        CHECK(recommend_topn(model, {"A", "B"}, 3).empty());
    }
    SUBCASE("duplicate consequents keep the best confidence") {
        RuleModel model;
        model.rules.push_back({{"B"}, "A", 0.4, 0.6});
        model.rules.push_back({{"C"}, "A", 0.5, 0.8});
        const auto recs = recommend_topn(model, {"B", "C"}, 3);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].score == 0.8);
    }
    SUBCASE("ties rank by support then token") {
        RuleModel model;
        model.rules.push_back({{"O"}, "B", 0.5, 0.7});
        model.rules.push_back({{"O"}, "A", 0.4, 0.7});
        model.rules.push_back({{"O"}, "C", 0.5, 0.7});
        const auto recs = recommend_topn(model, {"O"}, 3);
        REQUIRE(recs.size() == 3);
        CHECK(recs[0].item == "B");  // support 0.5, token B < C
        CHECK(recs[1].item == "C");
        CHECK(recs[2].item == "A");  // lower support last
    }
}

TEST_CASE("indexed recommender matches the direct scan") {
    SplitMix64 rng(2222);
    for (int round = 0; round < 10; ++round) {
        const auto sessions = oracles::random_sessions(rng, 10, 30, 5);
        const auto itemsets = mine_frequent_itemsets(sessions, 0.1);
        auto model = generate_rules(itemsets, 0.3, 0.1);
        if (model.rules.empty()) continue;
        const ArRecommender indexed(model);
        for (int q = 0; q < 10; ++q) {
            std::vector<std::string> observables;
            const auto& s = sessions[rng.bounded(sessions.size())];
            for (const std::string& token : s.tokens) {
                if (rng.bounded(2) == 0) observables.push_back(token);
            }
            Query query;
            query.observables = observables;
            CHECK(indexed.recommend(query, 5) == recommend_topn(model, observables, 5));
        }
    }
}

TEST_CASE("rule model serialization round-trips") {
    const auto sessions = to_sessions(
        {{"A", "B", "ctx:day=05"}, {"A", "B"}, {"A", "C", "ctx:day=05"}, {"B", "C"}});
    const auto itemsets = mine_frequent_itemsets(sessions, 0.25);
    const auto model = generate_rules(itemsets, 0.3, 0.25);
    REQUIRE(!model.rules.empty());

    std::stringstream buffer;
    model.save(buffer);
    const auto reloaded = RuleModel::load(buffer);

    CHECK(reloaded.thresholds == model.thresholds);
    REQUIRE(reloaded.rules.size() == model.rules.size());
    for (std::size_t i = 0; i < model.rules.size(); ++i) {
        CHECK(reloaded.rules[i] == model.rules[i]);
    }

    SUBCASE("save is byte-deterministic") {
        std::stringstream again;
        model.save(again);
        CHECK(again.str() == buffer.str());
    }
    SUBCASE("garbage is rejected") {
        std::istringstream bad("nope\n");
        CHECK_THROWS_AS(RuleModel::load(bad), ParseError);
    }
}
