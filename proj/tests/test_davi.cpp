#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "ctxrec/davi.hpp"
#include "ctxrec/rng.hpp"

using namespace ctxrec;
using namespace ctxrec::davi;

namespace {

Session make_session(std::string id, std::vector<std::string> items, ContextMap context = {}) {
    Session s;
    s.session_id = std::move(id);
    s.user_id = "u-" + s.session_id;
    for (std::string& item : items) s.items.emplace_back(std::move(item));
    s.context = std::move(context);
    return s;
}

}  // namespace

TEST_CASE("augment_session injects virtual items") {
    const Session session = make_session("s1", {"A", "B"}, {{"day", {"05"}}});

    SUBCASE("single temporal dimension") {
        const auto tokens = augment_session(session, {{"day"}});
        CHECK(tokens == std::vector<std::string>{"A", "B", "ctx:day=05"});
    }
    SUBCASE("empty config is the identity") {
        CHECK(augment_session(session, {}) == std::vector<std::string>{"A", "B"});
    }
    SUBCASE("multi-valued context injects every value") {
        const Session multi = make_session("s2", {"A", "B"}, {{"band", {"X", "Y"}}});
        const auto tokens = augment_session(multi, {{"band"}});
        CHECK(tokens == std::vector<std::string>{"A", "B", "ctx:band=X", "ctx:band=Y"});
    }
    SUBCASE("dimension without context contributes nothing") {
        const auto tokens = augment_session(session, {{"band"}});
        CHECK(tokens == std::vector<std::string>{"A", "B"});
    }
    SUBCASE("original session is untouched") {
        Session copy = session;
        (void)augment_session(copy, {{"day"}});
        CHECK(copy.items.size() == 2);
        CHECK(copy.context == session.context);
    }
}

TEST_CASE("augment_dataset") {
    Dataset dataset;
    dataset.dimensions.add({"day", DimensionSource::temporal, {}});
    dataset.sessions = {
        make_session("s1", {"A", "B"}, {{"day", {"05"}}}),
        make_session("s2", {"C"}, {{"day", {"06"}}}),
    };

    SUBCASE("empty config keeps sessions item-for-item") {
        const auto augmented = augment_dataset(dataset, {});
        REQUIRE(augmented.size() == 2);
        CHECK(augmented[0].tokens == std::vector<std::string>{"A", "B"});
        CHECK(augmented[1].tokens == std::vector<std::string>{"C"});
        CHECK(augmented[0].session_id == "s1");
    }
    SUBCASE("each session gains exactly its own day token") {
        const auto augmented = augment_dataset(dataset, {{"day"}});
        CHECK(augmented[0].tokens == std::vector<std::string>{"A", "B", "ctx:day=05"});
        CHECK(augmented[1].tokens == std::vector<std::string>{"C", "ctx:day=06"});
    }
    SUBCASE("distinct token count grows by the distinct (d,v) pairs present") {
        SplitMix64 rng(5);
        for (int round = 0; round < 20; ++round) {
            Dataset random;
            random.dimensions.add({"d", DimensionSource::session_attribute, {}});
            const std::size_t n = 1 + rng.bounded(20);
            for (std::size_t i = 0; i < n; ++i) {
                ContextMap context;
                const std::size_t n_values = rng.bounded(3);
                for (std::size_t v = 0; v < n_values; ++v) {
                    context["d"].insert("v" + std::to_string(rng.bounded(4)));
                }
                random.sessions.push_back(make_session(
                    "s" + std::to_string(i),
                    {"i" + std::to_string(rng.bounded(10)),
                     "i" + std::to_string(rng.bounded(10))},
                    std::move(context)));
            }
            auto distinct_tokens = [](const std::vector<AugmentedSession>& sessions) {
                std::set<std::string> tokens;
                for (const auto& s : sessions) tokens.insert(s.tokens.begin(), s.tokens.end());
                return tokens.size();
            };
            std::set<std::pair<std::string, std::string>> pairs;
            for (const Session& s : random.sessions) {
                for (const auto& [dim, values] : s.context) {
                    for (const std::string& value : values) pairs.emplace(dim, value);
                }
            }
            CHECK(distinct_tokens(augment_dataset(random, {{"d"}})) ==
                  distinct_tokens(augment_dataset(random, {})) + pairs.size());
        }
    }
}

TEST_CASE("observables_with_context") {
    SUBCASE("day token joins the observables") {
        const auto obs = observables_with_context({"B"}, {{"day", {"05"}}}, {{"day"}});
        CHECK(obs == std::vector<std::string>{"B", "ctx:day=05"});
    }
    SUBCASE("empty config leaves O unchanged") {
        const auto obs = observables_with_context({"A", "B"}, {{"day", {"05"}}}, {});
        CHECK(obs == std::vector<std::string>{"A", "B"});
    }
    SUBCASE("item-attribute context derived from observed items only") {
        // The caller computed band from the observable A; a hidden item's
        // band is simply absent from active_context.
        const auto obs = observables_with_context({"A"}, {{"band", {"X"}}}, {{"band"}});
        CHECK(obs == std::vector<std::string>{"A", "ctx:band=X"});
    }
}

TEST_CASE("validate_config") {
    DimensionRegistry registry;
    registry.add({"day", DimensionSource::temporal, {}});
    registry.add({"band", DimensionSource::item_attribute, {}});

    CHECK_NOTHROW(validate_config({{"day", "band"}}, registry));
    CHECK_NOTHROW(validate_config({}, registry));
    CHECK_THROWS_AS(validate_config({{"hour"}}, registry), RegistryError);
    CHECK_THROWS_AS(validate_config({{"day", "day"}}, registry), RegistryError);
}

TEST_CASE("augmentation properties") {
    SplitMix64 rng(31);
    DimensionRegistry registry;
    registry.add({"d1", DimensionSource::session_attribute, {}});
    registry.add({"d2", DimensionSource::session_attribute, {}});

    for (int round = 0; round < 200; ++round) {
        ContextMap context;
        for (const char* dim : {"d1", "d2"}) {
            const std::size_t n_values = rng.bounded(3);
            for (std::size_t v = 0; v < n_values; ++v) {
                context[dim].insert("v" + std::to_string(rng.bounded(5)));
            }
        }
        std::vector<std::string> items;
        const std::size_t n_items = 1 + rng.bounded(5);
        for (std::size_t i = 0; i < n_items; ++i) {
            items.push_back("i" + std::to_string(rng.bounded(10)));
        }
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        const Session session = make_session("s", items, context);

        DaviConfig config;
        if (rng.bounded(2) == 1) config.active_dimensions.push_back("d1");
        if (rng.bounded(2) == 1) config.active_dimensions.push_back("d2");

        const auto tokens = augment_session(session, config);

        // Never removes tokens.
        for (const ItemId& item : session.items) {
            CHECK(std::count(tokens.begin(), tokens.end(), item.str()) == 1);
        }
        // Every virtual token decodes to a (dimension, value) pair present in
        // the session's context restricted to active dimensions.
        std::set<std::pair<std::string, std::string>> expected;
        for (const std::string& dim : config.active_dimensions) {
            auto it = context.find(dim);
            if (it == context.end()) continue;
            for (const std::string& value : it->second) expected.emplace(dim, value);
        }
        std::set<std::pair<std::string, std::string>> found;
        for (const std::string& token : tokens) {
            if (!is_virtual_token(token)) continue;
            const auto decoded = VirtualItemId::decode(token);
            REQUIRE(decoded.has_value());
            found.emplace(decoded->dimension, decoded->value);
        }
        CHECK(found == expected);
        CHECK(tokens.size() == session.items.size() + expected.size());
    }
}
