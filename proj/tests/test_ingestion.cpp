#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ctxrec/ingestion.hpp"
#include "ctxrec/rng.hpp"

using namespace ctxrec;
using namespace ctxrec::ingest;

TEST_CASE("parse_timestamp accepts epoch and ISO-8601") {
    CHECK(parse_timestamp("1256481000") == 1256481000);
    CHECK(parse_timestamp("0") == 0);
    CHECK(parse_timestamp("2009-10-25T14:30:00Z") == 1256481000);
    CHECK(parse_timestamp("2009-10-25 14:30:00") == 1256481000);
    CHECK(parse_timestamp("2009-10-25T15:30:00+01:00") == 1256481000);
    CHECK(parse_timestamp("2009-10-25T09:30:00-05:00") == 1256481000);
    CHECK_FALSE(parse_timestamp("").has_value());
    CHECK_FALSE(parse_timestamp("yesterday").has_value());
    CHECK_FALSE(parse_timestamp("2009-13-01T00:00:00Z").has_value());
    CHECK_FALSE(parse_timestamp("2009-02-29T00:00:00Z").has_value());  // not a leap year
    CHECK_FALSE(parse_timestamp("2009-10-25T25:30:00Z").has_value());
}

TEST_CASE("derive_temporal_contexts matches the calendar") {
    SUBCASE("a Sunday afternoon") {
        const auto ctx = derive_temporal_contexts(1256481000);  // 2009-10-25T14:30:00Z
        CHECK(ctx.at("day") == "25");
        CHECK(ctx.at("month") == "10");
        CHECK(ctx.at("week_day") == "Sunday");
        CHECK(ctx.at("work_day") == "weekend");
        CHECK(ctx.at("hour") == "14");
        CHECK(ctx.at("work_hour") == "work");
    }
    SUBCASE("Monday just before working hours") {
        const auto ctx = derive_temporal_contexts(*parse_timestamp("2009-10-26T07:59:59Z"));
        CHECK(ctx.at("week_day") == "Monday");
        CHECK(ctx.at("work_day") == "weekday");
        CHECK(ctx.at("work_hour") == "nonwork");
    }
    SUBCASE("the 08:00 boundary is inclusive") {
        const auto ctx = derive_temporal_contexts(*parse_timestamp("2009-10-26T08:00:00Z"));
        CHECK(ctx.at("work_hour") == "work");
    }
    SUBCASE("the 18:00 boundary is exclusive") {
        const auto ctx = derive_temporal_contexts(*parse_timestamp("2009-10-26T18:00:00Z"));
        CHECK(ctx.at("work_hour") == "nonwork");
    }
}

TEST_CASE("temporal derivation is pure and internally consistent") {
    SplitMix64 rng(99);
    for (int i = 0; i < 3000; ++i) {
        // 1990..2037 roughly
        const std::int64_t t = 631152000 + static_cast<std::int64_t>(rng.bounded(1500000000));
        const auto a = derive_temporal_contexts(t);
        const auto b = derive_temporal_contexts(t);
        CHECK(a == b);

        const bool weekend = a.at("week_day") == "Saturday" || a.at("week_day") == "Sunday";
        CHECK((a.at("work_day") == "weekend") == weekend);

        const int hour = std::stoi(a.at("hour"));
        CHECK(hour >= 0);
        CHECK(hour <= 23);
        CHECK((a.at("work_hour") == "work") == (hour >= 8 && hour < 18));
        const int day = std::stoi(a.at("day"));
        CHECK(day >= 1);
        CHECK(day <= 31);
    }
}

TEST_CASE("parse_access_log") {
    SUBCASE("basic row with timestamp") {
        std::istringstream in(
            "session_id,user_id,item_id,timestamp\n"
            "s1,u1,A,2009-10-25T14:30:00Z\n");
        const ParseResult result = parse_access_log(in);
        REQUIRE(result.accesses.size() == 1);
        CHECK(result.accesses[0].session_id == "s1");
        CHECK(result.accesses[0].user_id == "u1");
        CHECK(result.accesses[0].item.str() == "A");
        CHECK(result.accesses[0].timestamp == 1256481000);
        CHECK(result.row_errors.empty());
    }
    SUBCASE("ctx_ columns land in raw_context") {
        std::istringstream in(
            "session_id,user_id,item_id,ctx_intention\n"
            "s1,u1,A,cheaper\n");
        const ParseResult result = parse_access_log(in);
        REQUIRE(result.accesses.size() == 1);
        CHECK(result.accesses[0].raw_context.at("intention") == "cheaper");
    }
    SUBCASE("row with empty item_id is skipped and counted") {
        std::istringstream in(
            "session_id,user_id,item_id\n"
            "s1,u1,\n"
            "s2,u2,B\n");
        const ParseResult result = parse_access_log(in);
        CHECK(result.accesses.size() == 1);
        REQUIRE(result.row_errors.size() == 1);
        CHECK(result.row_errors[0].line == 2);
    }
    SUBCASE("missing mandatory column is fatal and named") {
        std::istringstream in("session_id,user_id\ns1,u1\n");
        CHECK_THROWS_WITH_AS(parse_access_log(in),
                             "access log is missing mandatory column 'item_id'", ParseError);
    }
    SUBCASE("malformed timestamp is a row-level error with line number") {
        std::istringstream in(
            "session_id,user_id,item_id,timestamp\n"
            "s1,u1,A,not-a-time\n"
            "s2,u2,B,1000\n");
        const ParseResult result = parse_access_log(in);
        CHECK(result.accesses.size() == 1);
        REQUIRE(result.row_errors.size() == 1);
        CHECK(result.row_errors[0].line == 2);
        CHECK(result.row_errors[0].message.find("not-a-time") != std::string::npos);
    }
    SUBCASE("unknown columns warn, wrong field counts are row errors") {
        std::istringstream in(
            "session_id,user_id,item_id,color\n"
            "s1,u1,A,red\n"
            "s2,u2,B,blue,extra\n");
        const ParseResult result = parse_access_log(in);
        REQUIRE(result.warnings.size() == 1);
        CHECK(result.warnings[0].find("color") != std::string::npos);
        CHECK(result.accesses.size() == 1);
        CHECK(result.row_errors.size() == 1);
    }
    SUBCASE("reserved item prefix is fatal") {
        std::istringstream in("session_id,user_id,item_id\ns1,u1,ctx:day=05\n");
        CHECK_THROWS_AS(parse_access_log(in), ValidationError);
    }
    SUBCASE("empty input is fatal") {
        std::istringstream in("");
        CHECK_THROWS_AS(parse_access_log(in), ParseError);
    }
}

TEST_CASE("load_item_catalog") {
    SUBCASE("accumulates attributes per item") {
        std::istringstream in(
            "item_id,attribute,value\n"
            "A,band,X\n"
            "A,instrumental,yes\n");
        const CatalogResult result = load_item_catalog(in);
        const AttributeMap& attrs = result.catalog.at(ItemId("A"));
        CHECK(attrs.at("band") == "X");
        CHECK(attrs.at("instrumental") == "yes");
        CHECK(result.warnings.empty());
    }
    SUBCASE("last write wins with a warning") {
        std::istringstream in(
            "item_id,attribute,value\n"
            "A,band,X\n"
            "A,band,Y\n");
        const CatalogResult result = load_item_catalog(in);
        CHECK(result.catalog.at(ItemId("A")).at("band") == "Y");
        CHECK(result.warnings.size() == 1);
    }
    SUBCASE("empty file after header") {
        std::istringstream in("item_id,attribute,value\n");
        CHECK(load_item_catalog(in).catalog.empty());
    }
    SUBCASE("header mismatch is fatal") {
        std::istringstream in("item,attr,val\nA,band,X\n");
        CHECK_THROWS_AS(load_item_catalog(in), ParseError);
    }
}

namespace {

Access timed_access(std::string user, std::string item, std::int64_t t) {
    return Access{"", std::move(user), ItemId(std::move(item)), t, {}};
}

}  // namespace

TEST_CASE("sessionize by session id") {
    std::vector<Access> accesses = {
        {"s1", "u1", ItemId("A"), std::nullopt, {}},
        {"s1", "u1", ItemId("B"), std::nullopt, {}},
        {"s2", "u2", ItemId("C"), std::nullopt, {}},
    };
    const auto sessions = sessionize(accesses, {});
    REQUIRE(sessions.size() == 2);
    CHECK(sessions[0].items.size() == 2);

    SUBCASE("single access gives a singleton session") {
        const auto one = sessionize({accesses[2]}, {});
        REQUIRE(one.size() == 1);
        CHECK(one[0].items.size() == 1);
    }
}

TEST_CASE("sessionize by user timeout") {
    SessionizeOptions options;
    options.mode = SessionizeOptions::Mode::by_user_timeout;
    options.gap_seconds = 1800;

    SUBCASE("splits at gaps beyond the timeout") {
        const std::vector<Access> accesses = {
            timed_access("u1", "A", 0),
            timed_access("u1", "B", 600),
            timed_access("u1", "C", 3000),  // 2400s after the previous access
        };
        const auto sessions = sessionize(accesses, options);
        REQUIRE(sessions.size() == 2);
        CHECK(sessions[0].session_id == "u1#1");
        CHECK(sessions[0].items == std::vector<ItemId>{ItemId("A"), ItemId("B")});
        CHECK(sessions[1].session_id == "u1#2");
        CHECK(sessions[1].items == std::vector<ItemId>{ItemId("C")});
    }
    SUBCASE("requires timestamps") {
        const std::vector<Access> accesses = {{"", "u1", ItemId("A"), std::nullopt, {}}};
        CHECK_THROWS_AS(sessionize(accesses, options), ValidationError);
    }
    SUBCASE("never merges users; gaps within a session stay bounded") {
        SplitMix64 rng(11);
        std::vector<Access> accesses;
        for (int i = 0; i < 400; ++i) {
            accesses.push_back(timed_access("u" + std::to_string(rng.bounded(6)),
                                            "i" + std::to_string(rng.bounded(20)),
                                            static_cast<std::int64_t>(rng.bounded(100000))));
        }
        const auto labelled = assign_session_ids(accesses, options);
        std::map<std::string, std::pair<std::string, std::int64_t>> last_seen;
        for (const Access& a : labelled) {
            CHECK(a.session_id.rfind(a.user_id + "#", 0) == 0);
            auto it = last_seen.find(a.session_id);
            if (it != last_seen.end()) {
                CHECK(it->second.first == a.user_id);
                CHECK(*a.timestamp >= it->second.second);
                CHECK(*a.timestamp - it->second.second <= options.gap_seconds);
            }
            last_seen[a.session_id] = {a.user_id, *a.timestamp};
        }
    }
}

TEST_CASE("apply_temporal_contexts") {
    DimensionRegistry registry;
    registry.add({"day", DimensionSource::temporal, {}});
    registry.add({"work_hour", DimensionSource::temporal, {}});

    std::vector<Access> accesses = {{"s1", "u1", ItemId("A"), 1256481000, {}}};
    apply_temporal_contexts(accesses, registry);
    CHECK(accesses[0].raw_context.at("day") == "25");
    CHECK(accesses[0].raw_context.at("work_hour") == "work");
    CHECK(accesses[0].raw_context.count("month") == 0);  // not registered

    SUBCASE("offset shifts the derived values") {
        std::vector<Access> shifted = {{"s1", "u1", ItemId("A"), 1256481000, {}}};
        apply_temporal_contexts(shifted, registry, 11 * 3600);  // 14:30Z -> 01:30 next day
        CHECK(shifted[0].raw_context.at("day") == "26");
        CHECK(shifted[0].raw_context.at("work_hour") == "nonwork");
    }
    SUBCASE("missing timestamp is fatal when temporal dims are registered") {
        std::vector<Access> missing = {{"s1", "u1", ItemId("A"), std::nullopt, {}}};
        CHECK_THROWS_AS(apply_temporal_contexts(missing, registry), ValidationError);
        DimensionRegistry no_temporal;
        no_temporal.add({"intention", DimensionSource::session_attribute, {}});
        CHECK_NOTHROW(apply_temporal_contexts(missing, no_temporal));
    }
}
