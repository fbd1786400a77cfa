#include "ctxrec/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <unordered_map>

namespace ctxrec::ingest {

namespace {

// Civil-date conversions for the proleptic Gregorian calendar
// (Howard Hinnant's algorithms).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

// 0 = Monday .. 6 = Sunday. 1970-01-01 was a Thursday.
unsigned weekday_from_days(std::int64_t z) {
    return static_cast<unsigned>(z >= -3 ? (z + 3) % 7 : (z + 4) % 7 + 6);
}

constexpr std::array<std::string_view, 7> kWeekdayNames = {
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"};

std::string two_digits(unsigned v) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02u", v % 100);
    return buf;
}

std::optional<unsigned> parse_fixed_uint(std::string_view s) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

bool days_in_month_ok(std::int64_t year, unsigned month, unsigned day) {
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12 || day < 1) return false;
    unsigned max_day = lengths[month - 1];
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) max_day = 29;
    return day <= max_day;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
        fields.back().pop_back();
    }
    return fields;
}

constexpr std::string_view kCtxColumnPrefix = "ctx_";

}  // namespace

bool is_temporal_dimension(std::string_view name) {
    return std::find(kTemporalDimensions.begin(), kTemporalDimensions.end(), name) !=
           kTemporalDimensions.end();
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    if (text.empty()) return std::nullopt;

    // Plain integer epoch seconds.
    {
        std::int64_t epoch = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
        if (ec == std::errc() && ptr == text.data() + text.size()) return epoch;
    }

    // YYYY-MM-DD[T ]HH:MM:SS with optional Z or +-HH:MM.
    if (text.size() < 19) return std::nullopt;
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    auto year = parse_fixed_uint(text.substr(0, 4));
    auto month = parse_fixed_uint(text.substr(5, 2));
    auto day = parse_fixed_uint(text.substr(8, 2));
    auto hour = parse_fixed_uint(text.substr(11, 2));
    auto minute = parse_fixed_uint(text.substr(14, 2));
    auto second = parse_fixed_uint(text.substr(17, 2));
    if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
    if (!days_in_month_ok(*year, *month, *day) || *hour > 23 || *minute > 59 || *second > 60) {
        return std::nullopt;
    }

    std::int64_t offset = 0;
    std::string_view rest = text.substr(19);
    if (rest == "Z") {
        // UTC
    } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
        auto oh = parse_fixed_uint(rest.substr(1, 2));
        auto om = parse_fixed_uint(rest.substr(4, 2));
        if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
        offset = static_cast<std::int64_t>(*oh) * 3600 + *om * 60;
        if (rest[0] == '-') offset = -offset;
    } else if (!rest.empty()) {
        return std::nullopt;
    }

    std::int64_t days = days_from_civil(*year, *month, *day);
    std::int64_t local = days * 86400 + *hour * 3600 + *minute * 60 + *second;
    return local - offset;
}

std::map<std::string, std::string> derive_temporal_contexts(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t seconds_of_day = epoch_seconds % 86400;
    if (seconds_of_day < 0) {
        seconds_of_day += 86400;
        days -= 1;
    }
    const CivilDate date = civil_from_days(days);
    const unsigned weekday = weekday_from_days(days);
    const unsigned hour = static_cast<unsigned>(seconds_of_day / 3600);

    std::map<std::string, std::string> out;
    out["day"] = two_digits(date.day);
    out["month"] = two_digits(date.month);
    out["week_day"] = std::string(kWeekdayNames[weekday]);
    out["work_day"] = weekday < 5 ? "weekday" : "weekend";
    out["hour"] = two_digits(hour);
    out["work_hour"] = (hour >= 8 && hour < 18) ? "work" : "nonwork";
    return out;
}

ParseResult parse_access_log(std::istream& input) {
    ParseResult result;
    std::string line;
    if (!std::getline(input, line)) {
        throw ParseError("access log is empty: header row required");
    }
    const std::vector<std::string> header = split_csv_line(line);

    std::unordered_map<std::string, std::size_t> columns;
    for (std::size_t i = 0; i < header.size(); ++i) {
        columns.emplace(header[i], i);
    }
    for (const char* mandatory : {"session_id", "user_id", "item_id"}) {
        if (columns.find(mandatory) == columns.end()) {
            throw ParseError(std::string("access log is missing mandatory column '") +
                             mandatory + "'");
        }
    }
    const std::size_t col_session = columns.at("session_id");
    const std::size_t col_user = columns.at("user_id");
    const std::size_t col_item = columns.at("item_id");
    auto ts_it = columns.find("timestamp");
    const std::size_t col_timestamp = ts_it != columns.end() ? ts_it->second : header.size();

    std::vector<std::pair<std::size_t, std::string>> ctx_columns;  // index, dimension name
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& name = header[i];
        if (i == col_session || i == col_user || i == col_item || i == col_timestamp) continue;
        if (name.rfind(kCtxColumnPrefix, 0) == 0 && name.size() > kCtxColumnPrefix.size()) {
            ctx_columns.emplace_back(i, name.substr(kCtxColumnPrefix.size()));
        } else {
            result.warnings.push_back("ignoring unknown column '" + name + "'");
        }
    }

    std::size_t line_no = 1;
    while (std::getline(input, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            result.row_errors.push_back(
                {line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size())});
            continue;
        }
        if (fields[col_session].empty() || fields[col_user].empty() ||
            fields[col_item].empty()) {
            result.row_errors.push_back({line_no, "empty mandatory field"});
            continue;
        }

        std::optional<std::int64_t> timestamp;
        if (col_timestamp < header.size() && !fields[col_timestamp].empty()) {
            timestamp = parse_timestamp(fields[col_timestamp]);
            if (!timestamp) {
                result.row_errors.push_back(
                    {line_no, "malformed timestamp '" + fields[col_timestamp] + "'"});
                continue;
            }
        }

        ItemId item = [&]() -> ItemId {
            return ItemId(fields[col_item]);  // may throw ValidationError
        }();

        Access access{fields[col_session], fields[col_user], std::move(item), timestamp, {}};
        for (const auto& [index, dimension] : ctx_columns) {
            if (!fields[index].empty()) {
                access.raw_context.emplace(dimension, fields[index]);
            }
        }
        result.accesses.push_back(std::move(access));
    }
    return result;
}

CatalogResult load_item_catalog(std::istream& input) {
    CatalogResult result;
    std::string line;
    if (!std::getline(input, line)) {
        throw ParseError("item catalog is empty: header row required");
    }
    if (split_csv_line(line) != std::vector<std::string>{"item_id", "attribute", "value"}) {
        throw ParseError("item catalog header must be exactly 'item_id,attribute,value'");
    }
    std::size_t line_no = 1;
    while (std::getline(input, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("item catalog line " + std::to_string(line_no) + " is malformed");
        }
        ItemId item(fields[0]);
        auto& attrs = result.catalog[item];
        auto existing = attrs.find(fields[1]);
        if (existing != attrs.end()) {
            result.warnings.push_back("duplicate attribute '" + fields[1] + "' for item '" +
                                      fields[0] + "': keeping the last value");
            existing->second = fields[2];
        } else {
            attrs.emplace(fields[1], fields[2]);
        }
    }
    return result;
}

void apply_temporal_contexts(std::vector<Access>& accesses,
                             const DimensionRegistry& dimensions,
                             std::int64_t tz_offset_seconds) {
    std::vector<std::string> wanted;
    for (const ContextDimension& dim : dimensions.all()) {
        if (dim.source == DimensionSource::temporal) wanted.push_back(dim.name);
    }
    if (wanted.empty()) return;

    for (Access& access : accesses) {
        if (!access.timestamp) {
            throw ValidationError("access in session '" + access.session_id +
                                  "' has no timestamp but temporal dimensions are requested");
        }
        auto derived = derive_temporal_contexts(*access.timestamp + tz_offset_seconds);
        for (const std::string& name : wanted) {
            access.raw_context[name] = derived.at(name);
        }
    }
}

std::vector<Access> assign_session_ids(std::vector<Access> accesses,
                                       const SessionizeOptions& options) {
    if (options.mode == SessionizeOptions::Mode::by_session_id) {
        return accesses;
    }

    for (const Access& a : accesses) {
        if (!a.timestamp) {
            throw ValidationError("timeout sessionization requires timestamps on every access");
        }
    }
    // Stable sort by (user, time) keeps log order inside equal timestamps.
    std::stable_sort(accesses.begin(), accesses.end(), [](const Access& a, const Access& b) {
        if (a.user_id != b.user_id) return a.user_id < b.user_id;
        return *a.timestamp < *b.timestamp;
    });

    std::string current_user;
    std::int64_t last_time = 0;
    std::size_t counter = 0;
    for (Access& a : accesses) {
        if (a.user_id != current_user) {
            current_user = a.user_id;
            counter = 1;
        } else if (*a.timestamp - last_time > options.gap_seconds) {
            ++counter;
        }
        last_time = *a.timestamp;
        a.session_id = a.user_id + "#" + std::to_string(counter);
    }
    return accesses;
}

std::vector<Session> sessionize(const std::vector<Access>& accesses,
                                const SessionizeOptions& options) {
    std::vector<Access> labelled = assign_session_ids(accesses, options);
    std::vector<Session> sessions;
    std::unordered_map<std::string, std::size_t> index;
    for (const Access& a : labelled) {
        auto [it, inserted] = index.emplace(a.session_id, sessions.size());
        if (inserted) {
            sessions.push_back(Session{a.session_id, a.user_id, {}, {}});
        }
        Session& session = sessions[it->second];
        if (!session.contains(a.item)) {
            session.items.push_back(a.item);
        }
    }
    return sessions;
}

}  // namespace ctxrec::ingest
