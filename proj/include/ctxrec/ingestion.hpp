#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrec/domain.hpp"

namespace ctxrec::ingest {

// The six dimensions derivable from a timestamp, in canonical order.
inline constexpr std::array<std::string_view, 6> kTemporalDimensions = {
    "day", "month", "week_day", "work_day", "hour", "work_hour"};

bool is_temporal_dimension(std::string_view name);

// Accepts integer epoch seconds or ISO-8601 `YYYY-MM-DDTHH:MM:SS` with an
// optional `Z` or `+HH:MM`/`-HH:MM` offset (a space may replace the 'T').
// Returns UTC epoch seconds, or nullopt when malformed.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

// Pure UTC calendar derivation:
//   day 01-31, month 01-12, week_day Monday..Sunday,
//   work_day weekday|weekend, hour 00-23, work_hour work|nonwork
// with working hours the half-open range [08:00, 18:00).
std::map<std::string, std::string> derive_temporal_contexts(std::int64_t epoch_seconds);

struct RowError {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string message;
};

struct ParseResult {
    std::vector<Access> accesses;
    std::vector<RowError> row_errors;
    std::vector<std::string> warnings;
};

// Comma-separated, header required with at least session_id,user_id,item_id.
// Optional timestamp column; `ctx_<name>` columns land in raw_context keyed
// by the suffix. Unknown columns are warned about and ignored. Bad rows are
// skipped and counted; a missing mandatory column is fatal.
ParseResult parse_access_log(std::istream& input);

struct CatalogResult {
    ItemCatalog catalog;
    std::vector<std::string> warnings;
};

// Long-format CSV with header item_id,attribute,value. Later rows overwrite
// earlier ones with a warning.
CatalogResult load_item_catalog(std::istream& input);

// Fills raw_context with values for the registered temporal dimensions,
// shifting each timestamp by tz_offset_seconds before derivation. Throws
// ValidationError if a temporal dimension is registered and some access has
// no timestamp.
void apply_temporal_contexts(std::vector<Access>& accesses,
                             const DimensionRegistry& dimensions,
                             std::int64_t tz_offset_seconds = 0);

struct SessionizeOptions {
    enum class Mode { by_session_id, by_user_timeout };
    Mode mode = Mode::by_session_id;
    std::int64_t gap_seconds = 1800;
};

// In timeout mode, rewrites session ids to `<user>#<k>` by splitting each
// user's time-ordered accesses at gaps larger than gap_seconds. In id mode
// this is the identity.
std::vector<Access> assign_session_ids(std::vector<Access> accesses,
                                       const SessionizeOptions& options);

// Groups accesses into sessions (items only; context derivation is
// build_dataset's job).
std::vector<Session> sessionize(const std::vector<Access>& accesses,
                                const SessionizeOptions& options);

}  // namespace ctxrec::ingest
