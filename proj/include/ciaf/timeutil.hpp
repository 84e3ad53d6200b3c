#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace ciaf {

/// UTC instant with millisecond precision.
using Instant = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

/// Parses either ISO-8601 ("2025-03-10T17:05:00Z", fractional seconds and
/// +hh:mm offsets allowed, a space may replace the 'T') or the Azure portal
/// CSV export form "3/10/2025, 5:05:00.000 PM". Zone-less input is UTC.
std::optional<Instant> parse_instant(std::string_view text);

/// ISO-8601 with a trailing 'Z'; milliseconds are printed only when nonzero.
std::string format_instant(Instant t);

Instant floor_minute(Instant t);

} // namespace ciaf
