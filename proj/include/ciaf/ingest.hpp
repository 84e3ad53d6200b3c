#pragma once

#include "ciaf/timeutil.hpp"

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ciaf {

enum class InputFormat { Csv, JsonLines };

/// One parsed Azure Monitor `Perf` sample.
struct PerfRecord {
    Instant timestamp;
    std::string computer;
    std::string object_name;
    std::string counter_name;
    std::optional<std::string> instance_name;
    double value = 0.0;

    bool operator==(const PerfRecord&) const = default;
};

enum class EventLevel { Information, Warning, Error };

const char* to_string(EventLevel level);
std::optional<EventLevel> parse_event_level(std::string_view text);

struct EventRecord {
    Instant timestamp;
    EventLevel level = EventLevel::Information;
    std::string source;
    long long event_id = 0;
    std::string message;

    bool operator==(const EventRecord&) const = default;
};

/// Half-open interval [start, end).
struct TimeWindow {
    Instant start;
    Instant end;

    TimeWindow() = default;
    /// Throws InvalidArgument when start > end.
    TimeWindow(Instant start, Instant end);

    bool contains(Instant t) const noexcept { return start <= t && t < end; }
    bool empty() const noexcept { return start == end; }
    Millis length() const noexcept { return end - start; }

    bool operator==(const TimeWindow&) const = default;
};

/// Intersection; an empty window anchored at the later start when disjoint.
TimeWindow intersect(const TimeWindow& a, const TimeWindow& b);

enum class RowIssue {
    FieldCount,
    BadTimestamp,
    BadValue,
    MissingField,
    BadLevel,
    BadEventId,
    BadJson,
};

const char* to_string(RowIssue issue);

struct RowError {
    std::size_t row = 0;  ///< 0-based data row (blank lines are not rows)
    std::size_t line = 0; ///< 1-based physical line in the source
    std::string column;
    RowIssue issue = RowIssue::BadValue;
    std::string detail;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<RowError> errors;
};

struct ParseOptions {
    InputFormat format = InputFormat::Csv;
    /// Stop at the first bad row and throw ErrorKind::RowError.
    bool strict = false;
};

/// Required columns: TimeGenerated, CounterName, CounterValue. A trailing
/// bracketed unit (e.g. "TimeGenerated [UTC]") is ignored when matching.
ParseResult<PerfRecord> parse_perf(std::istream& in, const ParseOptions& options = {});

/// Required columns: TimeGenerated, EventLevelName.
ParseResult<EventRecord> parse_events(std::istream& in, const ParseOptions& options = {});

void write_perf(std::ostream& out, std::span<const PerfRecord> records,
                InputFormat format = InputFormat::Csv);
void write_events(std::ostream& out, std::span<const EventRecord> records,
                  InputFormat format = InputFormat::Csv);

template <typename Record>
std::vector<Record> filter_window(std::span<const Record> records, const TimeWindow& window) {
    std::vector<Record> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [&](const Record& r) { return window.contains(r.timestamp); });
    return out;
}

template <typename Record>
std::vector<Record> filter_window(const std::vector<Record>& records, const TimeWindow& window) {
    return filter_window(std::span<const Record>(records), window);
}

enum class Aggregation { Mean, Max, Last };

struct FeatureTableOptions {
    bool pivot_by_instance = false;
    std::optional<std::string> instance_filter;
    Aggregation aggregation = Aggregation::Mean;
};

/// Per-minute numeric matrix. Rows are whole minutes in increasing order,
/// columns are unique feature ids; absent cells are `std::nullopt`.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<Instant> minutes, std::vector<std::string> features);

    const std::vector<Instant>& minutes() const noexcept { return minutes_; }
    const std::vector<std::string>& features() const noexcept { return features_; }
    std::size_t rows() const noexcept { return minutes_.size(); }
    std::size_t cols() const noexcept { return features_.size(); }

    std::optional<double>& at(std::size_t row, std::size_t col) { return cells_[row * cols() + col]; }
    const std::optional<double>& at(std::size_t row, std::size_t col) const {
        return cells_[row * cols() + col];
    }

    std::optional<std::size_t> index_of(std::string_view feature) const;
    /// Throws UnknownFeature.
    std::size_t require(std::string_view feature) const;

    std::vector<std::optional<double>> column(std::size_t col) const;

private:
    std::vector<Instant> minutes_;
    std::vector<std::string> features_;
    std::vector<std::optional<double>> cells_;
};

/// Feature id for a pivoted sample: "counter/instance", or the bare counter
/// name when the sample has no instance.
std::string pivot_feature_id(const PerfRecord& record);

/// Throws EmptySelection when no record survives window/instance filtering.
/// Without pivoting or an explicit filter, a counter that has "_Total"
/// samples uses only those; otherwise all of its instances are pooled.
FeatureTable build_feature_table(std::span<const PerfRecord> records, const TimeWindow& window,
                                 const FeatureTableOptions& options = {});

void write_feature_table(std::ostream& out, const FeatureTable& table);

struct EventBucket {
    Instant start;
    std::size_t warnings = 0;
    std::size_t errors = 0;

    bool operator==(const EventBucket&) const = default;
};

/// ceil(window / bucket) contiguous buckets from window.start; Information
/// events are not counted. Throws InvalidArgument when bucket <= 0.
std::vector<EventBucket> event_histogram(std::span<const EventRecord> events,
                                         const TimeWindow& window, Millis bucket);

void write_event_histogram(std::ostream& out, std::span<const EventBucket> buckets);

} // namespace ciaf
