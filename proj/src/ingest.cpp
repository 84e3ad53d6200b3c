#include "ciaf/ingest.hpp"

#include "ciaf/error.hpp"
#include "ciaf/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace ciaf {

using nlohmann::json;

const char* to_string(EventLevel level) {
    switch (level) {
    case EventLevel::Information: return "Information";
    case EventLevel::Warning: return "Warning";
    case EventLevel::Error: return "Error";
    }
    return "Information";
}

std::optional<EventLevel> parse_event_level(std::string_view text) {
    std::string s = to_lower(trim(text));
    if (s == "information")
        return EventLevel::Information;
    if (s == "warning")
        return EventLevel::Warning;
    if (s == "error")
        return EventLevel::Error;
    return std::nullopt;
}

TimeWindow::TimeWindow(Instant s, Instant e) : start(s), end(e) {
    if (start > end)
        throw Error(ErrorKind::InvalidArgument,
                    "time window start " + format_instant(start) + " is after end " +
                        format_instant(end));
}

TimeWindow intersect(const TimeWindow& a, const TimeWindow& b) {
    Instant s = std::max(a.start, b.start);
    Instant e = std::min(a.end, b.end);
    return e < s ? TimeWindow{s, s} : TimeWindow{s, e};
}

const char* to_string(RowIssue issue) {
    switch (issue) {
    case RowIssue::FieldCount: return "FieldCount";
    case RowIssue::BadTimestamp: return "BadTimestamp";
    case RowIssue::BadValue: return "BadValue";
    case RowIssue::MissingField: return "MissingField";
    case RowIssue::BadLevel: return "BadLevel";
    case RowIssue::BadEventId: return "BadEventId";
    case RowIssue::BadJson: return "BadJson";
    }
    return "BadValue";
}

namespace {

// "TimeGenerated [UTC]" -> "timegenerated"; "Counter_Name" -> "countername".
std::string column_key(std::string_view name) {
    name = trim(name);
    if (auto bracket = name.find('['); bracket != std::string_view::npos)
        name = trim(name.substr(0, bracket));
    std::string key;
    for (char c : name) {
        if (c == ' ' || c == '_' || c == '-')
            continue;
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return key;
}

struct ColumnSpec {
    const char* key;
    const char* display;
    bool required;
};

constexpr ColumnSpec kPerfColumns[] = {
    {"timegenerated", "TimeGenerated", true},
    {"computer", "Computer", false},
    {"objectname", "ObjectName", false},
    {"countername", "CounterName", true},
    {"instancename", "InstanceName", false},
    {"countervalue", "CounterValue", true},
};

constexpr ColumnSpec kEventColumns[] = {
    {"timegenerated", "TimeGenerated", true},
    {"eventlevelname", "EventLevelName", true},
    {"source", "Source", false},
    {"eventid", "EventID", false},
    {"message", "Message", false},
};

// Accessor over one data row, independent of CSV vs JSON-lines.
class Row {
public:
    virtual ~Row() = default;
    virtual std::optional<std::string> get(const char* key) const = 0;
};

class CsvRow : public Row {
public:
    CsvRow(const std::map<std::string, std::size_t>& index, const std::vector<std::string>& fields)
        : index_(index), fields_(fields) {}

    std::optional<std::string> get(const char* key) const override {
        auto it = index_.find(key);
        if (it == index_.end())
            return std::nullopt;
        return fields_[it->second];
    }

private:
    const std::map<std::string, std::size_t>& index_;
    const std::vector<std::string>& fields_;
};

class JsonRow : public Row {
public:
    explicit JsonRow(const json& obj) {
        for (const auto& [k, v] : obj.items()) {
            std::string key = column_key(k);
            if (v.is_null())
                continue;
            if (v.is_string())
                values_[key] = v.get<std::string>();
            else if (v.is_number_integer())
                values_[key] = std::to_string(v.get<long long>());
            else if (v.is_number())
                values_[key] = format_real(v.get<double>());
            else
                values_[key] = v.dump();
        }
        // Azure names the event text RenderedDescription.
        if (!values_.count("message") && values_.count("rendereddescription"))
            values_["message"] = values_["rendereddescription"];
    }

    std::optional<std::string> get(const char* key) const override {
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, std::string> values_;
};

class ErrorSink {
public:
    ErrorSink(std::vector<RowError>& errors, bool strict) : errors_(errors), strict_(strict) {}

    void add(std::size_t row, std::size_t line, std::string column, RowIssue issue,
             std::string detail) {
        RowError e{row, line, std::move(column), issue, std::move(detail)};
        if (strict_)
            throw Error(ErrorKind::RowError, "row " + std::to_string(row) + " (line " +
                                                 std::to_string(line) + "): " + e.column + ": " +
                                                 to_string(issue) + ": " + e.detail);
        errors_.push_back(std::move(e));
    }

private:
    std::vector<RowError>& errors_;
    bool strict_;
};

std::optional<PerfRecord> decode_perf(const Row& row, std::size_t index, std::size_t line,
                                      ErrorSink& sink) {
    auto ts_text = row.get("timegenerated");
    auto counter = row.get("countername");
    auto value_text = row.get("countervalue");
    if (!ts_text || trim(*ts_text).empty()) {
        sink.add(index, line, "TimeGenerated", RowIssue::MissingField, "field absent");
        return std::nullopt;
    }
    if (!counter || trim(*counter).empty()) {
        sink.add(index, line, "CounterName", RowIssue::MissingField, "empty counter name");
        return std::nullopt;
    }
    if (!value_text || trim(*value_text).empty()) {
        sink.add(index, line, "CounterValue", RowIssue::MissingField, "field absent");
        return std::nullopt;
    }
    auto ts = parse_instant(*ts_text);
    if (!ts) {
        sink.add(index, line, "TimeGenerated", RowIssue::BadTimestamp,
                 "unparseable timestamp '" + *ts_text + "'");
        return std::nullopt;
    }
    auto value = parse_real(*value_text);
    if (!value) {
        sink.add(index, line, "CounterValue", RowIssue::BadValue,
                 "not a finite number '" + *value_text + "'");
        return std::nullopt;
    }
    PerfRecord r;
    r.timestamp = *ts;
    r.computer = std::string(trim(row.get("computer").value_or("")));
    r.object_name = std::string(trim(row.get("objectname").value_or("")));
    r.counter_name = std::string(trim(*counter));
    if (auto inst = row.get("instancename"); inst && !trim(*inst).empty())
        r.instance_name = std::string(trim(*inst));
    r.value = *value;
    return r;
}

std::optional<EventRecord> decode_event(const Row& row, std::size_t index, std::size_t line,
                                        ErrorSink& sink) {
    auto ts_text = row.get("timegenerated");
    auto level_text = row.get("eventlevelname");
    if (!ts_text || trim(*ts_text).empty()) {
        sink.add(index, line, "TimeGenerated", RowIssue::MissingField, "field absent");
        return std::nullopt;
    }
    if (!level_text || trim(*level_text).empty()) {
        sink.add(index, line, "EventLevelName", RowIssue::MissingField, "field absent");
        return std::nullopt;
    }
    auto ts = parse_instant(*ts_text);
    if (!ts) {
        sink.add(index, line, "TimeGenerated", RowIssue::BadTimestamp,
                 "unparseable timestamp '" + *ts_text + "'");
        return std::nullopt;
    }
    auto level = parse_event_level(*level_text);
    if (!level) {
        sink.add(index, line, "EventLevelName", RowIssue::BadLevel,
                 "level '" + *level_text + "' is not Information, Warning or Error");
        return std::nullopt;
    }
    EventRecord e;
    e.timestamp = *ts;
    e.level = *level;
    e.source = std::string(trim(row.get("source").value_or("")));
    if (auto id_text = row.get("eventid"); id_text && !trim(*id_text).empty()) {
        auto id = parse_integer(*id_text);
        if (!id) {
            sink.add(index, line, "EventID", RowIssue::BadEventId,
                     "not an integer '" + *id_text + "'");
            return std::nullopt;
        }
        e.event_id = *id;
    }
    e.message = row.get("message").value_or("");
    return e;
}

template <typename Record, typename Decode, std::size_t N>
ParseResult<Record> parse_stream(std::istream& in, const ParseOptions& options,
                                 const ColumnSpec (&columns)[N], Decode decode) {
    ParseResult<Record> result;
    ErrorSink sink(result.errors, options.strict);

    if (options.format == InputFormat::JsonLines) {
        std::string line;
        std::size_t line_no = 0;
        std::size_t index = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty())
                continue;
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.is_object()) {
                sink.add(index++, line_no, "", RowIssue::BadJson, "line is not a JSON object");
                continue;
            }
            JsonRow row(obj);
            if (auto rec = decode(row, index, line_no, sink))
                result.records.push_back(std::move(*rec));
            ++index;
        }
        return result;
    }

    csv::Reader reader(in);
    std::vector<std::string> fields;
    std::vector<std::string> header;
    while (reader.next(header)) {
        if (!(header.size() == 1 && trim(header[0]).empty()))
            break;
    }
    if (header.empty() || (header.size() == 1 && trim(header[0]).empty()))
        throw Error(ErrorKind::MalformedHeader, "missing header line");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0)
        header[0].erase(0, 3);

    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string key = column_key(header[i]);
        if (key == "rendereddescription" && !index_of.count("message"))
            key = "message";
        index_of.emplace(key, i);
    }
    for (const auto& col : columns) {
        if (col.required && !index_of.count(col.key))
            throw Error(ErrorKind::MalformedHeader,
                        std::string("required column '") + col.display + "' absent");
    }

    std::size_t index = 0;
    while (reader.next(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty())
            continue;
        if (fields.size() != header.size()) {
            sink.add(index++, reader.line(), "", RowIssue::FieldCount,
                     "expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
            continue;
        }
        CsvRow row(index_of, fields);
        if (auto rec = decode(row, index, reader.line(), sink))
            result.records.push_back(std::move(*rec));
        ++index;
    }
    return result;
}

} // namespace

ParseResult<PerfRecord> parse_perf(std::istream& in, const ParseOptions& options) {
    return parse_stream<PerfRecord>(in, options, kPerfColumns, decode_perf);
}

ParseResult<EventRecord> parse_events(std::istream& in, const ParseOptions& options) {
    return parse_stream<EventRecord>(in, options, kEventColumns, decode_event);
}

void write_perf(std::ostream& out, std::span<const PerfRecord> records, InputFormat format) {
    if (format == InputFormat::JsonLines) {
        for (const auto& r : records) {
            json obj = {
                {"TimeGenerated", format_instant(r.timestamp)},
                {"Computer", r.computer},
                {"ObjectName", r.object_name},
                {"CounterName", r.counter_name},
                {"InstanceName", r.instance_name ? json(*r.instance_name) : json(nullptr)},
                {"CounterValue", r.value},
            };
            out << obj.dump() << '\n';
        }
        return;
    }
    csv::write_row(out, {"TimeGenerated", "Computer", "ObjectName", "CounterName", "InstanceName",
                         "CounterValue"});
    for (const auto& r : records) {
        csv::write_row(out, {format_instant(r.timestamp), r.computer, r.object_name,
                             r.counter_name, r.instance_name.value_or(""), format_real(r.value)});
    }
}

void write_events(std::ostream& out, std::span<const EventRecord> records, InputFormat format) {
    if (format == InputFormat::JsonLines) {
        for (const auto& e : records) {
            json obj = {
                {"TimeGenerated", format_instant(e.timestamp)},
                {"EventLevelName", to_string(e.level)},
                {"Source", e.source},
                {"EventID", e.event_id},
                {"Message", e.message},
            };
            out << obj.dump() << '\n';
        }
        return;
    }
    csv::write_row(out, {"TimeGenerated", "EventLevelName", "Source", "EventID", "Message"});
    for (const auto& e : records) {
        csv::write_row(out, {format_instant(e.timestamp), to_string(e.level), e.source,
                             std::to_string(e.event_id), e.message});
    }
}

FeatureTable::FeatureTable(std::vector<Instant> minutes, std::vector<std::string> features)
    : minutes_(std::move(minutes)), features_(std::move(features)),
      cells_(minutes_.size() * features_.size()) {
    for (std::size_t i = 0; i < minutes_.size(); ++i) {
        if (floor_minute(minutes_[i]) != minutes_[i])
            throw Error(ErrorKind::InvalidArgument,
                        "minute mark not aligned: " + format_instant(minutes_[i]));
        if (i > 0 && minutes_[i] <= minutes_[i - 1])
            throw Error(ErrorKind::InvalidArgument, "minute marks must strictly increase");
    }
    std::set<std::string> seen;
    for (const auto& f : features_)
        if (!seen.insert(f).second)
            throw Error(ErrorKind::InvalidArgument, "duplicate feature id '" + f + "'");
}

std::optional<std::size_t> FeatureTable::index_of(std::string_view feature) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i] == feature)
            return i;
    return std::nullopt;
}

std::size_t FeatureTable::require(std::string_view feature) const {
    if (auto i = index_of(feature))
        return *i;
    throw Error(ErrorKind::UnknownFeature, "feature '" + std::string(feature) + "' not in table");
}

std::vector<std::optional<double>> FeatureTable::column(std::size_t col) const {
    std::vector<std::optional<double>> out;
    out.reserve(rows());
    for (std::size_t r = 0; r < rows(); ++r)
        out.push_back(at(r, col));
    return out;
}

std::string pivot_feature_id(const PerfRecord& record) {
    if (record.instance_name && !record.instance_name->empty())
        return record.counter_name + "/" + *record.instance_name;
    return record.counter_name;
}

namespace {

struct Sample {
    Instant timestamp;
    double value;
};

double aggregate(std::vector<Sample>& samples, Aggregation how) {
    switch (how) {
    case Aggregation::Max: {
        double m = samples.front().value;
        for (const auto& s : samples)
            m = std::max(m, s.value);
        return m;
    }
    case Aggregation::Last: {
        // Latest timestamp; ties resolved by the larger value so the result
        // does not depend on input order.
        const Sample* best = &samples.front();
        for (const auto& s : samples)
            if (s.timestamp > best->timestamp ||
                (s.timestamp == best->timestamp && s.value > best->value))
                best = &s;
        return best->value;
    }
    case Aggregation::Mean:
        break;
    }
    // Summing in sorted order makes the mean bit-identical under permutation.
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples)
        values.push_back(s.value);
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    return sum / static_cast<double>(values.size());
}

} // namespace

FeatureTable build_feature_table(std::span<const PerfRecord> records, const TimeWindow& window,
                                 const FeatureTableOptions& options) {
    if (window.empty())
        throw Error(ErrorKind::EmptySelection, "empty time window " +
                                                   format_instant(window.start) + " .. " +
                                                   format_instant(window.end));

    std::vector<const PerfRecord*> selected;
    for (const auto& r : records) {
        if (!window.contains(r.timestamp))
            continue;
        if (options.instance_filter && r.instance_name.value_or("") != *options.instance_filter)
            continue;
        selected.push_back(&r);
    }

    if (!options.pivot_by_instance && !options.instance_filter) {
        std::set<std::string> has_total;
        for (const auto* r : selected)
            if (r->instance_name == "_Total")
                has_total.insert(r->counter_name);
        std::erase_if(selected, [&](const PerfRecord* r) {
            return has_total.count(r->counter_name) && r->instance_name != "_Total";
        });
    }

    if (selected.empty())
        throw Error(ErrorKind::EmptySelection,
                    "no Perf record in window " + format_instant(window.start) + " .. " +
                        format_instant(window.end));

    std::vector<Instant> minutes;
    for (Instant m = floor_minute(window.start); m < window.end; m += std::chrono::minutes{1})
        minutes.push_back(m);

    auto feature_of = [&](const PerfRecord& r) {
        return options.pivot_by_instance ? pivot_feature_id(r) : r.counter_name;
    };

    std::map<std::string, std::map<std::size_t, std::vector<Sample>>> cells;
    for (const auto* r : selected) {
        auto row = static_cast<std::size_t>(
            std::chrono::duration_cast<std::chrono::minutes>(floor_minute(r->timestamp) -
                                                             minutes.front())
                .count());
        cells[feature_of(*r)][row].push_back({r->timestamp, r->value});
    }

    std::vector<std::string> features;
    for (const auto& [name, _] : cells)
        features.push_back(name);

    FeatureTable table(std::move(minutes), std::move(features));
    std::size_t col = 0;
    for (auto& [name, by_row] : cells) {
        for (auto& [row, samples] : by_row)
            table.at(row, col) = aggregate(samples, options.aggregation);
        ++col;
    }
    return table;
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
    std::vector<std::string> header{"minute"};
    header.insert(header.end(), table.features().begin(), table.features().end());
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<std::string> row{format_instant(table.minutes()[r])};
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& cell = table.at(r, c);
            row.push_back(cell ? format_real(*cell) : "");
        }
        csv::write_row(out, row);
    }
}

std::vector<EventBucket> event_histogram(std::span<const EventRecord> events,
                                         const TimeWindow& window, Millis bucket) {
    if (bucket <= Millis{0})
        throw Error(ErrorKind::InvalidArgument, "histogram bucket must be positive");
    auto span_ms = window.length().count();
    auto width = bucket.count();
    auto count = static_cast<std::size_t>((span_ms + width - 1) / width);
    std::vector<EventBucket> buckets(count);
    for (std::size_t i = 0; i < count; ++i)
        buckets[i].start = window.start + bucket * static_cast<long long>(i);
    for (const auto& e : events) {
        if (!window.contains(e.timestamp) || e.level == EventLevel::Information)
            continue;
        auto i = static_cast<std::size_t>((e.timestamp - window.start).count() / width);
        if (e.level == EventLevel::Warning)
            ++buckets[i].warnings;
        else
            ++buckets[i].errors;
    }
    return buckets;
}

void write_event_histogram(std::ostream& out, std::span<const EventBucket> buckets) {
    csv::write_row(out, {"bucket_start", "warnings", "errors"});
    for (const auto& b : buckets)
        csv::write_row(out, {format_instant(b.start), std::to_string(b.warnings),
                             std::to_string(b.errors)});
}

} // namespace ciaf
