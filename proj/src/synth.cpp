#include "ciaf/synth.hpp"

#include "ciaf/error.hpp"
#include "ciaf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ciaf {

using nlohmann::json;

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    double u1 = 1.0 - uniform(); // (0, 1]
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

unsigned Rng::poisson(double rate) {
    if (rate <= 0.0)
        return 0;
    const double limit = std::exp(-rate);
    unsigned k = 0;
    double p = uniform();
    while (p > limit) {
        ++k;
        p *= uniform();
    }
    return k;
}

TimeWindow Scenario::window() const {
    return {start, start + std::chrono::minutes{duration_minutes}};
}

TimeWindow Scenario::attack_window() const {
    return {start + std::chrono::minutes{attack_start}, start + std::chrono::minutes{attack_end}};
}

void Scenario::validate() const {
    if (prng != Rng::kAlgorithm)
        throw Error(ErrorKind::InvalidArgument,
                    "unsupported PRNG '" + prng + "' (only " + Rng::kAlgorithm + ")");
    if (duration_minutes < 1 || samples_per_minute < 1)
        throw Error(ErrorKind::InvalidArgument, "duration and samples_per_minute must be >= 1");
    if (attack_start < 0 || attack_end < attack_start || attack_end > duration_minutes)
        throw Error(ErrorKind::InvalidArgument, "attack window must lie inside the scenario");
    if (floor_minute(start) != start)
        throw Error(ErrorKind::InvalidArgument, "scenario start must be a whole minute");
    for (const auto& c : counters) {
        if (c.name.empty())
            throw Error(ErrorKind::InvalidArgument, "counter without a name");
        if (!(c.stddev > 0.0))
            throw Error(ErrorKind::InvalidArgument,
                        "counter '" + c.name + "' needs a positive baseline stddev");
    }
}

Scenario default_scenario(std::uint64_t seed) {
    Scenario s;
    s.seed = seed;
    s.start = *parse_instant("2025-03-10T17:00:00Z");
    s.counters = {
        {"Available Bytes", "Memory", "", 6.0e9, 1.5e8, -4.0},
        {"Working Set", "Process", "_Total", 3.1e9, 9.0e7, 4.0},
        {"Working Set - Private", "Process", "_Total", 1.6e9, 6.0e7, 4.0},
        {"Committed Bytes", "Memory", "", 4.2e9, 1.2e8, 4.0},
        {"Working Set", "Process", "svchost", 2.4e8, 1.0e7, 0.0},
        {"% Processor Time", "Processor", "_Total", 12.0, 3.0, 1.0},
        {"Disk Writes/sec", "LogicalDisk", "_Total", 40.0, 8.0, 2.0},
        {"Thread Count", "Process", "_Total", 1400.0, 25.0, 0.0},
    };
    s.baseline_events = {2.0, 0.3, 0.05};
    s.attack_events = {2.0, 3.0, 1.0};
    return s;
}

namespace {

json rates_json(const EventRates& r) {
    return json{{"information", r.information}, {"warning", r.warning}, {"error", r.error}};
}

EventRates rates_from(const json& j) {
    return {j.value("information", 0.0), j.value("warning", 0.0), j.value("error", 0.0)};
}

} // namespace

Scenario load_scenario(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    json doc = json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(ErrorKind::SchemaError, "scenario: not a JSON object");
    try {
        Scenario s;
        s.seed = doc.at("seed").get<std::uint64_t>();
        s.prng = doc.value("prng", std::string(Rng::kAlgorithm));
        auto start = parse_instant(doc.at("start").get<std::string>());
        if (!start)
            throw Error(ErrorKind::SchemaError, "scenario: bad start timestamp");
        s.start = *start;
        s.duration_minutes = doc.at("duration_minutes").get<int>();
        s.samples_per_minute = doc.value("samples_per_minute", 4);
        s.computer = doc.value("computer", std::string("ciaf-vm01"));
        for (const auto& c : doc.at("counters")) {
            CounterSpec counter;
            counter.name = c.at("name").get<std::string>();
            counter.object_name = c.value("object", std::string());
            counter.instance_name = c.value("instance", std::string());
            counter.mean = c.at("mean").get<double>();
            counter.stddev = c.at("stddev").get<double>();
            counter.attack_shift = c.value("attack_shift", 0.0);
            s.counters.push_back(std::move(counter));
        }
        const json& attack = doc.at("attack_window");
        s.attack_start = attack.at("start_minute").get<int>();
        s.attack_end = attack.at("end_minute").get<int>();
        if (doc.contains("events")) {
            s.baseline_events = rates_from(doc["events"].value("baseline", json::object()));
            s.attack_events = rates_from(doc["events"].value("attack", json::object()));
        }
        if (doc.contains("labels")) {
            auto labels = doc["labels"].get<std::vector<std::string>>();
            if (labels.size() != 2)
                throw Error(ErrorKind::SchemaError, "scenario: labels must be [negative, positive]");
            s.negative_label = labels[0];
            s.positive_label = labels[1];
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("scenario: ") + e.what());
    }
}

void write_scenario(std::ostream& out, const Scenario& s) {
    json counters = json::array();
    for (const auto& c : s.counters)
        counters.push_back(json{{"name", c.name},
                                {"object", c.object_name},
                                {"instance", c.instance_name},
                                {"mean", c.mean},
                                {"stddev", c.stddev},
                                {"attack_shift", c.attack_shift}});
    json doc = {
        {"seed", s.seed},
        {"prng", s.prng},
        {"start", format_instant(s.start)},
        {"duration_minutes", s.duration_minutes},
        {"samples_per_minute", s.samples_per_minute},
        {"computer", s.computer},
        {"counters", counters},
        {"attack_window", json{{"start_minute", s.attack_start}, {"end_minute", s.attack_end}}},
        {"events", json{{"baseline", rates_json(s.baseline_events)},
                        {"attack", rates_json(s.attack_events)}}},
        {"labels", json::array({s.negative_label, s.positive_label})},
    };
    out << doc.dump(2) << '\n';
}

namespace {

struct EventTemplate {
    const char* source;
    long long event_id;
    const char* message;
};

constexpr EventTemplate kInformation{"Service Control Manager", 7036,
                                     "The service entered the running state."};
constexpr EventTemplate kWarning{"Microsoft-Windows-Kernel-General", 16,
                                 "Access history in hive was cleared updating keys."};
constexpr EventTemplate kError{"Microsoft-Windows-Ntfs", 55,
                               "A corruption was discovered in the file system structure."};

void emit_events(Rng& rng, Instant minute, const EventRates& rates, const std::string& computer,
                 std::vector<EventRecord>& out) {
    auto emit = [&](EventLevel level, const EventTemplate& t, double rate) {
        unsigned n = rng.poisson(rate);
        for (unsigned i = 0; i < n; ++i) {
            auto offset = Millis{static_cast<long long>(rng.uniform() * 60000.0)};
            out.push_back({minute + offset, level, t.source, t.event_id,
                           std::string(t.message) + " (" + computer + ")"});
        }
    };
    emit(EventLevel::Information, kInformation, rates.information);
    emit(EventLevel::Warning, kWarning, rates.warning);
    emit(EventLevel::Error, kError, rates.error);
}

} // namespace

SyntheticData generate(const Scenario& scenario) {
    scenario.validate();
    Rng rng(scenario.seed);
    SyntheticData data;
    const auto attack = scenario.attack_window();
    const long long step_ms = 60000 / scenario.samples_per_minute;

    for (int m = 0; m < scenario.duration_minutes; ++m) {
        Instant minute = scenario.start + std::chrono::minutes{m};
        bool attacked = attack.contains(minute);
        for (int k = 0; k < scenario.samples_per_minute; ++k) {
            Instant t = minute + Millis{step_ms * k};
            for (const auto& c : scenario.counters) {
                double mean = c.mean + (attacked ? c.attack_shift * c.stddev : 0.0);
                PerfRecord r;
                r.timestamp = t;
                r.computer = scenario.computer;
                r.object_name = c.object_name;
                r.counter_name = c.name;
                if (!c.instance_name.empty())
                    r.instance_name = c.instance_name;
                r.value = rng.normal(mean, c.stddev);
                data.perf.push_back(std::move(r));
            }
        }
        emit_events(rng, minute, attacked ? scenario.attack_events : scenario.baseline_events,
                    scenario.computer, data.events);
        data.labels.push_back(
            {minute, attacked ? scenario.positive_label : scenario.negative_label});
    }
    std::stable_sort(data.events.begin(), data.events.end(),
                     [](const EventRecord& a, const EventRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return data;
}

void write_labels_csv(std::ostream& out, const std::vector<MinuteLabel>& labels) {
    csv::write_row(out, {"minute", "label"});
    for (const auto& l : labels)
        csv::write_row(out, {format_instant(l.minute), l.label});
}

std::vector<MinuteLabel> read_labels_csv(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields.size() < 2 || to_lower(trim(fields[0])) != "minute" ||
        to_lower(trim(fields[1])) != "label")
        throw Error(ErrorKind::MalformedHeader, "labels file must have header 'minute,label'");
    std::vector<MinuteLabel> out;
    while (reader.next(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty())
            continue;
        if (fields.size() != 2)
            throw Error(ErrorKind::RowError,
                        "labels line " + std::to_string(reader.line()) + ": expected 2 fields");
        auto t = parse_instant(fields[0]);
        if (!t)
            throw Error(ErrorKind::RowError, "labels line " + std::to_string(reader.line()) +
                                                 ": bad minute '" + fields[0] + "'");
        out.push_back({floor_minute(*t), std::string(trim(fields[1]))});
    }
    return out;
}

std::vector<std::string> ransomware_features() {
    return {"Available Bytes", "Working Set", "Working Set - Private", "Committed Bytes"};
}

namespace {

// Rows: Available Bytes, Working Set, Working Set - Private, Committed Bytes.
// Letters: e/v/l = Extremely/Very/Low, n = Normal, h/V/E = High/Very/Extremely High.
constexpr const char* kGoldenRows[30] = {
    "nnnn", "nnnn", "hnnn", "nlnn", "nnnn", "lnnn", "nhnn", "nnnn", "nnln", "nnnh",
    "nnnn", "hlnn", "nnnn", "nnhn", "nnnn", "nnnl", "nnnn", "nnnn", "nhhh", "nnnn",
    "nnnn", "nlnn", "nnnn", "nnnn",
    // ransomware, rule satisfied
    "lhhh", "vVhV", "vVVV", "vhVh",
    // ransomware, one atom missed: Working Set, then Available Bytes
    "lnhh", "nhhh",
};

Level golden_level(char c) {
    switch (c) {
    case 'e': return Level::ExtremelyLow;
    case 'v': return Level::VeryLow;
    case 'l': return Level::Low;
    case 'n': return Level::Normal;
    case 'h': return Level::High;
    case 'V': return Level::VeryHigh;
    case 'E': return Level::ExtremelyHigh;
    }
    throw std::logic_error("bad golden level code");
}

Instant golden_start() {
    return *parse_instant("2025-03-10T17:00:00Z");
}

// z-score chosen for each non-Normal band, 0.3 inside the band edge nearest
// to Normal.
double band_target(Level level) {
    switch (level) {
    case Level::ExtremelyLow: return -3.3;
    case Level::VeryLow: return -2.3;
    case Level::Low: return -1.3;
    case Level::Normal: return 0.0;
    case Level::High: return 1.3;
    case Level::VeryHigh: return 2.3;
    case Level::ExtremelyHigh: return 3.3;
    }
    return 0.0;
}

// Values with population mean 0 and stddev 1 whose entries fall in the
// requested bands. Normal rows absorb the remaining mean and variance as
// c + d*s_j with s_j alternating +1/-1 (a trailing 0 when their count is odd).
std::vector<double> standardized_column(const std::vector<Level>& levels) {
    const double n = static_cast<double>(levels.size());
    double sum_t = 0.0, sum_t2 = 0.0;
    std::vector<std::size_t> normal_rows;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] == Level::Normal) {
            normal_rows.push_back(i);
            continue;
        }
        double t = band_target(levels[i]);
        sum_t += t;
        sum_t2 += t * t;
    }
    const double m = static_cast<double>(normal_rows.size());
    const double s2 = normal_rows.size() % 2 == 0 ? m : m - 1.0;
    const double c = -sum_t / m;
    const double remaining = n - sum_t2 - m * c * c;
    if (remaining < 0.0 || s2 <= 0.0)
        throw std::logic_error("golden column infeasible");
    const double d = std::sqrt(remaining / s2);
    if (std::abs(c) + d > 0.9)
        throw std::logic_error("golden column leaves the Normal band");

    std::vector<double> z(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i)
        z[i] = band_target(levels[i]);
    for (std::size_t j = 0; j < normal_rows.size(); ++j) {
        double s = (normal_rows.size() % 2 == 1 && j + 1 == normal_rows.size())
                       ? 0.0
                       : (j % 2 == 0 ? 1.0 : -1.0);
        z[normal_rows[j]] = c + d * s;
    }
    return z;
}

} // namespace

GoldenFixture golden_fixture() {
    std::vector<Instant> minutes;
    for (int m = 0; m < 30; ++m)
        minutes.push_back(golden_start() + std::chrono::minutes{m});
    GoldenFixture fx{LikertTable(Scale::Seven, std::move(minutes), ransomware_features()), {}};
    for (std::size_t r = 0; r < 30; ++r) {
        for (std::size_t c = 0; c < 4; ++c)
            fx.table.at(r, c) = LikertLevel(Scale::Seven, golden_level(kGoldenRows[r][c]));
        fx.labels.emplace_back(r < 24 ? "normal" : "ransomware");
    }
    return fx;
}

SyntheticData golden_telemetry() {
    struct Meta {
        const char* object;
        const char* instance;
        double mean;
        double stddev;
    };
    // Same illustrative magnitudes as default_scenario().
    const Meta meta[4] = {
        {"Memory", "", 6.0e9, 1.5e8},
        {"Process", "_Total", 3.1e9, 9.0e7},
        {"Process", "_Total", 1.6e9, 6.0e7},
        {"Memory", "", 4.2e9, 1.2e8},
    };
    const auto fx = golden_fixture();
    const auto names = ransomware_features();

    std::vector<std::vector<double>> z(4);
    for (std::size_t c = 0; c < 4; ++c) {
        std::vector<Level> levels;
        for (std::size_t r = 0; r < fx.table.rows(); ++r)
            levels.push_back(fx.table.at(r, c)->level());
        z[c] = standardized_column(levels);
    }

    SyntheticData data;
    Rng rng(2025);
    for (std::size_t r = 0; r < fx.table.rows(); ++r) {
        Instant minute = fx.table.minutes()[r];
        for (std::size_t c = 0; c < 4; ++c) {
            PerfRecord rec;
            rec.timestamp = minute + std::chrono::seconds{30};
            rec.computer = "ciaf-vm01";
            rec.object_name = meta[c].object;
            rec.counter_name = names[c];
            if (*meta[c].instance)
                rec.instance_name = meta[c].instance;
            rec.value = meta[c].mean + meta[c].stddev * z[c][r];
            data.perf.push_back(std::move(rec));
        }
        bool attacked = fx.labels[r] == "ransomware";
        emit_events(rng, minute, attacked ? EventRates{2.0, 3.0, 1.0} : EventRates{2.0, 0.3, 0.05},
                    "ciaf-vm01", data.events);
        data.labels.push_back({minute, fx.labels[r]});
    }
    std::stable_sort(data.events.begin(), data.events.end(),
                     [](const EventRecord& a, const EventRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    return data;
}

} // namespace ciaf
