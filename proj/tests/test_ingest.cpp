#include "doctest.h"
#include "support.hpp"

#include "ciaf/error.hpp"
#include "ciaf/ingest.hpp"
#include "ciaf/synth.hpp"
#include "ciaf/text.hpp"

#include <algorithm>
#include <random>
#include <sstream>

using namespace ciaf;
using namespace ciaf::test;
using namespace std::chrono;

namespace {

const char* kPerfHeader = "TimeGenerated,Computer,ObjectName,CounterName,InstanceName,CounterValue\n";

ParseResult<PerfRecord> perf_csv(const std::string& body, bool strict = false) {
    std::istringstream in(body);
    return parse_perf(in, {InputFormat::Csv, strict});
}

ParseResult<EventRecord> events_csv(const std::string& body) {
    std::istringstream in(body);
    return parse_events(in, {InputFormat::Csv, false});
}

TimeWindow window(const char* a, const char* b) { return TimeWindow(at(a), at(b)); }

} // namespace

TEST_CASE("parse_perf maps a row directly") {
    auto r = perf_csv(std::string(kPerfHeader) +
                      "2025-03-10T17:05:00Z,VM1,Memory,Available Bytes,,9.1e9\n");
    REQUIRE(r.errors.empty());
    REQUIRE(r.records.size() == 1);
    const auto& p = r.records[0];
    CHECK(p.counter_name == "Available Bytes");
    CHECK(p.value == 9.1e9);
    CHECK(p.computer == "VM1");
    CHECK(p.object_name == "Memory");
    CHECK_FALSE(p.instance_name);
    CHECK(p.timestamp == at("2025-03-10T17:05:00Z"));
}

TEST_CASE("parse_perf header handling") {
    CHECK(perf_csv(kPerfHeader).records.empty());

    SUBCASE("minimal header with units in brackets") {
        auto r = perf_csv("TimeGenerated [UTC],CounterName,CounterValue\n"
                          "\"3/10/2025, 5:05:00.000 PM\",Committed Bytes,42\n");
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].timestamp == at("2025-03-10T17:05:00Z"));
        CHECK(r.records[0].computer.empty());
    }
    SUBCASE("missing required column") {
        try {
            perf_csv("TimeGenerated,CounterName\n2025-03-10T17:05:00Z,x\n");
            FAIL("expected MalformedHeader");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MalformedHeader);
        }
    }
    SUBCASE("empty stream") {
        CHECK_THROWS_AS(perf_csv(""), Error);
    }
}

TEST_CASE("parse_perf collects row errors and keeps the rest") {
    auto r = perf_csv(std::string(kPerfHeader) +
                      "2025-03-10T17:05:00Z,VM1,Memory,Available Bytes,,1\n"
                      "2025-03-10T17:05:00Z,VM1,Memory,Available Bytes,,abc\n"
                      "2025-03-10T17:06:00Z,VM1,Memory,Available Bytes,,3\n");
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].value == 1);
    CHECK(r.records[1].value == 3);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].row == 1);
    CHECK(r.errors[0].line == 3);
    CHECK(r.errors[0].column == "CounterValue");
    CHECK(r.errors[0].issue == RowIssue::BadValue);
}

TEST_CASE("strict mode stops at the first bad row") {
    try {
        perf_csv(std::string(kPerfHeader) + "nope,VM1,Memory,X,,1\n", true);
        FAIL("expected RowError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RowError);
    }
}

TEST_CASE("parse_events level mapping") {
    auto r = events_csv("TimeGenerated,EventLevelName,Source,EventID,Message\n"
                        "2025-03-10T17:00:00Z,warning,Disk,51,a\n"
                        "2025-03-10T17:00:01Z,Critical,Disk,41,b\n"
                        "2025-03-10T17:00:02Z,Error,Disk,11,c\n");
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].level == EventLevel::Warning);
    CHECK(r.records[1].level == EventLevel::Error);
    CHECK(r.records[1].event_id == 11);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].issue == RowIssue::BadLevel);
    CHECK(r.errors[0].row == 1);
}

TEST_CASE("parse_events accepts RenderedDescription and JSON-lines") {
    std::istringstream in(
        R"({"TimeGenerated":"2025-03-10T17:00:00Z","EventLevelName":"Error","Source":"Disk","EventID":7,"RenderedDescription":"bad block"})"
        "\n\nnot json\n");
    auto r = parse_events(in, {InputFormat::JsonLines, false});
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].message == "bad block");
    CHECK(r.records[0].event_id == 7);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].issue == RowIssue::BadJson);
    CHECK(r.errors[0].line == 3);
}

TEST_CASE("malformed corpus yields the recorded diagnostics") {
    std::istringstream expected_in(slurp(data_path("malformed_expected.csv")));
    csv::Reader reader(expected_in);
    std::vector<std::string> f;
    reader.next(f);
    std::vector<std::vector<std::string>> expected_perf, expected_events;
    while (reader.next(f))
        (f[0] == "perf" ? expected_perf : expected_events).push_back(f);
    CHECK(expected_perf.size() + expected_events.size() == 20);

    auto check = [](const std::vector<RowError>& got,
                    const std::vector<std::vector<std::string>>& want) {
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CAPTURE(i);
            CHECK(std::to_string(got[i].row) == want[i][1]);
            CHECK(std::to_string(got[i].line) == want[i][2]);
            CHECK(got[i].column == want[i][3]);
            CHECK(std::string(to_string(got[i].issue)) == want[i][4]);
        }
    };
    std::ifstream pin(data_path("malformed_perf.csv"));
    auto perf = parse_perf(pin);
    check(perf.errors, expected_perf);
    CHECK(perf.records.size() == 3);
    CHECK(perf.records[2].object_name == "Mem\nory");

    std::ifstream ein(data_path("malformed_events.csv"));
    auto events = parse_events(ein);
    check(events.errors, expected_events);
    REQUIRE(events.records.size() == 2);
    CHECK(events.records[1].message == "A corruption was found, run \"chkdsk\".");
}

TEST_CASE("perf and event round trips through both formats") {
    auto data = generate(default_scenario(5));
    data.perf[0].computer = "vm, \"quoted\"";
    data.events.push_back({at("2025-03-10T17:00:00.125Z"), EventLevel::Error, "Ntfs", 55,
                           "line one\nline two, with comma"});
    for (auto fmt : {InputFormat::Csv, InputFormat::JsonLines}) {
        CAPTURE(static_cast<int>(fmt));
        std::stringstream ps, es;
        write_perf(ps, data.perf, fmt);
        write_events(es, data.events, fmt);
        auto perf = parse_perf(ps, {fmt, true});
        auto events = parse_events(es, {fmt, true});
        CHECK(perf.records == data.perf);
        CHECK(events.records == data.events);

        std::stringstream again;
        write_perf(again, perf.records, fmt);
        std::stringstream first;
        write_perf(first, data.perf, fmt);
        CHECK(again.str() == first.str());
    }
}

TEST_CASE("filter_window is half-open") {
    std::vector<PerfRecord> r{perf("2025-03-10T17:00:00Z", "A", 1),
                              perf("2025-03-10T17:04:59.999Z", "A", 2),
                              perf("2025-03-10T17:05:00Z", "A", 3)};
    auto w = window("2025-03-10T17:00:00Z", "2025-03-10T17:05:00Z");
    auto kept = filter_window(r, w);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].value == 1);
    CHECK(kept[1].value == 2);
    CHECK(filter_window(r, window("2025-03-10T17:00:00Z", "2025-03-10T17:00:00Z")).empty());
    CHECK_THROWS_AS(window("2025-03-10T17:05:00Z", "2025-03-10T17:00:00Z"), Error);
}

TEST_CASE("filter_window composes as intersection") {
    std::mt19937_64 gen(3);
    auto base = at("2025-03-10T17:00:00Z");
    std::vector<PerfRecord> r;
    for (int i = 0; i < 500; ++i) {
        PerfRecord p = perf("2025-03-10T17:00:00Z", "A", i);
        p.timestamp = base + milliseconds(gen() % 3'600'000);
        r.push_back(p);
    }
    for (int trial = 0; trial < 200; ++trial) {
        auto pick = [&] {
            auto a = base + milliseconds(gen() % 3'600'000);
            auto b = base + milliseconds(gen() % 3'600'000);
            return TimeWindow(std::min(a, b), std::max(a, b));
        };
        auto w1 = pick(), w2 = pick();
        CHECK(filter_window(filter_window(r, w1), w2) == filter_window(r, intersect(w1, w2)));
    }
}

TEST_CASE("feature table means and missing cells") {
    auto w = window("2025-03-10T17:00:00Z", "2025-03-10T17:03:00Z");
    std::vector<PerfRecord> r{perf("2025-03-10T17:00:10Z", "Working Set", 100, "_Total"),
                              perf("2025-03-10T17:00:50Z", "Working Set", 200, "_Total"),
                              perf("2025-03-10T17:02:00Z", "Working Set", 7, "_Total"),
                              perf("2025-03-10T17:00:30Z", "Working Set", 999, "chrome"),
                              perf("2025-03-10T17:03:00Z", "Working Set", 5, "_Total")};
    auto t = build_feature_table(r, w);
    REQUIRE(t.rows() == 3);
    REQUIRE(t.features() == std::vector<std::string>{"Working Set"});
    CHECK(t.at(0, 0) == 150.0);
    CHECK_FALSE(t.at(1, 0));
    CHECK(t.at(2, 0) == 7.0);

    SUBCASE("pivot by instance") {
        auto p = build_feature_table(r, w, {.pivot_by_instance = true});
        CHECK(p.features() == std::vector<std::string>{"Working Set/_Total", "Working Set/chrome"});
        CHECK(p.at(0, p.require("Working Set/chrome")) == 999.0);
    }
    SUBCASE("instance filter") {
        auto p = build_feature_table(r, w, {.instance_filter = "chrome"});
        CHECK(p.at(0, 0) == 999.0);
        CHECK_FALSE(p.at(2, 0));
    }
    SUBCASE("max and last") {
        CHECK(build_feature_table(r, w, {.aggregation = Aggregation::Max}).at(0, 0) == 200.0);
        CHECK(build_feature_table(r, w, {.aggregation = Aggregation::Last}).at(0, 0) == 200.0);
    }
    SUBCASE("nothing survives") {
        try {
            build_feature_table(r, window("2025-03-10T18:00:00Z", "2025-03-10T18:05:00Z"));
            FAIL("expected EmptySelection");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptySelection);
        }
    }
    CHECK_THROWS_AS(t.require("Nope"), Error);
}

TEST_CASE("instances are pooled when there is no _Total") {
    auto w = window("2025-03-10T17:00:00Z", "2025-03-10T17:01:00Z");
    std::vector<PerfRecord> r{perf("2025-03-10T17:00:10Z", "Working Set", 100, "a"),
                              perf("2025-03-10T17:00:20Z", "Working Set", 300, "b")};
    auto t = build_feature_table(r, w);
    REQUIRE(t.features() == std::vector<std::string>{"Working Set"});
    CHECK(t.at(0, 0) == 200.0);
}

TEST_CASE("feature table is invariant to record order") {
    auto data = generate(default_scenario(9));
    auto s = default_scenario(9);
    auto reference = build_feature_table(data.perf, s.window());
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = data.perf;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        auto t = build_feature_table(shuffled, s.window());
        REQUIRE(t.features() == reference.features());
        REQUIRE(t.minutes() == reference.minutes());
        for (std::size_t r = 0; r < t.rows(); ++r)
            for (std::size_t c = 0; c < t.cols(); ++c)
                CHECK(t.at(r, c) == reference.at(r, c));
    }
}

TEST_CASE("event histogram") {
    auto w = window("2025-03-10T17:00:00Z", "2025-03-10T17:30:00Z");
    std::vector<EventRecord> e;
    for (int i = 0; i < 3; ++i)
        e.push_back({at("2025-03-10T17:04:10Z"), EventLevel::Warning, "", 0, ""});
    e.push_back({at("2025-03-10T17:04:20Z"), EventLevel::Error, "", 0, ""});
    e.push_back({at("2025-03-10T17:04:30Z"), EventLevel::Information, "", 0, ""});
    e.push_back({at("2025-03-10T17:30:00Z"), EventLevel::Error, "", 0, ""});

    auto h = event_histogram(e, w, minutes(1));
    REQUIRE(h.size() == 30);
    CHECK(h[4].warnings == 3);
    CHECK(h[4].errors == 1);
    CHECK(h[4].start == at("2025-03-10T17:04:00Z"));

    CHECK(event_histogram({}, w, minutes(7)).size() == 5);
    for (const auto& b : event_histogram({}, w, minutes(7)))
        CHECK(b.warnings + b.errors == 0);
    CHECK_THROWS_AS(event_histogram(e, w, minutes(0)), Error);
}

TEST_CASE("histogram totals match windowed warning and error counts") {
    auto s = default_scenario(21);
    auto data = generate(s);
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = s.start + milliseconds(gen() % 1'800'000);
        auto b = s.start + milliseconds(gen() % 1'800'000);
        TimeWindow w(std::min(a, b), std::max(a, b));
        std::size_t expected = 0;
        for (const auto& ev : data.events)
            expected += w.contains(ev.timestamp) && ev.level != EventLevel::Information;
        std::size_t got = 0;
        for (const auto& bucket : event_histogram(data.events, w, seconds(1 + gen() % 300)))
            got += bucket.warnings + bucket.errors;
        CHECK(got == expected);
    }
}
