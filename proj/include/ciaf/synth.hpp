#pragma once

#include "ciaf/ingest.hpp"
#include "ciaf/preprocess.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace ciaf {

/// Portable generator: std::mt19937_64 (its output sequence is fixed by the
/// C++ standard) with hand-written uniform and normal transforms, since the
/// standard distributions are implementation-defined.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Box-Muller, no cached second draw.
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Knuth's multiplication method; fine for the small rates used here.
    unsigned poisson(double rate);
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

struct CounterSpec {
    std::string name;
    std::string object_name;
    std::string instance_name; ///< empty for instance-less counters
    double mean = 0.0;
    double stddev = 1.0;
    /// Shift applied inside the attack window, in multiples of stddev.
    double attack_shift = 0.0;
};

struct EventRates {
    double information = 0.0; ///< expected events per minute
    double warning = 0.0;
    double error = 0.0;
};

struct Scenario {
    std::uint64_t seed = 1;
    std::string prng = Rng::kAlgorithm;
    Instant start;
    int duration_minutes = 30;
    int samples_per_minute = 4;
    std::string computer = "ciaf-vm01";
    std::vector<CounterSpec> counters;
    /// Minute offsets [attack_start, attack_end) from `start`.
    int attack_start = 20;
    int attack_end = 26;
    EventRates baseline_events;
    EventRates attack_events;
    std::string negative_label = "normal";
    std::string positive_label = "ransomware";

    TimeWindow window() const;
    TimeWindow attack_window() const;

    /// Throws InvalidArgument on an attack window outside the scenario, a
    /// non-positive stddev, or an unsupported PRNG name.
    void validate() const;
};

/// 30 minutes, 6 attack minutes, the four memory counters shifted by 4 sigma
/// (Available Bytes downwards) plus a few unshifted or mildly shifted
/// counters from the standard Azure VM set. Magnitudes are illustrative.
Scenario default_scenario(std::uint64_t seed);

Scenario load_scenario(std::istream& in);
void write_scenario(std::ostream& out, const Scenario& scenario);

struct MinuteLabel {
    Instant minute;
    std::string label;

    bool operator==(const MinuteLabel&) const = default;
};

struct SyntheticData {
    std::vector<PerfRecord> perf;
    std::vector<EventRecord> events;
    std::vector<MinuteLabel> labels;
};

SyntheticData generate(const Scenario& scenario);

void write_labels_csv(std::ostream& out, const std::vector<MinuteLabel>& labels);
/// Throws MalformedHeader / RowError.
std::vector<MinuteLabel> read_labels_csv(std::istream& in);

/// The four ransomware features in the order rendered into prompts.
std::vector<std::string> ransomware_features();

struct GoldenFixture {
    LikertTable table;
    std::vector<std::string> labels;
};

/// 30 hand-constructed rows over the four ransomware features: 24 normal
/// rows that fail the ransomware rule, 4 ransomware rows that satisfy it and
/// 2 ransomware rows that miss exactly one atom.
GoldenFixture golden_fixture();

/// Numeric Perf/Event/label data whose full-window discretization is exactly
/// golden_fixture().table (one sample per feature and minute).
SyntheticData golden_telemetry();

} // namespace ciaf
