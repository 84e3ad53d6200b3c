#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ciaf {

/// counts[actual][predicted] over `classes` (negative class first).
/// Predictions of "unparseable" are tallied per actual class in a separate
/// column: they count as misses for the actual class and as a hit for none.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> unparseable;

    std::size_t total() const;
    std::size_t support(std::size_t c) const;
    std::size_t tp(std::size_t c) const;
    std::size_t fp(std::size_t c) const;
    std::size_t fn(std::size_t c) const;
    std::size_t tn(std::size_t c) const;
    std::size_t correct() const;

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws LengthMismatch or UnknownLabel.
ConfusionMatrix confusion(std::span<const std::string> actuals,
                          std::span<const std::string> predictions,
                          std::vector<std::string> classes);

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    /// Some metric had a zero denominator and was defined as 0.
    bool degenerate = false;
};

struct AverageMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Provenance {
    std::string backend_id;
    std::string model;
    double temperature = 0.0;
    std::string ontology_version;
    std::string window;

    bool operator==(const Provenance&) const = default;
};

struct ClassReport {
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;
    AverageMetrics macro;
    AverageMetrics weighted;
    std::size_t total = 0;
    Provenance provenance;
};

ClassReport metrics(const ConfusionMatrix& cm);

/// Round-half-up to two decimals, as printed in the markdown layout.
std::string format_2dp(double value);

enum class ReportFormat { Json, Markdown };

const char* to_string(ReportFormat format);

std::string render_report(const ClassReport& report, ReportFormat format);
ClassReport parse_report_json(std::string_view text);

std::string render_confusion_csv(const ConfusionMatrix& cm);
std::string render_confusion_markdown(const ConfusionMatrix& cm);

/// "normal" -> "Normal".
std::string display_class_name(std::string_view name);

} // namespace ciaf
