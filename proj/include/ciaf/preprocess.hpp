#pragma once

#include "ciaf/ingest.hpp"

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ciaf {

enum class Scale { Five, Seven };

const char* to_string(Scale scale);
std::optional<Scale> parse_scale(std::string_view text);

enum class Level { ExtremelyLow, VeryLow, Low, Normal, High, VeryHigh, ExtremelyHigh };

/// "Extremely Low", "Very Low", ..., "Extremely High".
std::string_view level_name(Level level);

/// Accepts the display spelling and compact/snake variants, case-insensitively
/// ("very low", "VeryLow", "very_low").
std::optional<Level> parse_level(std::string_view text);

bool scale_contains(Scale scale, Level level);
std::vector<Level> levels_of(Scale scale);

/// A level tagged with the scale it was drawn from. Ordering two levels from
/// different scales throws ScaleMismatch.
class LikertLevel {
public:
    /// Throws ScaleMismatch when `level` is not part of `scale`.
    LikertLevel(Scale scale, Level level);

    Scale scale() const noexcept { return scale_; }
    Level level() const noexcept { return level_; }
    std::string_view name() const { return level_name(level_); }

    friend bool operator==(const LikertLevel&, const LikertLevel&) = default;
    friend std::strong_ordering operator<=>(const LikertLevel& a, const LikertLevel& b);

private:
    Scale scale_;
    Level level_;
};

/// z-score cut points. Cells left of a negative cut fall below it; cells
/// right of a positive cut fall above it, so each cut sits on the side
/// nearer to Normal.
class LikertBinning {
public:
    /// Seven: -3 -2 -1 +1 +2 +3. Five: -2 -1 +1 +2.
    static LikertBinning standard(Scale scale);

    /// Throws InvalidArgument unless cuts are strictly increasing, symmetric
    /// about zero and match the scale's width.
    LikertBinning(Scale scale, std::vector<double> cuts);

    Scale scale() const noexcept { return scale_; }
    const std::vector<double>& cuts() const noexcept { return cuts_; }

    LikertLevel classify(double z) const;

private:
    Scale scale_;
    std::vector<double> cuts_;
};

struct FeatureStat {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

using FeatureStats = std::map<std::string, FeatureStat, std::less<>>;

enum class Dispersion { Population, Sample };

struct StatsOptions {
    Dispersion dispersion = Dispersion::Population;
    /// Restrict statistics to minutes inside this window (baseline-only
    /// normalization). Unset means the whole table.
    std::optional<TimeWindow> baseline;
};

/// Throws AllMissing when a feature has no usable cell.
FeatureStats compute_stats(const FeatureTable& table, const StatsOptions& options = {});

struct SelectionPolicy {
    enum class Kind { TopK, Explicit, Threshold, TopKCoefficientOfVariation };

    Kind kind = Kind::TopK;
    std::size_t k = 1;
    std::vector<std::string> features;
    double threshold = 0.0;

    static SelectionPolicy top_k(std::size_t k);
    static SelectionPolicy top_k_cv(std::size_t k);
    static SelectionPolicy explicit_list(std::vector<std::string> features);
    static SelectionPolicy min_stddev(double t);
};

const char* to_string(SelectionPolicy::Kind kind);

/// top_k: greatest stddev first, ties by feature id. threshold: stddev >= t,
/// in table order. explicit: verbatim, after an existence check
/// (UnknownFeature).
std::vector<std::string> select_features(const FeatureTable& table, const FeatureStats& stats,
                                         const SelectionPolicy& policy);

/// Feature id -> level for the non-missing cells of one row.
using LikertRow = std::map<std::string, LikertLevel, std::less<>>;

class LikertTable {
public:
    LikertTable() = default;
    LikertTable(Scale scale, std::vector<Instant> minutes, std::vector<std::string> features);

    Scale scale() const noexcept { return scale_; }
    const std::vector<Instant>& minutes() const noexcept { return minutes_; }
    const std::vector<std::string>& features() const noexcept { return features_; }
    std::size_t rows() const noexcept { return minutes_.size(); }
    std::size_t cols() const noexcept { return features_.size(); }

    std::optional<LikertLevel>& at(std::size_t row, std::size_t col) {
        return cells_[row * cols() + col];
    }
    const std::optional<LikertLevel>& at(std::size_t row, std::size_t col) const {
        return cells_[row * cols() + col];
    }

    LikertRow row(std::size_t r) const;

    bool operator==(const LikertTable&) const = default;

private:
    Scale scale_ = Scale::Seven;
    std::vector<Instant> minutes_;
    std::vector<std::string> features_;
    std::vector<std::optional<LikertLevel>> cells_;
};

/// z = (v - mean) / stddev; stddev == 0 labels every cell Normal. When
/// `required_scale` is set and differs from the binning, throws ScaleMismatch.
LikertTable discretize(const FeatureTable& table, const FeatureStats& stats,
                       const LikertBinning& binning, std::span<const std::string> features,
                       std::optional<Scale> required_scale = std::nullopt);

/// CSV with a "minute" column followed by one column per feature; cells are
/// level display names, missing cells are empty.
void write_likert_csv(std::ostream& out, const LikertTable& table);
LikertTable read_likert_csv(std::istream& in, Scale scale);

} // namespace ciaf
