#include "ciaf/preprocess.hpp"

#include "ciaf/error.hpp"
#include "ciaf/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

namespace ciaf {

const char* to_string(Scale scale) {
    return scale == Scale::Five ? "five" : "seven";
}

std::optional<Scale> parse_scale(std::string_view text) {
    std::string s = to_lower(trim(text));
    if (s == "five" || s == "5")
        return Scale::Five;
    if (s == "seven" || s == "7")
        return Scale::Seven;
    return std::nullopt;
}

std::string_view level_name(Level level) {
    switch (level) {
    case Level::ExtremelyLow: return "Extremely Low";
    case Level::VeryLow: return "Very Low";
    case Level::Low: return "Low";
    case Level::Normal: return "Normal";
    case Level::High: return "High";
    case Level::VeryHigh: return "Very High";
    case Level::ExtremelyHigh: return "Extremely High";
    }
    return "Normal";
}

std::optional<Level> parse_level(std::string_view text) {
    std::string key;
    for (char c : trim(text)) {
        if (c == ' ' || c == '_' || c == '-')
            continue;
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (key == "extremelylow") return Level::ExtremelyLow;
    if (key == "verylow") return Level::VeryLow;
    if (key == "low") return Level::Low;
    if (key == "normal") return Level::Normal;
    if (key == "high") return Level::High;
    if (key == "veryhigh") return Level::VeryHigh;
    if (key == "extremelyhigh") return Level::ExtremelyHigh;
    return std::nullopt;
}

bool scale_contains(Scale scale, Level level) {
    if (scale == Scale::Seven)
        return true;
    return level != Level::ExtremelyLow && level != Level::ExtremelyHigh;
}

std::vector<Level> levels_of(Scale scale) {
    if (scale == Scale::Five)
        return {Level::VeryLow, Level::Low, Level::Normal, Level::High, Level::VeryHigh};
    return {Level::ExtremelyLow, Level::VeryLow, Level::Low,          Level::Normal,
            Level::High,         Level::VeryHigh, Level::ExtremelyHigh};
}

LikertLevel::LikertLevel(Scale scale, Level level) : scale_(scale), level_(level) {
    if (!scale_contains(scale, level))
        throw Error(ErrorKind::ScaleMismatch, std::string("level '") +
                                                  std::string(level_name(level)) +
                                                  "' is not on the " + to_string(scale) +
                                                  "-level scale");
}

std::strong_ordering operator<=>(const LikertLevel& a, const LikertLevel& b) {
    if (a.scale_ != b.scale_)
        throw Error(ErrorKind::ScaleMismatch, "cannot compare levels from " +
                                                  std::string(to_string(a.scale_)) + " and " +
                                                  to_string(b.scale_) + " scales");
    return a.level_ <=> b.level_;
}

LikertBinning LikertBinning::standard(Scale scale) {
    if (scale == Scale::Five)
        return LikertBinning(scale, {-2.0, -1.0, 1.0, 2.0});
    return LikertBinning(scale, {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0});
}

LikertBinning::LikertBinning(Scale scale, std::vector<double> cuts)
    : scale_(scale), cuts_(std::move(cuts)) {
    if (cuts_.size() + 1 != levels_of(scale_).size())
        throw Error(ErrorKind::InvalidArgument, "binning needs " +
                                                    std::to_string(levels_of(scale_).size() - 1) +
                                                    " cut points");
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
        if (!std::isfinite(cuts_[i]) || (i > 0 && cuts_[i] <= cuts_[i - 1]))
            throw Error(ErrorKind::InvalidArgument, "cut points must be finite and increasing");
        if (cuts_[i] != -cuts_[cuts_.size() - 1 - i])
            throw Error(ErrorKind::InvalidArgument, "cut points must be symmetric about zero");
    }
}

LikertLevel LikertBinning::classify(double z) const {
    std::size_t band = 0;
    for (double cut : cuts_) {
        if (cut < 0.0 ? z >= cut : z > cut)
            ++band;
    }
    return LikertLevel(scale_, levels_of(scale_)[band]);
}

namespace {

// A z this close to a cut is rounding noise around a tie. Two-row columns land
// exactly on +-1 in exact arithmetic, for instance.
constexpr double kCutTolerance = 1e-9;

double snap_to_cut(const LikertBinning& binning, double z) {
    for (double cut : binning.cuts())
        if (std::abs(z - cut) <= kCutTolerance)
            return cut;
    return z;
}

} // namespace

FeatureStats compute_stats(const FeatureTable& table, const StatsOptions& options) {
    FeatureStats stats;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        std::vector<double> values;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (options.baseline && !options.baseline->contains(table.minutes()[r]))
                continue;
            if (const auto& cell = table.at(r, c))
                values.push_back(*cell);
        }
        const auto& name = table.features()[c];
        if (values.empty())
            throw Error(ErrorKind::AllMissing, "feature '" + name + "' has no non-missing cell");

        double n = static_cast<double>(values.size());
        double sum = 0.0;
        for (double v : values)
            sum += v;
        double mean = sum / n;
        double ss = 0.0;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        double divisor = options.dispersion == Dispersion::Sample ? n - 1.0 : n;
        double stddev = divisor > 0.0 ? std::sqrt(ss / divisor) : 0.0;
        stats[name] = FeatureStat{mean, stddev, values.size()};
    }
    return stats;
}

SelectionPolicy SelectionPolicy::top_k(std::size_t k) {
    SelectionPolicy p;
    p.kind = Kind::TopK;
    p.k = k;
    return p;
}

SelectionPolicy SelectionPolicy::top_k_cv(std::size_t k) {
    SelectionPolicy p;
    p.kind = Kind::TopKCoefficientOfVariation;
    p.k = k;
    return p;
}

SelectionPolicy SelectionPolicy::explicit_list(std::vector<std::string> features) {
    SelectionPolicy p;
    p.kind = Kind::Explicit;
    p.features = std::move(features);
    return p;
}

SelectionPolicy SelectionPolicy::min_stddev(double t) {
    SelectionPolicy p;
    p.kind = Kind::Threshold;
    p.threshold = t;
    return p;
}

const char* to_string(SelectionPolicy::Kind kind) {
    switch (kind) {
    case SelectionPolicy::Kind::TopK: return "top_k";
    case SelectionPolicy::Kind::Explicit: return "explicit";
    case SelectionPolicy::Kind::Threshold: return "threshold";
    case SelectionPolicy::Kind::TopKCoefficientOfVariation: return "top_k_cv";
    }
    return "top_k";
}

namespace {

const FeatureStat& stat_for(const FeatureStats& stats, const std::string& feature) {
    auto it = stats.find(feature);
    if (it == stats.end())
        throw Error(ErrorKind::UnknownFeature, "no statistics for feature '" + feature + "'");
    return it->second;
}

} // namespace

std::vector<std::string> select_features(const FeatureTable& table, const FeatureStats& stats,
                                         const SelectionPolicy& policy) {
    using Kind = SelectionPolicy::Kind;
    switch (policy.kind) {
    case Kind::Explicit: {
        if (policy.features.empty())
            throw Error(ErrorKind::InvalidArgument, "explicit feature list is empty");
        for (const auto& f : policy.features)
            if (!table.index_of(f))
                throw Error(ErrorKind::UnknownFeature, "feature '" + f + "' not in table");
        return policy.features;
    }
    case Kind::Threshold: {
        std::vector<std::string> out;
        for (const auto& f : table.features())
            if (stat_for(stats, f).stddev >= policy.threshold)
                out.push_back(f);
        return out;
    }
    case Kind::TopK:
    case Kind::TopKCoefficientOfVariation: {
        if (policy.k < 1)
            throw Error(ErrorKind::InvalidArgument, "top_k requires k >= 1");
        auto score = [&](const std::string& f) {
            const auto& s = stat_for(stats, f);
            if (policy.kind == Kind::TopK)
                return s.stddev;
            return s.mean == 0.0 ? 0.0 : s.stddev / std::abs(s.mean);
        };
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& f : table.features())
            ranked.emplace_back(score(f), f);
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first)
                return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::string> out;
        for (std::size_t i = 0; i < ranked.size() && i < policy.k; ++i)
            out.push_back(ranked[i].second);
        return out;
    }
    }
    return {};
}

LikertTable::LikertTable(Scale scale, std::vector<Instant> minutes,
                         std::vector<std::string> features)
    : scale_(scale), minutes_(std::move(minutes)), features_(std::move(features)),
      cells_(minutes_.size() * features_.size()) {}

LikertRow LikertTable::row(std::size_t r) const {
    LikertRow out;
    for (std::size_t c = 0; c < cols(); ++c)
        if (const auto& cell = at(r, c))
            out.emplace(features_[c], *cell);
    return out;
}

LikertTable discretize(const FeatureTable& table, const FeatureStats& stats,
                       const LikertBinning& binning, std::span<const std::string> features,
                       std::optional<Scale> required_scale) {
    if (required_scale && *required_scale != binning.scale())
        throw Error(ErrorKind::ScaleMismatch,
                    std::string("binning uses the ") + to_string(binning.scale()) +
                        "-level scale but the decision rule needs " + to_string(*required_scale));

    std::vector<std::size_t> source_cols;
    for (const auto& f : features)
        source_cols.push_back(table.require(f));

    LikertTable out(binning.scale(), table.minutes(),
                    std::vector<std::string>(features.begin(), features.end()));
    const LikertLevel normal(binning.scale(), Level::Normal);
    for (std::size_t c = 0; c < source_cols.size(); ++c) {
        const auto& st = stat_for(stats, features[c]);
        for (std::size_t r = 0; r < table.rows(); ++r) {
            const auto& cell = table.at(r, source_cols[c]);
            if (!cell)
                continue;
            out.at(r, c) = st.stddev > 0.0
                               ? binning.classify(snap_to_cut(binning, (*cell - st.mean) / st.stddev))
                               : normal;
        }
    }
    return out;
}

void write_likert_csv(std::ostream& out, const LikertTable& table) {
    std::vector<std::string> header{"minute"};
    header.insert(header.end(), table.features().begin(), table.features().end());
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<std::string> row{format_instant(table.minutes()[r])};
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& cell = table.at(r, c);
            row.emplace_back(cell ? cell->name() : "");
        }
        csv::write_row(out, row);
    }
}

LikertTable read_likert_csv(std::istream& in, Scale scale) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header) || header.empty() || to_lower(trim(header[0])) != "minute")
        throw Error(ErrorKind::MalformedHeader, "Likert table must start with a 'minute' column");
    std::vector<std::string> features(header.begin() + 1, header.end());

    std::vector<Instant> minutes;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty())
            continue;
        if (fields.size() != header.size())
            throw Error(ErrorKind::RowError,
                        "line " + std::to_string(reader.line()) + ": wrong field count");
        auto t = parse_instant(fields[0]);
        if (!t)
            throw Error(ErrorKind::RowError,
                        "line " + std::to_string(reader.line()) + ": bad minute '" + fields[0] + "'");
        minutes.push_back(*t);
        rows.push_back(fields);
    }

    LikertTable table(scale, std::move(minutes), std::move(features));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& text = rows[r][c + 1];
            if (trim(text).empty())
                continue;
            auto level = parse_level(text);
            if (!level)
                throw Error(ErrorKind::RowError,
                            "row " + std::to_string(r) + ": unknown level '" + text + "'");
            table.at(r, c) = LikertLevel(scale, *level);
        }
    }
    return table;
}

} // namespace ciaf
