#include "doctest.h"
#include "support.hpp"

#include "ciaf/error.hpp"
#include "ciaf/preprocess.hpp"
#include "ciaf/synth.hpp"

#include <cmath>
#include <sstream>

using namespace ciaf;
using namespace ciaf::test;
using namespace std::chrono;

namespace {

FeatureTable table_of(const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& cols) {
    std::size_t rows = cols.empty() ? 0 : cols.front().second.size();
    std::vector<Instant> minutes;
    for (std::size_t r = 0; r < rows; ++r)
        minutes.push_back(at("2025-03-10T17:00:00Z") + std::chrono::minutes(r));
    std::vector<std::string> names;
    for (const auto& c : cols)
        names.push_back(c.first);
    FeatureTable t(minutes, names);
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < rows; ++r)
            t.at(r, c) = cols[c].second[r];
    return t;
}

Level level_for(double mean, double sd, double v) {
    FeatureStats stats{{"x", {mean, sd, 1}}};
    auto t = table_of({{"x", {v}}});
    std::vector<std::string> f{"x"};
    return discretize(t, stats, LikertBinning::standard(Scale::Seven), f).at(0, 0)->level();
}

} // namespace

TEST_CASE("compute_stats uses the population divisor by default") {
    auto s = compute_stats(table_of({{"a", {2, 4}}}));
    CHECK(s.at("a").mean == 3.0);
    CHECK(s.at("a").stddev == 1.0);
    CHECK(s.at("a").count == 2);

    auto k = compute_stats(table_of({{"k", {5, 5, 5}}}));
    CHECK(k.at("k").mean == 5.0);
    CHECK(k.at("k").stddev == 0.0);

    auto q = compute_stats(table_of({{"q", {1, 2, 3, 4}}}));
    CHECK(q.at("q").mean == 2.5);
    CHECK(q.at("q").stddev == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));

    auto sample = compute_stats(table_of({{"q", {1, 2, 3, 4}}}), {Dispersion::Sample, {}});
    CHECK(sample.at("q").stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("compute_stats skips missing cells and rejects all-missing columns") {
    auto s = compute_stats(table_of({{"a", {2, std::nullopt, 4}}}));
    CHECK(s.at("a").count == 2);
    CHECK(s.at("a").mean == 3.0);
    try {
        compute_stats(table_of({{"a", {1, 2}}, {"gone", {std::nullopt, std::nullopt}}}));
        FAIL("expected AllMissing");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AllMissing);
        CHECK(std::string(e.what()).find("gone") != std::string::npos);
    }
}

TEST_CASE("compute_stats baseline window") {
    auto t = table_of({{"a", {1, 3, 100}}});
    StatsOptions o;
    o.baseline = TimeWindow(at("2025-03-10T17:00:00Z"), at("2025-03-10T17:02:00Z"));
    auto s = compute_stats(t, o);
    CHECK(s.at("a").mean == 2.0);
    CHECK(s.at("a").count == 2);
}

TEST_CASE("select_features policies") {
    auto t = table_of({{"a", {0}}, {"b", {0}}, {"c", {0}}});
    FeatureStats s{{"a", {0, 5, 1}}, {"b", {0, 1, 1}}, {"c", {0, 3, 1}}};
    CHECK(select_features(t, s, SelectionPolicy::top_k(2)) == std::vector<std::string>{"a", "c"});
    CHECK(select_features(t, s, SelectionPolicy::top_k(9)) ==
          std::vector<std::string>{"a", "c", "b"});
    CHECK(select_features(t, s, SelectionPolicy::min_stddev(3)) ==
          std::vector<std::string>{"a", "c"});

    FeatureStats tie{{"a", {0, 2, 1}}, {"b", {0, 2, 1}}, {"c", {0, 1, 1}}};
    CHECK(select_features(t, tie, SelectionPolicy::top_k(1)) == std::vector<std::string>{"a"});

    auto mem = table_of({{"Available Bytes", {0}}, {"Working Set", {0}}});
    FeatureStats ms{{"Available Bytes", {1, 1, 1}}, {"Working Set", {1, 1, 1}}};
    std::vector<std::string> pick{"Working Set", "Available Bytes"};
    CHECK(select_features(mem, ms, SelectionPolicy::explicit_list(pick)) == pick);
    try {
        select_features(mem, ms, SelectionPolicy::explicit_list({"Thread Count"}));
        FAIL("expected UnknownFeature");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownFeature);
    }
}

TEST_CASE("coefficient of variation ranking") {
    auto t = table_of({{"big", {0}}, {"small", {0}}});
    FeatureStats s{{"big", {1e9, 1e6, 1}}, {"small", {10, 5, 1}}};
    CHECK(select_features(t, s, SelectionPolicy::top_k(1)) == std::vector<std::string>{"big"});
    CHECK(select_features(t, s, SelectionPolicy::top_k_cv(1)) ==
          std::vector<std::string>{"small"});
}

TEST_CASE("top_k output has non-increasing stddev") {
    auto s = default_scenario(2);
    auto data = generate(s);
    auto t = build_feature_table(data.perf, s.window());
    auto stats = compute_stats(t);
    auto picked = select_features(t, stats, SelectionPolicy::top_k(t.cols()));
    REQUIRE(picked.size() == t.cols());
    for (std::size_t i = 1; i < picked.size(); ++i)
        CHECK(stats.at(picked[i - 1]).stddev >= stats.at(picked[i]).stddev);
}

TEST_CASE("discretize examples") {
    CHECK(level_for(100, 10, 100) == Level::Normal);
    CHECK(level_for(100, 10, 125) == Level::VeryHigh);
    CHECK(level_for(0, 1, -1.5) == Level::Low);
    CHECK(level_for(42, 0, 1e12) == Level::Normal);
}

TEST_CASE("band edges are inclusive on the Normal side") {
    auto b = LikertBinning::standard(Scale::Seven);
    CHECK(b.classify(-3.0).level() == Level::VeryLow);
    CHECK(b.classify(std::nextafter(-3.0, -4.0)).level() == Level::ExtremelyLow);
    CHECK(b.classify(-2.0).level() == Level::Low);
    CHECK(b.classify(-1.0).level() == Level::Normal);
    CHECK(b.classify(1.0).level() == Level::Normal);
    CHECK(b.classify(std::nextafter(1.0, 2.0)).level() == Level::High);
    CHECK(b.classify(2.0).level() == Level::High);
    CHECK(b.classify(3.0).level() == Level::VeryHigh);
    CHECK(b.classify(3.5).level() == Level::ExtremelyHigh);

    auto five = LikertBinning::standard(Scale::Five);
    CHECK(five.classify(-9).level() == Level::VeryLow);
    CHECK(five.classify(9).level() == Level::VeryHigh);
    CHECK(five.classify(1.5).level() == Level::High);
    CHECK(five.classify(9).scale() == Scale::Five);
}

TEST_CASE("binning validation") {
    CHECK_THROWS_AS(LikertBinning(Scale::Seven, {-3, -2, -1, 1, 2}), Error);
    CHECK_THROWS_AS(LikertBinning(Scale::Seven, {-3, -2, -1, 1, 2, 4}), Error);
    CHECK_THROWS_AS(LikertBinning(Scale::Five, {-1, -2, 2, 1}), Error);
    CHECK_NOTHROW(LikertBinning(Scale::Five, {-1.5, -0.5, 0.5, 1.5}));
}

TEST_CASE("levels are ordered within a scale and incomparable across scales") {
    LikertLevel lo(Scale::Seven, Level::Low), hi(Scale::Seven, Level::High);
    CHECK(lo < hi);
    CHECK(LikertLevel(Scale::Seven, Level::ExtremelyLow) < LikertLevel(Scale::Seven, Level::VeryLow));
    LikertLevel five_hi(Scale::Five, Level::High);
    try {
        (void)(lo < five_hi);
        FAIL("expected ScaleMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ScaleMismatch);
    }
    CHECK_THROWS_AS(LikertLevel(Scale::Five, Level::ExtremelyHigh), Error);
    CHECK(parse_level("very_high") == Level::VeryHigh);
    CHECK(parse_level("Extremely Low") == Level::ExtremelyLow);
    CHECK_FALSE(parse_level("medium"));
}

TEST_CASE("discretize preserves shape and missing cells") {
    auto t = table_of({{"a", {1, std::nullopt, 3}}, {"b", {1, 2, 3}}});
    auto stats = compute_stats(t);
    std::vector<std::string> f{"b", "a"};
    auto l = discretize(t, stats, LikertBinning::standard(Scale::Seven), f);
    CHECK(l.rows() == 3);
    CHECK(l.features() == f);
    CHECK_FALSE(l.at(1, 1));
    CHECK(l.row(1).size() == 1);
    CHECK(l.minutes() == t.minutes());
}

TEST_CASE("discretize rejects a scale that conflicts with the rule") {
    auto t = table_of({{"a", {1, 2}}});
    std::vector<std::string> f{"a"};
    try {
        discretize(t, compute_stats(t), LikertBinning::standard(Scale::Five), f, Scale::Seven);
        FAIL("expected ScaleMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ScaleMismatch);
    }
    std::vector<std::string> bad{"zz"};
    CHECK_THROWS_AS(discretize(t, compute_stats(t), LikertBinning::standard(Scale::Seven), bad),
                    Error);
}

TEST_CASE("affine invariance") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> ua(1e-3, 1e3), ub(-1e6, 1e6);
    auto binning = LikertBinning::standard(Scale::Seven);
    std::vector<std::string> f{"x"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::optional<double>> col(40);
        for (auto& v : col)
            v = n(gen) * 10 + 50;
        double a = ua(gen), b = ub(gen);
        std::vector<std::optional<double>> moved(col.size());
        for (std::size_t i = 0; i < col.size(); ++i)
            moved[i] = a * *col[i] + b;
        auto t1 = table_of({{"x", col}}), t2 = table_of({{"x", moved}});
        auto l1 = discretize(t1, compute_stats(t1), binning, f);
        auto l2 = discretize(t2, compute_stats(t2), binning, f);
        CHECK(l1 == l2);
    }
}

TEST_CASE("two-row columns sit on the unit cut and stay Normal under any offset") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ux(-1e3, 1e3), ub(-1e6, 1e6);
    auto binning = LikertBinning::standard(Scale::Seven);
    std::vector<std::string> f{"x"};
    for (int trial = 0; trial < 500; ++trial) {
        double x0 = ux(gen), x1 = ux(gen), b = ub(gen);
        if (x0 == x1)
            continue;
        auto t = table_of({{"x", {x0 + b, x1 + b}}});
        auto l = discretize(t, compute_stats(t), binning, f);
        CHECK(l.at(0, 0)->level() == Level::Normal);
        CHECK(l.at(1, 0)->level() == Level::Normal);
    }
}

TEST_CASE("monotonicity") {
    auto b = LikertBinning::standard(Scale::Seven);
    double prev_z = -10;
    auto prev = b.classify(prev_z);
    for (double z = -10; z <= 10; z += 0.001) {
        auto cur = b.classify(z);
        CHECK_MESSAGE(prev <= cur, "z=" << z);
        prev = cur;
    }
}

TEST_CASE("likert csv round trip") {
    auto fx = golden_fixture();
    std::stringstream io;
    write_likert_csv(io, fx.table);
    CHECK(io.str().rfind("minute,Available Bytes,Working Set,Working Set - Private,Committed Bytes\n", 0) == 0);
    auto back = read_likert_csv(io, Scale::Seven);
    CHECK(back == fx.table);
}
