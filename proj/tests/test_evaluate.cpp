#include "doctest.h"

#include "ciaf/error.hpp"
#include "ciaf/evaluate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ciaf;

namespace {

const std::vector<std::string> kClasses{"normal", "ransomware"};

struct Pairs {
    std::vector<std::string> actual, predicted;
};

Pairs reference_pairs() {
    Pairs p;
    auto add = [&](const char* a, const char* b, int n) {
        for (int i = 0; i < n; ++i) {
            p.actual.push_back(a);
            p.predicted.push_back(b);
        }
    };
    add("normal", "normal", 24);
    add("ransomware", "ransomware", 4);
    add("ransomware", "normal", 2);
    return p;
}

ConfusionMatrix reference_matrix() {
    auto p = reference_pairs();
    return confusion(p.actual, p.predicted, kClasses);
}

} // namespace

TEST_CASE("confusion counts") {
    auto cm = reference_matrix();
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{24, 0}, {2, 4}});
    CHECK(cm.total() == 30);
    CHECK(cm.support(1) == 6);
    CHECK(cm.tp(1) == 4);
    CHECK(cm.fn(1) == 2);
    CHECK(cm.fp(0) == 2);
    CHECK(cm.tn(1) == 24);
    CHECK(cm.correct() == 28);

    std::vector<std::string> none;
    auto empty = confusion(none, none, kClasses);
    CHECK(empty.total() == 0);
    CHECK(empty.counts == std::vector<std::vector<std::size_t>>{{0, 0}, {0, 0}});

    std::vector<std::string> same{"normal", "ransomware", "normal"};
    auto diag = confusion(same, same, kClasses);
    CHECK(diag.counts == std::vector<std::vector<std::size_t>>{{2, 0}, {0, 1}});
}

TEST_CASE("confusion errors") {
    std::vector<std::string> a{"normal"}, b{"normal", "normal"}, bad{"ddos"};
    try {
        confusion(a, b, kClasses);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LengthMismatch);
    }
    try {
        confusion(a, bad, kClasses);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownLabel);
    }
    CHECK_THROWS_AS(confusion(bad, a, kClasses), Error);
}

TEST_CASE("unparseable predictions count as misses") {
    std::vector<std::string> a{"ransomware", "ransomware", "normal"};
    std::vector<std::string> p{"unparseable", "ransomware", "normal"};
    auto cm = confusion(a, p, kClasses);
    CHECK(cm.unparseable == std::vector<std::size_t>{0, 1});
    CHECK(cm.total() == 3);
    CHECK(cm.support(1) == 2);
    CHECK(cm.fn(1) == 1);
    CHECK(cm.fp(0) == 0);
    auto r = metrics(cm);
    CHECK(r.classes[1].recall == doctest::Approx(0.5));
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics reproduce the reference report") {
    auto r = metrics(reference_matrix());
    const double eps = 1e-9;
    REQUIRE(r.classes.size() == 2);
    CHECK(std::abs(r.classes[0].precision - 24.0 / 26.0) < eps);
    CHECK(std::abs(r.classes[0].recall - 1.0) < eps);
    CHECK(std::abs(r.classes[0].f1 - 48.0 / 50.0) < eps);
    CHECK(std::abs(r.classes[1].precision - 1.0) < eps);
    CHECK(std::abs(r.classes[1].recall - 4.0 / 6.0) < eps);
    CHECK(std::abs(r.classes[1].f1 - 0.8) < eps);
    CHECK(std::abs(r.accuracy - 28.0 / 30.0) < eps);
    CHECK(std::abs(r.macro.precision - (24.0 / 26.0 + 1.0) / 2) < eps);
    CHECK(std::abs(r.weighted.f1 - (24 * 0.96 + 6 * 0.8) / 30) < eps);

    CHECK(format_2dp(r.classes[0].precision) == "0.92");
    CHECK(format_2dp(r.macro.precision) == "0.96");
    CHECK(format_2dp(r.macro.recall) == "0.83");
    CHECK(format_2dp(r.macro.f1) == "0.88");
    CHECK(format_2dp(r.weighted.precision) == "0.94");
    CHECK(format_2dp(r.weighted.recall) == "0.93");
    CHECK(format_2dp(r.weighted.f1) == "0.93");
    CHECK_FALSE(r.classes[0].degenerate);
}

TEST_CASE("format_2dp rounds half up") {
    CHECK(format_2dp(0.125) == "0.13");
    CHECK(format_2dp(0.005) == "0.01");
    CHECK(format_2dp(0.8) == "0.80");
    CHECK(format_2dp(1.0) == "1.00");
    CHECK(format_2dp(0.0) == "0.00");
    CHECK(format_2dp(0.994999) == "0.99");
}

TEST_CASE("degenerate classes") {
    std::vector<std::string> a{"normal", "normal"};
    auto r = metrics(confusion(a, a, kClasses));
    CHECK(r.classes[1].precision == 0.0);
    CHECK(r.classes[1].recall == 0.0);
    CHECK(r.classes[1].f1 == 0.0);
    CHECK(r.classes[1].degenerate);
    CHECK(r.accuracy == 1.0);

    std::vector<std::string> none;
    auto empty = metrics(confusion(none, none, kClasses));
    CHECK(empty.total == 0);
    CHECK(empty.accuracy == 0.0);
    auto md = render_report(empty, ReportFormat::Markdown);
    CHECK(md.find("| Accuracy |  |  | 0.00 | 0 |") != std::string::npos);
}

TEST_CASE("markdown layout") {
    auto r = metrics(reference_matrix());
    r.provenance = {"rule_oracle", "", 0.0, "1.0.0", "2025-03-10T17:00:00Z/2025-03-10T17:30:00Z"};
    auto md = render_report(r, ReportFormat::Markdown);
    CHECK(md.find("| Normal | 0.92 | 1.00 | 0.96 | 24 |") != std::string::npos);
    CHECK(md.find("| Ransomware | 1.00 | 0.67 | 0.80 | 6 |") != std::string::npos);
    CHECK(md.find("| Accuracy |  |  | 0.93 | 30 |") != std::string::npos);
    CHECK(md.find("| Macro Avg | 0.96 | 0.83 | 0.88 | 30 |") != std::string::npos);
    CHECK(md.find("| Weighted Avg | 0.94 | 0.93 | 0.93 | 30 |") != std::string::npos);
    CHECK(md.find("rule_oracle") != std::string::npos);
}

TEST_CASE("json report round trip and schema") {
    auto r = metrics(reference_matrix());
    r.provenance = {"replay", "m", 0.5, "1.0.0", "w"};
    auto text = render_report(r, ReportFormat::Json);
    auto doc = nlohmann::json::parse(text);
    for (const char* key : {"classes", "accuracy", "macro", "weighted", "total", "provenance"})
        CHECK(doc.contains(key));
    for (const char* key : {"name", "precision", "recall", "f1", "support", "degenerate"})
        CHECK(doc["classes"][0].contains(key));
    for (const char* key : {"backend_id", "model", "temperature", "ontology_version", "window"})
        CHECK(doc["provenance"].contains(key));

    auto back = parse_report_json(text);
    REQUIRE(back.classes.size() == r.classes.size());
    for (std::size_t i = 0; i < r.classes.size(); ++i) {
        CHECK(back.classes[i].name == r.classes[i].name);
        CHECK(back.classes[i].precision == r.classes[i].precision);
        CHECK(back.classes[i].recall == r.classes[i].recall);
        CHECK(back.classes[i].f1 == r.classes[i].f1);
        CHECK(back.classes[i].support == r.classes[i].support);
    }
    CHECK(back.accuracy == r.accuracy);
    CHECK(back.weighted.f1 == r.weighted.f1);
    CHECK(back.macro.recall == r.macro.recall);
    CHECK(back.total == 30);
    CHECK(back.provenance == r.provenance);
}

TEST_CASE("confusion renderings") {
    auto cm = reference_matrix();
    auto csv = render_confusion_csv(cm);
    CHECK(csv.find("normal,24,0,0") != std::string::npos);
    CHECK(csv.find("ransomware,2,4,0") != std::string::npos);
    CHECK(render_confusion_markdown(cm).find("| Ransomware | 2 | 4 | 0 |") != std::string::npos);
    CHECK(display_class_name("normal") == "Normal");
}

TEST_CASE("randomized properties against a brute-force oracle") {
    std::mt19937_64 gen(17);
    const std::vector<std::string> classes{"normal", "ransomware"};
    const std::vector<std::string> preds{"normal", "ransomware", "unparseable"};
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + gen() % 60;
        std::vector<std::string> a(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = classes[gen() % 2];
            p[i] = preds[gen() % (trial % 3 == 0 ? 3 : 2)];
        }
        auto cm = confusion(a, p, classes);
        auto r = metrics(cm);

        // Weighted recall is accuracy.
        CHECK(r.weighted.recall == doctest::Approx(r.accuracy).epsilon(1e-12));

        // Permutation invariance.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), gen);
        std::vector<std::string> a2, p2;
        for (auto i : idx) {
            a2.push_back(a[i]);
            p2.push_back(p[i]);
        }
        CHECK(confusion(a2, p2, classes) == cm);

        // Self-agreement.
        CHECK(metrics(confusion(a, a, classes)).accuracy == 1.0);

        std::size_t supp_total = 0;
        for (std::size_t c = 0; c < 2; ++c) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                bool is_a = a[i] == classes[c], is_p = p[i] == classes[c];
                tp += is_a && is_p;
                fp += !is_a && is_p;
                fn += is_a && !is_p;
            }
            double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
            double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            CHECK(r.classes[c].precision == doctest::Approx(prec).epsilon(1e-12));
            CHECK(r.classes[c].recall == doctest::Approx(rec).epsilon(1e-12));
            CHECK(r.classes[c].f1 == doctest::Approx(f1).epsilon(1e-12));
            CHECK(r.classes[c].support == tp + fn);
            CHECK(r.classes[c].precision >= 0.0);
            CHECK(r.classes[c].f1 <= 1.0);
            supp_total += r.classes[c].support;
        }
        CHECK(supp_total == r.total);
    }
}
