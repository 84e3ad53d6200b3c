#include "ciaf/evaluate.hpp"

#include "ciaf/classify.hpp"
#include "ciaf/error.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ciaf {

using nlohmann::json;

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < classes.size(); ++a)
        n += support(a);
    return n;
}

std::size_t ConfusionMatrix::support(std::size_t c) const {
    std::size_t n = unparseable[c];
    for (auto v : counts[c])
        n += v;
    return n;
}

std::size_t ConfusionMatrix::tp(std::size_t c) const {
    return counts[c][c];
}

std::size_t ConfusionMatrix::fp(std::size_t c) const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < classes.size(); ++a)
        if (a != c)
            n += counts[a][c];
    return n;
}

std::size_t ConfusionMatrix::fn(std::size_t c) const {
    return support(c) - tp(c);
}

std::size_t ConfusionMatrix::tn(std::size_t c) const {
    return total() - tp(c) - fp(c) - fn(c);
}

std::size_t ConfusionMatrix::correct() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < classes.size(); ++c)
        n += counts[c][c];
    return n;
}

ConfusionMatrix confusion(std::span<const std::string> actuals,
                          std::span<const std::string> predictions,
                          std::vector<std::string> classes) {
    if (actuals.size() != predictions.size())
        throw Error(ErrorKind::LengthMismatch,
                    std::to_string(actuals.size()) + " actual labels vs " +
                        std::to_string(predictions.size()) + " predictions");
    ConfusionMatrix cm;
    cm.classes = std::move(classes);
    const std::size_t k = cm.classes.size();
    cm.counts.assign(k, std::vector<std::size_t>(k, 0));
    cm.unparseable.assign(k, 0);

    auto index_of = [&](const std::string& label) -> std::size_t {
        for (std::size_t i = 0; i < k; ++i)
            if (cm.classes[i] == label)
                return i;
        throw Error(ErrorKind::UnknownLabel, "label '" + label + "' is not a known class");
    };

    for (std::size_t i = 0; i < actuals.size(); ++i) {
        std::size_t a = index_of(actuals[i]);
        if (predictions[i] == kUnparseable)
            ++cm.unparseable[a];
        else
            ++cm.counts[a][index_of(predictions[i])];
    }
    return cm;
}

ClassReport metrics(const ConfusionMatrix& cm) {
    ClassReport report;
    report.total = cm.total();
    const std::size_t k = cm.classes.size();

    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics m;
        m.name = cm.classes[c];
        m.support = cm.support(c);
        double tp = static_cast<double>(cm.tp(c));
        double predicted = tp + static_cast<double>(cm.fp(c));
        double actual = static_cast<double>(m.support);
        if (predicted > 0)
            m.precision = tp / predicted;
        else
            m.degenerate = true;
        if (actual > 0)
            m.recall = tp / actual;
        else
            m.degenerate = true;
        if (m.precision + m.recall > 0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else
            m.degenerate = true;
        report.classes.push_back(std::move(m));
    }

    if (report.total > 0)
        report.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(report.total);

    if (k > 0) {
        for (const auto& m : report.classes) {
            report.macro.precision += m.precision;
            report.macro.recall += m.recall;
            report.macro.f1 += m.f1;
        }
        report.macro.precision /= static_cast<double>(k);
        report.macro.recall /= static_cast<double>(k);
        report.macro.f1 /= static_cast<double>(k);
    }
    if (report.total > 0) {
        double n = static_cast<double>(report.total);
        for (const auto& m : report.classes) {
            double w = static_cast<double>(m.support) / n;
            report.weighted.precision += w * m.precision;
            report.weighted.recall += w * m.recall;
            report.weighted.f1 += w * m.f1;
        }
    }
    return report;
}

std::string format_2dp(double value) {
    // The epsilon absorbs binary representation error on exact halves and
    // exact hundredths (0.96 is stored as 0.95999...).
    double scaled = std::floor(value * 100.0 + 0.5 + 1e-9);
    long long cents = static_cast<long long>(scaled);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%lld.%02lld", cents < 0 ? "-" : "",
                  std::llabs(cents) / 100, std::llabs(cents) % 100);
    return buf;
}

const char* to_string(ReportFormat format) {
    return format == ReportFormat::Json ? "json" : "markdown";
}

std::string display_class_name(std::string_view name) {
    std::string out(name);
    if (!out.empty())
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

namespace {

json averages_json(const AverageMetrics& a) {
    return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

AverageMetrics averages_from(const json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(),
            j.at("f1").get<double>()};
}

std::string render_json(const ClassReport& report) {
    json classes = json::array();
    for (const auto& m : report.classes)
        classes.push_back(json{{"name", m.name},
                               {"precision", m.precision},
                               {"recall", m.recall},
                               {"f1", m.f1},
                               {"support", m.support},
                               {"degenerate", m.degenerate}});
    const auto& p = report.provenance;
    json doc = {
        {"classes", classes},
        {"accuracy", report.accuracy},
        {"macro", averages_json(report.macro)},
        {"weighted", averages_json(report.weighted)},
        {"total", report.total},
        {"provenance",
         json{{"backend_id", p.backend_id},
              {"model", p.model},
              {"temperature", p.temperature},
              {"ontology_version", p.ontology_version},
              {"window", p.window}}},
    };
    return doc.dump(2) + "\n";
}

std::string render_markdown(const ClassReport& report) {
    std::ostringstream out;
    out << "# Classification Report\n\n";
    out << "| Class | Precision | Recall | F1-Score | Support |\n";
    out << "|---|---:|---:|---:|---:|\n";
    for (const auto& m : report.classes)
        out << "| " << display_class_name(m.name) << " | " << format_2dp(m.precision) << " | "
            << format_2dp(m.recall) << " | " << format_2dp(m.f1) << " | " << m.support << " |\n";
    out << "| Accuracy |  |  | " << format_2dp(report.accuracy) << " | " << report.total
        << " |\n";
    out << "| Macro Avg | " << format_2dp(report.macro.precision) << " | "
        << format_2dp(report.macro.recall) << " | " << format_2dp(report.macro.f1) << " | "
        << report.total << " |\n";
    out << "| Weighted Avg | " << format_2dp(report.weighted.precision) << " | "
        << format_2dp(report.weighted.recall) << " | " << format_2dp(report.weighted.f1)
        << " | " << report.total << " |\n";

    bool any_degenerate = false;
    for (const auto& m : report.classes)
        any_degenerate = any_degenerate || m.degenerate;
    if (any_degenerate) {
        out << "\nZero-denominator metrics reported as 0 for:";
        for (const auto& m : report.classes)
            if (m.degenerate)
                out << " " << display_class_name(m.name);
        out << "\n";
    }

    const auto& p = report.provenance;
    out << "\n## Provenance\n\n";
    out << "- backend: " << (p.backend_id.empty() ? "-" : p.backend_id) << "\n";
    out << "- model: " << (p.model.empty() ? "-" : p.model) << "\n";
    out << "- temperature: " << p.temperature << "\n";
    out << "- ontology version: " << (p.ontology_version.empty() ? "-" : p.ontology_version)
        << "\n";
    out << "- window: " << (p.window.empty() ? "-" : p.window) << "\n";
    return out.str();
}

} // namespace

std::string render_report(const ClassReport& report, ReportFormat format) {
    return format == ReportFormat::Json ? render_json(report) : render_markdown(report);
}

ClassReport parse_report_json(std::string_view text) {
    try {
        json doc = json::parse(text);
        ClassReport report;
        for (const auto& c : doc.at("classes")) {
            ClassMetrics m;
            m.name = c.at("name").get<std::string>();
            m.precision = c.at("precision").get<double>();
            m.recall = c.at("recall").get<double>();
            m.f1 = c.at("f1").get<double>();
            m.support = c.at("support").get<std::size_t>();
            m.degenerate = c.at("degenerate").get<bool>();
            report.classes.push_back(std::move(m));
        }
        report.accuracy = doc.at("accuracy").get<double>();
        report.macro = averages_from(doc.at("macro"));
        report.weighted = averages_from(doc.at("weighted"));
        report.total = doc.at("total").get<std::size_t>();
        const json& p = doc.at("provenance");
        report.provenance.backend_id = p.at("backend_id").get<std::string>();
        report.provenance.model = p.at("model").get<std::string>();
        report.provenance.temperature = p.at("temperature").get<double>();
        report.provenance.ontology_version = p.at("ontology_version").get<std::string>();
        report.provenance.window = p.at("window").get<std::string>();
        return report;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("report JSON: ") + e.what());
    }
}

std::string render_confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "actual\\predicted";
    for (const auto& c : cm.classes)
        out << ',' << c;
    out << ',' << kUnparseable << '\n';
    for (std::size_t a = 0; a < cm.classes.size(); ++a) {
        out << cm.classes[a];
        for (auto v : cm.counts[a])
            out << ',' << v;
        out << ',' << cm.unparseable[a] << '\n';
    }
    return out.str();
}

std::string render_confusion_markdown(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "| Actual \\ Predicted |";
    for (const auto& c : cm.classes)
        out << ' ' << display_class_name(c) << " |";
    out << " Unparseable |\n|---|";
    for (std::size_t i = 0; i <= cm.classes.size(); ++i)
        out << "---:|";
    out << '\n';
    for (std::size_t a = 0; a < cm.classes.size(); ++a) {
        out << "| " << display_class_name(cm.classes[a]) << " |";
        for (auto v : cm.counts[a])
            out << ' ' << v << " |";
        out << ' ' << cm.unparseable[a] << " |\n";
    }
    return out.str();
}

} // namespace ciaf
