#include "ciaf/pipeline.hpp"

#include "ciaf/digest.hpp"
#include "ciaf/synth.hpp"
#include "ciaf/text.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace ciaf {

using nlohmann::json;

namespace {

std::string stage_message(const std::string& stage, const Error& cause) {
    return "[" + stage + "] " + cause.what();
}

std::vector<std::string> suggestions_of(const Error& e) {
    if (auto* u = dynamic_cast<const UnknownAttackError*>(&e))
        return u->suggestions();
    if (auto* s = dynamic_cast<const StageError*>(&e))
        return s->suggestions();
    return {};
}

template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    } catch (const fs::filesystem_error& e) {
        throw StageError(stage, Error(ErrorKind::Io, e.what()));
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    if (!out)
        throw Error(ErrorKind::Io, "write failed for " + path.string());
}

json file_entry(const fs::path& path, const std::string& content) {
    return json{{"path", path.generic_string()},
                {"sha256", sha256_hex(content)},
                {"bytes", content.size()}};
}

void require_readable(const fs::path& path, const char* what) {
    if (path.empty())
        throw Error(ErrorKind::Io, std::string(what) + " path not given");
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, std::string("cannot read ") + what + " " + path.string());
}

json window_json(const TimeWindow& w) {
    return json{{"start", format_instant(w.start)}, {"end", format_instant(w.end)}};
}

TimeWindow window_from(const json& j) {
    auto s = parse_instant(j.at("start").get<std::string>());
    auto e = parse_instant(j.at("end").get<std::string>());
    if (!s || !e)
        throw Error(ErrorKind::SchemaError, "manifest window is not a pair of timestamps");
    return {*s, *e};
}

json config_echo(const RunConfig& c) {
    json j = {
        {"perf", c.perf_path.generic_string()},
        {"events", c.events_path.generic_string()},
        {"labels", c.labels_path.generic_string()},
        {"attack", c.attack},
        {"ontology", c.ontology_path.generic_string()},
        {"scale", c.scale_override ? json(to_string(*c.scale_override)) : json(nullptr)},
        {"dispersion", c.dispersion == Dispersion::Population ? "population" : "sample"},
        {"baseline", c.baseline ? window_json(*c.baseline) : json(nullptr)},
        {"backend", to_string(c.backend.kind)},
        {"strict", c.strict},
    };
    if (c.backend.kind == BackendKind::RemoteLlm) {
        j["endpoint"] = c.backend.endpoint;
        j["model"] = c.backend.model;
        j["temperature"] = c.backend.temperature;
        j["max_parallel"] = c.backend.max_parallel;
    }
    if (c.backend.kind == BackendKind::Replay)
        j["replay"] = c.backend.replay_path.generic_string();
    return j;
}

json row_errors_json(const std::vector<RowError>& errors) {
    json arr = json::array();
    for (const auto& e : errors)
        arr.push_back(json{{"row", e.row},
                           {"line", e.line},
                           {"column", e.column},
                           {"issue", to_string(e.issue)},
                           {"detail", e.detail}});
    return arr;
}

TimeWindow derive_window(const std::vector<PerfRecord>& perf) {
    if (perf.empty())
        throw Error(ErrorKind::EmptySelection, "no Perf records to derive a window from");
    Instant lo = perf.front().timestamp, hi = perf.front().timestamp;
    for (const auto& r : perf) {
        lo = std::min(lo, r.timestamp);
        hi = std::max(hi, r.timestamp);
    }
    return {floor_minute(lo), floor_minute(hi) + std::chrono::minutes{1}};
}

const AttackProfile& resolve_from(const RunConfig& config, Ontology& holder) {
    holder = load_ontology_file(config.ontology_path);
    return resolve_attack(holder, config.attack);
}

} // namespace

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.kind(), stage_message(stage, cause)), stage_(std::move(stage)),
      suggestions_(suggestions_of(cause)) {}

InputFormat detect_format(const fs::path& path) {
    auto ext = to_lower(path.extension().string());
    return ext == ".jsonl" || ext == ".ndjson" || ext == ".json" ? InputFormat::JsonLines
                                                                  : InputFormat::Csv;
}

std::string format_window(const TimeWindow& window) {
    return format_instant(window.start) + "/" + format_instant(window.end);
}

EvidenceBundle cmd_collect(const RunConfig& config) {
    return staged("collect", [&] {
        require_readable(config.perf_path, "perf");
        if (!config.events_path.empty())
            require_readable(config.events_path, "events");

        const std::string perf_bytes = read_file(config.perf_path);
        std::istringstream perf_in(perf_bytes);
        auto perf = parse_perf(perf_in, {detect_format(config.perf_path), config.strict});

        ParseResult<EventRecord> events;
        std::string event_bytes;
        if (!config.events_path.empty()) {
            event_bytes = read_file(config.events_path);
            std::istringstream ev_in(event_bytes);
            events = parse_events(ev_in, {detect_format(config.events_path), config.strict});
        }

        EvidenceBundle bundle;
        bundle.dir = config.out_dir / "collect";
        bundle.window = config.window ? *config.window : derive_window(perf.records);
        bundle.perf = filter_window(perf.records, bundle.window);
        bundle.events = filter_window(events.records, bundle.window);
        if (bundle.perf.empty())
            throw Error(ErrorKind::EmptySelection,
                        "no Perf record inside window " + format_window(bundle.window));

        std::ostringstream perf_out, events_out, hist_out;
        write_perf(perf_out, bundle.perf);
        write_events(events_out, bundle.events);
        auto histogram = event_histogram(bundle.events, bundle.window, std::chrono::minutes{1});
        write_event_histogram(hist_out, histogram);

        json outputs = json::array();
        auto emit = [&](const char* name, const std::string& content) {
            write_file(bundle.dir / name, content);
            outputs.push_back(file_entry(name, content));
        };
        emit("perf.csv", perf_out.str());
        emit("events.csv", events_out.str());
        emit("event_histogram.csv", hist_out.str());

        json sources = json::array();
        sources.push_back(file_entry(config.perf_path, perf_bytes));
        if (!config.events_path.empty())
            sources.push_back(file_entry(config.events_path, event_bytes));

        bundle.manifest = {
            {"stage", "collect"},
            {"tool_version", kToolVersion},
            {"event_description", config.event_description},
            {"evidence_source", config.evidence_source},
            {"window", window_json(bundle.window)},
            {"window_derived", !config.window.has_value()},
            {"sources", sources},
            {"outputs", outputs},
            {"counts",
             json{{"perf_parsed", perf.records.size()},
                  {"perf_in_window", bundle.perf.size()},
                  {"events_parsed", events.records.size()},
                  {"events_in_window", bundle.events.size()}}},
            {"row_errors",
             json{{"perf", row_errors_json(perf.errors)},
                  {"events", row_errors_json(events.errors)}}},
            {"config", config_echo(config)},
        };
        write_file(bundle.dir / "manifest.json", bundle.manifest.dump(2) + "\n");
        return bundle;
    });
}

EvidenceBundle load_bundle(const fs::path& out_dir) {
    return staged("collect", [&] {
        EvidenceBundle bundle;
        bundle.dir = out_dir / "collect";
        bundle.manifest = json::parse(read_file(bundle.dir / "manifest.json"), nullptr, false);
        if (bundle.manifest.is_discarded() || !bundle.manifest.contains("window"))
            throw Error(ErrorKind::SchemaError, "collect manifest is malformed");
        bundle.window = window_from(bundle.manifest["window"]);
        std::istringstream perf_in(read_file(bundle.dir / "perf.csv"));
        bundle.perf = parse_perf(perf_in, {InputFormat::Csv, true}).records;
        std::istringstream ev_in(read_file(bundle.dir / "events.csv"));
        bundle.events = parse_events(ev_in, {InputFormat::Csv, true}).records;
        return bundle;
    });
}

Analysis cmd_analyze(const RunConfig& config, const EvidenceBundle& bundle) {
    return staged("analyze", [&] {
        require_readable(config.ontology_path, "ontology");
        Ontology ontology;
        const AttackProfile& profile = resolve_from(config, ontology);

        FeatureTable features = build_feature_table(bundle.perf, bundle.window);
        StatsOptions stats_options{config.dispersion, config.baseline};
        FeatureStats stats = compute_stats(features, stats_options);
        std::vector<std::string> selected =
            select_features(features, stats, profile.feature_policy);
        for (const auto& f : rule_features(profile.rule))
            if (std::find(selected.begin(), selected.end(), f) == selected.end())
                throw Error(ErrorKind::UnknownFeature,
                            "rule feature '" + f + "' of profile '" + profile.canonical_name +
                                "' was not selected from the evidence");

        Scale scale = config.scale_override.value_or(profile.scale);
        LikertBinning binning = LikertBinning::standard(scale);
        Analysis analysis;
        analysis.dir = config.out_dir / "analyze";
        analysis.table = discretize(features, stats, binning, selected, profile.scale);

        std::ostringstream numeric, likert;
        write_feature_table(numeric, features);
        write_likert_csv(likert, analysis.table);

        json stats_json = json::object();
        for (const auto& f : selected) {
            const auto& s = stats.at(f);
            stats_json[f] = json{{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
        }
        json outputs = json::array();
        auto emit = [&](const char* name, const std::string& content) {
            write_file(analysis.dir / name, content);
            outputs.push_back(file_entry(name, content));
        };
        emit("features.csv", numeric.str());
        emit("likert.csv", likert.str());

        analysis.provenance = {
            {"stage", "analyze"},
            {"tool_version", kToolVersion},
            {"profile", profile.canonical_name},
            {"ontology_version", ontology.version},
            {"ontology_sha256", sha256_file(config.ontology_path)},
            {"window", window_json(bundle.window)},
            {"input_sha256", sha256_file(bundle.dir / "perf.csv")},
            {"feature_policy", to_string(profile.feature_policy.kind)},
            {"selected_features", selected},
            {"stats", stats_json},
            {"dispersion", config.dispersion == Dispersion::Population ? "population" : "sample"},
            {"baseline", config.baseline ? window_json(*config.baseline) : json(nullptr)},
            {"binning", json{{"scale", to_string(scale)}, {"cuts", binning.cuts()}}},
            {"outputs", outputs},
            {"config", config_echo(config)},
        };
        write_file(analysis.dir / "provenance.json", analysis.provenance.dump(2) + "\n");
        return analysis;
    });
}

Analysis load_analysis(const fs::path& out_dir) {
    return staged("analyze", [&] {
        Analysis analysis;
        analysis.dir = out_dir / "analyze";
        analysis.provenance =
            json::parse(read_file(analysis.dir / "provenance.json"), nullptr, false);
        if (analysis.provenance.is_discarded())
            throw Error(ErrorKind::SchemaError, "analyze provenance is malformed");
        auto scale = parse_scale(
            analysis.provenance.at("binning").at("scale").get<std::string>());
        if (!scale)
            throw Error(ErrorKind::SchemaError, "analyze provenance has an unknown scale");
        std::istringstream in(read_file(analysis.dir / "likert.csv"));
        analysis.table = read_likert_csv(in, *scale);
        return analysis;
    });
}

Interpretation cmd_interpret(const RunConfig& config, const Analysis& analysis,
                             std::shared_ptr<HttpTransport> transport) {
    return staged("interpret", [&] {
        require_readable(config.ontology_path, "ontology");
        Ontology ontology;
        const AttackProfile& profile = resolve_from(config, ontology);
        auto backend = make_backend(config.backend, std::move(transport));

        Interpretation result;
        result.dir = config.out_dir / "interpret";
        result.predictions =
            classify_rows(profile, analysis.table, *backend, config.backend.max_parallel);
        result.minutes = analysis.table.minutes();
        result.labels = profile.labels;
        result.provenance.backend_id = backend->id();
        if (config.backend.kind == BackendKind::RemoteLlm) {
            result.provenance.model = config.backend.model;
            result.provenance.temperature = config.backend.temperature;
        }
        result.provenance.ontology_version = ontology.version;
        if (analysis.provenance.contains("window"))
            result.provenance.window = format_window(window_from(analysis.provenance["window"]));

        // Latencies vary run to run, so they live apart from the verdicts.
        std::ostringstream lines, timing;
        timing << "row_index,latency_us\n";
        for (const auto& p : result.predictions) {
            json line = {
                {"row_index", p.row_index},
                {"minute", format_instant(result.minutes[p.row_index])},
                {"label", p.label},
                {"raw_response", p.raw_response},
                {"backend_id", p.backend_id},
            };
            lines << line.dump() << '\n';
            timing << p.row_index << ',' << p.latency.count() << '\n';
        }
        write_file(result.dir / "predictions.jsonl", lines.str());
        write_file(result.dir / "timing.csv", timing.str());

        json provenance = {
            {"stage", "interpret"},
            {"tool_version", kToolVersion},
            {"profile", profile.canonical_name},
            {"labels", json::array({profile.labels.negative, profile.labels.positive})},
            {"backend_id", result.provenance.backend_id},
            {"model", result.provenance.model},
            {"temperature", result.provenance.temperature},
            {"max_parallel", config.backend.max_parallel},
            {"ontology_version", ontology.version},
            {"window", result.provenance.window},
            {"input_sha256", sha256_file(analysis.dir / "likert.csv")},
            {"config", config_echo(config)},
        };
        if (config.backend.kind == BackendKind::Replay)
            provenance["replay_sha256"] = sha256_file(config.backend.replay_path);
        write_file(result.dir / "provenance.json", provenance.dump(2) + "\n");
        return result;
    });
}

Interpretation load_interpretation(const fs::path& out_dir) {
    return staged("interpret", [&] {
        Interpretation result;
        result.dir = out_dir / "interpret";
        json prov = json::parse(read_file(result.dir / "provenance.json"), nullptr, false);
        if (prov.is_discarded())
            throw Error(ErrorKind::SchemaError, "interpret provenance is malformed");
        auto labels = prov.at("labels").get<std::vector<std::string>>();
        result.labels = {labels.at(0), labels.at(1)};
        result.provenance.backend_id = prov.at("backend_id").get<std::string>();
        result.provenance.model = prov.at("model").get<std::string>();
        result.provenance.temperature = prov.at("temperature").get<double>();
        result.provenance.ontology_version = prov.at("ontology_version").get<std::string>();
        result.provenance.window = prov.at("window").get<std::string>();

        std::istringstream in(read_file(result.dir / "predictions.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty())
                continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw Error(ErrorKind::SchemaError, "predictions.jsonl has a malformed line");
            Prediction p;
            p.row_index = j.at("row_index").get<std::size_t>();
            p.label = j.at("label").get<std::string>();
            p.raw_response = j.at("raw_response").get<std::string>();
            p.backend_id = j.at("backend_id").get<std::string>();
            auto minute = parse_instant(j.at("minute").get<std::string>());
            if (!minute)
                throw Error(ErrorKind::SchemaError, "prediction with a bad minute");
            result.minutes.push_back(*minute);
            result.predictions.push_back(std::move(p));
        }
        return result;
    });
}

Presentation cmd_present(const RunConfig& config, const Interpretation& interp) {
    return staged("present", [&] {
        if (interp.predictions.empty())
            throw Error(ErrorKind::InvalidArgument, "no predictions to present");
        Presentation out;
        out.dir = config.out_dir / "present";
        json outputs = json::array();
        json inputs = json::array();
        auto emit = [&](const std::string& name, const std::string& content) {
            write_file(out.dir / name, content);
            out.files.push_back(out.dir / name);
            outputs.push_back(file_entry(name, content));
        };
        auto wants = [&](ReportFormat f) {
            return std::find(config.formats.begin(), config.formats.end(), f) !=
                   config.formats.end();
        };

        std::vector<std::string> predicted;
        for (const auto& p : interp.predictions)
            predicted.push_back(p.label);

        if (!config.labels_path.empty()) {
            require_readable(config.labels_path, "labels");
            const std::string label_bytes = read_file(config.labels_path);
            inputs.push_back(file_entry(config.labels_path, label_bytes));
            std::istringstream label_in(label_bytes);
            std::map<Instant, std::string> by_minute;
            for (auto& l : read_labels_csv(label_in))
                by_minute[l.minute] = l.label;

            std::vector<std::string> actual;
            for (std::size_t i = 0; i < interp.predictions.size(); ++i) {
                Instant minute = interp.minutes.at(interp.predictions[i].row_index);
                auto it = by_minute.find(minute);
                if (it == by_minute.end())
                    throw Error(ErrorKind::UnknownLabel,
                                "no ground-truth label for minute " + format_instant(minute));
                actual.push_back(it->second);
            }
            out.confusion =
                confusion(actual, predicted, {interp.labels.negative, interp.labels.positive});
            out.report = metrics(*out.confusion);
            out.report->provenance = interp.provenance;

            if (wants(ReportFormat::Json))
                emit("report.json", render_report(*out.report, ReportFormat::Json));
            if (wants(ReportFormat::Markdown))
                emit("report.md", render_report(*out.report, ReportFormat::Markdown) +
                                      "\n## Confusion Matrix\n\n" +
                                      render_confusion_markdown(*out.confusion));
            emit("confusion.csv", render_confusion_csv(*out.confusion));
        } else {
            std::size_t positives = 0, unparseable = 0;
            for (const auto& l : predicted) {
                positives += l == interp.labels.positive;
                unparseable += l == kUnparseable;
            }
            double rate = static_cast<double>(positives) / static_cast<double>(predicted.size());
            const char* status = "unevaluated \xE2\x80\x94 no ground truth";
            if (wants(ReportFormat::Json)) {
                json rows = json::array();
                for (std::size_t i = 0; i < interp.predictions.size(); ++i)
                    rows.push_back(json{
                        {"minute",
                         format_instant(interp.minutes.at(interp.predictions[i].row_index))},
                        {"label", interp.predictions[i].label}});
                json doc = {
                    {"status", status},
                    {"verdicts", rows},
                    {"summary",
                     json{{"rows", predicted.size()},
                          {"positive_label", interp.labels.positive},
                          {"positives", positives},
                          {"unparseable", unparseable},
                          {"positive_rate", rate}}},
                    {"provenance",
                     json{{"backend_id", interp.provenance.backend_id},
                          {"model", interp.provenance.model},
                          {"temperature", interp.provenance.temperature},
                          {"ontology_version", interp.provenance.ontology_version},
                          {"window", interp.provenance.window}}},
                };
                emit("verdicts.json", doc.dump(2) + "\n");
            }
            if (wants(ReportFormat::Markdown)) {
                std::ostringstream md;
                md << "# Verdicts (" << status << ")\n\n";
                md << "| Minute | Verdict |\n|---|---|\n";
                for (std::size_t i = 0; i < interp.predictions.size(); ++i)
                    md << "| " << format_instant(interp.minutes.at(interp.predictions[i].row_index))
                       << " | " << interp.predictions[i].label << " |\n";
                md << "\n" << positives << " of " << predicted.size() << " rows classified "
                   << interp.labels.positive << " (positive rate " << format_2dp(rate) << ")";
                if (unparseable > 0)
                    md << "; " << unparseable << " unparseable";
                md << "\n";
                emit("verdicts.md", md.str());
            }
        }

        json manifest = {
            {"stage", "present"},
            {"tool_version", kToolVersion},
            {"predictions_sha256",
             fs::exists(interp.dir / "predictions.jsonl")
                 ? json(sha256_file(interp.dir / "predictions.jsonl"))
                 : json(nullptr)},
            {"inputs", inputs},
            {"outputs", outputs},
            {"evaluated", !config.labels_path.empty()},
        };
        write_file(out.dir / "manifest.json", manifest.dump(2) + "\n");
        return out;
    });
}

RunResult cmd_run(const RunConfig& config, std::shared_ptr<HttpTransport> transport) {
    // Fail on an unknown attack before any artifact is written.
    staged("analyze", [&] {
        require_readable(config.ontology_path, "ontology");
        Ontology ontology;
        resolve_from(config, ontology);
        config.backend.validate();
        return 0;
    });
    RunResult r;
    r.bundle = cmd_collect(config);
    r.analysis = cmd_analyze(config, r.bundle);
    r.interpretation = cmd_interpret(config, r.analysis, std::move(transport));
    r.presentation = cmd_present(config, r.interpretation);
    return r;
}

} // namespace ciaf
