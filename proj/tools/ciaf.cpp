// ciaf: command-line front end for the forensic pipeline.
//
//   ciaf run --perf perf.csv --events events.csv --labels labels.csv \
//            --attack ransomware --ontology ontology/default.json --out out/
//
// Exit codes: 0 success, 2 validation/user error, 3 I/O, 4 backend.

#include "CLI11.hpp"

#include "ciaf/pipeline.hpp"
#include "ciaf/synth.hpp"
#include "ciaf/text.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ciaf;

namespace {

struct Flags {
    std::string perf, events, labels;
    std::string window_start, window_end;
    std::string baseline_start, baseline_end;
    std::string attack;
    std::string ontology;
    std::string backend = "rule_oracle";
    std::string endpoint;
    std::string model;
    double temperature = 0.0;
    std::size_t max_parallel = 1;
    std::string api_key_env = "CIAF_API_KEY";
    std::string replay;
    std::string scale;
    std::string dispersion = "population";
    std::string out = "ciaf-out";
    std::vector<std::string> formats{"json", "markdown"};
    bool strict = false;
    std::string event_description;
    std::string evidence_source;
    std::uint64_t seed = 1;
    bool golden = false;
    std::string scenario;
};

std::string default_ontology() {
    if (const char* env = std::getenv("CIAF_ONTOLOGY"))
        return env;
    return "ontology/default.json";
}

Instant require_instant(const std::string& text, const char* flag) {
    auto t = parse_instant(text);
    if (!t)
        throw Error(ErrorKind::InvalidArgument,
                    std::string(flag) + ": cannot parse timestamp '" + text + "'");
    return *t;
}

std::optional<TimeWindow> window_of(const std::string& start, const std::string& end,
                                    const char* what) {
    if (start.empty() && end.empty())
        return std::nullopt;
    if (start.empty() || end.empty())
        throw Error(ErrorKind::InvalidArgument,
                    std::string(what) + " needs both a start and an end");
    return TimeWindow(require_instant(start, what), require_instant(end, what));
}

RunConfig to_config(const Flags& f) {
    RunConfig c;
    c.perf_path = f.perf;
    c.events_path = f.events;
    c.labels_path = f.labels;
    c.window = window_of(f.window_start, f.window_end, "--window-start/--window-end");
    c.baseline = window_of(f.baseline_start, f.baseline_end, "--baseline-start/--baseline-end");
    c.attack = f.attack;
    c.ontology_path = f.ontology.empty() ? default_ontology() : f.ontology;
    if (!f.scale.empty()) {
        c.scale_override = parse_scale(f.scale);
        if (!c.scale_override)
            throw Error(ErrorKind::InvalidArgument, "--scale must be five or seven");
    }
    if (f.dispersion == "sample")
        c.dispersion = Dispersion::Sample;
    else if (f.dispersion != "population")
        throw Error(ErrorKind::InvalidArgument, "--dispersion must be population or sample");

    auto kind = parse_backend_kind(f.backend);
    if (!kind)
        throw Error(ErrorKind::InvalidArgument,
                    "--backend must be rule_oracle, replay or remote_llm");
    c.backend.kind = *kind;
    c.backend.endpoint = f.endpoint;
    c.backend.model = f.model;
    c.backend.temperature = f.temperature;
    c.backend.max_parallel = f.max_parallel;
    c.backend.api_key_env = f.api_key_env;
    c.backend.replay_path = f.replay;

    c.out_dir = f.out;
    c.formats.clear();
    for (const auto& fmt : f.formats) {
        std::string s = to_lower(fmt);
        if (s == "json")
            c.formats.push_back(ReportFormat::Json);
        else if (s == "markdown" || s == "md")
            c.formats.push_back(ReportFormat::Markdown);
        else if (s == "both") {
            c.formats.push_back(ReportFormat::Json);
            c.formats.push_back(ReportFormat::Markdown);
        } else
            throw Error(ErrorKind::InvalidArgument, "--format must be json, markdown or both");
    }
    c.strict = f.strict;
    c.event_description = f.event_description;
    c.evidence_source = f.evidence_source;
    return c;
}

void add_input_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--perf", f.perf, "Perf export (CSV, or JSON-lines for .jsonl)");
    cmd->add_option("--events", f.events, "Event export (CSV or JSON-lines)");
    cmd->add_option("--window-start", f.window_start, "Evidence window start (UTC)");
    cmd->add_option("--window-end", f.window_end, "Evidence window end, exclusive (UTC)");
    cmd->add_flag("--strict", f.strict, "Fail on the first malformed row");
    cmd->add_option("--event-description", f.event_description, "Identified event, for the manifest");
    cmd->add_option("--evidence-source", f.evidence_source, "Identified evidence source, for the manifest");
}

void add_analysis_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--attack", f.attack, "Attack to investigate, e.g. ransomware")->required();
    cmd->add_option("--ontology", f.ontology, "Ontology file (JSON or YAML)");
    cmd->add_option("--scale", f.scale, "Likert scale override: five or seven");
    cmd->add_option("--dispersion", f.dispersion, "population (default) or sample stddev");
    cmd->add_option("--baseline-start", f.baseline_start, "Compute stats over this window only");
    cmd->add_option("--baseline-end", f.baseline_end);
}

void add_backend_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--backend", f.backend, "rule_oracle, replay or remote_llm");
    cmd->add_option("--endpoint", f.endpoint, "Chat-completion URL for remote_llm");
    cmd->add_option("--model", f.model, "Model id for remote_llm");
    cmd->add_option("--temperature", f.temperature, "Sampling temperature (default 0)");
    cmd->add_option("--max-parallel", f.max_parallel, "Concurrent requests");
    cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key");
    cmd->add_option("--replay", f.replay, "Recorded responses (JSON-lines) for replay");
}

void add_present_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--labels", f.labels, "Ground-truth labels CSV (minute,label)");
    cmd->add_option("--format", f.formats, "json, markdown or both")->delimiter(',');
}

void print_report_summary(const Presentation& p) {
    for (const auto& file : p.files)
        std::cout << "wrote " << file.generic_string() << "\n";
    if (p.report)
        std::cout << "accuracy " << format_2dp(p.report->accuracy) << " over "
                  << p.report->total << " rows\n";
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
}

int run_synth(const Flags& f) {
    fs::path dir = f.out;
    SyntheticData data;
    if (f.golden) {
        // Replay recordings derived from the shipped rule, so the replay
        // backend can be exercised offline on this fixture.
        auto ontology = load_ontology_file(f.ontology.empty() ? default_ontology() : f.ontology);
        const auto& profile = resolve_attack(ontology, "ransomware");
        data = golden_telemetry();
        auto fx = golden_fixture();
        std::ostringstream likert;
        write_likert_csv(likert, fx.table);
        write_text(dir / "golden_likert.csv", likert.str());
        std::ostringstream replay;
        RuleOracleBackend oracle;
        for (std::size_t r = 0; r < fx.table.rows(); ++r) {
            auto row = fx.table.row(r);
            auto prompt = build_prompts(profile, row, fx.table.features());
            write_replay_line(replay, prompt, oracle.respond({profile, row, prompt}));
        }
        write_text(dir / "replay.jsonl", replay.str());
    } else {
        Scenario scenario;
        if (!f.scenario.empty()) {
            std::ifstream in(f.scenario);
            if (!in)
                throw Error(ErrorKind::Io, "cannot read scenario " + f.scenario);
            scenario = load_scenario(in);
        } else {
            scenario = default_scenario(f.seed);
        }
        std::ostringstream sc;
        write_scenario(sc, scenario);
        write_text(dir / "scenario.json", sc.str());
        data = generate(scenario);
    }
    std::ostringstream perf, events, labels;
    write_perf(perf, data.perf);
    write_events(events, data.events);
    write_labels_csv(labels, data.labels);
    write_text(dir / "perf.csv", perf.str());
    write_text(dir / "events.csv", events.str());
    write_text(dir / "labels.csv", labels.str());
    std::cout << "wrote " << data.perf.size() << " Perf samples, " << data.events.size()
              << " events, " << data.labels.size() << " labels to " << dir.generic_string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ontology-driven cloud forensic log analysis"};
    app.require_subcommand(1);
    Flags f;

    auto* collect = app.add_subcommand("collect", "Window and persist evidence with a manifest");
    add_input_flags(collect, f);
    collect->get_option("--perf")->required();
    collect->add_option("--out", f.out, "Output directory");

    auto* analyze = app.add_subcommand("analyze", "Discretize collected evidence for an attack");
    add_analysis_flags(analyze, f);
    analyze->add_option("--out", f.out, "Output directory holding collect/");

    auto* interpret = app.add_subcommand("interpret", "Classify each Likert row");
    interpret->add_option("--attack", f.attack, "Attack to investigate")->required();
    interpret->add_option("--ontology", f.ontology, "Ontology file (JSON or YAML)");
    add_backend_flags(interpret, f);
    interpret->add_option("--out", f.out, "Output directory holding analyze/");

    auto* present = app.add_subcommand("present", "Write the classification report");
    add_present_flags(present, f);
    present->add_option("--out", f.out, "Output directory holding interpret/");

    auto* run = app.add_subcommand("run", "collect, analyze, interpret and present");
    add_input_flags(run, f);
    run->get_option("--perf")->required();
    add_analysis_flags(run, f);
    add_backend_flags(run, f);
    add_present_flags(run, f);
    run->add_option("--out", f.out, "Output directory");

    auto* synth = app.add_subcommand("synth", "Generate labeled synthetic telemetry");
    synth->add_option("--seed", f.seed, "PRNG seed");
    synth->add_option("--scenario", f.scenario, "Scenario JSON (overrides --seed)");
    synth->add_flag("--golden", f.golden, "Emit the fixed 30-row golden fixture");
    synth->add_option("--ontology", f.ontology, "Ontology used for golden replay recordings");
    synth->add_option("--out", f.out, "Output directory");

    auto* onto = app.add_subcommand("ontology", "Inspect an ontology file");
    onto->require_subcommand(1);
    auto* validate = onto->add_subcommand("validate", "Load and validate");
    auto* list = onto->add_subcommand("list", "List profiles and aliases");
    for (auto* sub : {validate, list})
        sub->add_option("--ontology", f.ontology, "Ontology file (JSON or YAML)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Validation);
    }

    try {
        if (*synth)
            return run_synth(f);
        if (*onto) {
            fs::path path = f.ontology.empty() ? default_ontology() : f.ontology;
            auto ontology = load_ontology_file(path);
            if (*validate) {
                std::cout << "ok: " << path.generic_string() << " version " << ontology.version
                          << ", " << ontology.profiles.size() << " profile(s)\n";
            } else {
                for (const auto& p : ontology.profiles) {
                    std::cout << p.canonical_name;
                    if (!p.aliases.empty()) {
                        std::cout << " (aliases:";
                        for (const auto& a : p.aliases)
                            std::cout << " " << a;
                        std::cout << ")";
                    }
                    std::cout << " - " << p.description << "\n";
                }
            }
            return 0;
        }

        RunConfig config = to_config(f);
        if (*collect) {
            auto bundle = cmd_collect(config);
            std::cout << "collected " << bundle.perf.size() << " Perf and "
                      << bundle.events.size() << " event records in "
                      << format_window(bundle.window) << "\n";
        } else if (*analyze) {
            auto analysis = cmd_analyze(config, load_bundle(config.out_dir));
            std::cout << "analyzed " << analysis.table.rows() << " rows x "
                      << analysis.table.cols() << " features\n";
        } else if (*interpret) {
            auto interp = cmd_interpret(config, load_analysis(config.out_dir));
            std::cout << "classified " << interp.predictions.size() << " rows with "
                      << interp.provenance.backend_id << "\n";
        } else if (*present) {
            print_report_summary(cmd_present(config, load_interpretation(config.out_dir)));
        } else if (*run) {
            print_report_summary(cmd_run(config).presentation);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << " (" << to_string(e.kind()) << ")\n";
        std::vector<std::string> suggestions;
        if (auto* s = dynamic_cast<const StageError*>(&e))
            suggestions = s->suggestions();
        else if (auto* u = dynamic_cast<const UnknownAttackError*>(&e))
            suggestions = u->suggestions();
        for (const auto& s : suggestions)
            std::cerr << "  suggestion: " << s << "\n";
        return static_cast<int>(exit_code_for(e.kind()));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Io);
    }
}
