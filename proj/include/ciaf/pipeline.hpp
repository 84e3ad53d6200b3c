#pragma once

#include "ciaf/classify.hpp"
#include "ciaf/error.hpp"
#include "ciaf/evaluate.hpp"
#include "ciaf/ingest.hpp"
#include "ciaf/ontology.hpp"
#include "ciaf/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ciaf {

inline constexpr const char* kToolVersion = "0.3.0";

/// Stage artifacts live under out_dir/{collect,analyze,interpret,present}.
struct RunConfig {
    std::filesystem::path perf_path;
    std::filesystem::path events_path;  ///< optional
    std::filesystem::path labels_path;  ///< optional
    std::optional<TimeWindow> window;   ///< derived from the Perf data when unset
    std::string attack;
    std::filesystem::path ontology_path;
    std::optional<Scale> scale_override;
    Dispersion dispersion = Dispersion::Population;
    std::optional<TimeWindow> baseline; ///< stats window; full window when unset
    BackendConfig backend;
    std::filesystem::path out_dir = "ciaf-out";
    std::vector<ReportFormat> formats{ReportFormat::Json, ReportFormat::Markdown};
    bool strict = false;
    /// Event/evidence identification are manual steps; recorded verbatim.
    std::string event_description;
    std::string evidence_source;
};

/// An Error annotated with the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause);

    const std::string& stage() const noexcept { return stage_; }
    const std::vector<std::string>& suggestions() const noexcept { return suggestions_; }

private:
    std::string stage_;
    std::vector<std::string> suggestions_;
};

struct EvidenceBundle {
    std::filesystem::path dir;
    TimeWindow window;
    std::vector<PerfRecord> perf;
    std::vector<EventRecord> events;
    nlohmann::json manifest;
};

struct Analysis {
    std::filesystem::path dir;
    LikertTable table;
    nlohmann::json provenance;
};

struct Interpretation {
    std::filesystem::path dir;
    std::vector<Prediction> predictions;
    std::vector<Instant> minutes;
    LabelPair labels;
    Provenance provenance;
};

struct Presentation {
    std::filesystem::path dir;
    std::optional<ConfusionMatrix> confusion;
    std::optional<ClassReport> report;
    std::vector<std::filesystem::path> files;
};

InputFormat detect_format(const std::filesystem::path& path);

/// collect: parse, window and persist evidence with a digest manifest.
EvidenceBundle cmd_collect(const RunConfig& config);
EvidenceBundle load_bundle(const std::filesystem::path& out_dir);

/// analyze: feature table -> stats -> selection -> Likert table.
Analysis cmd_analyze(const RunConfig& config, const EvidenceBundle& bundle);
Analysis load_analysis(const std::filesystem::path& out_dir);

/// interpret: one prediction per Likert row, persisted as JSON-lines.
Interpretation cmd_interpret(const RunConfig& config, const Analysis& analysis,
                             std::shared_ptr<HttpTransport> transport = nullptr);
Interpretation load_interpretation(const std::filesystem::path& out_dir);

/// present: report files; a full ClassReport only when labels are given.
Presentation cmd_present(const RunConfig& config, const Interpretation& interpretation);

struct RunResult {
    EvidenceBundle bundle;
    Analysis analysis;
    Interpretation interpretation;
    Presentation presentation;
};

/// collect -> analyze -> interpret -> present; failures surface as
/// StageError.
RunResult cmd_run(const RunConfig& config, std::shared_ptr<HttpTransport> transport = nullptr);

std::string format_window(const TimeWindow& window);

} // namespace ciaf
