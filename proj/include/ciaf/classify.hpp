#pragma once

#include "ciaf/ontology.hpp"
#include "ciaf/preprocess.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ciaf {

struct PromptPair {
    std::string system;
    std::string user;

    bool operator==(const PromptPair&) const = default;
};

/// System prompt verbatim; `{data}` replaced by "feature=Level" pairs joined
/// with ", " in `feature_order`. Throws MissingFeature when the order is
/// empty or names a feature the row lacks.
PromptPair build_prompts(const AttackProfile& profile, const LikertRow& row,
                         std::span<const std::string> feature_order);

/// Hex SHA-256 of system + '\0' + user; the replay key.
std::string prompt_digest(const PromptPair& prompt);

inline constexpr std::string_view kUnparseable = "unparseable";

/// Maps a free-text model answer onto one of the two labels, or
/// "unparseable". Total and idempotent on its own outputs.
std::string normalize_response(std::string_view raw, const LabelPair& labels);

struct Prediction {
    std::size_t row_index = 0;
    std::string label;
    std::string raw_response;
    std::string backend_id;
    std::chrono::microseconds latency{0};
};

enum class BackendKind { RuleOracle, Replay, RemoteLlm };

const char* to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view text);

struct BackendConfig {
    BackendKind kind = BackendKind::RuleOracle;

    // remote_llm
    std::string endpoint;
    std::string model;
    double temperature = 0.0;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_parallel = 1;
    std::string api_key_env = "CIAF_API_KEY";
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};

    // replay
    std::filesystem::path replay_path;

    /// Throws InvalidArgument on temperature < 0, max_parallel < 1 or a
    /// remote backend without endpoint/model.
    void validate() const;
};

struct ClassifyRequest {
    const AttackProfile& profile;
    const LikertRow& row;
    const PromptPair& prompt;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    /// Raw response text. Must be safe to call concurrently.
    virtual std::string respond(const ClassifyRequest& request) = 0;
};

/// Applies the profile's decision rule directly.
class RuleOracleBackend final : public Backend {
public:
    std::string id() const override { return "rule_oracle"; }
    std::string respond(const ClassifyRequest& request) override;
};

/// Answers from recorded responses keyed by prompt digest.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::map<std::string, std::string> recordings)
        : recordings_(std::move(recordings)) {}

    /// JSON-lines of {"digest": hex, "response": text}.
    static ReplayBackend from_stream(std::istream& in);
    static ReplayBackend from_file(const std::filesystem::path& path);

    std::string id() const override { return "replay"; }
    std::string respond(const ClassifyRequest& request) override;

    std::size_t size() const noexcept { return recordings_.size(); }

private:
    std::map<std::string, std::string> recordings_;
};

void write_replay_line(std::ostream& out, const PromptPair& prompt, std::string_view response);

struct HttpHeader {
    std::string name;
    std::string value;
};

struct HttpResult {
    int status = 0;        ///< 0 when the request never produced a response
    std::string body;
    std::string error;     ///< transport failure description
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const std::string& url, const std::vector<HttpHeader>& headers,
                            const std::string& body, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed; http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport();

nlohmann::json chat_request_body(std::string_view model, double temperature,
                                 const PromptPair& prompt);
/// choices[0].message.content; throws BackendUnavailable when absent.
std::string chat_response_content(std::string_view body);

/// Chat-completion client with bounded retry and exponential backoff.
class RemoteLlmBackend final : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RemoteLlmBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                     Sleeper sleep = {});

    std::string id() const override;
    std::string respond(const ClassifyRequest& request) override;

private:
    BackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
    std::string api_key_;
};

/// `transport` is only consulted for remote_llm; a default httplib transport
/// is created when none is given.
std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      std::shared_ptr<HttpTransport> transport = nullptr);

/// One prediction per row, in row order regardless of completion order.
/// Rows are dispatched from up to `max_parallel` worker threads. The first
/// failing row aborts the run and its error is rethrown.
std::vector<Prediction> classify_rows(const AttackProfile& profile, const LikertTable& table,
                                      Backend& backend, std::size_t max_parallel = 1);

std::vector<Prediction> classify_rows(const AttackProfile& profile, const LikertTable& table,
                                      const BackendConfig& config,
                                      std::shared_ptr<HttpTransport> transport = nullptr);

/// Order in which row features are rendered into prompts: the table's column
/// order.
std::vector<std::string> prompt_feature_order(const LikertTable& table);

} // namespace ciaf
