#include "ciaf/classify.hpp"

#include "ciaf/digest.hpp"
#include "ciaf/error.hpp"
#include "ciaf/text.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace ciaf {

using nlohmann::json;

PromptPair build_prompts(const AttackProfile& profile, const LikertRow& row,
                         std::span<const std::string> feature_order) {
    if (feature_order.empty())
        throw Error(ErrorKind::MissingFeature, "prompt row has no features");
    std::string data;
    for (const auto& feature : feature_order) {
        auto it = row.find(feature);
        if (it == row.end())
            throw Error(ErrorKind::MissingFeature, "row has no value for '" + feature + "'");
        if (!data.empty())
            data += ", ";
        auto shown = profile.display_names.find(feature);
        data += shown != profile.display_names.end() ? shown->second : feature;
        data += '=';
        data += it->second.name();
    }
    std::string user = profile.user_prompt_template;
    auto pos = user.find(kDataPlaceholder);
    if (pos == std::string::npos)
        throw Error(ErrorKind::ValidationError,
                    "profile '" + profile.canonical_name + "' template lacks {data}");
    user.replace(pos, kDataPlaceholder.size(), data);
    return {profile.system_prompt, std::move(user)};
}

std::string prompt_digest(const PromptPair& prompt) {
    std::string material = prompt.system;
    material += '\0';
    material += prompt.user;
    return sha256_hex(material);
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool contains_word(std::string_view text, std::string_view word) {
    if (word.empty())
        return false;
    for (auto pos = text.find(word); pos != std::string_view::npos;
         pos = text.find(word, pos + 1)) {
        bool left = pos == 0 || !is_word_char(text[pos - 1]);
        std::size_t after = pos + word.size();
        bool right = after == text.size() || !is_word_char(text[after]);
        if (left && right)
            return true;
    }
    return false;
}

} // namespace

std::string normalize_response(std::string_view raw, const LabelPair& labels) {
    std::string text = to_lower(trim(raw));
    while (!text.empty() && (std::ispunct(static_cast<unsigned char>(text.back())) ||
                             std::isspace(static_cast<unsigned char>(text.back()))))
        text.pop_back();
    std::string text_trimmed(trim(text));

    const std::string neg = to_lower(trim(labels.negative));
    const std::string pos = to_lower(trim(labels.positive));
    if (text_trimmed == neg)
        return labels.negative;
    if (text_trimmed == pos)
        return labels.positive;

    bool has_neg = contains_word(text_trimmed, neg);
    bool has_pos = contains_word(text_trimmed, pos);
    if (has_neg != has_pos)
        return has_neg ? labels.negative : labels.positive;
    return std::string(kUnparseable);
}

const char* to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::RuleOracle: return "rule_oracle";
    case BackendKind::Replay: return "replay";
    case BackendKind::RemoteLlm: return "remote_llm";
    }
    return "rule_oracle";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
    std::string s = to_lower(trim(text));
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "rule_oracle" || s == "rule")
        return BackendKind::RuleOracle;
    if (s == "replay")
        return BackendKind::Replay;
    if (s == "remote_llm" || s == "llm" || s == "remote")
        return BackendKind::RemoteLlm;
    return std::nullopt;
}

void BackendConfig::validate() const {
    if (!(temperature >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "temperature must be >= 0");
    if (max_parallel < 1)
        throw Error(ErrorKind::InvalidArgument, "max_parallel must be >= 1");
    if (max_attempts < 1)
        throw Error(ErrorKind::InvalidArgument, "max_attempts must be >= 1");
    if (kind == BackendKind::RemoteLlm && (endpoint.empty() || model.empty()))
        throw Error(ErrorKind::InvalidArgument, "remote_llm backend needs an endpoint and a model");
    if (kind == BackendKind::Replay && replay_path.empty())
        throw Error(ErrorKind::InvalidArgument, "replay backend needs a recordings file");
}

std::string RuleOracleBackend::respond(const ClassifyRequest& request) {
    return evaluate_rule(request.profile.rule, request.row) ? request.profile.labels.positive
                                                            : request.profile.labels.negative;
}

ReplayBackend ReplayBackend::from_stream(std::istream& in) {
    std::map<std::string, std::string> recordings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("digest") ||
            !obj.contains("response") || !obj["digest"].is_string() ||
            !obj["response"].is_string())
            throw Error(ErrorKind::SchemaError,
                        "replay line " + std::to_string(line_no) +
                            ": expected {\"digest\": text, \"response\": text}");
        recordings[obj["digest"].get<std::string>()] = obj["response"].get<std::string>();
    }
    return ReplayBackend(std::move(recordings));
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read replay file " + path.string());
    return from_stream(in);
}

std::string ReplayBackend::respond(const ClassifyRequest& request) {
    auto digest = prompt_digest(request.prompt);
    auto it = recordings_.find(digest);
    if (it == recordings_.end())
        throw Error(ErrorKind::ReplayMiss, "no recorded response for prompt digest " + digest);
    return it->second;
}

void write_replay_line(std::ostream& out, const PromptPair& prompt, std::string_view response) {
    json obj = {{"digest", prompt_digest(prompt)}, {"response", std::string(response)}};
    out << obj.dump() << '\n';
}

json chat_request_body(std::string_view model, double temperature, const PromptPair& prompt) {
    return json{
        {"model", std::string(model)},
        {"temperature", temperature},
        {"messages",
         json::array({json{{"role", "system"}, {"content", prompt.system}},
                      json{{"role", "user"}, {"content", prompt.user}}})},
    };
}

std::string chat_response_content(std::string_view body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorKind::BackendUnavailable, "chat response is not JSON");
    const json* content = nullptr;
    if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() &&
        !doc["choices"].empty()) {
        const json& first = doc["choices"][0];
        if (first.is_object() && first.contains("message") && first["message"].is_object() &&
            first["message"].contains("content"))
            content = &first["message"]["content"];
    }
    if (!content || !content->is_string())
        throw Error(ErrorKind::BackendUnavailable,
                    "chat response lacks choices[0].message.content");
    return content->get<std::string>();
}

RemoteLlmBackend::RemoteLlmBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                                   Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
    config_.validate();
    if (!transport_)
        transport_ = make_http_transport();
    if (!sleep_)
        sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!config_.api_key_env.empty())
        if (const char* key = std::getenv(config_.api_key_env.c_str()))
            api_key_ = key;
}

std::string RemoteLlmBackend::id() const {
    return "remote_llm:" + config_.model;
}

std::string RemoteLlmBackend::respond(const ClassifyRequest& request) {
    const std::string body =
        chat_request_body(config_.model, config_.temperature, request.prompt).dump();
    std::vector<HttpHeader> headers{{"Content-Type", "application/json"}};
    if (!api_key_.empty())
        headers.push_back({"Authorization", "Bearer " + api_key_});

    std::string last_failure;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        HttpResult result = transport_->post(config_.endpoint, headers, body, config_.timeout);
        if (result.status >= 200 && result.status < 300)
            return chat_response_content(result.body);
        last_failure = result.status == 0 ? "transport error: " + result.error
                                          : "HTTP " + std::to_string(result.status);
        if (attempt < config_.max_attempts) {
            sleep_(backoff);
            backoff *= 2;
        }
    }
    throw Error(ErrorKind::BackendUnavailable,
                "backend " + config_.endpoint + " failed after " +
                    std::to_string(config_.max_attempts) + " attempts (" + last_failure + ")");
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      std::shared_ptr<HttpTransport> transport) {
    config.validate();
    switch (config.kind) {
    case BackendKind::RuleOracle:
        return std::make_unique<RuleOracleBackend>();
    case BackendKind::Replay:
        return std::make_unique<ReplayBackend>(ReplayBackend::from_file(config.replay_path));
    case BackendKind::RemoteLlm:
        return std::make_unique<RemoteLlmBackend>(config, std::move(transport));
    }
    throw Error(ErrorKind::InvalidArgument, "unknown backend kind");
}

std::vector<std::string> prompt_feature_order(const LikertTable& table) {
    return table.features();
}

std::vector<Prediction> classify_rows(const AttackProfile& profile, const LikertTable& table,
                                      Backend& backend, std::size_t max_parallel) {
    if (max_parallel < 1)
        throw Error(ErrorKind::InvalidArgument, "max_parallel must be >= 1");
    for (const auto& f : rule_features(profile.rule))
        if (std::find(table.features().begin(), table.features().end(), f) ==
            table.features().end())
            throw Error(ErrorKind::MissingFeature,
                        "table lacks rule feature '" + f + "' of profile '" +
                            profile.canonical_name + "'");

    const auto order = prompt_feature_order(table);
    std::vector<LikertRow> rows;
    std::vector<PromptPair> prompts;
    rows.reserve(table.rows());
    prompts.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        rows.push_back(table.row(r));
        prompts.push_back(build_prompts(profile, rows.back(), order));
    }

    std::vector<Prediction> out(table.rows());
    const std::string backend_id = backend.id();
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load())
                return;
            std::size_t i = next.fetch_add(1);
            if (i >= rows.size())
                return;
            try {
                auto t0 = std::chrono::steady_clock::now();
                std::string raw = backend.respond({profile, rows[i], prompts[i]});
                auto t1 = std::chrono::steady_clock::now();
                Prediction p;
                p.row_index = i;
                p.label = normalize_response(raw, profile.labels);
                p.raw_response = std::move(raw);
                p.backend_id = backend_id;
                p.latency = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0);
                out[i] = std::move(p);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::size_t n_threads = std::min(max_parallel, std::max<std::size_t>(rows.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
    }
    if (first_error)
        std::rethrow_exception(first_error);
    return out;
}

std::vector<Prediction> classify_rows(const AttackProfile& profile, const LikertTable& table,
                                      const BackendConfig& config,
                                      std::shared_ptr<HttpTransport> transport) {
    auto backend = make_backend(config, std::move(transport));
    return classify_rows(profile, table, *backend, config.max_parallel);
}

} // namespace ciaf
