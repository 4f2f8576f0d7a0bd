// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/accounting.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace planwork::model {

inline constexpr std::string_view kDefaultModelId = "gpt-3.5-turbo";
inline constexpr std::size_t kDefaultContextLimit = 4096;

struct ModelRequest {
    std::string prompt;
    std::string model_id{kDefaultModelId};
    double temperature = 0.0;
    int max_output_tokens = 512;
    std::vector<std::string> stop_sequences;

    // Throws InvalidRequest.
    void validate() const;
};

struct ModelResponse {
    std::string text;
    accounting::TokenCount input_tokens = 0;
    accounting::TokenCount output_tokens = 0;
    double latency_ms = 0.0;
    bool usage_reported = false; // counts came from the backend, not the local tokenizer
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& req) = 0;
    virtual std::string name() const = 0;
};

// Deterministic responses: either a FIFO queue or a function of the request.
// Thread-safe.
class ScriptedBackend final : public Backend {
public:
    using Responder = std::function<std::string(const ModelRequest&)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> queue);
    explicit ScriptedBackend(Responder responder);

    void push(std::string response);
    std::size_t remaining() const;
    std::size_t calls() const;

    // Throws ScriptExhausted when the queue is empty and there is no responder.
    ModelResponse complete(const ModelRequest& req) override;
    std::string name() const override { return "scripted"; }

private:
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    Responder responder_;
    std::size_t calls_ = 0;
};

struct HttpConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key;
    int timeout_s = 30;
    int max_attempts = 3;
    int backoff_ms = 500; // doubled after each failed attempt

    // PLANWORK_ENDPOINT and PLANWORK_API_KEY (falls back to OPENAI_API_KEY).
    static HttpConfig from_env();
};

// OpenAI-compatible chat completions; the whole prompt is one user message.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpConfig cfg);

    // Throws NetworkError, RateLimited (after retries) or InvalidRequest.
    ModelResponse complete(const ModelRequest& req) override;
    std::string name() const override { return "http"; }

private:
    HttpConfig cfg_;
};

// Hex SHA-256 over model id, temperature and prompt.
std::string digest(std::string_view prompt, std::string_view model_id, double temperature);

enum class ReplayMode { record, replay, passthrough };

std::string_view to_string(ReplayMode m);

struct ReplayRecord {
    std::string digest;
    std::string model_id;
    std::string prompt;
    std::string response_text;
    accounting::TokenCount input_tokens = 0;
    accounting::TokenCount output_tokens = 0;
    bool usage_reported = false;
};

void to_json(nlohmann::json& j, const ReplayRecord& r);
void from_json(const nlohmann::json& j, ReplayRecord& r);

// Digest-keyed responses. Reads may run concurrently; writes are serialized.
class ReplayStore {
public:
    explicit ReplayStore(ReplayMode mode = ReplayMode::replay) : mode_(mode) {}

    // JSONL, one ReplayRecord per line. A missing file yields an empty store
    // only in record mode.
    static std::shared_ptr<ReplayStore> load(const std::string& path, ReplayMode mode);
    // Records in first-insertion order.
    void save(const std::string& path) const;

    ReplayMode mode() const { return mode_; }
    std::optional<ReplayRecord> lookup(const std::string& digest) const;
    // Keeps the first record for a digest.
    void insert(ReplayRecord rec);
    std::size_t size() const;
    std::vector<ReplayRecord> records() const;

private:
    ReplayMode mode_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::size_t> index_;
    std::vector<ReplayRecord> records_;
};

// Per-call accounting target. Component texts are the accountable parts of
// the prompt; the client turns them into a ledger breakdown.
struct CallContext {
    accounting::TokenLedger* ledger = nullptr;
    accounting::CallKind kind = accounting::CallKind::single;
    bool with_breakdown = false;
    std::string_view question;
    std::string_view exemplars;
    std::string_view steps;
};

// Front door for every model call: applies the context guard, routes through
// the replay store, trims at stop sequences and appends one ledger entry.
class ModelClient {
public:
    ModelClient(std::shared_ptr<Backend> backend, std::shared_ptr<ReplayStore> store,
                std::shared_ptr<const accounting::Tokenizer> tokenizer,
                std::size_t context_limit = kDefaultContextLimit);

    // Throws ContextOverflow, ReplayMiss, plus whatever the backend throws.
    ModelResponse complete(const ModelRequest& req, const CallContext& ctx = {});

    const accounting::Tokenizer& tokenizer() const { return *tokenizer_; }
    std::shared_ptr<ReplayStore> store() const { return store_; }
    std::size_t context_limit() const { return context_limit_; }

private:
    ModelResponse fetch(const ModelRequest& req, const std::string& key);

    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ReplayStore> store_;
    std::shared_ptr<const accounting::Tokenizer> tokenizer_;
    std::size_t context_limit_;
};

// Cuts text at the earliest occurrence of any stop sequence.
std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops);

} // namespace planwork::model
