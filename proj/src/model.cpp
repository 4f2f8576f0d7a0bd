// SPDX-License-Identifier: Apache-2.0
#include "planwork/model.hpp"

#include "planwork/error.hpp"
#include "planwork/text.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace planwork::model {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : fallback;
}

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::Config, "endpoint must include a scheme: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

} // namespace

void ModelRequest::validate() const {
    if (prompt.empty())
        throw Error(ErrorCode::InvalidRequest, "prompt is empty");
    if (model_id.empty())
        throw Error(ErrorCode::InvalidRequest, "model id is empty");
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw Error(ErrorCode::InvalidRequest, "temperature must be in [0, 2]");
    if (max_output_tokens <= 0)
        throw Error(ErrorCode::InvalidRequest, "max_output_tokens must be positive");
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> queue) : queue_(queue.begin(), queue.end()) {}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

void ScriptedBackend::push(std::string response) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(response));
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

ModelResponse ScriptedBackend::complete(const ModelRequest& req) {
    auto start = Clock::now();
    ModelResponse resp;
    Responder responder;
    {
        std::lock_guard lock(mu_);
        ++calls_;
        if (!queue_.empty()) {
            resp.text = std::move(queue_.front());
            queue_.pop_front();
        } else if (responder_) {
            responder = responder_;
        } else {
            throw Error(ErrorCode::ScriptExhausted, "scripted backend has no response left");
        }
    }
    if (responder)
        resp.text = responder(req);
    resp.latency_ms = elapsed_ms(start);
    return resp;
}

HttpConfig HttpConfig::from_env() {
    HttpConfig cfg;
    cfg.endpoint = env_or("PLANWORK_ENDPOINT", cfg.endpoint);
    cfg.api_key = env_or("PLANWORK_API_KEY", env_or("OPENAI_API_KEY", ""));
    return cfg;
}

HttpBackend::HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.max_attempts < 1)
        cfg_.max_attempts = 1;
}

ModelResponse HttpBackend::complete(const ModelRequest& req) {
    auto [base, path] = split_endpoint(cfg_.endpoint);

    nlohmann::json body = {
        {"model", req.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_output_tokens},
    };
    if (!req.stop_sequences.empty())
        body["stop"] = req.stop_sequences;
    auto payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    int backoff = cfg_.backoff_ms;
    std::string last_error;
    bool rate_limited = false;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        auto start = Clock::now();
        httplib::Client client(base);
        client.set_connection_timeout(cfg_.timeout_s, 0);
        client.set_read_timeout(cfg_.timeout_s, 0);
        client.set_write_timeout(cfg_.timeout_s, 0);
        auto res = client.Post(path, headers, payload, "application/json");

        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            rate_limited = false;
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            rate_limited = res->status == 429;
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::InvalidRequest, "HTTP " + std::to_string(res->status) + ": " + res->body);

        ModelResponse out;
        out.latency_ms = elapsed_ms(start);
        try {
            auto j = nlohmann::json::parse(res->body);
            const auto& content = j.at("choices").at(0).at("message").at("content");
            out.text = content.is_null() ? std::string() : content.get<std::string>();
            if (j.contains("usage") && j["usage"].is_object()) {
                out.input_tokens = j["usage"].value("prompt_tokens", 0);
                out.output_tokens = j["usage"].value("completion_tokens", 0);
                out.usage_reported = true;
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::NetworkError, std::string("malformed completion response: ") + e.what());
        }
        return out;
    }
    throw Error(rate_limited ? ErrorCode::RateLimited : ErrorCode::NetworkError,
                last_error + " after " + std::to_string(cfg_.max_attempts) + " attempts");
}

std::string digest(std::string_view prompt, std::string_view model_id, double temperature) {
    char temp[32];
    auto [end, ec] = std::to_chars(temp, temp + sizeof temp, temperature);
    std::string material;
    material.reserve(prompt.size() + model_id.size() + 40);
    material.append(model_id).push_back('\n');
    material.append(temp, end).push_back('\n');
    material.append(prompt);

    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(material.data(), material.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::Io, "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string_view to_string(ReplayMode m) {
    switch (m) {
    case ReplayMode::record: return "record";
    case ReplayMode::replay: return "replay";
    case ReplayMode::passthrough: return "passthrough";
    }
    return "?";
}

void to_json(nlohmann::json& j, const ReplayRecord& r) {
    j = nlohmann::json{{"digest", r.digest},
                       {"model_id", r.model_id},
                       {"prompt", r.prompt},
                       {"response_text", r.response_text},
                       {"input_tokens", r.input_tokens},
                       {"output_tokens", r.output_tokens}};
    if (r.usage_reported)
        j["usage_reported"] = true;
}

void from_json(const nlohmann::json& j, ReplayRecord& r) {
    j.at("digest").get_to(r.digest);
    j.at("model_id").get_to(r.model_id);
    j.at("prompt").get_to(r.prompt);
    j.at("response_text").get_to(r.response_text);
    j.at("input_tokens").get_to(r.input_tokens);
    j.at("output_tokens").get_to(r.output_tokens);
    r.usage_reported = j.value("usage_reported", false);
}

std::shared_ptr<ReplayStore> ReplayStore::load(const std::string& path, ReplayMode mode) {
    auto store = std::make_shared<ReplayStore>(mode);
    if (!std::filesystem::exists(path)) {
        if (mode == ReplayMode::record)
            return store;
        throw Error(ErrorCode::Io, "replay file not found: " + path);
    }
    auto contents = text::read_file(path);
    std::size_t line_no = 0;
    for (auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            store->insert(nlohmann::json::parse(line).get<ReplayRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

void ReplayStore::save(const std::string& path) const {
    std::string out;
    for (const auto& rec : records()) {
        out += nlohmann::json(rec).dump();
        out += '\n';
    }
    text::write_file(path, out);
}

std::optional<ReplayRecord> ReplayStore::lookup(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end())
        return std::nullopt;
    return records_[it->second];
}

void ReplayStore::insert(ReplayRecord rec) {
    std::unique_lock lock(mu_);
    if (index_.contains(rec.digest))
        return;
    index_.emplace(rec.digest, records_.size());
    records_.push_back(std::move(rec));
}

std::size_t ReplayStore::size() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

std::vector<ReplayRecord> ReplayStore::records() const {
    std::shared_lock lock(mu_);
    return records_;
}

std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stops) {
    auto cut = std::string::npos;
    for (const auto& stop : stops) {
        if (stop.empty())
            continue;
        cut = std::min(cut, text.find(stop));
    }
    if (cut != std::string::npos)
        text.resize(cut);
    return text;
}

ModelClient::ModelClient(std::shared_ptr<Backend> backend, std::shared_ptr<ReplayStore> store,
                         std::shared_ptr<const accounting::Tokenizer> tokenizer, std::size_t context_limit)
    : backend_(std::move(backend)), store_(std::move(store)), tokenizer_(std::move(tokenizer)),
      context_limit_(context_limit) {
    if (!tokenizer_)
        throw Error(ErrorCode::Config, "model client needs a tokenizer");
    if (!backend_ && !(store_ && store_->mode() == ReplayMode::replay))
        throw Error(ErrorCode::Config, "model client needs a backend unless replaying");
}

ModelResponse ModelClient::fetch(const ModelRequest& req, const std::string& key) {
    auto mode = store_ ? store_->mode() : ReplayMode::passthrough;
    if (mode == ReplayMode::replay) {
        auto rec = store_->lookup(key);
        if (!rec)
            throw Error(ErrorCode::ReplayMiss, "no recorded response for digest " + key);
        ModelResponse resp;
        resp.text = rec->response_text;
        if (rec->usage_reported) {
            resp.input_tokens = rec->input_tokens;
            resp.output_tokens = rec->output_tokens;
            resp.usage_reported = true;
        }
        return resp;
    }
    auto resp = backend_->complete(req);
    resp.text = apply_stop_sequences(std::move(resp.text), req.stop_sequences);
    return resp;
}

ModelResponse ModelClient::complete(const ModelRequest& req, const CallContext& ctx) {
    req.validate();
    auto prompt_tokens = tokenizer_->count(req.prompt);
    if (context_limit_ > 0 && prompt_tokens > static_cast<accounting::TokenCount>(context_limit_))
        throw Error(ErrorCode::ContextOverflow, "prompt has " + std::to_string(prompt_tokens) +
                                                    " tokens, limit is " + std::to_string(context_limit_));

    auto key = digest(req.prompt, req.model_id, req.temperature);
    auto resp = fetch(req, key);
    if (!resp.usage_reported) {
        resp.input_tokens = prompt_tokens;
        resp.output_tokens = tokenizer_->count(resp.text);
    }

    if (store_ && store_->mode() == ReplayMode::record) {
        store_->insert(ReplayRecord{key, req.model_id, req.prompt, resp.text, resp.input_tokens,
                                    resp.output_tokens, resp.usage_reported});
    }

    if (ctx.ledger) {
        accounting::LedgerEntry entry{ctx.kind, resp.input_tokens, resp.output_tokens, std::nullopt};
        if (ctx.with_breakdown) {
            accounting::ComponentBreakdown b;
            b.question = tokenizer_->count(ctx.question);
            b.exemplars = tokenizer_->count(ctx.exemplars);
            b.steps = tokenizer_->count(ctx.steps);
            b.context = resp.input_tokens - b.question - b.exemplars - b.steps;
            entry.breakdown = b;
        }
        ctx.ledger->record(std::move(entry));
    }
    return resp;
}

} // namespace planwork::model
