// SPDX-License-Identifier: Apache-2.0
#include "planwork/tools.hpp"

#include "planwork/error.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>

namespace planwork::tools {

namespace {

// --- arithmetic -----------------------------------------------------------

struct Value {
    bool is_int = true;
    std::int64_t i = 0;
    double d = 0.0;

    double real() const { return is_int ? static_cast<double>(i) : d; }
    static Value integer(std::int64_t v) { return {true, v, 0.0}; }
    static Value decimal(double v) { return {false, 0, v}; }
};

class ArithParser {
public:
    explicit ArithParser(std::string_view src) : src_(src) {}

    Value parse() {
        auto v = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::ParseError, why + " at offset " + std::to_string(pos_) + " in `" + std::string(src_) + "`");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool peek(std::string_view tok) {
        skip_ws();
        return src_.substr(pos_).starts_with(tok);
    }

    bool eat(std::string_view tok) {
        if (!peek(tok))
            return false;
        pos_ += tok.size();
        return true;
    }

    Value expr() {
        auto lhs = term();
        while (true) {
            if (eat("+"))
                lhs = add(lhs, term(), false);
            else if (eat("-"))
                lhs = add(lhs, term(), true);
            else
                return lhs;
        }
    }

    Value term() {
        auto lhs = unary();
        while (true) {
            if (peek("**"))
                return lhs; // only reachable after a malformed power; parse() reports it
            if (eat("*"))
                lhs = mul(lhs, unary());
            else if (eat("/"))
                lhs = div(lhs, unary());
            else
                return lhs;
        }
    }

    Value unary() {
        if (eat("-")) {
            auto v = unary();
            if (v.is_int && v.i != std::numeric_limits<std::int64_t>::min())
                return Value::integer(-v.i);
            return Value::decimal(-v.real());
        }
        if (eat("+"))
            return unary();
        return power();
    }

    Value power() {
        auto base = primary();
        if (!eat("**"))
            return base;
        auto exp = unary(); // right-associative, binds tighter than a unary minus on its left
        return pow(base, exp);
    }

    Value primary() {
        if (eat("(")) {
            auto v = expr();
            if (!eat(")"))
                fail("expected ')'");
            return v;
        }
        skip_ws();
        return number();
    }

    Value number() {
        auto start = pos_;
        bool decimal = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            decimal = true;
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ == start || (decimal && pos_ == start + 1))
            fail("expected a number");
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            auto save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            auto digits = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            if (pos_ == digits)
                pos_ = save;
            else
                decimal = true;
        }
        auto lit = src_.substr(start, pos_ - start);
        if (!decimal) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), v);
            if (ec == std::errc{} && p == lit.data() + lit.size())
                return Value::integer(v);
        }
        double d = 0.0;
        auto [p, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), d);
        if (ec != std::errc{} && ec != std::errc::result_out_of_range)
            fail("bad number");
        return Value::decimal(d);
    }

    static Value add(Value a, Value b, bool subtract) {
        if (a.is_int && b.is_int) {
            std::int64_t r = 0;
            bool overflow = subtract ? __builtin_sub_overflow(a.i, b.i, &r) : __builtin_add_overflow(a.i, b.i, &r);
            if (!overflow)
                return Value::integer(r);
        }
        return Value::decimal(subtract ? a.real() - b.real() : a.real() + b.real());
    }

    static Value mul(Value a, Value b) {
        if (a.is_int && b.is_int) {
            std::int64_t r = 0;
            if (!__builtin_mul_overflow(a.i, b.i, &r))
                return Value::integer(r);
        }
        return Value::decimal(a.real() * b.real());
    }

    static Value div(Value a, Value b) {
        if (b.real() == 0.0)
            throw Error(ErrorCode::DivisionByZero, "division by zero");
        return Value::decimal(a.real() / b.real());
    }

    Value pow(Value base, Value exp) const {
        if (base.is_int && exp.is_int && exp.i >= 0) {
            std::int64_t r = 1;
            bool overflow = false;
            for (std::int64_t k = 0; k < exp.i && !overflow; ++k)
                overflow = __builtin_mul_overflow(r, base.i, &r);
            if (!overflow)
                return Value::integer(r);
        }
        if (base.real() == 0.0 && exp.real() < 0.0)
            throw Error(ErrorCode::DivisionByZero, "zero raised to a negative power");
        if (base.real() < 0.0 && std::floor(exp.real()) != exp.real())
            fail("fractional power of a negative number");
        return Value::decimal(std::pow(base.real(), exp.real()));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// --- evidence formatting helpers ------------------------------------------

std::string truncate_utf8(std::string s, std::size_t max_bytes) {
    if (max_bytes == 0 || s.size() <= max_bytes)
        return s;
    auto cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80)
        --cut;
    s.resize(cut);
    return s;
}

// Python repr() of a str, used for "Similar: [...]" lists.
std::string py_repr(std::string_view s) {
    char quote = (s.find('\'') != std::string_view::npos && s.find('"') == std::string_view::npos) ? '"' : '\'';
    std::string out(1, quote);
    for (char c : s) {
        if (c == quote || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
    out.push_back(quote);
    return out;
}

// --- live HTTP backends ---------------------------------------------------

struct HttpResult {
    int status = 0;
    std::string body;
};

std::string env_value(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

HttpResult http_get(const std::string& base, const std::string& path, const httplib::Params& params, int timeout_s) {
    httplib::Client client(base);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_follow_location(true);
    auto res = client.Get(path, params, httplib::Headers{{"User-Agent", "planwork/1.0"}});
    if (!res)
        throw Error(ErrorCode::NetworkError, base + path + ": " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

std::string wikipedia_lookup(std::string_view query, int timeout_s) {
    const std::string base = "https://en.wikipedia.org";
    auto page = http_get(base, "/w/api.php",
                         {{"action", "query"}, {"format", "json"}, {"prop", "extracts"}, {"explaintext", "1"},
                          {"redirects", "1"}, {"titles", std::string(query)}},
                         timeout_s);
    if (page.status != 200)
        throw Error(ErrorCode::NetworkError, "Wikipedia returned HTTP " + std::to_string(page.status));
    auto j = nlohmann::json::parse(page.body);
    for (const auto& [id, p] : j["query"]["pages"].items()) {
        if (!p.contains("missing") && p.contains("extract") && !p["extract"].get<std::string>().empty())
            return std::string(text::trim(p["extract"].get<std::string>()));
    }

    auto search = http_get(base, "/w/api.php",
                           {{"action", "query"}, {"format", "json"}, {"list", "search"}, {"srlimit", "10"},
                            {"srsearch", std::string(query)}},
                           timeout_s);
    std::vector<std::string> similar;
    if (search.status == 200) {
        for (const auto& hit : nlohmann::json::parse(search.body)["query"]["search"])
            similar.push_back(py_repr(hit.value("title", "")));
    }
    return "Could not find [" + std::string(query) + "]. Similar: [" + text::join(similar, ", ") + "]";
}

std::string google_lookup(std::string_view query, int timeout_s) {
    auto key = env_value("SERPAPI_API_KEY");
    if (key.empty())
        throw Error(ErrorCode::Config, "Google tool needs SERPAPI_API_KEY");
    auto res = http_get("https://serpapi.com", "/search.json",
                        {{"engine", "google"}, {"q", std::string(query)}, {"api_key", key}}, timeout_s);
    if (res.status != 200)
        throw Error(ErrorCode::NetworkError, "SerpAPI returned HTTP " + std::to_string(res.status));
    auto j = nlohmann::json::parse(res.body);
    if (j.contains("answer_box")) {
        const auto& box = j["answer_box"];
        for (const char* field : {"answer", "snippet"})
            if (box.contains(field) && box[field].is_string())
                return box[field].get<std::string>();
    }
    if (j.contains("organic_results") && !j["organic_results"].empty()) {
        const auto& first = j["organic_results"][0];
        if (first.contains("snippet"))
            return first["snippet"].get<std::string>();
    }
    return "No good Google Search Result was found";
}

std::string wolfram_lookup(std::string_view query, int timeout_s) {
    auto appid = env_value("WOLFRAM_ALPHA_APPID");
    if (appid.empty())
        throw Error(ErrorCode::Config, "WolframAlpha tool needs WOLFRAM_ALPHA_APPID");
    auto res = http_get("https://api.wolframalpha.com", "/v1/result", {{"appid", appid}, {"i", std::string(query)}},
                        timeout_s);
    if (res.status == 501)
        return "Wolfram Alpha wasn't able to answer it";
    if (res.status != 200)
        throw Error(ErrorCode::NetworkError, "WolframAlpha returned HTTP " + std::to_string(res.status));
    return res.body;
}

// POSTs {"query", "collection"} to PLANWORK_DOCSEARCH_ENDPOINT and expects
// {"text": ...} or a plain-text body.
std::string docsearch_lookup(std::string_view query, const std::string& collection, int timeout_s) {
    auto endpoint = env_value("PLANWORK_DOCSEARCH_ENDPOINT");
    if (endpoint.empty())
        throw Error(ErrorCode::Config, "document search needs PLANWORK_DOCSEARCH_ENDPOINT");
    auto scheme = endpoint.find("://");
    auto slash = scheme == std::string::npos ? std::string::npos : endpoint.find('/', scheme + 3);
    auto base = slash == std::string::npos ? endpoint : endpoint.substr(0, slash);
    auto path = slash == std::string::npos ? std::string("/") : endpoint.substr(slash);

    httplib::Client client(base);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    nlohmann::json body = {{"query", query}, {"collection", collection}};
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::NetworkError, endpoint + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorCode::NetworkError, "document search returned HTTP " + std::to_string(res->status));
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_object() && parsed.contains("text"))
        return parsed["text"].get<std::string>();
    return res->body;
}

std::string call_tool_model(const InvokeContext& ctx, const std::string& prompt, std::string_view input) {
    if (!ctx.model)
        throw Error(ErrorCode::Config, "model-backed tool invoked without a model client");
    model::ModelRequest req;
    req.prompt = prompt;
    req.model_id = ctx.model_id;
    req.temperature = ctx.temperature;
    model::CallContext call{ctx.ledger, accounting::CallKind::tool_model, true, {}, {}, input};
    return std::string(text::trim(ctx.model->complete(req, call).text));
}

std::string load_template(const std::string& override_path, std::string_view bundled) {
    return text::read_file(override_path.empty() ? data_path(bundled) : override_path);
}

} // namespace

std::string_view to_string(ToolKind kind) {
    switch (kind) {
    case ToolKind::deterministic: return "deterministic";
    case ToolKind::http: return "http";
    case ToolKind::model_backed: return "model_backed";
    case ToolKind::stub: return "stub";
    }
    return "?";
}

ToolKind tool_kind_from_string(std::string_view s) {
    if (s == "deterministic") return ToolKind::deterministic;
    if (s == "http") return ToolKind::http;
    if (s == "model_backed") return ToolKind::model_backed;
    if (s == "stub") return ToolKind::stub;
    throw Error(ErrorCode::Config, "unknown tool kind: " + std::string(s));
}

ToolRegistry::ToolRegistry(std::vector<ToolSpec> specs, std::size_t max_evidence_chars)
    : specs_(std::move(specs)), max_evidence_chars_(max_evidence_chars) {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& s = specs_[i];
        if (!blueprint::is_identifier(s.name))
            throw Error(ErrorCode::Config, "bad tool name: `" + s.name + "`");
        if (text::trim(s.description).empty())
            throw Error(ErrorCode::Config, "tool " + s.name + " has no description");
        if (!s.handler)
            throw Error(ErrorCode::Config, "tool " + s.name + " has no handler");
        if (!index_.emplace(s.name, i).second)
            throw Error(ErrorCode::Config, "tool registered twice: " + s.name);
    }
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &specs_[it->second];
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& s : specs_)
        out.push_back(s.name);
    return out;
}

std::vector<prompting::ToolDescription> ToolRegistry::describe(const std::vector<std::string>& names) const {
    std::vector<prompting::ToolDescription> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        const auto* spec = find(n);
        if (!spec)
            throw Error(ErrorCode::UnknownTool, "Unknown tool: " + n);
        out.push_back({spec->name, spec->description});
    }
    return out;
}

void EvidenceMap::insert(blueprint::EvidenceVarId var, std::string evidence) {
    if (!entries_.emplace(var, std::move(evidence)).second)
        throw Error(ErrorCode::DuplicateVar, var.str() + " already has evidence");
}

const std::string* EvidenceMap::find(blueprint::EvidenceVarId var) const {
    auto it = entries_.find(var);
    return it == entries_.end() ? nullptr : &it->second;
}

bool FailureInjection::applies_to(std::string_view tool) const {
    switch (mode) {
    case Mode::off: return false;
    case Mode::all_fail: return true;
    case Mode::named: return names.contains(tool);
    }
    return false;
}

FailureInjection FailureInjection::parse(std::string_view spec) {
    FailureInjection inj;
    auto s = text::trim(spec);
    if (s.empty() || s == "off")
        return inj;
    if (s == "all") {
        inj.mode = Mode::all_fail;
        return inj;
    }
    inj.mode = Mode::named;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        auto name = text::trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!name.empty()) {
            if (!blueprint::is_identifier(name))
                throw Error(ErrorCode::Config, "bad tool name in --inject-failure: `" + std::string(name) + "`");
            inj.names.emplace(name);
        }
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    if (inj.names.empty())
        throw Error(ErrorCode::Config, "--inject-failure needs off, all or tool names");
    return inj;
}

std::string FailureInjection::describe() const {
    switch (mode) {
    case Mode::off: return "off";
    case Mode::all_fail: return "all";
    case Mode::named: return text::join(std::vector<std::string>(names.begin(), names.end()), ",");
    }
    return "off";
}

Substitution substitute_evidence(std::string_view input, const EvidenceMap& ev, Policy policy) {
    Substitution out;
    std::size_t pos = 0;
    for (const auto& ref : blueprint::find_references(input)) {
        out.text.append(input.substr(pos, ref.offset - pos));
        pos = ref.offset + ref.length;
        if (const auto* evidence = ev.find(ref.var)) {
            out.text += *evidence;
            continue;
        }
        if (policy == Policy::strict)
            throw Error(ErrorCode::UnresolvedReference, ref.var.str() + " has no evidence yet");
        out.warnings.push_back("UnresolvedReference: " + ref.var.str() + " left verbatim");
        out.text.append(input.substr(ref.offset, ref.length));
    }
    out.text.append(input.substr(pos));
    return out;
}

Invocation invoke(std::string_view name, std::string_view input, const ToolRegistry& reg,
                  const FailureInjection& inj, const InvokeContext& ctx, Policy policy) {
    Invocation out;
    if (inj.applies_to(name)) {
        out.evidence = inj.failure_text;
        out.failed = out.injected = true;
        return out;
    }
    const auto* spec = reg.find(name);
    if (!spec) {
        if (policy == Policy::strict)
            throw Error(ErrorCode::UnknownTool, "Unknown tool: " + std::string(name));
        out.evidence = "Unknown tool: " + std::string(name);
        out.failed = true;
        out.error = out.evidence;
        return out;
    }
    try {
        out.evidence = truncate_utf8(spec->handler(input, ctx), reg.max_evidence_chars());
    } catch (const std::exception& e) {
        out.evidence = inj.failure_text;
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

std::string format_float(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v < 0 ? "-inf" : "inf";

    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    std::string_view sci(buf, end - buf);
    auto e_pos = sci.find('e');
    auto mantissa = sci.substr(0, e_pos);
    int exp = 0;
    auto exp_text = sci.substr(e_pos + 1);
    if (exp_text.front() == '+')
        exp_text.remove_prefix(1);
    std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exp);

    std::string sign;
    if (mantissa.front() == '-') {
        sign = "-";
        mantissa.remove_prefix(1);
    }
    std::string digits;
    for (char c : mantissa)
        if (c != '.')
            digits.push_back(c);

    if (exp < -4 || exp >= 16) {
        std::string out = sign + digits.substr(0, 1);
        if (digits.size() > 1)
            out += "." + digits.substr(1);
        char ebuf[16];
        std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
        return out + ebuf;
    }
    if (exp < 0)
        return sign + "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
    auto int_len = static_cast<std::size_t>(exp) + 1;
    if (digits.size() <= int_len)
        return sign + digits + std::string(int_len - digits.size(), '0') + ".0";
    return sign + digits.substr(0, int_len) + "." + digits.substr(int_len);
}

std::string eval_arithmetic(std::string_view expr) {
    auto trimmed = text::trim(expr);
    if (trimmed.empty())
        throw Error(ErrorCode::ParseError, "empty expression");
    auto v = ArithParser(trimmed).parse();
    return v.is_int ? std::to_string(v.i) : format_float(v.d);
}

std::shared_ptr<ToolFixtureStore> ToolFixtureStore::load(const std::string& path) {
    auto store = std::make_shared<ToolFixtureStore>();
    auto contents = text::read_file(path);
    std::size_t line_no = 0;
    for (auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            store->add(j.at("tool").get<std::string>(), j.at("input").get<std::string>(),
                       j.at("output").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

void ToolFixtureStore::save(const std::string& path) const {
    std::shared_lock lock(mu_);
    std::string out;
    for (const auto& [tool, input, output] : rows_) {
        out += nlohmann::json{{"tool", tool}, {"input", input}, {"output", output}}.dump();
        out += '\n';
    }
    text::write_file(path, out);
}

void ToolFixtureStore::add(std::string tool, std::string input, std::string output) {
    std::unique_lock lock(mu_);
    auto key = std::make_pair(tool, input);
    if (index_.contains(key))
        return;
    index_.emplace(std::move(key), rows_.size());
    rows_.push_back({std::move(tool), std::move(input), std::move(output)});
}

std::optional<std::string> ToolFixtureStore::lookup(std::string_view tool, std::string_view input) const {
    std::shared_lock lock(mu_);
    auto it = index_.find(std::make_pair(std::string(tool), std::string(input)));
    if (it == index_.end())
        return std::nullopt;
    return rows_[it->second][2];
}

std::size_t ToolFixtureStore::size() const {
    std::shared_lock lock(mu_);
    return rows_.size();
}

ToolRegistry build_registry(const ToolsConfig& cfg) {
    auto catalogue_path = cfg.catalogue_path.empty() ? data_path("tools.json") : cfg.catalogue_path;
    nlohmann::json catalogue;
    try {
        catalogue = nlohmann::json::parse(text::read_file(catalogue_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, catalogue_path + ": " + e.what());
    }

    auto llm_tpl = load_template(cfg.llm_template_path, "templates/llm_tool.txt");
    prompting::require_placeholders(llm_tpl, "LLM tool", {"input"});
    auto calc_tpl = load_template(cfg.calculator_template_path, "templates/calculator_tool.txt");
    prompting::require_placeholders(calc_tpl, "Calculator tool", {"input"});

    auto fixtures = cfg.fixtures;
    std::vector<ToolSpec> specs;
    for (const auto& entry : catalogue.at("tools")) {
        ToolSpec spec;
        spec.name = entry.at("name").get<std::string>();
        spec.description = entry.at("description").get<std::string>();
        spec.kind = tool_kind_from_string(entry.at("kind").get<std::string>());
        auto backend = entry.value("backend", "");
        const auto name = spec.name;

        if (spec.kind == ToolKind::stub) {
            auto canned = entry.value("canned", "");
            if (auto it = cfg.stub_outputs.find(name); it != cfg.stub_outputs.end())
                canned = it->second;
            spec.handler = [fixtures, name, canned](std::string_view input, const InvokeContext&) {
                if (fixtures)
                    if (auto hit = fixtures->lookup(name, input))
                        return *hit;
                return canned;
            };
        } else if (backend == "calculator") {
            if (cfg.calculator_model_backed) {
                spec.kind = ToolKind::model_backed;
                spec.handler = [calc_tpl](std::string_view input, const InvokeContext& ctx) {
                    auto prompt = prompting::render_template(calc_tpl, {{"input", std::string(input)}});
                    return eval_arithmetic(call_tool_model(ctx, prompt, input));
                };
            } else {
                spec.handler = [](std::string_view input, const InvokeContext&) { return eval_arithmetic(input); };
            }
        } else if (backend == "llm") {
            spec.handler = [llm_tpl](std::string_view input, const InvokeContext& ctx) {
                auto prompt = prompting::render_template(llm_tpl, {{"input", std::string(input)}});
                return call_tool_model(ctx, prompt, input);
            };
        } else if (spec.kind == ToolKind::http) {
            std::function<std::string(std::string_view)> live;
            int timeout = cfg.http_timeout_s;
            if (backend == "wikipedia")
                live = [timeout](std::string_view q) { return wikipedia_lookup(q, timeout); };
            else if (backend == "google")
                live = [timeout](std::string_view q) { return google_lookup(q, timeout); };
            else if (backend == "wolframalpha")
                live = [timeout](std::string_view q) { return wolfram_lookup(q, timeout); };
            else if (backend == "docsearch")
                live = [timeout, collection = entry.value("collection", "default")](std::string_view q) {
                    return docsearch_lookup(q, collection, timeout);
                };
            else
                throw Error(ErrorCode::Config, "tool " + name + " has unknown backend `" + backend + "`");
            spec.handler = [fixtures, name, live, allow = cfg.live](std::string_view input, const InvokeContext&) {
                if (fixtures)
                    if (auto hit = fixtures->lookup(name, input))
                        return *hit;
                if (!allow)
                    throw Error(ErrorCode::ReplayMiss, "no fixture for " + name + "[" + std::string(input) + "]");
                return live(input);
            };
        } else {
            throw Error(ErrorCode::Config, "tool " + name + " has unknown backend `" + backend + "`");
        }
        specs.push_back(std::move(spec));
    }
    return ToolRegistry(std::move(specs), cfg.max_evidence_chars);
}

} // namespace planwork::tools
