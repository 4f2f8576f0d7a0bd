// SPDX-License-Identifier: Apache-2.0
#include "planwork/accounting.hpp"

#include "planwork/error.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <mutex>

namespace planwork {

std::string data_dir() {
    if (const char* env = std::getenv("PLANWORK_DATA_DIR"); env && *env)
        return env;
#ifdef PLANWORK_DEFAULT_DATA_DIR
    return PLANWORK_DEFAULT_DATA_DIR;
#else
    return "data";
#endif
}

std::string data_path(std::string_view relative) {
    return (std::filesystem::path(data_dir()) / std::filesystem::path(relative)).string();
}

namespace accounting {

TokenCount WhitespaceTokenizer::count(std::string_view text) const {
    TokenCount n = 0;
    bool in_token = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token)
            ++n;
        in_token = !space;
    }
    return n;
}

namespace {

struct CodePoint {
    char32_t value;
    std::size_t length;
};

CodePoint decode_utf8(std::string_view s, std::size_t pos) {
    auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t i) -> int {
        if (pos + i >= s.size())
            return -1;
        auto b = static_cast<unsigned char>(s[pos + i]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80)
        return {b0, 1};
    if ((b0 & 0xE0) == 0xC0) {
        if (int c1 = cont(1); c1 >= 0)
            return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
    } else if ((b0 & 0xF0) == 0xE0) {
        int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0)
            return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    } else if ((b0 & 0xF8) == 0xF0) {
        int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0)
            return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
    // Invalid byte: classified as a symbol.
    return {0xFFFD, 1};
}

bool is_ws(char32_t c) {
    return c == ' ' || (c >= '\t' && c <= '\r') || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
           c == 0x3000;
}

bool is_newline(char32_t c) { return c == '\r' || c == '\n'; }

bool is_number(char32_t c) {
    if (c >= '0' && c <= '9')
        return true;
    if (c < 0x80)
        return false;
    return c == 0xB2 || c == 0xB3 || c == 0xB9 || (c >= 0xBC && c <= 0xBE) || (c >= 0x660 && c <= 0x669) ||
           (c >= 0x6F0 && c <= 0x6F9) || (c >= 0x966 && c <= 0x96F) || (c >= 0x2070 && c <= 0x2079) ||
           (c >= 0x2080 && c <= 0x2089) || (c >= 0x2150 && c <= 0x218B) || (c >= 0x2460 && c <= 0x249B) ||
           (c >= 0xFF10 && c <= 0xFF19);
}

// Approximates \p{L}: ASCII letters plus non-ASCII code points outside the
// common punctuation, symbol, mark, and space blocks.
bool is_letter(char32_t c) {
    if (c < 0x80)
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (is_ws(c) || is_number(c))
        return false;
    if (c <= 0xBF)
        return c == 0xAA || c == 0xB5 || c == 0xBA;
    if (c == 0xD7 || c == 0xF7 || c == 0xFFFD)
        return false;
    if (c >= 0x300 && c <= 0x36F) // combining marks
        return false;
    if ((c >= 0x2000 && c <= 0x2BFF) || (c >= 0x2E00 && c <= 0x2E7F) || (c >= 0x3000 && c <= 0x303F) ||
        (c >= 0xE000 && c <= 0xF8FF) || (c >= 0xFE00 && c <= 0xFE4F) || (c >= 0xFF00 && c <= 0xFF20) ||
        (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65) || (c >= 0x1F000 && c <= 0x1FAFF))
        return false;
    return true;
}

char ascii_lower(char32_t c) {
    return c < 0x80 ? static_cast<char>(std::tolower(static_cast<int>(c))) : '\0';
}

std::size_t match_piece(std::string_view s, std::size_t p) {
    const auto first = decode_utf8(s, p);
    const char32_t c0 = first.value;
    auto at = [&](std::size_t pos) { return decode_utf8(s, pos); };

    // Contractions: 's 't 're 've 'm 'll 'd (case-insensitive).
    if (c0 == '\'' && p + 1 < s.size()) {
        char a = ascii_lower(at(p + 1).value);
        if (a == 's' || a == 't' || a == 'm' || a == 'd')
            return 2;
        if (p + 2 < s.size()) {
            char b = ascii_lower(at(p + 2).value);
            if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l'))
                return 3;
        }
    }

    auto letters_from = [&](std::size_t pos) {
        while (pos < s.size()) {
            auto cp = at(pos);
            if (!is_letter(cp.value))
                break;
            pos += cp.length;
        }
        return pos;
    };

    // [^\r\n\p{L}\p{N}]?\p{L}+
    if (is_letter(c0))
        return letters_from(p) - p;
    if (!is_newline(c0) && !is_number(c0)) {
        auto next = p + first.length;
        if (next < s.size() && is_letter(at(next).value))
            return letters_from(next) - p;
    }

    // \p{N}{1,3}
    if (is_number(c0)) {
        std::size_t pos = p;
        for (int i = 0; i < 3 && pos < s.size(); ++i) {
            auto cp = at(pos);
            if (!is_number(cp.value))
                break;
            pos += cp.length;
        }
        return pos - p;
    }

    //  ?[^\s\p{L}\p{N}]+[\r\n]*
    {
        std::size_t pos = p;
        if (c0 == ' ')
            pos += 1;
        std::size_t start = pos;
        while (pos < s.size()) {
            auto cp = at(pos);
            if (is_ws(cp.value) || is_letter(cp.value) || is_number(cp.value))
                break;
            pos += cp.length;
        }
        if (pos > start) {
            while (pos < s.size() && (s[pos] == '\r' || s[pos] == '\n'))
                ++pos;
            return pos - p;
        }
    }

    if (is_ws(c0)) {
        std::size_t end = p;
        std::size_t last_newline = std::string_view::npos;
        std::size_t last_cp_start = p;
        std::size_t cps = 0;
        while (end < s.size()) {
            auto cp = at(end);
            if (!is_ws(cp.value))
                break;
            if (is_newline(cp.value))
                last_newline = end;
            last_cp_start = end;
            end += cp.length;
            ++cps;
        }
        // \s*[\r\n]+
        if (last_newline != std::string_view::npos)
            return last_newline + 1 - p;
        // \s+(?!\S)
        if (end == s.size())
            return end - p;
        if (cps >= 2)
            return last_cp_start - p;
        // \s+
        return end - p;
    }

    return first.length;
}

std::string base64_decode(std::string_view in) {
    std::string out(3 * ((in.size() + 3) / 4), '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(in.data()), static_cast<int>(in.size()));
    if (n < 0)
        throw Error(ErrorCode::UnknownVocabulary, "invalid base64 token in vocabulary");
    std::size_t padding = 0;
    for (auto it = in.rbegin(); it != in.rend() && *it == '='; ++it)
        ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

} // namespace

std::vector<std::string_view> BytePairTokenizer::pretokenize(std::string_view text) {
    std::vector<std::string_view> pieces;
    std::size_t p = 0;
    while (p < text.size()) {
        auto len = match_piece(text, p);
        pieces.push_back(text.substr(p, len));
        p += len;
    }
    return pieces;
}

std::shared_ptr<const BytePairTokenizer> BytePairTokenizer::load(const std::string& vocab_path) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const BytePairTokenizer>> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(vocab_path); it != cache.end())
        return it->second;

    if (!std::filesystem::is_regular_file(vocab_path))
        throw Error(ErrorCode::UnknownVocabulary, "vocabulary not found: " + vocab_path);
    std::string contents;
    try {
        contents = text::read_file(vocab_path);
    } catch (const Error&) {
        throw Error(ErrorCode::UnknownVocabulary, "cannot read vocabulary: " + vocab_path);
    }

    auto tok = std::shared_ptr<BytePairTokenizer>(new BytePairTokenizer());
    tok->vocabulary_id_ = std::filesystem::path(vocab_path).stem().string();
    for (auto line : text::split_lines(contents)) {
        line = text::trim(line);
        if (line.empty())
            continue;
        auto sp = line.find(' ');
        if (sp == std::string_view::npos)
            throw Error(ErrorCode::UnknownVocabulary, "malformed vocabulary line in " + vocab_path);
        std::uint32_t rank = 0;
        auto digits = line.substr(sp + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), rank);
        if (ec != std::errc{})
            throw Error(ErrorCode::UnknownVocabulary, "malformed rank in " + vocab_path);
        tok->ranks_.emplace(base64_decode(line.substr(0, sp)), rank);
    }
    if (tok->ranks_.empty())
        throw Error(ErrorCode::UnknownVocabulary, "empty vocabulary: " + vocab_path);
    cache.emplace(vocab_path, tok);
    return tok;
}

void BytePairTokenizer::encode_piece(std::string_view piece, std::vector<std::uint32_t>& out) const {
    if (auto it = ranks_.find(std::string(piece)); it != ranks_.end()) {
        out.push_back(it->second);
        return;
    }
    constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
    // boundaries[i] is the start of part i; the last entry is piece.size().
    std::vector<std::size_t> bounds(piece.size() + 1);
    for (std::size_t i = 0; i <= piece.size(); ++i)
        bounds[i] = i;

    auto pair_rank = [&](std::size_t i) -> std::uint32_t {
        if (i + 2 >= bounds.size())
            return kNone;
        auto it = ranks_.find(std::string(piece.substr(bounds[i], bounds[i + 2] - bounds[i])));
        return it == ranks_.end() ? kNone : it->second;
    };

    while (bounds.size() > 2) {
        std::uint32_t best = kNone;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i + 2 < bounds.size(); ++i) {
            auto r = pair_rank(i);
            if (r < best) {
                best = r;
                best_i = i;
            }
        }
        if (best == kNone)
            break;
        bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(best_i) + 1);
    }

    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        auto part = std::string(piece.substr(bounds[i], bounds[i + 1] - bounds[i]));
        auto it = ranks_.find(part);
        if (it == ranks_.end())
            throw Error(ErrorCode::UnknownVocabulary, "byte sequence missing from vocabulary");
        out.push_back(it->second);
    }
}

std::vector<std::uint32_t> BytePairTokenizer::encode(std::string_view text) const {
    std::vector<std::uint32_t> ids;
    for (auto piece : pretokenize(text))
        encode_piece(piece, ids);
    return ids;
}

TokenCount BytePairTokenizer::count(std::string_view text) const {
    return static_cast<TokenCount>(encode(text).size());
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view scheme, const std::string& vocab_path) {
    if (scheme == "whitespace")
        return std::make_shared<WhitespaceTokenizer>();
    if (scheme == "bpe" || scheme == "byte_pair" || scheme == "cl100k") {
        return BytePairTokenizer::load(vocab_path.empty() ? data_path("vocab/cl100k_base.tiktoken") : vocab_path);
    }
    throw Error(ErrorCode::Config, "unknown tokenizer scheme: " + std::string(scheme));
}

TokenCount count_tokens(std::string_view text, const Tokenizer& tok) { return tok.count(text); }

std::string_view to_string(CallKind kind) {
    switch (kind) {
    case CallKind::planner: return "planner";
    case CallKind::solver: return "solver";
    case CallKind::react_step: return "react_step";
    case CallKind::tool_model: return "tool_model";
    case CallKind::single: return "single";
    case CallKind::judge: return "judge";
    }
    return "single";
}

CallKind call_kind_from_string(std::string_view s) {
    for (auto k : {CallKind::planner, CallKind::solver, CallKind::react_step, CallKind::tool_model,
                   CallKind::single, CallKind::judge})
        if (to_string(k) == s)
            return k;
    throw Error(ErrorCode::Format, "unknown call kind: " + std::string(s));
}

ComponentBreakdown& ComponentBreakdown::operator+=(const ComponentBreakdown& o) {
    question += o.question;
    context += o.context;
    exemplars += o.exemplars;
    steps += o.steps;
    return *this;
}

void TokenLedger::append(const TokenLedger& other) {
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

LedgerTotals TokenLedger::totals() const {
    LedgerTotals t;
    for (const auto& e : entries_) {
        t.input_tokens += e.input_tokens;
        t.output_tokens += e.output_tokens;
    }
    return t;
}

LedgerTotals TokenLedger::totals(CallKind kind) const {
    LedgerTotals t;
    for (const auto& e : entries_) {
        if (e.call_kind != kind)
            continue;
        t.input_tokens += e.input_tokens;
        t.output_tokens += e.output_tokens;
    }
    return t;
}

std::size_t TokenLedger::count(CallKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.call_kind == kind; }));
}

TokenCount predict_tao_tokens(TokenCount question, TokenCount context, TokenCount exemplars,
                              std::span<const TokenCount> tao_sizes) {
    if (tao_sizes.empty())
        throw Error(ErrorCode::Format, "interleaved prediction needs at least one step");
    const auto k = static_cast<TokenCount>(tao_sizes.size());
    TokenCount total = k * question + k * context + k * exemplars;
    // tao_sizes[j - 1] holds step j; step j is re-fed in the k - j later calls.
    for (TokenCount j = 1; j <= k - 1; ++j)
        total += (k - j) * tao_sizes[static_cast<std::size_t>(j - 1)];
    return total;
}

TokenCount predict_rewoo_tokens(TokenCount question, TokenCount planner_context, TokenCount solver_context,
                                TokenCount exemplars, std::span<const TokenCount> pe_sizes) {
    TokenCount pe = 0;
    for (auto s : pe_sizes)
        pe += s;
    return (planner_context + exemplars + question) + (solver_context + question + pe);
}

ComponentBreakdown decompose_ledger(const TokenLedger& ledger) {
    ComponentBreakdown sum;
    for (const auto& e : ledger.entries()) {
        if (!e.breakdown)
            throw Error(ErrorCode::MissingBreakdown,
                        "ledger entry of kind " + std::string(to_string(e.call_kind)) + " has no breakdown");
        sum += *e.breakdown;
    }
    return sum;
}

double cost_per_1k(double avg_tokens_per_query, double price_per_1k) {
    if (avg_tokens_per_query < 0 || price_per_1k < 0)
        throw Error(ErrorCode::Format, "token counts and prices must be non-negative");
    // 1000 queries * tokens/query * (price / 1000 tokens)
    return avg_tokens_per_query * price_per_1k;
}

PricingTable PricingTable::from_json(const nlohmann::json& j) {
    PricingTable table;
    if (!j.is_object())
        throw Error(ErrorCode::Config, "pricing table must be a JSON object");
    if (j.contains("models") || j.contains("default")) {
        if (j.contains("default"))
            table.default_price_ = j.at("default").get<double>();
        if (j.contains("models"))
            for (const auto& [model, price] : j.at("models").items())
                table.set(model, price.get<double>());
    } else {
        for (const auto& [model, price] : j.items())
            table.set(model, price.get<double>());
    }
    if (table.default_price_ < 0)
        throw Error(ErrorCode::Config, "negative default price");
    return table;
}

PricingTable PricingTable::load(const std::string& path) {
    try {
        return from_json(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, "invalid pricing file " + path + ": " + e.what());
    }
}

void PricingTable::set(const std::string& model_id, double price) {
    if (price < 0)
        throw Error(ErrorCode::Config, "negative price for " + model_id);
    prices_[model_id] = price;
}

double PricingTable::price_for(const std::string& model_id) const {
    auto it = prices_.find(model_id);
    return it == prices_.end() ? default_price_ : it->second;
}

void to_json(nlohmann::json& j, const ComponentBreakdown& b) {
    j = {{"question", b.question}, {"context", b.context}, {"exemplars", b.exemplars}, {"steps", b.steps}};
}

void from_json(const nlohmann::json& j, ComponentBreakdown& b) {
    b.question = j.at("question").get<TokenCount>();
    b.context = j.at("context").get<TokenCount>();
    b.exemplars = j.at("exemplars").get<TokenCount>();
    b.steps = j.at("steps").get<TokenCount>();
}

void to_json(nlohmann::json& j, const TokenLedger& ledger) {
    auto entries = nlohmann::json::array();
    for (const auto& e : ledger.entries()) {
        nlohmann::json je = {{"call_kind", to_string(e.call_kind)},
                             {"input_tokens", e.input_tokens},
                             {"output_tokens", e.output_tokens}};
        if (e.breakdown)
            je["component_breakdown"] = *e.breakdown;
        entries.push_back(std::move(je));
    }
    auto t = ledger.totals();
    j = {{"entries", std::move(entries)},
         {"totals", {{"input_tokens", t.input_tokens}, {"output_tokens", t.output_tokens}}}};
}

void from_json(const nlohmann::json& j, TokenLedger& ledger) {
    ledger = TokenLedger{};
    for (const auto& je : j.at("entries")) {
        LedgerEntry e;
        e.call_kind = call_kind_from_string(je.at("call_kind").get<std::string>());
        e.input_tokens = je.at("input_tokens").get<TokenCount>();
        e.output_tokens = je.at("output_tokens").get<TokenCount>();
        if (je.contains("component_breakdown"))
            e.breakdown = je.at("component_breakdown").get<ComponentBreakdown>();
        ledger.record(std::move(e));
    }
}

} // namespace accounting
} // namespace planwork
