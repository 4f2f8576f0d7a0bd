// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace planwork::accounting {

using TokenCount = std::int64_t;

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual TokenCount count(std::string_view text) const = 0;
    virtual std::string scheme() const = 0;
};

// Counts maximal runs of non-whitespace bytes.
class WhitespaceTokenizer final : public Tokenizer {
public:
    TokenCount count(std::string_view text) const override;
    std::string scheme() const override { return "whitespace"; }
};

// Byte-level BPE over a tiktoken-format rank file (`<base64 token> <rank>`
// per line), with a cl100k-style pre-tokenizer.
class BytePairTokenizer final : public Tokenizer {
public:
    // Throws UnknownVocabulary if the file is missing or unreadable.
    static std::shared_ptr<const BytePairTokenizer> load(const std::string& vocab_path);

    TokenCount count(std::string_view text) const override;
    std::string scheme() const override { return "byte_pair(" + vocabulary_id_ + ")"; }

    std::vector<std::uint32_t> encode(std::string_view text) const;

    // Splits text into pre-tokenization pieces.
    static std::vector<std::string_view> pretokenize(std::string_view text);

private:
    BytePairTokenizer() = default;
    void encode_piece(std::string_view piece, std::vector<std::uint32_t>& out) const;

    std::unordered_map<std::string, std::uint32_t> ranks_;
    std::string vocabulary_id_;
};

// "whitespace" or "bpe" / "byte_pair". For the byte-pair scheme an empty
// vocab path resolves to the bundled cl100k vocabulary.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view scheme, const std::string& vocab_path = {});

TokenCount count_tokens(std::string_view text, const Tokenizer& tok);

enum class CallKind { planner, solver, react_step, tool_model, single, judge };

std::string_view to_string(CallKind kind);
CallKind call_kind_from_string(std::string_view s);

struct ComponentBreakdown {
    TokenCount question = 0;
    TokenCount context = 0;
    TokenCount exemplars = 0;
    TokenCount steps = 0;

    TokenCount total() const { return question + context + exemplars + steps; }
    ComponentBreakdown& operator+=(const ComponentBreakdown& o);
    bool operator==(const ComponentBreakdown&) const = default;
};

struct LedgerEntry {
    CallKind call_kind = CallKind::single;
    TokenCount input_tokens = 0;
    TokenCount output_tokens = 0;
    std::optional<ComponentBreakdown> breakdown;

    bool operator==(const LedgerEntry&) const = default;
};

struct LedgerTotals {
    TokenCount input_tokens = 0;
    TokenCount output_tokens = 0;
    TokenCount total() const { return input_tokens + output_tokens; }
};

// Per-run, single-writer record of model calls.
class TokenLedger {
public:
    void record(LedgerEntry entry) { entries_.push_back(std::move(entry)); }
    void append(const TokenLedger& other);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    LedgerTotals totals() const;
    LedgerTotals totals(CallKind kind) const;
    std::size_t count(CallKind kind) const;

    bool operator==(const TokenLedger&) const = default;

private:
    std::vector<LedgerEntry> entries_;
};

// Input total for an interleaved thought/action/observation run of k calls:
// k(q + c + s) + sum_{j=1}^{k-1} (k - j) * tao[j]. Requires k >= 1.
TokenCount predict_tao_tokens(TokenCount question, TokenCount context, TokenCount exemplars,
                              std::span<const TokenCount> tao_sizes);

// Planner + Solver input total: (c_planner + s + q) + (c_solver + q + sum pe).
TokenCount predict_rewoo_tokens(TokenCount question, TokenCount planner_context, TokenCount solver_context,
                                TokenCount exemplars, std::span<const TokenCount> pe_sizes);

// Sums the per-call component breakdowns. Throws MissingBreakdown when an
// entry carries none.
ComponentBreakdown decompose_ledger(const TokenLedger& ledger);

// Dollars for 1000 queries at `price_per_1k` dollars per 1000 tokens.
double cost_per_1k(double avg_tokens_per_query, double price_per_1k);

inline constexpr double kDefaultPricePer1k = 0.002;

class PricingTable {
public:
    PricingTable() = default;
    explicit PricingTable(double default_price) : default_price_(default_price) {}

    // JSON object {"default": 0.002, "models": {"gpt-3.5-turbo": 0.002}}
    // or a flat {"model": price} map.
    static PricingTable from_json(const nlohmann::json& j);
    static PricingTable load(const std::string& path);

    void set(const std::string& model_id, double price);
    double price_for(const std::string& model_id) const;
    double default_price() const { return default_price_; }

private:
    double default_price_ = kDefaultPricePer1k;
    std::map<std::string, double> prices_;
};

void to_json(nlohmann::json& j, const ComponentBreakdown& b);
void from_json(const nlohmann::json& j, ComponentBreakdown& b);
void to_json(nlohmann::json& j, const TokenLedger& ledger);
void from_json(const nlohmann::json& j, TokenLedger& ledger);

} // namespace planwork::accounting
