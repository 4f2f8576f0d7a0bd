// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/accounting.hpp"
#include "planwork/blueprint.hpp"
#include "planwork/model.hpp"
#include "planwork/prompting.hpp"

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace planwork::tools {

enum class ToolKind { deterministic, http, model_backed, stub };

std::string_view to_string(ToolKind kind);
ToolKind tool_kind_from_string(std::string_view s);

// What a handler may touch during one invocation. The ledger belongs to the
// calling run.
struct InvokeContext {
    model::ModelClient* model = nullptr;
    accounting::TokenLedger* ledger = nullptr;
    std::string model_id{model::kDefaultModelId};
    double temperature = 0.0;
};

using Handler = std::function<std::string(std::string_view input, const InvokeContext& ctx)>;

struct ToolSpec {
    std::string name;
    std::string description;
    ToolKind kind = ToolKind::deterministic;
    Handler handler;
};

// Immutable after construction; safe to share across runs.
class ToolRegistry {
public:
    ToolRegistry() = default;
    // Throws Config on duplicate or malformed names and missing handlers.
    explicit ToolRegistry(std::vector<ToolSpec> specs, std::size_t max_evidence_chars = 0);

    const ToolSpec* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::vector<std::string> names() const;
    const std::vector<ToolSpec>& specs() const { return specs_; }

    // Descriptions for `names` in the given order. Throws UnknownTool.
    std::vector<prompting::ToolDescription> describe(const std::vector<std::string>& names) const;

    // 0 means no truncation.
    std::size_t max_evidence_chars() const { return max_evidence_chars_; }

private:
    std::vector<ToolSpec> specs_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::size_t max_evidence_chars_ = 0;
};

// Evidence per variable; each variable is written once, iteration is by
// ascending index.
class EvidenceMap {
public:
    // Throws DuplicateVar.
    void insert(blueprint::EvidenceVarId var, std::string evidence);
    const std::string* find(blueprint::EvidenceVarId var) const;
    bool contains(blueprint::EvidenceVarId var) const { return entries_.contains(var); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool operator==(const EvidenceMap&) const = default;

private:
    std::map<blueprint::EvidenceVarId, std::string> entries_;
};

inline constexpr std::string_view kNoEvidence = "No evidence found.";

struct FailureInjection {
    enum class Mode { off, all_fail, named };

    Mode mode = Mode::off;
    std::set<std::string, std::less<>> names;
    std::string failure_text{kNoEvidence};

    bool applies_to(std::string_view tool) const;

    // "off", "all", or a comma-separated list of tool names.
    static FailureInjection parse(std::string_view spec);
    std::string describe() const;
};

enum class Policy { strict, lenient };

struct Substitution {
    std::string text;
    std::vector<std::string> warnings;
};

// Replaces each known `#Ek` (maximal munch) with its evidence. Unknown
// references throw UnresolvedReference under strict, stay verbatim under
// lenient with a warning.
Substitution substitute_evidence(std::string_view input, const EvidenceMap& ev, Policy policy);

struct Invocation {
    std::string evidence;
    bool failed = false;   // injected failure, handler error or unknown tool
    bool injected = false; // failure injection answered, no handler ran
    std::string error;
};

// Lenient never throws: every failure becomes evidence text. Strict rethrows
// UnknownTool; handler errors are still turned into failure text.
Invocation invoke(std::string_view name, std::string_view input, const ToolRegistry& reg,
                  const FailureInjection& inj, const InvokeContext& ctx, Policy policy = Policy::lenient);

// Arithmetic over + - * / ** and parentheses. Integer-only expressions
// without division stay integers; anything else renders like a Python float.
// Throws ParseError or DivisionByZero.
std::string eval_arithmetic(std::string_view expr);

// Shortest round-trip rendering with Python float repr conventions.
std::string format_float(double v);

// Recorded tool outputs keyed by (tool, input). JSONL {tool, input, output}.
class ToolFixtureStore {
public:
    static std::shared_ptr<ToolFixtureStore> load(const std::string& path);
    void save(const std::string& path) const;

    void add(std::string tool, std::string input, std::string output);
    std::optional<std::string> lookup(std::string_view tool, std::string_view input) const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mu_;
    std::vector<std::array<std::string, 3>> rows_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

// Wiring for the bundled tool catalogue.
struct ToolsConfig {
    std::shared_ptr<const ToolFixtureStore> fixtures;
    bool live = false;         // allow real HTTP for search tools
    int http_timeout_s = 30;
    std::size_t max_evidence_chars = 0;
    bool calculator_model_backed = false;
    std::string catalogue_path; // empty: bundled data/tools.json
    std::string llm_template_path;        // empty: bundled templates
    std::string calculator_template_path;
    std::map<std::string, std::string> stub_outputs; // overrides canned stub text
};

// Builds the registry from the catalogue: Google, Wikipedia, Search,
// WolframAlpha, Calculator, LLM, SearchSOTU, SearchDoc and the stub tools.
ToolRegistry build_registry(const ToolsConfig& cfg);

} // namespace planwork::tools
