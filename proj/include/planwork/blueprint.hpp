// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace planwork::blueprint {

// Evidence variable `#Ek`. Index is always >= 1.
class EvidenceVarId {
public:
    explicit EvidenceVarId(int index);

    int index() const noexcept { return index_; }
    std::string str() const; // "#E<index>", no leading zeros

    auto operator<=>(const EvidenceVarId&) const = default;

private:
    int index_;
};

// Parses exactly "#E<digits>" (canonical form). Returns nullopt otherwise.
std::optional<EvidenceVarId> parse_var(std::string_view token);

struct VarReference {
    EvidenceVarId var;
    std::size_t offset; // byte offset of '#'
    std::size_t length;
};

// Scans for `#E<digits>` with maximal munch on digits: "#E12" is #E12, never
// #E1. Non-canonical spellings (leading zeros, #E0) are not references.
std::vector<VarReference> find_references(std::string_view text);

struct PlanStep {
    std::string description;
    EvidenceVarId var{1};
    std::string tool_name;
    std::string tool_input;

    bool operator==(const PlanStep&) const = default;
};

struct Blueprint {
    std::vector<PlanStep> steps;
    std::string source_text;

    // Equality over steps only; source text is provenance.
    bool structurally_equal(const Blueprint& other) const { return steps == other.steps; }
};

enum class ParseMode { strict, lenient };

struct ParseOutcome {
    Blueprint blueprint;
    std::vector<std::string> warnings;
};

// Parses Planner output into (Plan, #E) steps. Strict mode throws
// planwork::Error (MalformedStep, DuplicateVar, BadToolSyntax); lenient mode
// never throws and records a warning for each dropped block.
ParseOutcome parse_blueprint(std::string_view text, ParseMode mode = ParseMode::strict);

// Canonical text: one `Plan: <desc>\n#Ek = Tool[input]\n` block per step.
std::string render_blueprint(const Blueprint& bp);

struct DepGraph {
    std::map<EvidenceVarId, std::set<EvidenceVarId>> edges;
    std::vector<EvidenceVarId> topo_order;
};

// Throws ForwardReference, UndefinedReference or CycleDetected.
DepGraph build_dep_graph(const Blueprint& bp);

// Groups topo_order into waves of mutually independent steps; every step's
// dependencies lie in earlier waves. Source order is kept within a wave.
std::vector<std::vector<EvidenceVarId>> execution_waves(const DepGraph& graph, const Blueprint& bp);

bool is_identifier(std::string_view name);

} // namespace planwork::blueprint
