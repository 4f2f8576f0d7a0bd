// SPDX-License-Identifier: Apache-2.0
#include "planwork/blueprint.hpp"

#include "planwork/error.hpp"
#include "planwork/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <queue>

namespace planwork::blueprint {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

constexpr std::string_view kPlanLabel = "Plan:";

bool is_plan_line(std::string_view trimmed) { return trimmed.starts_with(kPlanLabel); }

bool is_statement_line(std::string_view trimmed) {
    return trimmed.size() > 2 && trimmed.starts_with("#E") && is_digit(trimmed[2]);
}

struct Statement {
    EvidenceVarId var;
    std::string tool_name;
    std::string tool_input;
};

// `#Ek = Tool[input]`; input runs from the first '[' after the tool name to
// the last ']' of the statement.
Statement parse_statement(std::string_view stmt) {
    auto fail = [&](const std::string& why) -> Error {
        auto first_line = stmt.substr(0, stmt.find('\n'));
        return Error(ErrorCode::BadToolSyntax, why + " in `" + std::string(first_line) + "`");
    };

    std::size_t pos = 2;
    while (pos < stmt.size() && is_digit(stmt[pos]))
        ++pos;
    auto var = parse_var(stmt.substr(0, pos));
    if (!var)
        throw fail("non-canonical evidence variable");

    auto rest = text::trim_left(stmt.substr(pos));
    if (rest.empty() || rest.front() != '=')
        throw fail("expected '='");
    rest = text::trim_left(rest.substr(1));

    std::size_t name_len = 0;
    while (name_len < rest.size() && (is_alpha(rest[name_len]) || is_digit(rest[name_len])))
        ++name_len;
    auto name = rest.substr(0, name_len);
    if (!is_identifier(name))
        throw fail("expected tool name");

    auto after_name = text::trim_left(rest.substr(name_len));
    if (after_name.empty() || after_name.front() != '[')
        throw fail("expected '[' after tool name");
    auto close = after_name.rfind(']');
    if (close == std::string_view::npos || close == 0)
        throw fail("missing closing ']'");

    return Statement{*var, std::string(name), std::string(after_name.substr(1, close - 1))};
}

} // namespace

EvidenceVarId::EvidenceVarId(int index) : index_(index) {
    if (index < 1)
        throw Error(ErrorCode::Format, "evidence variable index must be >= 1");
}

std::string EvidenceVarId::str() const { return "#E" + std::to_string(index_); }

std::optional<EvidenceVarId> parse_var(std::string_view token) {
    if (token.size() < 3 || !token.starts_with("#E"))
        return std::nullopt;
    auto digits = token.substr(2);
    if (!std::all_of(digits.begin(), digits.end(), is_digit) || digits.front() == '0')
        return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        return std::nullopt;
    return EvidenceVarId(value);
}

std::vector<VarReference> find_references(std::string_view text) {
    std::vector<VarReference> refs;
    std::size_t pos = 0;
    while ((pos = text.find("#E", pos)) != std::string_view::npos) {
        std::size_t end = pos + 2;
        while (end < text.size() && is_digit(text[end]))
            ++end;
        if (end > pos + 2) {
            if (auto var = parse_var(text.substr(pos, end - pos)))
                refs.push_back({*var, pos, end - pos});
            pos = end;
        } else {
            pos += 2;
        }
    }
    return refs;
}

bool is_identifier(std::string_view name) {
    if (name.empty() || !is_alpha(name.front()))
        return false;
    return std::all_of(name.begin(), name.end(), [](char c) { return is_alpha(c) || is_digit(c); });
}

ParseOutcome parse_blueprint(std::string_view source, ParseMode mode) {
    ParseOutcome out;
    out.blueprint.source_text = std::string(source);

    auto report = [&](ErrorCode code, const std::string& message) {
        if (mode == ParseMode::strict)
            throw Error(code, message);
        out.warnings.push_back(std::string(to_string(code)) + ": " + message);
    };

    auto lines = text::split_lines(source);
    std::vector<std::string> desc;
    bool pending = false;
    std::set<EvidenceVarId> seen;

    std::size_t i = 0;
    while (i < lines.size()) {
        auto line = text::trim(lines[i]);

        if (is_plan_line(line)) {
            if (pending)
                report(ErrorCode::MalformedStep, "Plan without #E: `" + text::join(desc, " ") + "`");
            desc.clear();
            auto first = text::trim(line.substr(kPlanLabel.size()));
            if (!first.empty())
                desc.emplace_back(first);
            pending = true;
            ++i;
            continue;
        }

        if (is_statement_line(line)) {
            std::size_t j = i + 1;
            while (j < lines.size()) {
                auto next = text::trim(lines[j]);
                if (is_plan_line(next) || is_statement_line(next))
                    break;
                ++j;
            }
            auto begin = static_cast<std::size_t>(line.data() - source.data());
            auto end = static_cast<std::size_t>(lines[j - 1].data() - source.data()) + lines[j - 1].size();
            auto stmt = source.substr(begin, end - begin);
            i = j;

            if (!pending) {
                report(ErrorCode::MalformedStep, "#E without preceding Plan: `" +
                                                     std::string(stmt.substr(0, stmt.find('\n'))) + "`");
                continue;
            }
            pending = false;
            auto description = text::join(desc, "\n");
            desc.clear();
            if (description.empty()) {
                report(ErrorCode::MalformedStep, "empty Plan description");
                continue;
            }

            Statement parsed{EvidenceVarId(1), {}, {}};
            try {
                parsed = parse_statement(stmt);
            } catch (const Error& e) {
                if (mode == ParseMode::strict)
                    throw;
                out.warnings.emplace_back(e.what());
                continue;
            }
            if (!seen.insert(parsed.var).second) {
                report(ErrorCode::DuplicateVar, parsed.var.str() + " assigned twice");
                continue;
            }
            out.blueprint.steps.push_back(
                PlanStep{std::move(description), parsed.var, std::move(parsed.tool_name), std::move(parsed.tool_input)});
            continue;
        }

        if (pending && !line.empty())
            desc.emplace_back(line);
        ++i;
    }

    if (pending)
        report(ErrorCode::MalformedStep, "Plan without #E: `" + text::join(desc, " ") + "`");
    return out;
}

std::string render_blueprint(const Blueprint& bp) {
    std::string out;
    for (const auto& step : bp.steps) {
        out += "Plan: ";
        out += step.description;
        out += '\n';
        out += step.var.str();
        out += " = ";
        out += step.tool_name;
        out += '[';
        out += step.tool_input;
        out += "]\n";
    }
    return out;
}

DepGraph build_dep_graph(const Blueprint& bp) {
    std::map<EvidenceVarId, std::size_t> position;
    for (std::size_t i = 0; i < bp.steps.size(); ++i)
        position.emplace(bp.steps[i].var, i);

    DepGraph graph;
    for (const auto& step : bp.steps) {
        auto& deps = graph.edges[step.var];
        for (const auto& ref : find_references(step.tool_input)) {
            if (!position.contains(ref.var))
                throw Error(ErrorCode::UndefinedReference,
                            step.var.str() + " references undefined " + ref.var.str());
            deps.insert(ref.var);
        }
    }

    // Kahn's algorithm; ties broken by source position.
    std::map<EvidenceVarId, std::size_t> indegree;
    std::map<EvidenceVarId, std::vector<EvidenceVarId>> dependents;
    for (const auto& [var, deps] : graph.edges) {
        indegree[var] += deps.size();
        for (const auto& dep : deps)
            dependents[dep].push_back(var);
    }
    using Item = std::pair<std::size_t, EvidenceVarId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (const auto& [var, deg] : indegree)
        if (deg == 0)
            ready.emplace(position.at(var), var);
    while (!ready.empty()) {
        auto var = ready.top().second;
        ready.pop();
        graph.topo_order.push_back(var);
        for (const auto& next : dependents[var])
            if (--indegree[next] == 0)
                ready.emplace(position.at(next), next);
    }
    if (graph.topo_order.size() != bp.steps.size())
        throw Error(ErrorCode::CycleDetected, "evidence references form a cycle");

    for (const auto& step : bp.steps) {
        for (const auto& dep : graph.edges.at(step.var)) {
            if (position.at(dep) >= position.at(step.var) || dep.index() >= step.var.index())
                throw Error(ErrorCode::ForwardReference,
                            step.var.str() + " references " + dep.str() + " which is not defined before it");
        }
    }
    return graph;
}

std::vector<std::vector<EvidenceVarId>> execution_waves(const DepGraph& graph, const Blueprint& bp) {
    std::map<EvidenceVarId, std::size_t> level;
    std::size_t max_level = 0;
    for (const auto& var : graph.topo_order) {
        std::size_t lvl = 0;
        for (const auto& dep : graph.edges.at(var))
            lvl = std::max(lvl, level.at(dep) + 1);
        level[var] = lvl;
        max_level = std::max(max_level, lvl);
    }
    std::vector<std::vector<EvidenceVarId>> waves(graph.topo_order.empty() ? 0 : max_level + 1);
    for (const auto& step : bp.steps)
        waves[level.at(step.var)].push_back(step.var);
    return waves;
}

} // namespace planwork::blueprint
