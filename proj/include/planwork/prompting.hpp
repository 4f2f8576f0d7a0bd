// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/blueprint.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace planwork::prompting {

struct ToolDescription {
    std::string name;
    std::string description;
};

struct Exemplar {
    std::string question;
    std::optional<std::string> planner_demo;
    std::optional<std::string> tao_demo;
    std::string source_tag;
};

// Context templates. Placeholders are `{{name}}`; `{{#name}}...{{/name}}`
// renders its body only when `name` is non-empty.
//   planner: tools, exemplars, task
//   solver:  plan_evidence, task
//   react:   tools, exemplars, task, history
//   direct:  task
//   cot:     exemplars, task
struct PromptTemplate {
    std::string planner_context;
    std::string solver_context;
    std::string react_context;
    std::string direct_context;
    std::string cot_context;

    // Loads planner.txt, solver.txt, react.txt, direct.txt, cot.txt from dir.
    static PromptTemplate load(const std::string& dir);
    // The bundled templates under the data directory.
    static PromptTemplate defaults();
};

// A composed prompt plus the text of each accountable component. `context`
// is everything else (template text and tool descriptions).
struct ComposedPrompt {
    std::string text;
    std::string question;
    std::string exemplars;
    std::string steps;
};

struct TaoTurn {
    std::string thought;
    std::string action;      // `Tool[input]` as emitted
    std::string observation; // empty when the turn is incomplete
};

using Vars = std::map<std::string, std::string, std::less<>>;

// Throws MissingPlaceholder on unterminated sections.
std::string render_template(std::string_view tpl, const Vars& vars);

// Throws MissingPlaceholder if tpl lacks any of `names`.
void require_placeholders(std::string_view tpl, std::string_view which, std::initializer_list<std::string_view> names);

// `(i) Name[input]: description`, one per line.
std::string render_tool_list(const std::vector<ToolDescription>& tools);

std::string render_planner_exemplars(const std::vector<Exemplar>& exemplars);
std::string render_tao_exemplars(const std::vector<Exemplar>& exemplars);

// `Plan: <desc>\nEvidence:\n<evidence>`
std::string render_plan_evidence(const blueprint::PlanStep& step, std::string_view evidence);
std::string render_tao_turn(const TaoTurn& turn);

ComposedPrompt compose_planner_prompt(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools,
                                      const std::vector<Exemplar>& exemplars, std::string_view question);

ComposedPrompt compose_solver_prompt(const PromptTemplate& tpl, std::string_view question,
                                     const std::vector<std::pair<blueprint::PlanStep, std::string>>& pairs);

// Rebuilds the whole prompt, including every prior turn, on each call.
ComposedPrompt compose_react_prompt(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools,
                                    const std::vector<Exemplar>& exemplars, std::string_view question,
                                    const std::vector<TaoTurn>& history);

ComposedPrompt compose_direct_prompt(const PromptTemplate& tpl, std::string_view question);
ComposedPrompt compose_cot_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars,
                                  std::string_view question);

// Planner context with tools and no exemplars or task: the instruction half
// of an exported planner training record.
std::string planner_instruction(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools);

// Exemplar bundles are JSONL {question, planner_demo, tao_demo, source_tag}.
std::vector<Exemplar> load_exemplars(const std::string& path);
void validate_exemplar(const Exemplar& ex);

} // namespace planwork::prompting
