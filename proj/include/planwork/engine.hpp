// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/accounting.hpp"
#include "planwork/blueprint.hpp"
#include "planwork/model.hpp"
#include "planwork/prompting.hpp"
#include "planwork/tools.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace planwork::engine {

enum class Paradigm { rewoo, react, direct, cot };

std::string_view to_string(Paradigm p);
Paradigm paradigm_from_string(std::string_view s);

struct Task {
    std::string id;
    std::string question;
    std::optional<std::string> gold_answer;
    std::vector<std::string> toolset; // empty: the run's default toolset
    std::string exemplar_set;
};

struct ReactStep {
    std::string thought;
    bool finish = false;
    std::string action_tool; // "Finish" for the final step, empty for an invalid action
    std::string action_input;
    std::string observation;

    bool operator==(const ReactStep&) const = default;
};

struct ToolCall {
    std::optional<blueprint::EvidenceVarId> var; // set for blueprint steps
    std::string tool;
    std::string input; // after evidence substitution
    std::string output;
    bool failed = false;
    std::string error;

    bool operator==(const ToolCall&) const = default;
};

struct ExecutionRecord {
    std::string task_id;
    Paradigm paradigm = Paradigm::direct;
    std::string question;
    std::optional<blueprint::Blueprint> blueprint;
    std::optional<tools::EvidenceMap> evidence;
    std::optional<std::vector<ReactStep>> react_trace;
    std::vector<std::string> reasoning; // cot reasoning lines
    std::vector<ToolCall> tool_calls;
    std::string answer;
    accounting::TokenLedger ledger;
    std::size_t steps = 0;
    std::vector<std::string> warnings;

    bool operator==(const ExecutionRecord& o) const;
};

void to_json(nlohmann::json& j, const ExecutionRecord& rec);
void from_json(const nlohmann::json& j, ExecutionRecord& rec);

struct RunOptions {
    blueprint::ParseMode parse_mode = blueprint::ParseMode::lenient;
    tools::Policy tool_policy = tools::Policy::lenient;
    std::size_t max_steps = 7;
    bool parallel_waves = false;
    std::string model_id{model::kDefaultModelId};
    double temperature = 0.0;
    int max_output_tokens = 512;
};

// Shared, read-only handles for a run. The model client is internally
// synchronized.
struct EngineDeps {
    const prompting::PromptTemplate* templates = nullptr;
    const std::vector<prompting::Exemplar>* exemplars = nullptr;
    const tools::ToolRegistry* tools = nullptr;
    model::ModelClient* model = nullptr;
    tools::FailureInjection injection;
    std::vector<std::string> toolset; // used when a task names none; empty means every registered tool
    RunOptions options;
};

// Plan, work, solve. Exactly one planner and one solver call; model-backed
// tools add their own ledger entries.
ExecutionRecord run_rewoo(const Task& task, const EngineDeps& deps);

// Interleaved thought/action/observation loop; the whole prompt is rebuilt
// on every iteration.
ExecutionRecord run_react(const Task& task, const EngineDeps& deps, std::size_t max_steps);
inline ExecutionRecord run_react(const Task& task, const EngineDeps& deps) {
    return run_react(task, deps, deps.options.max_steps);
}

enum class SingleStyle { direct, cot };
ExecutionRecord run_single(const Task& task, const EngineDeps& deps, SingleStyle style);

ExecutionRecord run_task(const Task& task, Paradigm paradigm, const EngineDeps& deps);

// First `Thought:` and first `Action:` of one completion. Throws NoAction or
// BadToolSyntax.
ReactStep parse_react_step(std::string_view completion);

// rewoo: plans + 1; react: thoughts; direct: 1; cot: reasoning lines.
std::size_t step_count(const ExecutionRecord& rec);

} // namespace planwork::engine
