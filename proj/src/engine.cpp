// SPDX-License-Identifier: Apache-2.0
#include "planwork/engine.hpp"

#include "planwork/error.hpp"
#include "planwork/text.hpp"

#include <algorithm>
#include <future>

namespace planwork::engine {

namespace {

using accounting::CallKind;
using blueprint::EvidenceVarId;

constexpr std::string_view kReactStop = "\nObservation:";
constexpr std::string_view kInvalidAction = "Invalid action";

std::vector<std::string> resolve_toolset(const Task& task, const EngineDeps& deps) {
    if (!task.toolset.empty())
        return task.toolset;
    if (!deps.toolset.empty())
        return deps.toolset;
    return deps.tools->names();
}

void check_deps(const EngineDeps& deps) {
    if (!deps.templates || !deps.tools || !deps.model)
        throw Error(ErrorCode::Config, "engine needs templates, a tool registry and a model client");
}

const std::vector<prompting::Exemplar>& exemplars_of(const EngineDeps& deps) {
    static const std::vector<prompting::Exemplar> none;
    return deps.exemplars ? *deps.exemplars : none;
}

model::ModelRequest request_for(const EngineDeps& deps, std::string prompt) {
    model::ModelRequest req;
    req.prompt = std::move(prompt);
    req.model_id = deps.options.model_id;
    req.temperature = deps.options.temperature;
    req.max_output_tokens = deps.options.max_output_tokens;
    return req;
}

model::CallContext call_for(accounting::TokenLedger& ledger, CallKind kind, const prompting::ComposedPrompt& p) {
    return model::CallContext{&ledger, kind, true, p.question, p.exemplars, p.steps};
}

tools::InvokeContext invoke_ctx(const EngineDeps& deps, accounting::TokenLedger* ledger) {
    return tools::InvokeContext{deps.model, ledger, deps.options.model_id, deps.options.temperature};
}

// Tools outside the run's toolset are treated as unknown.
tools::Invocation invoke_in_toolset(const std::string& name, const std::string& input,
                                    const std::vector<std::string>& toolset, const EngineDeps& deps,
                                    accounting::TokenLedger* ledger) {
    static const tools::ToolRegistry empty;
    bool allowed = std::find(toolset.begin(), toolset.end(), name) != toolset.end();
    return tools::invoke(name, input, allowed ? *deps.tools : empty, deps.injection, invoke_ctx(deps, ledger),
                         deps.options.tool_policy);
}

ExecutionRecord start_record(const Task& task, Paradigm paradigm) {
    if (text::trim(task.question).empty())
        throw Error(ErrorCode::EmptyTask, "task " + task.id + " has an empty question");
    ExecutionRecord rec;
    rec.task_id = task.id;
    rec.paradigm = paradigm;
    rec.question = task.question;
    return rec;
}

void note_tool_failure(ExecutionRecord& rec, const ToolCall& call) {
    if (call.failed && !call.error.empty())
        rec.warnings.push_back("ToolFailure: " + call.tool + "[" + call.input + "]: " + call.error);
}

std::string_view after_label(std::string_view line, std::string_view label) {
    // `Label:` or `Label <n>:`, case-insensitive.
    if (!text::starts_with_icase(line, label))
        return {};
    auto rest = line.substr(label.size());
    std::size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || std::isdigit(static_cast<unsigned char>(rest[i]))))
        ++i;
    if (i >= rest.size() || rest[i] != ':')
        return {};
    return rest.substr(i + 1);
}

bool is_label(std::string_view line, std::string_view label) {
    if (!text::starts_with_icase(line, label))
        return false;
    auto rest = line.substr(label.size());
    std::size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || std::isdigit(static_cast<unsigned char>(rest[i]))))
        ++i;
    return i < rest.size() && rest[i] == ':';
}

} // namespace

std::string_view to_string(Paradigm p) {
    switch (p) {
    case Paradigm::rewoo: return "rewoo";
    case Paradigm::react: return "react";
    case Paradigm::direct: return "direct";
    case Paradigm::cot: return "cot";
    }
    return "?";
}

Paradigm paradigm_from_string(std::string_view s) {
    auto lower = text::to_lower(s);
    if (lower == "rewoo") return Paradigm::rewoo;
    if (lower == "react") return Paradigm::react;
    if (lower == "direct") return Paradigm::direct;
    if (lower == "cot") return Paradigm::cot;
    throw Error(ErrorCode::Config, "unknown paradigm: " + std::string(s));
}

ReactStep parse_react_step(std::string_view completion) {
    auto lines = text::split_lines(completion);
    std::size_t action_line = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_label(text::trim(lines[i]), "Action")) {
            action_line = i;
            break;
        }
    }
    if (action_line == lines.size())
        throw Error(ErrorCode::NoAction, "no Action in completion");

    ReactStep step;
    std::vector<std::string> thought;
    bool in_thought = false;
    for (std::size_t i = 0; i < action_line; ++i) {
        auto line = text::trim(lines[i]);
        if (!in_thought && is_label(line, "Thought")) {
            in_thought = true;
            line = text::trim(after_label(line, "Thought"));
        }
        if (!line.empty())
            thought.emplace_back(line);
    }
    step.thought = text::join(thought, "\n");

    // The action may wrap onto later lines; it ends at an Observation label.
    std::vector<std::string> action_parts{std::string(text::trim(after_label(text::trim(lines[action_line]), "Action")))};
    for (std::size_t i = action_line + 1; i < lines.size(); ++i) {
        auto line = text::trim(lines[i]);
        if (is_label(line, "Observation") || is_label(line, "Thought"))
            break;
        action_parts.emplace_back(lines[i]);
    }
    auto action = std::string(text::trim(text::join(action_parts, "\n")));

    std::size_t name_len = 0;
    while (name_len < action.size() && std::isalnum(static_cast<unsigned char>(action[name_len])))
        ++name_len;
    auto name = std::string_view(action).substr(0, name_len);
    auto rest = text::trim_left(std::string_view(action).substr(name_len));
    auto close = rest.rfind(']');
    if (!blueprint::is_identifier(name) || rest.empty() || rest.front() != '[' || close == std::string_view::npos)
        throw Error(ErrorCode::BadToolSyntax, "malformed action `" + action + "`");

    step.action_input = std::string(rest.substr(1, close - 1));
    if (text::to_lower(name) == "finish") {
        step.finish = true;
        step.action_tool = "Finish";
    } else {
        step.action_tool = std::string(name);
    }
    return step;
}

ExecutionRecord run_rewoo(const Task& task, const EngineDeps& deps) {
    check_deps(deps);
    auto rec = start_record(task, Paradigm::rewoo);
    auto toolset = resolve_toolset(task, deps);
    auto descriptions = deps.tools->describe(toolset);

    // Plan.
    auto planner = prompting::compose_planner_prompt(*deps.templates, descriptions, exemplars_of(deps), task.question);
    auto plan = deps.model->complete(request_for(deps, planner.text), call_for(rec.ledger, CallKind::planner, planner));

    blueprint::ParseOutcome parsed;
    try {
        parsed = blueprint::parse_blueprint(plan.text, deps.options.parse_mode);
    } catch (const Error& e) {
        throw Error(ErrorCode::PlannerParseFailure, e.what());
    }
    for (auto& w : parsed.warnings)
        rec.warnings.push_back("Planner: " + w);
    const auto& bp = parsed.blueprint;

    std::vector<std::vector<EvidenceVarId>> waves;
    try {
        auto graph = blueprint::build_dep_graph(bp);
        if (deps.options.parallel_waves) {
            waves = blueprint::execution_waves(graph, bp);
        } else {
            for (const auto& var : graph.topo_order)
                waves.push_back({var});
        }
    } catch (const Error& e) {
        if (deps.options.parse_mode == blueprint::ParseMode::strict)
            throw Error(ErrorCode::PlannerParseFailure, e.what());
        rec.warnings.push_back(std::string("Planner: ") + e.what() + "; executing in source order");
        waves.clear();
        for (const auto& step : bp.steps)
            waves.push_back({step.var});
    }

    std::map<EvidenceVarId, const blueprint::PlanStep*> by_var;
    for (const auto& step : bp.steps)
        by_var.emplace(step.var, &step);

    // Work.
    tools::EvidenceMap evidence;
    std::map<EvidenceVarId, ToolCall> calls;
    std::map<EvidenceVarId, accounting::TokenLedger> step_ledgers;
    for (const auto& wave : waves) {
        struct Job {
            EvidenceVarId var;
            std::string input;
        };
        std::vector<Job> jobs;
        for (const auto& var : wave) {
            const auto& step = *by_var.at(var);
            auto sub = tools::substitute_evidence(step.tool_input, evidence, deps.options.tool_policy);
            for (auto& w : sub.warnings)
                rec.warnings.push_back(var.str() + ": " + w);
            jobs.push_back({var, std::move(sub.text)});
        }

        std::vector<tools::Invocation> results(jobs.size());
        std::vector<accounting::TokenLedger*> ledgers;
        for (const auto& job : jobs)
            ledgers.push_back(&step_ledgers[job.var]);
        auto run_job = [&](std::size_t i) {
            const auto& step = *by_var.at(jobs[i].var);
            results[i] = invoke_in_toolset(step.tool_name, jobs[i].input, toolset, deps, ledgers[i]);
        };
        if (deps.options.parallel_waves && jobs.size() > 1) {
            std::vector<std::future<void>> pending;
            for (std::size_t i = 0; i < jobs.size(); ++i)
                pending.push_back(std::async(std::launch::async, run_job, i));
            for (auto& f : pending)
                f.get();
        } else {
            for (std::size_t i = 0; i < jobs.size(); ++i)
                run_job(i);
        }

        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const auto& step = *by_var.at(jobs[i].var);
            evidence.insert(jobs[i].var, results[i].evidence);
            calls.emplace(jobs[i].var, ToolCall{jobs[i].var, step.tool_name, jobs[i].input, results[i].evidence,
                                                results[i].failed, results[i].error});
        }
    }

    // Source order for the trace, the tool ledgers and the solver pairs.
    std::vector<std::pair<blueprint::PlanStep, std::string>> pairs;
    for (const auto& step : bp.steps) {
        if (auto it = calls.find(step.var); it != calls.end()) {
            note_tool_failure(rec, it->second);
            rec.tool_calls.push_back(it->second);
        }
        if (auto it = step_ledgers.find(step.var); it != step_ledgers.end())
            rec.ledger.append(it->second);
        if (const auto* ev = evidence.find(step.var))
            pairs.emplace_back(step, *ev);
    }

    // Solve.
    auto solver = prompting::compose_solver_prompt(*deps.templates, task.question, pairs);
    auto solved = deps.model->complete(request_for(deps, solver.text), call_for(rec.ledger, CallKind::solver, solver));
    rec.answer = std::string(text::trim(solved.text));
    if (rec.answer.empty())
        rec.warnings.emplace_back("EmptyAnswer: solver returned no text");

    rec.blueprint = bp;
    rec.evidence = std::move(evidence);
    rec.steps = step_count(rec);
    return rec;
}

ExecutionRecord run_react(const Task& task, const EngineDeps& deps, std::size_t max_steps) {
    check_deps(deps);
    if (max_steps == 0)
        throw Error(ErrorCode::Config, "max_steps must be positive");
    auto rec = start_record(task, Paradigm::react);
    auto toolset = resolve_toolset(task, deps);
    auto descriptions = deps.tools->describe(toolset);

    std::vector<prompting::TaoTurn> history;
    std::vector<ReactStep> trace;
    bool finished = false;
    for (std::size_t iter = 0; iter < max_steps && !finished; ++iter) {
        auto prompt = prompting::compose_react_prompt(*deps.templates, descriptions, exemplars_of(deps),
                                                      task.question, history);
        auto req = request_for(deps, prompt.text);
        req.stop_sequences.emplace_back(kReactStop);
        model::ModelResponse resp;
        try {
            resp = deps.model->complete(req, call_for(rec.ledger, CallKind::react_step, prompt));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ContextOverflow)
                throw;
            rec.warnings.push_back(e.what());
            break;
        }

        ReactStep step;
        try {
            step = parse_react_step(resp.text);
        } catch (const Error& e) {
            if (deps.options.parse_mode == blueprint::ParseMode::strict)
                throw;
            rec.warnings.push_back("Step " + std::to_string(iter + 1) + ": " + e.what());
            step = ReactStep{};
            step.thought = std::string(text::trim(resp.text));
            step.observation = std::string(kInvalidAction);
            history.push_back({step.thought, "", step.observation});
            trace.push_back(std::move(step));
            continue;
        }

        if (step.finish) {
            rec.answer = std::string(text::trim(step.action_input));
            trace.push_back(std::move(step));
            finished = true;
            break;
        }

        auto result = invoke_in_toolset(step.action_tool, step.action_input, toolset, deps, &rec.ledger);
        step.observation = result.evidence;
        ToolCall call{std::nullopt, step.action_tool, step.action_input, result.evidence, result.failed, result.error};
        note_tool_failure(rec, call);
        rec.tool_calls.push_back(std::move(call));
        history.push_back({step.thought, step.action_tool + "[" + step.action_input + "]", step.observation});
        trace.push_back(std::move(step));
    }
    if (!finished)
        rec.warnings.push_back("StepLimit: no Finish action within " + std::to_string(max_steps) + " steps");

    rec.react_trace = std::move(trace);
    rec.steps = step_count(rec);
    return rec;
}

ExecutionRecord run_single(const Task& task, const EngineDeps& deps, SingleStyle style) {
    if (!deps.templates || !deps.model)
        throw Error(ErrorCode::Config, "engine needs templates and a model client");
    auto rec = start_record(task, style == SingleStyle::direct ? Paradigm::direct : Paradigm::cot);

    auto prompt = style == SingleStyle::direct
                      ? prompting::compose_direct_prompt(*deps.templates, task.question)
                      : prompting::compose_cot_prompt(*deps.templates, exemplars_of(deps), task.question);
    auto resp = deps.model->complete(request_for(deps, prompt.text), call_for(rec.ledger, CallKind::single, prompt));

    if (style == SingleStyle::direct) {
        rec.answer = std::string(text::trim(resp.text));
    } else {
        std::vector<std::string> lines;
        for (auto line : text::split_lines(resp.text)) {
            line = text::trim(line);
            if (!line.empty())
                lines.emplace_back(line);
        }
        if (!lines.empty() && text::starts_with_icase(lines.back(), "answer:")) {
            rec.answer = std::string(text::trim(std::string_view(lines.back()).substr(7)));
            lines.pop_back();
        } else if (!lines.empty()) {
            rec.answer = lines.back();
        }
        rec.reasoning = std::move(lines);
    }
    if (rec.answer.empty())
        rec.warnings.emplace_back("EmptyAnswer: model returned no answer");
    rec.steps = step_count(rec);
    return rec;
}

ExecutionRecord run_task(const Task& task, Paradigm paradigm, const EngineDeps& deps) {
    switch (paradigm) {
    case Paradigm::rewoo: return run_rewoo(task, deps);
    case Paradigm::react: return run_react(task, deps);
    case Paradigm::direct: return run_single(task, deps, SingleStyle::direct);
    case Paradigm::cot: return run_single(task, deps, SingleStyle::cot);
    }
    throw Error(ErrorCode::Config, "unknown paradigm");
}

std::size_t step_count(const ExecutionRecord& rec) {
    switch (rec.paradigm) {
    case Paradigm::rewoo: return (rec.blueprint ? rec.blueprint->steps.size() : 0) + 1;
    case Paradigm::react: return rec.react_trace ? rec.react_trace->size() : 0;
    case Paradigm::direct: return 1;
    case Paradigm::cot: return std::max<std::size_t>(1, rec.reasoning.size());
    }
    return 0;
}

bool ExecutionRecord::operator==(const ExecutionRecord& o) const {
    auto same_blueprint = [&] {
        if (blueprint.has_value() != o.blueprint.has_value())
            return false;
        return !blueprint ||
               (blueprint->structurally_equal(*o.blueprint) && blueprint->source_text == o.blueprint->source_text);
    };
    return task_id == o.task_id && paradigm == o.paradigm && question == o.question && same_blueprint() &&
           evidence == o.evidence && react_trace == o.react_trace && reasoning == o.reasoning &&
           tool_calls == o.tool_calls && answer == o.answer && ledger == o.ledger && steps == o.steps &&
           warnings == o.warnings;
}

void to_json(nlohmann::json& j, const ExecutionRecord& rec) {
    j = nlohmann::json::object();
    j["task_id"] = rec.task_id;
    j["paradigm"] = to_string(rec.paradigm);
    j["question"] = rec.question;
    if (rec.blueprint) {
        auto steps = nlohmann::json::array();
        for (const auto& s : rec.blueprint->steps)
            steps.push_back({{"description", s.description},
                             {"var", s.var.str()},
                             {"tool", s.tool_name},
                             {"input", s.tool_input}});
        j["blueprint"] = {{"source_text", rec.blueprint->source_text}, {"steps", steps}};
    } else {
        j["blueprint"] = nullptr;
    }
    if (rec.evidence) {
        auto ev = nlohmann::json::array();
        for (const auto& [var, text] : *rec.evidence)
            ev.push_back({{"var", var.str()}, {"text", text}});
        j["evidence"] = ev;
    } else {
        j["evidence"] = nullptr;
    }
    if (rec.react_trace) {
        auto trace = nlohmann::json::array();
        for (const auto& s : *rec.react_trace)
            trace.push_back({{"thought", s.thought},
                             {"finish", s.finish},
                             {"action_tool", s.action_tool},
                             {"action_input", s.action_input},
                             {"observation", s.observation}});
        j["react_trace"] = trace;
    } else {
        j["react_trace"] = nullptr;
    }
    j["reasoning"] = rec.reasoning;
    auto calls = nlohmann::json::array();
    for (const auto& c : rec.tool_calls) {
        nlohmann::json call = {{"tool", c.tool}, {"input", c.input}, {"output", c.output}, {"failed", c.failed}};
        call["var"] = c.var ? nlohmann::json(c.var->str()) : nlohmann::json(nullptr);
        if (!c.error.empty())
            call["error"] = c.error;
        calls.push_back(std::move(call));
    }
    j["tool_calls"] = calls;
    j["answer"] = rec.answer;
    j["ledger"] = rec.ledger;
    j["steps"] = rec.steps;
    j["warnings"] = rec.warnings;
}

void from_json(const nlohmann::json& j, ExecutionRecord& rec) {
    auto var_of = [](const nlohmann::json& v) {
        auto parsed = blueprint::parse_var(v.get<std::string>());
        if (!parsed)
            throw Error(ErrorCode::Format, "bad evidence variable in record: " + v.dump());
        return *parsed;
    };

    rec = ExecutionRecord{};
    j.at("task_id").get_to(rec.task_id);
    rec.paradigm = paradigm_from_string(j.at("paradigm").get<std::string>());
    rec.question = j.value("question", "");
    if (j.contains("blueprint") && !j["blueprint"].is_null()) {
        blueprint::Blueprint bp;
        bp.source_text = j["blueprint"].value("source_text", "");
        for (const auto& s : j["blueprint"].at("steps"))
            bp.steps.push_back({s.at("description").get<std::string>(), var_of(s.at("var")),
                                s.at("tool").get<std::string>(), s.at("input").get<std::string>()});
        rec.blueprint = std::move(bp);
    }
    if (j.contains("evidence") && !j["evidence"].is_null()) {
        tools::EvidenceMap ev;
        for (const auto& e : j["evidence"])
            ev.insert(var_of(e.at("var")), e.at("text").get<std::string>());
        rec.evidence = std::move(ev);
    }
    if (j.contains("react_trace") && !j["react_trace"].is_null()) {
        std::vector<ReactStep> trace;
        for (const auto& s : j["react_trace"])
            trace.push_back({s.at("thought").get<std::string>(), s.at("finish").get<bool>(),
                             s.at("action_tool").get<std::string>(), s.at("action_input").get<std::string>(),
                             s.at("observation").get<std::string>()});
        rec.react_trace = std::move(trace);
    }
    rec.reasoning = j.value("reasoning", std::vector<std::string>{});
    for (const auto& c : j.value("tool_calls", nlohmann::json::array())) {
        ToolCall call;
        if (c.contains("var") && !c["var"].is_null())
            call.var = var_of(c["var"]);
        c.at("tool").get_to(call.tool);
        c.at("input").get_to(call.input);
        c.at("output").get_to(call.output);
        call.failed = c.value("failed", false);
        call.error = c.value("error", "");
        rec.tool_calls.push_back(std::move(call));
    }
    j.at("answer").get_to(rec.answer);
    rec.ledger = j.at("ledger").get<accounting::TokenLedger>();
    j.at("steps").get_to(rec.steps);
    rec.warnings = j.value("warnings", std::vector<std::string>{});
}

} // namespace planwork::engine
