// SPDX-License-Identifier: Apache-2.0
#include "planwork/prompting.hpp"

#include "planwork/error.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"

#include <json.hpp>

#include <filesystem>

namespace planwork::prompting {

namespace {

bool at_line_start(std::string_view s, std::size_t i) { return i == 0 || s[i - 1] == '\n'; }

Error missing(const std::string& what) { return Error(ErrorCode::MissingPlaceholder, what); }

// Finds the `{{/name}}` matching an open section, honoring nested sections
// with the same name.
std::size_t find_section_end(std::string_view tpl, std::size_t from, std::string_view name) {
    const std::string open = "{{#" + std::string(name) + "}}";
    const std::string close = "{{/" + std::string(name) + "}}";
    int depth = 1;
    std::size_t pos = from;
    while (true) {
        auto next_close = tpl.find(close, pos);
        if (next_close == std::string_view::npos)
            throw missing("unterminated section {{#" + std::string(name) + "}}");
        auto next_open = tpl.find(open, pos);
        if (next_open != std::string_view::npos && next_open < next_close) {
            ++depth;
            pos = next_open + open.size();
            continue;
        }
        if (--depth == 0)
            return next_close;
        pos = next_close + close.size();
    }
}

std::string thoughts_as_reasoning(const Exemplar& ex) {
    std::vector<std::string> lines;
    std::string answer;
    for (auto line : text::split_lines(*ex.tao_demo)) {
        line = text::trim(line);
        if (line.starts_with("Thought:")) {
            lines.emplace_back(text::trim(line.substr(8)));
        } else if (line.starts_with("Action:")) {
            auto action = text::trim(line.substr(7));
            if (text::starts_with_icase(action, "finish[") && action.ends_with("]"))
                answer = std::string(action.substr(7, action.size() - 8));
        }
    }
    std::string out = "Question: " + ex.question + "\n" + text::join(lines, "\n");
    if (!answer.empty())
        out += "\nAnswer: " + answer;
    return out;
}

PromptTemplate read_templates(const std::filesystem::path& dir) {
    auto read = [&](const char* name) { return text::read_file((dir / name).string()); };
    PromptTemplate tpl{read("planner.txt"), read("solver.txt"), read("react.txt"), read("direct.txt"),
                       read("cot.txt")};
    require_placeholders(tpl.planner_context, "planner", {"tools", "exemplars", "task"});
    require_placeholders(tpl.solver_context, "solver", {"plan_evidence", "task"});
    require_placeholders(tpl.react_context, "react", {"tools", "exemplars", "task", "history"});
    require_placeholders(tpl.direct_context, "direct", {"task"});
    require_placeholders(tpl.cot_context, "cot", {"exemplars", "task"});
    return tpl;
}

void require_task(std::string_view question) {
    if (text::trim(question).empty())
        throw Error(ErrorCode::EmptyTask, "question is empty");
}

} // namespace

std::string render_template(std::string_view tpl, const Vars& vars) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        auto open = tpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, open - pos));
        auto close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos)
            throw missing("unterminated tag at offset " + std::to_string(open));
        auto tag = tpl.substr(open + 2, close - open - 2);
        auto after = close + 2;

        if (tag.starts_with('#')) {
            auto name = tag.substr(1);
            bool standalone_open = at_line_start(tpl, open) && after < tpl.size() && tpl[after] == '\n';
            auto body_begin = standalone_open ? after + 1 : after;
            auto end = find_section_end(tpl, body_begin, name);
            auto end_after = end + name.size() + 5;
            bool standalone_close =
                at_line_start(tpl, end) && end_after < tpl.size() && tpl[end_after] == '\n';
            auto it = vars.find(name);
            if (it == vars.end())
                throw missing("no value for section {{#" + std::string(name) + "}}");
            if (!it->second.empty())
                out += render_template(tpl.substr(body_begin, end - body_begin), vars);
            pos = standalone_close ? end_after + 1 : end_after;
            continue;
        }
        if (tag.starts_with('/'))
            throw missing("unmatched section close {{" + std::string(tag) + "}}");

        auto it = vars.find(tag);
        if (it == vars.end())
            throw missing("no value for {{" + std::string(tag) + "}}");
        out += it->second;
        pos = after;
    }
    return out;
}

void require_placeholders(std::string_view tpl, std::string_view which,
                          std::initializer_list<std::string_view> names) {
    for (auto name : names) {
        if (tpl.find("{{" + std::string(name) + "}}") == std::string_view::npos)
            throw missing(std::string(which) + " template lacks {{" + std::string(name) + "}}");
    }
}

PromptTemplate PromptTemplate::load(const std::string& dir) { return read_templates(dir); }

PromptTemplate PromptTemplate::defaults() { return read_templates(data_path("templates")); }

std::string render_tool_list(const std::vector<ToolDescription>& tools) {
    std::vector<std::string> lines;
    lines.reserve(tools.size());
    for (std::size_t i = 0; i < tools.size(); ++i)
        lines.push_back("(" + std::to_string(i + 1) + ") " + tools[i].name + "[input]: " + tools[i].description);
    return text::join(lines, "\n");
}

std::string render_planner_exemplars(const std::vector<Exemplar>& exemplars) {
    std::vector<std::string> blocks;
    for (const auto& ex : exemplars)
        if (ex.planner_demo)
            blocks.push_back("Task: " + ex.question + "\n" + std::string(text::trim(*ex.planner_demo)));
    return text::join(blocks, "\n\n");
}

std::string render_tao_exemplars(const std::vector<Exemplar>& exemplars) {
    std::vector<std::string> blocks;
    for (const auto& ex : exemplars)
        if (ex.tao_demo)
            blocks.push_back("Question: " + ex.question + "\n" + std::string(text::trim(*ex.tao_demo)));
    return text::join(blocks, "\n\n");
}

std::string render_plan_evidence(const blueprint::PlanStep& step, std::string_view evidence) {
    return "Plan: " + step.description + "\nEvidence:\n" + std::string(evidence);
}

std::string render_tao_turn(const TaoTurn& turn) {
    std::string out = "Thought: " + turn.thought + "\nAction: " + turn.action + "\n";
    if (!turn.observation.empty())
        out += "Observation: " + turn.observation + "\n";
    return out;
}

ComposedPrompt compose_planner_prompt(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools,
                                      const std::vector<Exemplar>& exemplars, std::string_view question) {
    require_task(question);
    if (tools.empty())
        throw Error(ErrorCode::Format, "planner prompt needs at least one tool");
    require_placeholders(tpl.planner_context, "planner", {"tools", "exemplars", "task"});
    ComposedPrompt p;
    p.question = std::string(question);
    p.exemplars = render_planner_exemplars(exemplars);
    p.text = render_template(tpl.planner_context,
                             {{"tools", render_tool_list(tools)}, {"exemplars", p.exemplars}, {"task", p.question}});
    return p;
}

ComposedPrompt compose_solver_prompt(const PromptTemplate& tpl, std::string_view question,
                                     const std::vector<std::pair<blueprint::PlanStep, std::string>>& pairs) {
    require_task(question);
    require_placeholders(tpl.solver_context, "solver", {"plan_evidence", "task"});
    std::vector<std::string> rendered;
    rendered.reserve(pairs.size());
    for (const auto& [step, evidence] : pairs)
        rendered.push_back(render_plan_evidence(step, evidence));
    ComposedPrompt p;
    p.question = std::string(question);
    p.steps = text::join(rendered, "\n");
    p.text = render_template(tpl.solver_context, {{"plan_evidence", p.steps}, {"task", p.question}});
    return p;
}

ComposedPrompt compose_react_prompt(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools,
                                    const std::vector<Exemplar>& exemplars, std::string_view question,
                                    const std::vector<TaoTurn>& history) {
    require_task(question);
    require_placeholders(tpl.react_context, "react", {"tools", "exemplars", "task", "history"});
    ComposedPrompt p;
    p.question = std::string(question);
    p.exemplars = render_tao_exemplars(exemplars);
    for (const auto& turn : history)
        p.steps += render_tao_turn(turn);
    p.text = render_template(tpl.react_context, {{"tools", render_tool_list(tools)},
                                                 {"exemplars", p.exemplars},
                                                 {"task", p.question},
                                                 {"history", p.steps}});
    return p;
}

ComposedPrompt compose_direct_prompt(const PromptTemplate& tpl, std::string_view question) {
    require_task(question);
    ComposedPrompt p;
    p.question = std::string(question);
    p.text = render_template(tpl.direct_context, {{"task", p.question}});
    return p;
}

ComposedPrompt compose_cot_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars,
                                  std::string_view question) {
    require_task(question);
    ComposedPrompt p;
    p.question = std::string(question);
    for (const auto& ex : exemplars) {
        if (ex.tao_demo) {
            p.exemplars = thoughts_as_reasoning(ex);
            break;
        }
    }
    p.text = render_template(tpl.cot_context, {{"exemplars", p.exemplars}, {"task", p.question}});
    return p;
}

std::string planner_instruction(const PromptTemplate& tpl, const std::vector<ToolDescription>& tools) {
    auto rendered =
        render_template(tpl.planner_context, {{"tools", render_tool_list(tools)}, {"exemplars", ""}, {"task", ""}});
    return std::string(text::trim_right(rendered));
}

void validate_exemplar(const Exemplar& ex) {
    if (!ex.planner_demo && !ex.tao_demo)
        throw Error(ErrorCode::Format, "exemplar has neither planner_demo nor tao_demo: " + ex.question);
    if (ex.planner_demo)
        blueprint::parse_blueprint(*ex.planner_demo, blueprint::ParseMode::strict);
}

std::vector<Exemplar> load_exemplars(const std::string& path) {
    std::vector<Exemplar> out;
    auto contents = text::read_file(path);
    std::size_t line_no = 0;
    for (auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            Exemplar ex;
            ex.question = j.at("question").get<std::string>();
            if (j.contains("planner_demo") && !j["planner_demo"].is_null())
                ex.planner_demo = j["planner_demo"].get<std::string>();
            if (j.contains("tao_demo") && !j["tao_demo"].is_null())
                ex.tao_demo = j["tao_demo"].get<std::string>();
            ex.source_tag = j.value("source_tag", "");
            validate_exemplar(ex);
            out.push_back(std::move(ex));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace planwork::prompting
