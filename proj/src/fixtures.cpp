// SPDX-License-Identifier: Apache-2.0
#include "planwork/fixtures.hpp"

#include "planwork/error.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <filesystem>

namespace planwork::fixtures {

namespace fs = std::filesystem;

namespace {

Error bad(const std::string& where, const std::string& what) { return Error(ErrorCode::Format, where + ": " + what); }

std::optional<std::string> section_name(std::string_view line) {
    line = text::trim(line);
    if (line.size() < 8 || !line.starts_with("--- ") || !line.ends_with(" ---"))
        return std::nullopt;
    return std::string(text::trim(line.substr(4, line.size() - 8)));
}

// Drops leading and trailing blank lines, keeps inner layout.
std::string block_text(const std::vector<std::string_view>& lines) {
    std::size_t begin = 0, end = lines.size();
    while (begin < end && text::trim(lines[begin]).empty())
        ++begin;
    while (end > begin && text::trim(lines[end - 1]).empty())
        --end;
    std::vector<std::string> kept;
    for (std::size_t i = begin; i < end; ++i)
        kept.emplace_back(text::trim_right(lines[i]));
    return text::join(kept, "\n");
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        auto item = text::trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!item.empty())
            out.emplace_back(item);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::map<int, std::string> parse_evidence(const std::vector<std::string_view>& lines, const std::string& where) {
    std::map<int, std::string> out;
    std::optional<int> current;
    std::vector<std::string_view> body;
    auto flush = [&] {
        if (current && !out.emplace(*current, block_text(body)).second)
            throw bad(where, "evidence #E" + std::to_string(*current) + " given twice");
        body.clear();
    };
    for (auto line : lines) {
        auto t = text::trim(line);
        if (t.ends_with(':')) {
            if (auto var = blueprint::parse_var(t.substr(0, t.size() - 1))) {
                flush();
                current = var->index();
                continue;
            }
        }
        if (!current) {
            if (!t.empty())
                throw bad(where, "evidence text before the first #E marker");
            continue;
        }
        body.push_back(line);
    }
    flush();
    return out;
}

void parse_tao(const std::vector<std::string_view>& lines, Trajectory& t, const std::string& where) {
    struct Segment {
        std::string label;
        std::vector<std::string_view> lines;
    };
    std::vector<Segment> segs;
    for (auto line : lines) {
        std::string label;
        for (const char* l : {"Thought", "Action", "Observation"})
            if (line.starts_with(std::string(l) + ":"))
                label = l;
        if (!label.empty()) {
            segs.push_back({label, {line}});
        } else if (!segs.empty()) {
            segs.back().lines.push_back(line);
        } else if (!text::trim(line).empty()) {
            throw bad(where, "trajectory text before the first Thought");
        }
    }
    for (std::size_t i = 0; i < segs.size();) {
        if (segs[i].label != "Thought" || i + 1 >= segs.size() || segs[i + 1].label != "Action")
            throw bad(where, "expected Thought followed by Action at segment " + std::to_string(i + 1));
        t.completions.push_back(block_text(segs[i].lines) + "\n" + block_text(segs[i + 1].lines));
        i += 2;
        if (i < segs.size() && segs[i].label == "Observation") {
            auto obs = block_text(segs[i].lines);
            t.observations.emplace_back(text::trim(std::string_view(obs).substr(12)));
            ++i;
        } else {
            t.observations.emplace_back();
        }
    }
    if (t.completions.empty())
        throw bad(where, "empty trajectory");
}

engine::Task task_of(const Trajectory& t) { return engine::Task{t.task_id, t.question, t.gold, {}, {}}; }

// What the scripted model should say for one trajectory: LLM-tool prompts
// map to their recorded answer, everything else is served in order.
struct Script {
    std::map<std::string, std::string> tool_prompts;
    std::deque<std::string> queue;
};

std::shared_ptr<model::ScriptedBackend> scripted(std::shared_ptr<Script> script) {
    return std::make_shared<model::ScriptedBackend>([script](const model::ModelRequest& req) {
        if (auto it = script->tool_prompts.find(req.prompt); it != script->tool_prompts.end())
            return it->second;
        if (script->queue.empty())
            throw Error(ErrorCode::ScriptExhausted, "trajectory script has no more responses");
        auto next = std::move(script->queue.front());
        script->queue.pop_front();
        return next;
    });
}

void check_record(const engine::ExecutionRecord& rec, const Trajectory& t) {
    const auto& where = t.name;
    if (!rec.warnings.empty())
        throw bad(where, "run produced warnings: " + text::join(rec.warnings, "; "));
    if (rec.answer != text::trim(t.answer))
        throw bad(where, "answer `" + rec.answer + "` differs from trajectory");
    if (t.paradigm == engine::Paradigm::rewoo) {
        if (!rec.evidence || rec.evidence->size() != t.evidence.size())
            throw bad(where, "evidence count differs from trajectory");
        for (const auto& [var, ev] : *rec.evidence)
            if (ev != t.evidence.at(var.index()))
                throw bad(where, var.str() + " evidence differs from trajectory: `" + ev + "`");
    } else {
        if (!rec.react_trace || rec.react_trace->size() != t.completions.size())
            throw bad(where, "trace length differs from trajectory");
        for (std::size_t i = 0; i < t.observations.size(); ++i)
            if ((*rec.react_trace)[i].observation != t.observations[i])
                throw bad(where, "observation " + std::to_string(i + 1) + " differs from trajectory: `" +
                                     (*rec.react_trace)[i].observation + "`");
    }
}

} // namespace

Trajectory parse_trajectory(std::string_view src) {
    Trajectory t;
    std::map<std::string, std::vector<std::string_view>> sections;
    std::vector<std::string_view>* current = nullptr;
    for (auto line : text::split_lines(src)) {
        if (auto name = section_name(line)) {
            current = &sections[*name];
            continue;
        }
        if (current) {
            current->push_back(line);
            continue;
        }
        auto t_line = text::trim(line);
        if (t_line.empty())
            continue;
        auto colon = t_line.find(':');
        if (colon == std::string_view::npos)
            throw bad("header", "expected `key: value`, got `" + std::string(t_line) + "`");
        auto key = text::trim(t_line.substr(0, colon));
        auto value = std::string(text::trim(t_line.substr(colon + 1)));
        if (key == "name") t.name = value;
        else if (key == "paradigm") t.paradigm = engine::paradigm_from_string(value);
        else if (key == "benchmark") t.benchmark = value;
        else if (key == "id") t.task_id = value;
        else if (key == "exemplars") t.exemplars = value;
        else if (key == "tools") t.tools = split_list(value);
        else throw bad("header", "unknown key `" + std::string(key) + "`");
    }
    const auto where = t.name.empty() ? std::string("trajectory") : t.name;
    if (t.benchmark.empty() || t.task_id.empty())
        throw bad(where, "header needs benchmark and id");
    if (t.tools.empty())
        throw bad(where, "header needs a tools list");

    auto take = [&](const char* name, bool required) {
        auto it = sections.find(name);
        if (it == sections.end()) {
            if (required)
                throw bad(where, std::string("missing section `") + name + "`");
            return std::string();
        }
        return block_text(it->second);
    };
    t.question = take("Question", true);
    if (t.paradigm == engine::Paradigm::rewoo) {
        t.planner = take("Planner", true);
        t.answer = take("Answer", true);
        auto it = sections.find("Evidence");
        if (it == sections.end())
            throw bad(where, "missing section `Evidence`");
        t.evidence = parse_evidence(it->second, where);
    } else if (t.paradigm == engine::Paradigm::react) {
        auto it = sections.find("Trajectory");
        if (it == sections.end())
            throw bad(where, "missing section `Trajectory`");
        parse_tao(it->second, t, where);
        auto last = engine::parse_react_step(t.completions.back());
        if (!last.finish)
            throw bad(where, "trajectory does not end with Finish");
        t.answer = std::string(text::trim(last.action_input));
    } else {
        throw bad(where, "only rewoo and react trajectories are supported");
    }
    t.gold = take("Gold", false);
    if (t.gold.empty())
        t.gold = std::string(text::trim(t.answer));
    return t;
}

Trajectory load_trajectory(const std::string& path) {
    try {
        return parse_trajectory(text::read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::vector<Trajectory> load_trajectories(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    std::vector<Trajectory> out;
    for (const auto& p : paths)
        out.push_back(load_trajectory(p));
    return out;
}

ReplayConfig load_replay_config(const std::string& dir) {
    ReplayConfig cfg;
    auto path = (fs::path(dir) / "config.json").string();
    if (!fs::exists(path))
        return cfg;
    try {
        auto j = nlohmann::json::parse(text::read_file(path));
        cfg.model = j.value("model", cfg.model);
        cfg.exemplars = j.value("exemplars", "");
        cfg.tokenizer = j.value("tokenizer", cfg.tokenizer);
        if (j.contains("toolsets"))
            cfg.toolsets = j["toolsets"].get<std::map<std::string, std::vector<std::string>>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, path + ": " + e.what());
    }
    return cfg;
}

void save_replay_config(const ReplayConfig& cfg, const std::string& dir) {
    nlohmann::json j{{"model", cfg.model}, {"exemplars", cfg.exemplars}, {"tokenizer", cfg.tokenizer},
                     {"toolsets", cfg.toolsets}};
    text::write_file((fs::path(dir) / "config.json").string(), j.dump(2) + "\n");
}

BuildSummary build_fixtures(const BuildOptions& opts) {
    auto all = load_trajectories(opts.trajectories_dir);
    std::map<std::string, std::vector<const Trajectory*>> groups;
    for (const auto& t : all)
        groups[t.benchmark].push_back(&t);

    auto templates = prompting::PromptTemplate::defaults();
    auto llm_tpl = text::read_file(data_path("templates/llm_tool.txt"));
    auto tokenizer = accounting::make_tokenizer(opts.tokenizer);

    BuildSummary summary;
    for (const auto& [benchmark, trajs] : groups) {
        ReplayConfig rc;
        rc.tokenizer = opts.tokenizer;
        rc.exemplars = trajs.front()->exemplars;
        nlohmann::json dataset = nlohmann::json::array();
        std::map<std::string, std::pair<std::string, std::string>> seen_tasks;
        for (const auto* t : trajs) {
            if (t->exemplars != rc.exemplars)
                throw bad(t->name, "exemplar bundle differs within benchmark " + benchmark);
            auto key = std::string(engine::to_string(t->paradigm));
            auto [it, fresh] = rc.toolsets.emplace(key, t->tools);
            if (!fresh && it->second != t->tools)
                throw bad(t->name, "toolset differs within benchmark " + benchmark);
            auto [task, new_task] = seen_tasks.emplace(t->task_id, std::make_pair(t->question, t->gold));
            if (new_task)
                dataset.push_back({{"id", t->task_id}, {"question", t->question}, {"answer", t->gold}});
            else if (task->second != std::make_pair(t->question, t->gold))
                throw bad(t->name, "task " + t->task_id + " has a different question or gold elsewhere");
        }
        std::vector<prompting::Exemplar> exemplars;
        if (!rc.exemplars.empty())
            exemplars = prompting::load_exemplars(data_path("exemplars/" + rc.exemplars + ".jsonl"));

        auto store = std::make_shared<model::ReplayStore>(model::ReplayMode::record);
        auto tool_store = std::make_shared<tools::ToolFixtureStore>();
        tools::ToolsConfig tcfg;
        tcfg.fixtures = tool_store;
        auto registry = tools::build_registry(tcfg);

        std::vector<engine::ExecutionRecord> recorded;
        for (const auto* t : trajs) {
            auto script = std::make_shared<Script>();
            auto note_tool = [&](const std::string& tool, const std::string& input, const std::string& output) {
                const auto* spec = registry.find(tool);
                if (!spec)
                    throw bad(t->name, "unknown tool " + tool);
                if (spec->kind == tools::ToolKind::model_backed) {
                    auto prompt = prompting::render_template(llm_tpl, {{"input", input}});
                    if (!script->tool_prompts.emplace(prompt, output).second && script->tool_prompts[prompt] != output)
                        throw bad(t->name, tool + "[" + input + "] answered twice with different text");
                } else if (spec->kind == tools::ToolKind::deterministic) {
                    auto computed = tools::eval_arithmetic(input);
                    if (computed != output)
                        throw bad(t->name, tool + "[" + input + "] computes " + computed + ", trajectory says " + output);
                } else {
                    if (auto prior = tool_store->lookup(tool, input); prior && *prior != output)
                        throw bad(t->name, tool + "[" + input + "] already recorded with different output");
                    tool_store->add(tool, input, output);
                }
            };

            if (t->paradigm == engine::Paradigm::rewoo) {
                auto bp = blueprint::parse_blueprint(t->planner, blueprint::ParseMode::strict).blueprint;
                tools::EvidenceMap ev;
                for (const auto& [idx, text] : t->evidence)
                    ev.insert(blueprint::EvidenceVarId(idx), text);
                for (const auto& step : bp.steps) {
                    const auto* out = ev.find(step.var);
                    if (!out)
                        throw bad(t->name, "no evidence for " + step.var.str());
                    auto input = tools::substitute_evidence(step.tool_input, ev, tools::Policy::strict).text;
                    note_tool(step.tool_name, input, *out);
                }
                script->queue = {t->planner, t->answer};
            } else {
                for (std::size_t i = 0; i < t->completions.size(); ++i) {
                    auto step = engine::parse_react_step(t->completions[i]);
                    if (step.finish)
                        break;
                    note_tool(step.action_tool, step.action_input, t->observations[i]);
                }
                script->queue.assign(t->completions.begin(), t->completions.end());
            }

            model::ModelClient client(scripted(script), store, tokenizer);
            engine::EngineDeps deps{&templates, &exemplars, &registry, &client, {}, t->tools, {}};
            deps.options.model_id = rc.model;
            auto rec = engine::run_task(task_of(*t), t->paradigm, deps);
            check_record(rec, *t);
            if (!script->queue.empty())
                throw bad(t->name, "run finished with unused scripted responses");
            recorded.push_back(std::move(rec));
        }

        auto dir = fs::path(opts.out_dir) / benchmark;
        fs::create_directories(dir);
        store->save((dir / "model.jsonl").string());
        tool_store->save((dir / "tools.jsonl").string());
        std::string lines;
        for (const auto& item : dataset)
            lines += item.dump() + "\n";
        text::write_file((dir / "dataset.jsonl").string(), lines);
        save_replay_config(rc, dir.string());

        // Re-run from what was written; nothing may reach the backend.
        auto replay = model::ReplayStore::load((dir / "model.jsonl").string(), model::ReplayMode::replay);
        tools::ToolsConfig rcfg;
        rcfg.fixtures = tools::ToolFixtureStore::load((dir / "tools.jsonl").string());
        auto replay_registry = tools::build_registry(rcfg);
        model::ModelClient client(std::make_shared<model::ScriptedBackend>(), replay, tokenizer);
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            engine::EngineDeps deps{&templates, &exemplars, &replay_registry, &client, {}, trajs[i]->tools, {}};
            deps.options.model_id = rc.model;
            auto rec = engine::run_task(task_of(*trajs[i]), trajs[i]->paradigm, deps);
            if (!(rec == recorded[i]))
                throw bad(trajs[i]->name, "replay from written fixtures diverges from the recorded run");
        }

        summary.dirs.push_back(dir.string());
        summary.model_records += store->size();
        summary.tool_records += tool_store->size();
    }
    return summary;
}

} // namespace planwork::fixtures
