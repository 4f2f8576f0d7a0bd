// SPDX-License-Identifier: Apache-2.0
#include "planwork/cli.hpp"

#include "planwork/error.hpp"
#include "planwork/evaluation.hpp"
#include "planwork/fixtures.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"
#include "planwork/tools.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>

namespace planwork::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raw flag values; unset means "not given on the command line".
struct Flags {
    std::optional<std::string> paradigm, model, tools, exemplars, templates, tokenizer, inject, replay, record, script,
        config, out, judge_model;
    std::optional<double> price;
    std::optional<std::size_t> max_steps, parallelism, context_limit;
    bool live = false, strict = false, judge = false;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--paradigm", f.paradigm, "rewoo, react, direct, cot, or a comma-separated list");
    cmd->add_option("--model", f.model, "model id");
    cmd->add_option("--tools", f.tools, "comma-separated toolset");
    cmd->add_option("--exemplars", f.exemplars, "exemplar bundle name or .jsonl path");
    cmd->add_option("--templates", f.templates, "directory with prompt templates");
    cmd->add_option("--tokenizer", f.tokenizer, "whitespace or bpe");
    cmd->add_option("--price", f.price, "dollars per 1000 tokens");
    cmd->add_option("--inject-failure", f.inject, "off, all, or comma-separated tool names");
    cmd->add_option("--replay", f.replay, "replay fixtures from this directory");
    cmd->add_option("--record", f.record, "record model and tool traffic into this directory");
    cmd->add_option("--script", f.script, "JSON array of canned model responses");
    cmd->add_option("--max-steps", f.max_steps, "ReAct step limit");
    cmd->add_option("--parallelism", f.parallelism, "concurrent tasks");
    cmd->add_option("--context-limit", f.context_limit, "prompt token limit");
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--judge-model", f.judge_model, "model id for the accuracy judge");
    cmd->add_flag("--live", f.live, "allow network access");
    cmd->add_flag("--strict", f.strict, "strict parsing and tool policy");
    cmd->add_flag("--judge", f.judge, "score Acc with the judge model");
}

std::vector<std::string> split_csv(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
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

std::vector<engine::Paradigm> parse_paradigms(std::string_view s) {
    std::vector<engine::Paradigm> out;
    for (const auto& p : split_csv(s))
        out.push_back(engine::paradigm_from_string(p));
    if (out.empty())
        throw Error(ErrorCode::Config, "no paradigm given");
    return out;
}

void apply_replay_dir(RunConfig& cfg, const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "model.jsonl"))
        throw Error(ErrorCode::Config, "replay mode requires a fixture path: no model.jsonl under `" + dir + "`");
    auto rc = fixtures::load_replay_config(dir);
    cfg.model_id = rc.model;
    if (!rc.exemplars.empty())
        cfg.exemplars = rc.exemplars;
    cfg.tokenizer = rc.tokenizer;
    cfg.paradigm_toolsets = rc.toolsets;
}

RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (const char* v = std::getenv("PLANWORK_MODEL"); v && *v)
        cfg.model_id = v;
    if (const char* v = std::getenv("PLANWORK_TOKENIZER"); v && *v)
        cfg.tokenizer = v;

    std::string config_text;
    if (f.config)
        config_text = text::read_file(*f.config);
    std::string replay = f.replay.value_or("");
    if (replay.empty() && !config_text.empty()) {
        RunConfig probe;
        apply_config_json(probe, config_text);
        replay = probe.replay_dir;
    }
    if (!replay.empty()) {
        apply_replay_dir(cfg, replay);
        cfg.replay_dir = replay;
    }
    if (!config_text.empty())
        apply_config_json(cfg, config_text);

    if (f.paradigm) cfg.paradigms = parse_paradigms(*f.paradigm);
    if (f.model) cfg.model_id = *f.model;
    if (f.tools) cfg.toolset = split_csv(*f.tools);
    if (f.exemplars) cfg.exemplars = *f.exemplars;
    if (f.templates) cfg.templates_dir = *f.templates;
    if (f.tokenizer) cfg.tokenizer = *f.tokenizer;
    if (f.price) cfg.price = *f.price;
    if (f.inject) cfg.inject_failure = *f.inject;
    if (f.replay) cfg.replay_dir = *f.replay;
    if (f.record) cfg.record_dir = *f.record;
    if (f.script) cfg.script_path = *f.script;
    if (f.max_steps) cfg.max_steps = *f.max_steps;
    if (f.parallelism) cfg.parallelism = *f.parallelism;
    if (f.context_limit) cfg.context_limit = *f.context_limit;
    if (f.out) cfg.out = *f.out;
    if (f.judge_model) cfg.judge_model = *f.judge_model;
    cfg.live = cfg.live || f.live;
    cfg.strict = cfg.strict || f.strict;
    cfg.judge = cfg.judge || f.judge;

    if (!cfg.replay_dir.empty() && !cfg.record_dir.empty())
        throw Error(ErrorCode::Config, "--replay and --record are mutually exclusive");
    if (!cfg.record_dir.empty() && !cfg.live && cfg.script_path.empty())
        throw Error(ErrorCode::Config, "--record needs a model: pass --live or --script");
    if (cfg.replay_dir.empty() && cfg.record_dir.empty() && cfg.script_path.empty() && !cfg.live)
        throw Error(ErrorCode::Config, "no model backend: pass --replay DIR, --script FILE, or --live");
    if (cfg.max_steps == 0 || cfg.parallelism == 0)
        throw Error(ErrorCode::Config, "--max-steps and --parallelism must be positive");
    return cfg;
}

std::string exemplar_path(const std::string& spec) {
    if (spec.find('/') != std::string::npos || spec.ends_with(".jsonl"))
        return spec;
    return data_path("exemplars/" + spec + ".jsonl");
}

// Everything one command needs, built once from a RunConfig.
struct Runtime {
    prompting::PromptTemplate templates;
    std::vector<prompting::Exemplar> exemplars;
    std::shared_ptr<tools::ToolFixtureStore> tool_store;
    tools::ToolRegistry registry;
    std::shared_ptr<model::ReplayStore> store;
    std::unique_ptr<model::ModelClient> client;
    tools::FailureInjection injection;
    double price = accounting::kDefaultPricePer1k;

    void save(const RunConfig& cfg) const {
        if (cfg.record_dir.empty())
            return;
        fs::create_directories(cfg.record_dir);
        store->save((fs::path(cfg.record_dir) / "model.jsonl").string());
        tool_store->save((fs::path(cfg.record_dir) / "tools.jsonl").string());
    }
};

// Records whatever non-model tools return so a later replay can serve it.
tools::ToolRegistry recording(const tools::ToolRegistry& reg, std::shared_ptr<tools::ToolFixtureStore> sink) {
    std::vector<tools::ToolSpec> specs;
    for (auto spec : reg.specs()) {
        if (spec.kind == tools::ToolKind::http || spec.kind == tools::ToolKind::stub) {
            spec.handler = [inner = spec.handler, sink, name = spec.name](std::string_view input,
                                                                         const tools::InvokeContext& ctx) {
                auto out = inner(input, ctx);
                sink->add(name, std::string(input), out);
                return out;
            };
        }
        specs.push_back(std::move(spec));
    }
    return tools::ToolRegistry(std::move(specs), reg.max_evidence_chars());
}

std::unique_ptr<Runtime> make_runtime(const RunConfig& cfg) {
    auto rt = std::make_unique<Runtime>();
    auto tokenizer = accounting::make_tokenizer(cfg.tokenizer);
    rt->templates =
        cfg.templates_dir.empty() ? prompting::PromptTemplate::defaults() : prompting::PromptTemplate::load(cfg.templates_dir);
    if (!cfg.exemplars.empty()) {
        auto path = exemplar_path(cfg.exemplars);
        if (!fs::exists(path))
            throw Error(ErrorCode::Config, "exemplar bundle not found: " + path);
        rt->exemplars = prompting::load_exemplars(path);
    }

    std::shared_ptr<model::Backend> backend;
    if (!cfg.script_path.empty()) {
        std::vector<std::string> queue;
        try {
            queue = json::parse(text::read_file(cfg.script_path)).get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Config, cfg.script_path + ": " + e.what());
        }
        backend = std::make_shared<model::ScriptedBackend>(std::move(queue));
    } else if (cfg.live) {
        backend = std::make_shared<model::HttpBackend>(model::HttpConfig::from_env());
    } else {
        backend = std::make_shared<model::ScriptedBackend>(); // replay: never reached
    }

    std::string fixture_dir = !cfg.replay_dir.empty() ? cfg.replay_dir : cfg.record_dir;
    auto tools_path = (fs::path(fixture_dir) / "tools.jsonl").string();
    rt->tool_store = !fixture_dir.empty() && fs::exists(tools_path) ? tools::ToolFixtureStore::load(tools_path)
                                                                     : std::make_shared<tools::ToolFixtureStore>();
    if (!cfg.replay_dir.empty()) {
        rt->store = model::ReplayStore::load((fs::path(cfg.replay_dir) / "model.jsonl").string(),
                                             model::ReplayMode::replay);
    } else if (!cfg.record_dir.empty()) {
        rt->store = model::ReplayStore::load((fs::path(cfg.record_dir) / "model.jsonl").string(),
                                             model::ReplayMode::record);
    } else {
        rt->store = std::make_shared<model::ReplayStore>(model::ReplayMode::passthrough);
    }

    tools::ToolsConfig tcfg;
    tcfg.fixtures = rt->tool_store;
    tcfg.live = cfg.live;
    auto registry = tools::build_registry(tcfg);
    rt->registry = cfg.record_dir.empty() ? std::move(registry) : recording(registry, rt->tool_store);

    rt->client = std::make_unique<model::ModelClient>(backend, rt->store, tokenizer, cfg.context_limit);
    rt->injection = tools::FailureInjection::parse(cfg.inject_failure);
    rt->price = cfg.price ? *cfg.price : accounting::PricingTable::load(data_path("pricing.json")).price_for(cfg.model_id);
    return rt;
}

std::vector<std::string> toolset_for(const RunConfig& cfg, engine::Paradigm p, const tools::ToolRegistry& reg) {
    if (!cfg.toolset.empty())
        return cfg.toolset;
    if (auto it = cfg.paradigm_toolsets.find(std::string(engine::to_string(p))); it != cfg.paradigm_toolsets.end())
        return it->second;
    if (!cfg.paradigm_toolsets.empty())
        return cfg.paradigm_toolsets.begin()->second;
    return reg.names();
}

engine::EngineDeps deps_for(const RunConfig& cfg, const Runtime& rt, engine::Paradigm p) {
    engine::EngineDeps deps;
    deps.templates = &rt.templates;
    deps.exemplars = &rt.exemplars;
    deps.tools = &rt.registry;
    deps.model = rt.client.get();
    deps.injection = rt.injection;
    deps.toolset = toolset_for(cfg, p, rt.registry);
    deps.options.parse_mode = cfg.strict ? blueprint::ParseMode::strict : blueprint::ParseMode::lenient;
    deps.options.tool_policy = cfg.strict ? tools::Policy::strict : tools::Policy::lenient;
    deps.options.max_steps = cfg.max_steps;
    deps.options.model_id = cfg.model_id;
    return deps;
}

std::string money(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

int cmd_solve(const Flags& f, const std::string& question, std::ostream& out, std::ostream& err) {
    auto cfg = resolve(f);
    auto rt = make_runtime(cfg);
    json dumped = json::array();
    for (auto p : cfg.paradigms) {
        auto deps = deps_for(cfg, *rt, p);
        auto rec = engine::run_task(engine::Task{"solve", question, std::nullopt, {}, {}}, p, deps);
        auto totals = rec.ledger.totals();
        out << "Paradigm: " << engine::to_string(p) << "\n"
            << "Answer: " << rec.answer << "\n"
            << "Steps: " << rec.steps << "\n"
            << "Tokens: " << totals.total() << " (input " << totals.input_tokens << ", output "
            << totals.output_tokens << ")\n"
            << "Est. cost per 1k queries: $"
            << money(accounting::cost_per_1k(static_cast<double>(totals.total()), rt->price)) << "\n";
        for (const auto& w : rec.warnings)
            err << "warning: " << w << "\n";
        dumped.push_back(rec);
    }
    if (!cfg.out.empty())
        text::write_file(cfg.out, (dumped.size() == 1 ? dumped[0] : dumped).dump(2) + "\n");
    rt->save(cfg);
    return kOk;
}

int cmd_bench(const Flags& f, std::string dataset_path, const std::string& benchmark_name, std::ostream& out,
              std::ostream& err) {
    auto cfg = resolve(f);
    if (dataset_path.empty()) {
        if (cfg.replay_dir.empty())
            throw Error(ErrorCode::Config, "bench needs a dataset path or --replay DIR with a dataset.jsonl");
        dataset_path = (fs::path(cfg.replay_dir) / "dataset.jsonl").string();
    }
    if (!fs::exists(dataset_path))
        throw Error(ErrorCode::Config, "dataset not found: " + dataset_path);
    auto dataset = evaluation::load_dataset(dataset_path);
    auto rt = make_runtime(cfg);

    std::string name = benchmark_name;
    if (name.empty())
        name = !cfg.replay_dir.empty() ? fs::path(cfg.replay_dir).lexically_normal().filename().string()
                                       : fs::path(dataset_path).stem().string();
    if (name.empty())
        name = fs::path(fs::path(cfg.replay_dir).lexically_normal().parent_path()).filename().string();

    std::vector<evaluation::BenchmarkReport> reports;
    std::vector<evaluation::BenchmarkRun> runs;
    for (auto p : cfg.paradigms) {
        evaluation::BenchmarkConfig bc;
        bc.benchmark = name;
        bc.paradigm = p;
        bc.deps = deps_for(cfg, *rt, p);
        bc.parallelism = cfg.parallelism;
        bc.price_per_1k = rt->price;
        if (cfg.judge) {
            bc.judge = rt->client.get();
            bc.judge_model_id = cfg.judge_model;
        }
        auto run = evaluation::run_benchmark(dataset, bc);
        for (const auto& r : run.results)
            for (const auto& w : r.warnings)
                err << "warning: " << engine::to_string(p) << " " << r.task_id << ": " << w << "\n";
        reports.push_back(run.report);
        runs.push_back(std::move(run));
    }
    out << evaluation::format_report_table(reports);

    if (!cfg.out.empty()) {
        fs::create_directories(cfg.out);
        text::write_file((fs::path(cfg.out) / "report.json").string(), json(reports).dump(2) + "\n");
        for (const auto& run : runs) {
            auto p = std::string(engine::to_string(run.report.paradigm));
            std::string scores, records;
            for (const auto& r : run.results)
                scores += json(r).dump() + "\n";
            for (const auto& r : run.records)
                records += json(r).dump() + "\n";
            text::write_file((fs::path(cfg.out) / ("scores-" + p + ".jsonl")).string(), scores);
            text::write_file((fs::path(cfg.out) / ("records-" + p + ".jsonl")).string(), records);
        }
    }
    rt->save(cfg);
    return kOk;
}

template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
    if (!fs::exists(path))
        throw Error(ErrorCode::Io, "cannot read " + path);
    std::vector<T> out;
    std::size_t line_no = 0;
    auto contents = text::read_file(path);
    for (auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

int cmd_export(const std::string& records_path, const std::string& scores_path, const std::string& out_path,
               const std::optional<std::string>& tools_flag, const std::optional<std::string>& templates_dir,
               std::ostream& out) {
    auto records = read_jsonl<engine::ExecutionRecord>(records_path);
    auto scores = read_jsonl<evaluation::ScoredResult>(scores_path);
    auto templates =
        templates_dir ? prompting::PromptTemplate::load(*templates_dir) : prompting::PromptTemplate::defaults();
    auto registry = tools::build_registry({});

    std::vector<std::string> names;
    if (tools_flag) {
        names = split_csv(*tools_flag);
    } else {
        // Tools the blueprints actually use, in catalogue order.
        std::set<std::string> used;
        for (const auto& r : records)
            if (r.blueprint)
                for (const auto& s : r.blueprint->steps)
                    used.insert(s.tool_name);
        for (const auto& n : registry.names())
            if (used.contains(n))
                names.push_back(n);
    }
    std::vector<prompting::ToolDescription> descs;
    for (const auto& n : names)
        if (registry.contains(n))
            descs.push_back(registry.describe({n}).front());
    if (descs.empty())
        descs = registry.describe(registry.names());

    auto exported = evaluation::export_planner_instructions(records, scores, templates, descs);
    std::string lines;
    for (const auto& r : exported)
        lines += json(r).dump() + "\n";
    text::write_file(out_path, lines);
    out << "Wrote " << exported.size() << " instruction records to " << out_path << "\n";
    return kOk;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::Config:
    case ErrorCode::UnknownVocabulary:
    case ErrorCode::MissingPlaceholder:
        return kUsage;
    default:
        return kRuntime;
    }
}

} // namespace

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
    try {
        auto j = json::parse(json_text);
        if (!j.is_object())
            throw Error(ErrorCode::Config, "config must be a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (key == "paradigm") {
                cfg.paradigms = v.is_array() ? parse_paradigms(text::join(v.get<std::vector<std::string>>(), ","))
                                             : parse_paradigms(v.get<std::string>());
            } else if (key == "model") cfg.model_id = v.get<std::string>();
            else if (key == "tools") cfg.toolset = v.is_array() ? v.get<std::vector<std::string>>() : split_csv(v.get<std::string>());
            else if (key == "exemplars") cfg.exemplars = v.get<std::string>();
            else if (key == "templates") cfg.templates_dir = v.get<std::string>();
            else if (key == "tokenizer") cfg.tokenizer = v.get<std::string>();
            else if (key == "price") cfg.price = v.get<double>();
            else if (key == "inject_failure") cfg.inject_failure = v.get<std::string>();
            else if (key == "replay") cfg.replay_dir = v.get<std::string>();
            else if (key == "record") cfg.record_dir = v.get<std::string>();
            else if (key == "script") cfg.script_path = v.get<std::string>();
            else if (key == "max_steps") cfg.max_steps = v.get<std::size_t>();
            else if (key == "parallelism") cfg.parallelism = v.get<std::size_t>();
            else if (key == "context_limit") cfg.context_limit = v.get<std::size_t>();
            else if (key == "live") cfg.live = v.get<bool>();
            else if (key == "strict") cfg.strict = v.get<bool>();
            else if (key == "judge") cfg.judge = v.get<bool>();
            else if (key == "judge_model") cfg.judge_model = v.get<std::string>();
            else if (key == "out") cfg.out = v.get<std::string>();
            else throw Error(ErrorCode::Config, "unknown config key `" + key + "`");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("config: ") + e.what());
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Plan-then-execute and interleaved tool-use agents with token accounting", "planwork"};
    app.require_subcommand(1);

    Flags solve_flags;
    std::string question;
    auto* solve = app.add_subcommand("solve", "Run one question");
    add_run_flags(solve, solve_flags);
    solve->add_option("question", question, "the task")->required();

    Flags bench_flags;
    std::string dataset, bench_name;
    auto* bench = app.add_subcommand("bench", "Run a JSONL dataset and print the report table");
    add_run_flags(bench, bench_flags);
    bench->add_option("dataset", dataset, "JSONL {id, question, answer}; defaults to the replay dir's dataset");
    bench->add_option("--name", bench_name, "benchmark name for the report");

    std::string records_path, scores_path, export_out;
    std::optional<std::string> export_tools, export_templates;
    auto* exp = app.add_subcommand("export-instructions", "Write planner instruction data from correct runs");
    exp->add_option("records", records_path, "records JSONL from bench --out")->required();
    exp->add_option("scores", scores_path, "scores JSONL from bench --out")->required();
    exp->add_option("--out", export_out, "output JSONL")->required();
    exp->add_option("--tools", export_tools, "tools listed in the instruction");
    exp->add_option("--templates", export_templates, "directory with prompt templates");

    std::string traj_dir = "fixtures/trajectories", fixtures_out = "fixtures", fixtures_tok = "whitespace";
    auto* fix = app.add_subcommand("fixtures", "Manage replay fixtures");
    fix->require_subcommand(1);
    auto* fix_build = fix->add_subcommand("build", "Generate replay dirs from trajectory files");
    fix_build->add_option("--trajectories", traj_dir, "trajectory directory");
    fix_build->add_option("--out", fixtures_out, "output root");
    fix_build->add_option("--tokenizer", fixtures_tok, "tokenizer recorded in config.json");

    std::string tok_text, tok_file, tok_scheme = "whitespace";
    auto* tokens = app.add_subcommand("tokens", "Count tokens");
    tokens->add_option("text", tok_text, "text to count");
    tokens->add_option("--file", tok_file, "count the contents of a file");
    tokens->add_option("--tokenizer", tok_scheme, "whitespace or bpe");

    double cost_tokens = 0.0;
    std::optional<double> cost_price;
    std::string cost_model{model::kDefaultModelId};
    auto* cost = app.add_subcommand("cost", "Dollars per 1000 queries for an average token count");
    cost->add_option("tokens", cost_tokens, "average tokens per query")->required();
    cost->add_option("--price", cost_price, "dollars per 1000 tokens");
    cost->add_option("--model", cost_model, "model id for the pricing table");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*solve)
            return cmd_solve(solve_flags, question, out, err);
        if (*bench)
            return cmd_bench(bench_flags, dataset, bench_name, out, err);
        if (*exp)
            return cmd_export(records_path, scores_path, export_out, export_tools, export_templates, out);
        if (*fix_build) {
            auto summary = fixtures::build_fixtures({traj_dir, fixtures_out, fixtures_tok});
            for (const auto& d : summary.dirs)
                out << "wrote " << d << "\n";
            out << summary.model_records << " model records, " << summary.tool_records << " tool records\n";
            return kOk;
        }
        if (*tokens) {
            auto tok = accounting::make_tokenizer(tok_scheme);
            auto content = tok_file.empty() ? tok_text : text::read_file(tok_file);
            out << tok->count(content) << "\n";
            return kOk;
        }
        if (*cost) {
            double price =
                cost_price ? *cost_price : accounting::PricingTable::load(data_path("pricing.json")).price_for(cost_model);
            out << money(accounting::cost_per_1k(cost_tokens, price)) << "\n";
            return kOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

} // namespace planwork::cli
