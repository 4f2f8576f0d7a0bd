// SPDX-License-Identifier: Apache-2.0
#include "planwork/evaluation.hpp"

#include "planwork/error.hpp"
#include "planwork/paths.hpp"
#include "planwork/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

namespace planwork::evaluation {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Decodes UTF-8 leniently; a stray byte stands for itself.
std::vector<char32_t> code_points(std::string_view s) {
    std::vector<char32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        if (i + len > s.size())
            len = 1;
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len; ++k)
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

template <typename T>
double multiset_f1(const std::vector<T>& pred, const std::vector<T>& gold) {
    if (pred.empty() && gold.empty())
        return 1.0;
    if (pred.empty() || gold.empty())
        return 0.0;
    std::map<T, long> counts;
    for (const auto& x : gold)
        ++counts[x];
    long common = 0;
    for (const auto& x : pred) {
        auto it = counts.find(x);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0)
        return 0.0;
    double p = static_cast<double>(common) / pred.size();
    double r = static_cast<double>(common) / gold.size();
    return 2 * p * r / (p + r);
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i]))
            ++i;
        auto start = i;
        while (i < s.size() && !is_space(s[i]))
            ++i;
        if (i > start)
            out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

std::size_t count_tools(const BenchmarkConfig& cfg) {
    if (cfg.paradigm == engine::Paradigm::direct || cfg.paradigm == engine::Paradigm::cot)
        return 0;
    if (!cfg.deps.toolset.empty())
        return cfg.deps.toolset.size();
    return cfg.deps.tools ? cfg.deps.tools->names().size() : 0;
}

std::size_t count_exemplars(const BenchmarkConfig& cfg) {
    if (!cfg.deps.exemplars)
        return 0;
    const auto& ex = *cfg.deps.exemplars;
    auto with = [&](auto field) {
        return static_cast<std::size_t>(
            std::count_if(ex.begin(), ex.end(), [&](const prompting::Exemplar& e) { return (e.*field).has_value(); }));
    };
    switch (cfg.paradigm) {
    case engine::Paradigm::rewoo: return with(&prompting::Exemplar::planner_demo);
    case engine::Paradigm::react: return with(&prompting::Exemplar::tao_demo);
    case engine::Paradigm::cot: return with(&prompting::Exemplar::tao_demo) > 0 ? 1 : 0;
    case engine::Paradigm::direct: return 0;
    }
    return 0;
}

std::string fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

ScoredResult score_one(const DatasetItem& item, const BenchmarkConfig& cfg, engine::ExecutionRecord& rec_out) {
    ScoredResult r;
    r.task_id = item.id;
    engine::Task task{item.id, item.question, item.answer, {}, {}};
    try {
        rec_out = engine::run_task(task, cfg.paradigm, cfg.deps);
    } catch (const std::exception& e) {
        r.failed = true;
        r.warnings.push_back(std::string("TaskFailed: ") + e.what());
        rec_out = engine::ExecutionRecord{};
        rec_out.task_id = item.id;
        rec_out.paradigm = cfg.paradigm;
        rec_out.question = item.question;
        rec_out.warnings = r.warnings;
        if (cfg.judge)
            r.judge_acc = 0;
        return r;
    }
    r.em = exact_match(rec_out.answer, item.answer);
    r.f1 = cfg.token_level_f1 ? token_f1(rec_out.answer, item.answer) : char_f1(rec_out.answer, item.answer);
    auto totals = rec_out.ledger.totals();
    r.input_tokens = totals.input_tokens;
    r.output_tokens = totals.output_tokens;
    r.tokens = totals.total();
    r.steps = rec_out.steps;
    r.warnings = rec_out.warnings;
    if (cfg.judge) {
        try {
            auto v = judge_accuracy(item.question, rec_out.answer, item.answer, *cfg.judge, cfg.judge_model_id,
                                    cfg.judge_template);
            r.judge_acc = v.score;
            if (!v.warning.empty())
                r.warnings.push_back(v.warning);
        } catch (const std::exception& e) {
            r.judge_acc = 0;
            r.warnings.push_back(std::string("JudgeFailed: ") + e.what());
        }
    }
    return r;
}

} // namespace

std::string normalize_answer(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::ispunct(c))
            continue;
        stripped.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
    auto ws = words(stripped);
    if (!ws.empty() && (ws.front() == "a" || ws.front() == "an" || ws.front() == "the"))
        ws.erase(ws.begin());
    return text::join(ws, " ");
}

int exact_match(std::string_view pred, std::string_view gold) {
    return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

double char_f1(std::string_view pred, std::string_view gold) {
    auto strip = [](std::string_view s) {
        auto cps = code_points(normalize_answer(s));
        std::erase(cps, U' ');
        return cps;
    };
    return multiset_f1(strip(pred), strip(gold));
}

double token_f1(std::string_view pred, std::string_view gold) {
    return multiset_f1(words(normalize_answer(pred)), words(normalize_answer(gold)));
}

std::optional<int> parse_verdict(std::string_view reply) {
    auto ws = words(reply);
    if (ws.empty())
        return std::nullopt;
    std::string head;
    for (char ch : ws.front()) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalpha(c))
            head.push_back(static_cast<char>(std::tolower(c)));
        else
            break;
    }
    if (head == "yes")
        return 1;
    if (head == "no")
        return 0;
    return std::nullopt;
}

JudgeVerdict judge_accuracy(std::string_view question, std::string_view pred, std::string_view gold,
                            model::ModelClient& judge, const std::string& judge_model_id,
                            const std::string& judge_template, accounting::TokenLedger* ledger) {
    std::string tpl = judge_template.empty() ? text::read_file(data_path("templates/judge.txt")) : judge_template;
    auto prompt = prompting::render_template(
        tpl, {{"question", std::string(question)}, {"gold", std::string(gold)}, {"prediction", std::string(pred)}});
    model::ModelRequest req;
    req.prompt = std::move(prompt);
    req.model_id = judge_model_id;
    req.max_output_tokens = 8;
    model::CallContext ctx;
    ctx.ledger = ledger;
    ctx.kind = accounting::CallKind::judge;
    auto resp = judge.complete(req, ctx);
    JudgeVerdict v;
    if (auto parsed = parse_verdict(resp.text)) {
        v.score = *parsed;
    } else {
        v.warning = "UnparseableVerdict: " + std::string(text::trim(resp.text));
    }
    return v;
}

std::vector<DatasetItem> load_dataset(const std::string& path) {
    std::vector<DatasetItem> out;
    auto contents = text::read_file(path);
    std::size_t line_no = 0;
    for (auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            DatasetItem item;
            const auto& id = j.at("id");
            item.id = id.is_string() ? id.get<std::string>() : id.dump();
            item.question = j.at("question").get<std::string>();
            item.answer = j.at("answer").get<std::string>();
            out.push_back(std::move(item));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

BenchmarkRun run_benchmark(const std::vector<DatasetItem>& dataset, const BenchmarkConfig& cfg) {
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dataset[a].id < dataset[b].id; });

    BenchmarkRun run;
    run.results.resize(dataset.size());
    run.records.resize(dataset.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < order.size(); k = next++)
            run.results[k] = score_one(dataset[order[k]], cfg, run.records[k]);
    };
    std::size_t n_threads = std::clamp<std::size_t>(cfg.parallelism, 1, std::max<std::size_t>(1, dataset.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
    }

    auto& rep = run.report;
    rep.benchmark = cfg.benchmark;
    rep.paradigm = cfg.paradigm;
    rep.n_tasks = dataset.size();
    rep.n_tools = count_tools(cfg);
    rep.n_exemplars = count_exemplars(cfg);
    rep.price_per_1k = cfg.price_per_1k;
    rep.judged = cfg.judge != nullptr;
    if (dataset.empty())
        return run;

    double acc = 0, f1 = 0, em = 0, tok = 0, in = 0, out = 0, steps = 0;
    for (const auto& r : run.results) {
        em += r.em;
        f1 += r.f1;
        acc += r.judge_acc ? *r.judge_acc : r.em;
        tok += static_cast<double>(r.tokens);
        in += static_cast<double>(r.input_tokens);
        out += static_cast<double>(r.output_tokens);
        steps += static_cast<double>(r.steps);
        if (r.failed)
            ++rep.failed_tasks;
    }
    double n = static_cast<double>(dataset.size());
    rep.acc = 100.0 * acc / n;
    rep.f1 = 100.0 * f1 / n;
    rep.em = 100.0 * em / n;
    rep.avg_tokens = tok / n;
    rep.avg_input_tokens = in / n;
    rep.avg_output_tokens = out / n;
    rep.avg_steps = steps / n;
    rep.cost_1k = accounting::cost_per_1k(rep.avg_tokens, rep.price_per_1k);
    return run;
}

std::string format_report_table(const std::vector<BenchmarkReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Benchmark", "Paradigm", "#Tools", "n", "Acc", "F1", "EM", "#Tokens", "#Steps", "$Cost_1k"});
    for (const auto& r : reports) {
        rows.push_back({r.benchmark, std::string(engine::to_string(r.paradigm)), std::to_string(r.n_tools),
                        std::to_string(r.n_exemplars), fixed(r.acc, 1), fixed(r.f1, 1), fixed(r.em, 1),
                        fixed(r.avg_tokens, 1), fixed(r.avg_steps, 2), fixed(r.cost_1k, 2)});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0)
                line += "  ";
            // text columns left-aligned, numbers right-aligned
            auto pad = std::string(width[c] - row[c].size(), ' ');
            line += c < 2 ? row[c] + pad : pad + row[c];
        }
        out += std::string(text::trim_right(line)) + "\n";
    }
    return out;
}

void to_json(nlohmann::json& j, const BenchmarkReport& r) {
    j = nlohmann::json{{"benchmark", r.benchmark},
                       {"paradigm", std::string(engine::to_string(r.paradigm))},
                       {"n_tasks", r.n_tasks},
                       {"n_tools", r.n_tools},
                       {"n_exemplars", r.n_exemplars},
                       {"acc", r.acc},
                       {"f1", r.f1},
                       {"em", r.em},
                       {"avg_tokens", r.avg_tokens},
                       {"avg_input_tokens", r.avg_input_tokens},
                       {"avg_output_tokens", r.avg_output_tokens},
                       {"avg_steps", r.avg_steps},
                       {"cost_1k", r.cost_1k},
                       {"price_per_1k", r.price_per_1k},
                       {"judged", r.judged},
                       {"failed_tasks", r.failed_tasks}};
}

void from_json(const nlohmann::json& j, BenchmarkReport& r) {
    r.benchmark = j.at("benchmark").get<std::string>();
    r.paradigm = engine::paradigm_from_string(j.at("paradigm").get<std::string>());
    r.n_tasks = j.at("n_tasks").get<std::size_t>();
    r.n_tools = j.at("n_tools").get<std::size_t>();
    r.n_exemplars = j.at("n_exemplars").get<std::size_t>();
    r.acc = j.at("acc").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.em = j.at("em").get<double>();
    r.avg_tokens = j.at("avg_tokens").get<double>();
    r.avg_input_tokens = j.value("avg_input_tokens", 0.0);
    r.avg_output_tokens = j.value("avg_output_tokens", 0.0);
    r.avg_steps = j.at("avg_steps").get<double>();
    r.cost_1k = j.at("cost_1k").get<double>();
    r.price_per_1k = j.value("price_per_1k", accounting::kDefaultPricePer1k);
    r.judged = j.value("judged", false);
    r.failed_tasks = j.value("failed_tasks", std::size_t{0});
}

void to_json(nlohmann::json& j, const ScoredResult& r) {
    j = nlohmann::json{{"task_id", r.task_id},
                       {"em", r.em},
                       {"f1", r.f1},
                       {"tokens", r.tokens},
                       {"input_tokens", r.input_tokens},
                       {"output_tokens", r.output_tokens},
                       {"steps", r.steps},
                       {"failed", r.failed},
                       {"warnings", r.warnings}};
    if (r.judge_acc)
        j["judge_acc"] = *r.judge_acc;
}

void from_json(const nlohmann::json& j, ScoredResult& r) {
    r.task_id = j.at("task_id").get<std::string>();
    r.em = j.at("em").get<int>();
    r.f1 = j.at("f1").get<double>();
    if (j.contains("judge_acc"))
        r.judge_acc = j["judge_acc"].get<int>();
    r.tokens = j.value("tokens", accounting::TokenCount{0});
    r.input_tokens = j.value("input_tokens", accounting::TokenCount{0});
    r.output_tokens = j.value("output_tokens", accounting::TokenCount{0});
    r.steps = j.value("steps", std::size_t{0});
    r.failed = j.value("failed", false);
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const InstructionRecord& r) {
    j = nlohmann::json{{"instruction", r.instruction}, {"input", r.input}, {"output", r.output}};
}

std::vector<InstructionRecord> export_planner_instructions(const std::vector<engine::ExecutionRecord>& records,
                                                           const std::vector<ScoredResult>& scores,
                                                           const prompting::PromptTemplate& tpl,
                                                           const std::vector<prompting::ToolDescription>& tools) {
    if (records.size() != scores.size())
        throw Error(ErrorCode::AlignmentMismatch, std::to_string(records.size()) + " records but " +
                                                      std::to_string(scores.size()) + " scores");
    std::map<std::string, const ScoredResult*> by_id;
    for (const auto& s : scores)
        if (!by_id.emplace(s.task_id, &s).second)
            throw Error(ErrorCode::AlignmentMismatch, "duplicate score for task " + s.task_id);

    const auto instruction = prompting::planner_instruction(tpl, tools);
    std::vector<InstructionRecord> out;
    for (const auto& rec : records) {
        auto it = by_id.find(rec.task_id);
        if (it == by_id.end())
            throw Error(ErrorCode::AlignmentMismatch, "no score for task " + rec.task_id);
        const auto& s = *it->second;
        bool correct = s.judge_acc ? *s.judge_acc == 1 : s.em == 1;
        if (!correct || s.failed || rec.paradigm != engine::Paradigm::rewoo || !rec.blueprint ||
            rec.blueprint->steps.empty())
            continue;
        out.push_back({instruction, rec.question, blueprint::render_blueprint(*rec.blueprint)});
    }
    return out;
}

} // namespace planwork::evaluation
