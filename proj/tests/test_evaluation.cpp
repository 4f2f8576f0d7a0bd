// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"
#include "harness.hpp"

#include "planwork/evaluation.hpp"
#include "planwork/text.hpp"

#include <random>

using namespace planwork;
using namespace planwork::evaluation;
using test_support::Harness;
using test_support::source_path;

namespace {

model::ModelClient judge_client(std::vector<std::string> replies) {
    return model::ModelClient(std::make_shared<model::ScriptedBackend>(std::move(replies)), nullptr,
                              std::make_shared<accounting::WhitespaceTokenizer>());
}

engine::ExecutionRecord rewoo_record(const std::string& id, const std::string& plan) {
    engine::ExecutionRecord r;
    r.task_id = id;
    r.paradigm = engine::Paradigm::rewoo;
    r.question = "question " + id;
    r.blueprint = blueprint::parse_blueprint(plan).blueprint;
    return r;
}

ScoredResult score(const std::string& id, int em) {
    ScoredResult s;
    s.task_id = id;
    s.em = em;
    s.f1 = em;
    return s;
}

} // namespace

TEST_CASE("normalization") {
    CHECK(normalize_answer("Dave Stevens.") == "dave stevens");
    CHECK(normalize_answer("") == "");
    CHECK(normalize_answer("The Rocketeer") == "rocketeer");
    CHECK(normalize_answer("  An   apple, a day ") == "apple a day");
}

TEST_CASE("exact match") {
    CHECK(exact_match("Dave Stevens.", "Dave Stevens") == 1);
    CHECK(exact_match("CA.", "California") == 0);
    for (const char* x : {"", "x", "Lisa Left Eye Lopes", "20.0"})
        CHECK(exact_match(x, x) == 1);
}

TEST_CASE("character F1") {
    CHECK(char_f1("Dave Stevens", "Dave Stevens") == doctest::Approx(1.0));
    CHECK(char_f1("abc", "xyz") == doctest::Approx(0.0));
    CHECK(char_f1("abc", "abd") == doctest::Approx(2.0 / 3.0));
    CHECK(char_f1("", "") == doctest::Approx(1.0));
    CHECK(char_f1("", "b") == doctest::Approx(0.0));
    CHECK(token_f1("dave stevens", "stevens") == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("exact match implies full F1") {
    std::mt19937 rng(11);
    const std::string alphabet = "aAbB ,.the";
    auto random_string = [&] {
        std::string s;
        auto n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i)
            s += alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        auto a = random_string();
        auto b = rng() % 2 ? random_string() : "The " + a + ".";
        if (exact_match(a, b))
            CHECK(char_f1(a, b) == doctest::Approx(1.0));
    }
}

TEST_CASE("judge verdicts") {
    CHECK(parse_verdict("Yes") == 1);
    CHECK(parse_verdict("No.") == 0);
    CHECK(parse_verdict("  yes, it matches") == 1);
    CHECK_FALSE(parse_verdict("Maybe"));

    auto yes = judge_client({"Yes"});
    CHECK(judge_accuracy("q", "p", "g", yes, "gpt-3.5-turbo").score == 1);
    auto no = judge_client({"No."});
    CHECK(judge_accuracy("q", "p", "g", no, "gpt-3.5-turbo").score == 0);
    auto ca = judge_client({"Yes."});
    accounting::TokenLedger ledger;
    auto v = judge_accuracy("Which state?", "CA.", "California", ca, "gpt-3.5-turbo", {}, &ledger);
    CHECK(v.score == 1);
    CHECK(v.warning.empty());
    CHECK(ledger.count(accounting::CallKind::judge) == 1);
    auto garbled = judge_client({"Perhaps"});
    auto g = judge_accuracy("q", "p", "g", garbled, "gpt-3.5-turbo");
    CHECK(g.score == 0);
    CHECK(g.warning.starts_with("UnparseableVerdict"));
}

TEST_CASE("benchmark over a scripted two-task dataset") {
    auto h = Harness::scripted([](const model::ModelRequest& r) {
        return r.prompt.find("France") != std::string::npos ? std::string("Paris") : std::string("Rome");
    });
    BenchmarkConfig cfg;
    cfg.benchmark = "toy";
    cfg.paradigm = engine::Paradigm::direct;
    cfg.deps = h.deps(engine::Paradigm::direct);
    cfg.parallelism = 2;
    std::vector<DatasetItem> data{{"b", "Capital of Italy?", "Rome"}, {"a", "Capital of France?", "Paris"}};
    auto run = run_benchmark(data, cfg);
    CHECK(run.report.n_tasks == 2);
    CHECK(run.report.acc == doctest::Approx(100.0));
    CHECK(run.report.em == doctest::Approx(100.0));
    CHECK(run.report.f1 == doctest::Approx(100.0));
    CHECK(run.report.avg_steps == doctest::Approx(1.0));
    CHECK(run.results[0].task_id == "a");
    CHECK(run.report.cost_1k == doctest::Approx(accounting::cost_per_1k(run.report.avg_tokens, 0.002)));
}

TEST_CASE("a failing task scores zero and the run continues") {
    auto h = Harness::replay(source_path("fixtures/gsm8k"));
    BenchmarkConfig cfg;
    cfg.benchmark = "gsm8k";
    cfg.paradigm = engine::Paradigm::rewoo;
    cfg.deps = h.deps(engine::Paradigm::rewoo);
    auto data = load_dataset(source_path("fixtures/gsm8k/dataset.jsonl"));
    data.push_back({"zzz-unknown", "A question nobody recorded?", "x"});
    auto run = run_benchmark(data, cfg);
    REQUIRE(run.results.size() == 2);
    CHECK(run.results[0].em == 1);
    CHECK(run.results[1].failed);
    CHECK(run.results[1].em == 0);
    REQUIRE_FALSE(run.results[1].warnings.empty());
    CHECK(run.results[1].warnings[0].find("ReplayMiss") != std::string::npos);
    CHECK(run.report.failed_tasks == 1);
    CHECK(run.report.em == doctest::Approx(50.0));
}

TEST_CASE("plan-work-solve uses fewer tokens than the loop on the gsm8k replay") {
    auto data = load_dataset(source_path("fixtures/gsm8k/dataset.jsonl"));
    double tokens[2];
    int i = 0;
    for (auto p : {engine::Paradigm::rewoo, engine::Paradigm::react}) {
        auto h = Harness::replay(source_path("fixtures/gsm8k"));
        BenchmarkConfig cfg;
        cfg.benchmark = "gsm8k";
        cfg.paradigm = p;
        cfg.deps = h.deps(p);
        auto run = run_benchmark(data, cfg);
        CHECK(run.report.failed_tasks == 0);
        tokens[i++] = run.report.avg_tokens;
    }
    CHECK(tokens[0] < tokens[1]);
}

TEST_CASE("report table and json") {
    BenchmarkReport r;
    r.benchmark = "hotpotqa";
    r.avg_tokens = 1986.2;
    r.cost_1k = 3.9724;
    r.avg_steps = 5;
    auto table = format_report_table({r});
    CHECK(table.find("$Cost_1k") != std::string::npos);
    CHECK(table.find("1986.2") != std::string::npos);
    CHECK(table.find("3.97") != std::string::npos);
    CHECK(table.find("5.00") != std::string::npos);
    nlohmann::json j = r;
    auto back = j.get<BenchmarkReport>();
    CHECK(back.avg_tokens == r.avg_tokens);
    CHECK(back.benchmark == "hotpotqa");
}

TEST_CASE("dataset loading") {
    test_support::TempDir dir;
    text::write_file(dir.file("d.jsonl"), "{\"id\": 3, \"question\": \"q\", \"answer\": \"a\"}\n\n");
    auto d = load_dataset(dir.file("d.jsonl"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].id == "3");
    text::write_file(dir.file("bad.jsonl"), "{not json\n");
    CHECK_THROWS_AS(load_dataset(dir.file("bad.jsonl")), Error);
}

TEST_CASE("instruction export filter") {
    auto tpl = prompting::PromptTemplate::defaults();
    std::vector<prompting::ToolDescription> tools{{"Calculator", "math."}};
    CHECK(export_planner_instructions({}, {}, tpl, tools).empty());

    std::vector<engine::ExecutionRecord> recs;
    std::vector<ScoredResult> scores;
    int ems[] = {1, 0, 1};
    for (int i = 0; i < 3; ++i) {
        auto id = std::to_string(i);
        recs.push_back(rewoo_record(id, "Plan: add\n#E1 = Calculator[" + id + " + 1]"));
        scores.push_back(score(id, ems[i]));
    }
    auto out = export_planner_instructions(recs, scores, tpl, tools);
    REQUIRE(out.size() == 2);
    CHECK(out[0].input == "question 0");
    CHECK(out[1].output == "Plan: add\n#E1 = Calculator[2 + 1]\n");
    CHECK(out[0].instruction.find("(1) Calculator[input]: math.") != std::string::npos);

    // The judge verdict wins over EM when present.
    scores[1].judge_acc = 1;
    scores[0].judge_acc = 0;
    auto judged = export_planner_instructions(recs, scores, tpl, tools);
    REQUIRE(judged.size() == 2);
    CHECK(judged[0].input == "question 1");

    scores.pop_back();
    CHECK_ERROR_CODE(export_planner_instructions(recs, scores, tpl, tools), ErrorCode::AlignmentMismatch);
}
