// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "planwork/cli.hpp"
#include "planwork/engine.hpp"
#include "planwork/evaluation.hpp"
#include "planwork/text.hpp"

#include <sstream>

using namespace planwork;
using test_support::source_path;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* kGsmQuestion = "John decides to buy some birds.  He got 50 dollars from each of his 4 grandparents.  "
                           "If each bird costs $20, how many wings did all the birds have?";

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (auto line : text::split_lines(s))
        if (!text::trim(line).empty())
            ++n;
    return n;
}

void write_export_inputs(const test_support::TempDir& dir, const std::vector<int>& ems) {
    std::string records, scores;
    for (std::size_t i = 0; i < ems.size(); ++i) {
        engine::ExecutionRecord r;
        r.task_id = "t" + std::to_string(i);
        r.paradigm = engine::Paradigm::rewoo;
        r.question = "q" + std::to_string(i);
        r.blueprint = blueprint::parse_blueprint("Plan: add\n#E1 = Calculator[1 + " + std::to_string(i) + "]").blueprint;
        records += nlohmann::json(r).dump() + "\n";
        evaluation::ScoredResult s;
        s.task_id = r.task_id;
        s.em = ems[i];
        scores += nlohmann::json(s).dump() + "\n";
    }
    text::write_file(dir.file("records.jsonl"), records);
    text::write_file(dir.file("scores.jsonl"), scores);
}

} // namespace

TEST_CASE("solve on the gsm8k replay prints the answer") {
    auto r = run({"solve", "--paradigm", "rewoo", "--replay", source_path("fixtures/gsm8k"), kGsmQuestion});
    CHECK(r.code == 0);
    CHECK(r.out.find("Answer: 20\n") != std::string::npos);
    CHECK(r.out.find("Steps: 5") != std::string::npos);
}

TEST_CASE("solve with a missing fixture path fails cleanly") {
    auto r = run({"solve", "--replay", "/nonexistent/fixtures", "q"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("replay mode requires a fixture path") != std::string::npos);
}

TEST_CASE("solve direct with a scripted backend") {
    test_support::TempDir dir;
    text::write_file(dir.file("script.json"), "[\"Paris\"]");
    auto r = run({"solve", "--paradigm", "direct", "--script", dir.file("script.json"), "--out", dir.file("rec.json"),
                  "Capital of France?"});
    CHECK(r.code == 0);
    CHECK(r.out.find("Answer: Paris") != std::string::npos);
    auto rec = nlohmann::json::parse(text::read_file(dir.file("rec.json"))).get<engine::ExecutionRecord>();
    CHECK(rec.answer == "Paris");
}

TEST_CASE("flag validation") {
    CHECK(run({"solve", "q"}).code == cli::kUsage); // no backend
    CHECK(run({"solve", "--replay", source_path("fixtures/gsm8k"), "--record", "/tmp/x", "q"}).code == cli::kUsage);
    CHECK(run({"solve", "--replay", source_path("fixtures/gsm8k"), "--max-steps", "0", "q"}).code == cli::kUsage);
    CHECK(run({"solve", "--replay", source_path("fixtures/gsm8k"), "--paradigm", "sideways", "q"}).code ==
          cli::kUsage);
    CHECK(run({"bogus"}).code != 0);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("config file precedence") {
    test_support::TempDir dir;
    text::write_file(dir.file("cfg.json"), "{\"max_steps\": 3, \"paradigm\": \"react\"}");
    cli::RunConfig cfg;
    cli::apply_config_json(cfg, text::read_file(dir.file("cfg.json")));
    CHECK(cfg.max_steps == 3);
    REQUIRE(cfg.paradigms.size() == 1);
    CHECK(cfg.paradigms[0] == engine::Paradigm::react);
    CHECK_ERROR_CODE(cli::apply_config_json(cfg, "{\"no_such_key\": 1}"), ErrorCode::Config);
}

TEST_CASE("bench on the hotpot replay pair") {
    test_support::TempDir dir;
    auto r = run({"bench", "--paradigm", "rewoo,react", "--replay", source_path("fixtures/hotpotqa"), "--out",
                  dir.path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rewoo") != std::string::npos);
    CHECK(r.out.find("react") != std::string::npos);
    auto report = nlohmann::json::parse(text::read_file(dir.file("report.json")));
    REQUIRE(report.size() == 2);
    CHECK(report[0]["avg_tokens"].get<double>() < report[1]["avg_tokens"].get<double>());
}

TEST_CASE("bench with all tools failing still completes") {
    test_support::TempDir dir;
    text::write_file(dir.file("d.jsonl"), "{\"id\": \"1\", \"question\": \"What is 3 times 4?\", \"answer\": \"12\"}\n");
    text::write_file(dir.file("script.json"),
                     "[\"Plan: multiply\\n#E1 = Calculator[3 * 4]\", \"No idea\"]");
    auto r = run({"bench", dir.file("d.jsonl"), "--paradigm", "rewoo", "--script", dir.file("script.json"),
                  "--inject-failure", "all", "--out", dir.file("out")});
    CHECK(r.code == 0);
    auto records = text::read_file(dir.file("out/records-rewoo.jsonl"));
    auto rec = nlohmann::json::parse(text::split_lines(records)[0]).get<engine::ExecutionRecord>();
    REQUIRE(rec.tool_calls.size() == 1);
    CHECK(rec.tool_calls[0].output == "No evidence found.");
}

TEST_CASE("bench on an empty dataset") {
    test_support::TempDir dir;
    text::write_file(dir.file("empty.jsonl"), "");
    auto r = run({"bench", dir.file("empty.jsonl"), "--replay", source_path("fixtures/gsm8k")});
    CHECK(r.code == 0);
}

TEST_CASE("export instructions") {
    test_support::TempDir dir;
    write_export_inputs(dir, {1, 0, 1});
    auto r = run({"export-instructions", dir.file("records.jsonl"), dir.file("scores.jsonl"), "--out",
                  dir.file("out.jsonl")});
    CHECK(r.code == 0);
    CHECK(count_lines(text::read_file(dir.file("out.jsonl"))) == 2);

    test_support::TempDir empty;
    text::write_file(empty.file("records.jsonl"), "");
    text::write_file(empty.file("scores.jsonl"), "");
    CHECK(run({"export-instructions", empty.file("records.jsonl"), empty.file("scores.jsonl"), "--out",
               empty.file("out.jsonl")})
              .code == 0);
    CHECK(text::read_file(empty.file("out.jsonl")).empty());

    text::write_file(dir.file("broken.jsonl"), "{ this is not json\n");
    CHECK(run({"export-instructions", dir.file("broken.jsonl"), dir.file("scores.jsonl"), "--out",
               dir.file("o2.jsonl")})
              .code != 0);

    write_export_inputs(dir, {1, 1});
    auto all_scores = text::read_file(dir.file("scores.jsonl"));
    text::write_file(dir.file("scores.jsonl"), all_scores.substr(0, all_scores.find('\n') + 1));
    CHECK(run({"export-instructions", dir.file("records.jsonl"), dir.file("scores.jsonl"), "--out",
               dir.file("o3.jsonl")})
              .code != 0);
}

TEST_CASE("tokens and cost") {
    auto t = run({"tokens", "a b c"});
    CHECK(t.code == 0);
    CHECK(t.out.find("3") != std::string::npos);
    auto bpe = run({"tokens", "--tokenizer", "bpe", "hello world"});
    CHECK(bpe.code == 0);
    CHECK(bpe.out.find("2") != std::string::npos);
    auto c = run({"cost", "1986.2"});
    CHECK(c.code == 0);
    CHECK(c.out.find("3.97") != std::string::npos);
    auto c2 = run({"cost", "9795.1", "--price", "0.002"});
    CHECK(c2.out.find("19.59") != std::string::npos);
}
