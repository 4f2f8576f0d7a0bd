// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/accounting.hpp"
#include "planwork/engine.hpp"
#include "planwork/model.hpp"
#include "planwork/prompting.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace planwork::evaluation {

// Lowercase, drop ASCII punctuation, collapse whitespace, then drop one
// leading article (a, an, the).
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view pred, std::string_view gold);

// F1 over the multisets of code points of the normalized strings, whitespace
// excluded. Both empty scores 1.
double char_f1(std::string_view pred, std::string_view gold);

// F1 over the multisets of whitespace-separated normalized tokens.
double token_f1(std::string_view pred, std::string_view gold);

// Leading yes/no, case-insensitive, trailing punctuation ignored.
std::optional<int> parse_verdict(std::string_view reply);

struct JudgeVerdict {
    int score = 0;
    std::string warning; // set when the reply was not a yes/no
};

// `judge_template` uses {{question}}, {{gold}}, {{prediction}}; empty selects
// the bundled template.
JudgeVerdict judge_accuracy(std::string_view question, std::string_view pred, std::string_view gold,
                            model::ModelClient& judge, const std::string& judge_model_id,
                            const std::string& judge_template = {}, accounting::TokenLedger* ledger = nullptr);

struct DatasetItem {
    std::string id;
    std::string question;
    std::string answer;
};

// JSONL {id, question, answer}.
std::vector<DatasetItem> load_dataset(const std::string& path);

struct ScoredResult {
    std::string task_id;
    int em = 0;
    double f1 = 0.0;
    std::optional<int> judge_acc;
    accounting::TokenCount tokens = 0;
    accounting::TokenCount input_tokens = 0;
    accounting::TokenCount output_tokens = 0;
    std::size_t steps = 0;
    bool failed = false;
    std::vector<std::string> warnings;
};

struct BenchmarkReport {
    std::string benchmark;
    engine::Paradigm paradigm = engine::Paradigm::rewoo;
    std::size_t n_tasks = 0;
    std::size_t n_tools = 0;
    std::size_t n_exemplars = 0;
    double acc = 0.0; // percentages
    double f1 = 0.0;
    double em = 0.0;
    double avg_tokens = 0.0; // input + output per task
    double avg_input_tokens = 0.0;
    double avg_output_tokens = 0.0;
    double avg_steps = 0.0;
    double cost_1k = 0.0;
    double price_per_1k = accounting::kDefaultPricePer1k;
    bool judged = false;
    std::size_t failed_tasks = 0;
};

struct BenchmarkConfig {
    std::string benchmark;
    engine::Paradigm paradigm = engine::Paradigm::rewoo;
    engine::EngineDeps deps;
    std::size_t parallelism = 1;
    bool token_level_f1 = false;
    model::ModelClient* judge = nullptr; // no judge: Acc falls back to EM
    std::string judge_model_id{model::kDefaultModelId};
    std::string judge_template;
    double price_per_1k = accounting::kDefaultPricePer1k;
};

struct BenchmarkRun {
    BenchmarkReport report;
    std::vector<ScoredResult> results;          // ordered by task id
    std::vector<engine::ExecutionRecord> records; // same order; failed tasks carry an empty record
};

// Runs every task, scores it, and folds the results in task-id order. A task
// that throws scores 0 and carries the error as a warning.
BenchmarkRun run_benchmark(const std::vector<DatasetItem>& dataset, const BenchmarkConfig& cfg);

// Aligned columns: Paradigm, #Tools, n, Acc, F1, EM, #Tokens, #Steps, $Cost_1k.
std::string format_report_table(const std::vector<BenchmarkReport>& reports);

void to_json(nlohmann::json& j, const BenchmarkReport& r);
void from_json(const nlohmann::json& j, BenchmarkReport& r);
void to_json(nlohmann::json& j, const ScoredResult& r);
void from_json(const nlohmann::json& j, ScoredResult& r);

struct InstructionRecord {
    std::string instruction;
    std::string input;
    std::string output;
};

void to_json(nlohmann::json& j, const InstructionRecord& r);

// One record per correct ReWOO run (judge verdict when present, else EM).
// Throws AlignmentMismatch when records and scores do not pair up by task id.
std::vector<InstructionRecord> export_planner_instructions(const std::vector<engine::ExecutionRecord>& records,
                                                           const std::vector<ScoredResult>& scores,
                                                           const prompting::PromptTemplate& tpl,
                                                           const std::vector<prompting::ToolDescription>& tools);

} // namespace planwork::evaluation
