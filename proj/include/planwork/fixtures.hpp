// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/engine.hpp"

#include <map>
#include <string>
#include <vector>

namespace planwork::fixtures {

// One worked trajectory in the plain-text fixture format: `key: value`
// header lines, then `--- Section ---` blocks (Question, Gold, Planner,
// Evidence, Answer for rewoo; Question, Gold, Trajectory for react).
struct Trajectory {
    std::string name;
    engine::Paradigm paradigm = engine::Paradigm::rewoo;
    std::string benchmark;
    std::string task_id;
    std::string exemplars; // bundle name under data/exemplars
    std::vector<std::string> tools;
    std::string question;
    std::string gold; // defaults to the answer
    std::string answer;

    // rewoo
    std::string planner;
    std::map<int, std::string> evidence; // by #E index

    // react: one completion ("Thought: ...\nAction: ...") per turn, and the
    // observation that followed it (empty after Finish)
    std::vector<std::string> completions;
    std::vector<std::string> observations;
};

// Throws Format.
Trajectory parse_trajectory(std::string_view text);
Trajectory load_trajectory(const std::string& path);
// Every *.txt in `dir`, in file-name order.
std::vector<Trajectory> load_trajectories(const std::string& dir);

// Per replay directory: {model, exemplars, tokenizer, toolsets: {paradigm: [...]}}.
struct ReplayConfig {
    std::string model{model::kDefaultModelId};
    std::string exemplars;
    std::string tokenizer = "whitespace";
    std::map<std::string, std::vector<std::string>> toolsets;
};

ReplayConfig load_replay_config(const std::string& dir);
void save_replay_config(const ReplayConfig& cfg, const std::string& dir);

struct BuildOptions {
    std::string trajectories_dir;
    std::string out_dir;
    std::string tokenizer = "whitespace";
};

struct BuildSummary {
    std::vector<std::string> dirs; // one per benchmark
    std::size_t model_records = 0;
    std::size_t tool_records = 0;
};

// Replays every trajectory through the engine with a scripted model, records
// the model and tool traffic, and writes <out>/<benchmark>/{model.jsonl,
// tools.jsonl, dataset.jsonl, config.json}. Each run is checked against its
// trajectory, then re-run from the written files. Throws Format on any
// divergence.
BuildSummary build_fixtures(const BuildOptions& opts);

} // namespace planwork::fixtures
