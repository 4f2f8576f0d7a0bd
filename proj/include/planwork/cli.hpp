// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "planwork/engine.hpp"
#include "planwork/model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace planwork::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

// Resolved settings for solve and bench. Precedence, lowest first:
// defaults, environment, the replay directory's config.json, --config, flags.
struct RunConfig {
    std::vector<engine::Paradigm> paradigms{engine::Paradigm::rewoo};
    std::string model_id{model::kDefaultModelId};
    std::vector<std::string> toolset; // empty: per-paradigm toolset from the replay dir, else every tool
    std::map<std::string, std::vector<std::string>> paradigm_toolsets;
    std::string exemplars = "generic"; // bundle name under data/exemplars, or a .jsonl path
    std::string templates_dir;         // empty: bundled templates
    std::string tokenizer = "whitespace";
    std::optional<double> price; // unset: pricing table
    std::string inject_failure = "off";
    std::string replay_dir;
    std::string record_dir;
    std::string script_path; // JSON array of canned model responses
    std::size_t max_steps = 7;
    std::size_t parallelism = 1;
    bool live = false;
    bool strict = false;
    bool judge = false;
    std::string judge_model{model::kDefaultModelId};
    std::size_t context_limit = model::kDefaultContextLimit;
    std::string out;
};

// Applies a JSON config document on top of `cfg`. Throws Config.
void apply_config_json(RunConfig& cfg, const std::string& json_text);

// Entry point shared by the binary and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace planwork::cli
