// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "planwork/blueprint.hpp"
#include "planwork/fixtures.hpp"

#include <random>

using namespace planwork;
using namespace planwork::blueprint;
using test_support::source_path;

namespace {

Blueprint hotpot_blueprint() {
    auto t = fixtures::load_trajectory(source_path("fixtures/trajectories/hotpotqa.rewoo.txt"));
    return parse_blueprint(t.planner).blueprint;
}

} // namespace

TEST_CASE("evidence var ids") {
    CHECK(EvidenceVarId(3).str() == "#E3");
    CHECK(EvidenceVarId(12).str() == "#E12");
    CHECK_THROWS(EvidenceVarId(0));
    CHECK(parse_var("#E7") == EvidenceVarId(7));
    CHECK_FALSE(parse_var("#E07"));
    CHECK_FALSE(parse_var("#E0"));
    CHECK_FALSE(parse_var("#E"));
    CHECK_FALSE(parse_var("E1"));
}

TEST_CASE("references use maximal munch on digits") {
    auto refs = find_references("use #E12 and #E1, not #E01");
    REQUIRE(refs.size() == 2);
    CHECK(refs[0].var == EvidenceVarId(12));
    CHECK(refs[0].offset == 4);
    CHECK(refs[0].length == 4);
    CHECK(refs[1].var == EvidenceVarId(1));
}

TEST_CASE("single step") {
    auto out = parse_blueprint(
        "Plan: Search for more information about Jon Raymond Polito.\n#E1 = Wikipedia[Jon Raymond Polito]");
    REQUIRE(out.blueprint.steps.size() == 1);
    const auto& s = out.blueprint.steps[0];
    CHECK(s.var == EvidenceVarId(1));
    CHECK(s.tool_name == "Wikipedia");
    CHECK(s.tool_input == "Jon Raymond Polito");
    CHECK(s.description == "Search for more information about Jon Raymond Polito.");
    CHECK(out.warnings.empty());
}

TEST_CASE("empty text gives an empty blueprint") {
    CHECK(parse_blueprint("").blueprint.steps.empty());
    CHECK(render_blueprint(Blueprint{}).empty());
}

TEST_CASE("four step hotpot blueprint and its graph") {
    auto bp = hotpot_blueprint();
    REQUIRE(bp.steps.size() == 4);
    std::vector<std::string> tools;
    for (const auto& s : bp.steps)
        tools.push_back(s.tool_name);
    CHECK(tools == std::vector<std::string>{"Wikipedia", "LLM", "Wikipedia", "LLM"});
    CHECK(bp.steps[1].tool_input == "What is the name of the 1989 comic book? Given context: #E1");

    auto g = build_dep_graph(bp);
    using S = std::set<EvidenceVarId>;
    CHECK(g.edges.at(EvidenceVarId(1)) == S{});
    CHECK(g.edges.at(EvidenceVarId(2)) == S{EvidenceVarId(1)});
    CHECK(g.edges.at(EvidenceVarId(3)) == S{EvidenceVarId(2)});
    CHECK(g.edges.at(EvidenceVarId(4)) == S{EvidenceVarId(2), EvidenceVarId(3)});
    CHECK(g.topo_order ==
          std::vector<EvidenceVarId>{EvidenceVarId(1), EvidenceVarId(2), EvidenceVarId(3), EvidenceVarId(4)});
}

TEST_CASE("single step graph") {
    auto bp = parse_blueprint("Plan: p\n#E1 = T[x]").blueprint;
    auto g = build_dep_graph(bp);
    CHECK(g.edges.at(EvidenceVarId(1)).empty());
    CHECK(g.topo_order == std::vector<EvidenceVarId>{EvidenceVarId(1)});
}

TEST_CASE("graph errors") {
    auto fwd = parse_blueprint("Plan: a\n#E1 = T[#E2]\nPlan: b\n#E2 = T[x]").blueprint;
    CHECK_ERROR_CODE(build_dep_graph(fwd), ErrorCode::ForwardReference);
    auto undef = parse_blueprint("Plan: a\n#E1 = T[#E5]").blueprint;
    CHECK_ERROR_CODE(build_dep_graph(undef), ErrorCode::UndefinedReference);
    auto self = parse_blueprint("Plan: a\n#E1 = T[#E1]").blueprint;
    CHECK_THROWS_AS(build_dep_graph(self), Error);
}

TEST_CASE("strict parse errors") {
    CHECK_ERROR_CODE(parse_blueprint("Plan: only a plan"), ErrorCode::MalformedStep);
    CHECK_ERROR_CODE(parse_blueprint("#E1 = T[x]"), ErrorCode::MalformedStep);
    CHECK_ERROR_CODE(parse_blueprint("Plan: a\n#E1 = T[x]\nPlan: b\n#E1 = T[y]"), ErrorCode::DuplicateVar);
    CHECK_ERROR_CODE(parse_blueprint("Plan: a\n#E1 = no tool here"), ErrorCode::BadToolSyntax);
}

TEST_CASE("lenient mode keeps what it can") {
    auto out = parse_blueprint("Plan: dangling\nPlan: good\n#E1 = T[x]\n#E2 = broken", ParseMode::lenient);
    REQUIRE(out.blueprint.steps.size() == 1);
    CHECK(out.blueprint.steps[0].tool_input == "x");
    CHECK_FALSE(out.warnings.empty());
}

TEST_CASE("lenient mode is total on random text") {
    std::mt19937 rng(7);
    const std::string alphabet = "Plan:#E1234=[]() \nabcT";
    for (int i = 0; i < 500; ++i) {
        std::string s;
        auto len = rng() % 80;
        for (std::size_t j = 0; j < len; ++j)
            s += alphabet[rng() % alphabet.size()];
        CHECK_NOTHROW(parse_blueprint(s, ParseMode::lenient));
    }
}

TEST_CASE("multi-line descriptions and bracketed inputs") {
    auto out = parse_blueprint("Plan: first line\n  continues here\n#E1 = Calculator[(2 * [3]) - 1]\n");
    REQUIRE(out.blueprint.steps.size() == 1);
    CHECK(out.blueprint.steps[0].description == "first line\ncontinues here");
    CHECK(out.blueprint.steps[0].tool_input == "(2 * [3]) - 1");

    auto spanning = parse_blueprint("Plan: p\n#E1 = LLM[line one\nline two]");
    REQUIRE(spanning.blueprint.steps.size() == 1);
    CHECK(spanning.blueprint.steps[0].tool_input == "line one\nline two");
}

TEST_CASE("non-contiguous numbering") {
    auto bp = parse_blueprint("Plan: a\n#E2 = T[x]\nPlan: b\n#E5 = T[#E2]").blueprint;
    CHECK(bp.steps.size() == 2);
    CHECK_NOTHROW(build_dep_graph(bp));
}

TEST_CASE("render round trip on the gsm8k calculator plan") {
    auto t = fixtures::load_trajectory(source_path("fixtures/trajectories/gsm8k.rewoo.txt"));
    auto bp = parse_blueprint(t.planner).blueprint;
    REQUIRE(bp.steps.size() == 4);
    auto text = render_blueprint(bp);
    CHECK(text.starts_with("Plan: Calculate the total amount of money John received from his 4 grandparents.\n"
                           "#E1 = Calculator[50 * 4]\n"));
    auto again = parse_blueprint(text).blueprint;
    CHECK(again.structurally_equal(bp));
}

TEST_CASE("execution waves group independent steps") {
    auto bp = parse_blueprint("Plan: a\n#E1 = T[x]\nPlan: b\n#E2 = T[y]\nPlan: c\n#E3 = T[#E1 #E2]").blueprint;
    auto waves = execution_waves(build_dep_graph(bp), bp);
    REQUIRE(waves.size() == 2);
    CHECK(waves[0] == std::vector<EvidenceVarId>{EvidenceVarId(1), EvidenceVarId(2)});
    CHECK(waves[1] == std::vector<EvidenceVarId>{EvidenceVarId(3)});
}
