// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "planwork/tools.hpp"

#include <cmath>
#include <random>

using namespace planwork;
using namespace planwork::tools;
using blueprint::EvidenceVarId;
using test_support::source_path;

namespace {

ToolRegistry fixture_registry(const std::string& bench) {
    ToolsConfig cfg;
    cfg.fixtures = ToolFixtureStore::load(source_path("fixtures/" + bench + "/tools.jsonl"));
    return build_registry(cfg);
}

} // namespace

TEST_CASE("evidence substitution") {
    EvidenceMap ev;
    ev.insert(EvidenceVarId(2), "37");
    CHECK(substitute_evidence("(2 * #E2 - 10) - 8", ev, Policy::strict).text == "(2 * 37 - 10) - 8");
    CHECK(substitute_evidence("plain input", ev, Policy::strict).text == "plain input");

    EvidenceMap one;
    one.insert(EvidenceVarId(1), "x");
    auto lenient = substitute_evidence("use #E10", one, Policy::lenient);
    CHECK(lenient.text == "use #E10");
    CHECK(lenient.warnings.size() == 1);
    CHECK_ERROR_CODE(substitute_evidence("use #E10", one, Policy::strict), ErrorCode::UnresolvedReference);
    CHECK_ERROR_CODE(one.insert(EvidenceVarId(1), "again"), ErrorCode::DuplicateVar);
}

TEST_CASE("arithmetic") {
    CHECK(eval_arithmetic("50 * 4") == "200");
    CHECK(eval_arithmetic("(50 * 4) / 20") == "10.0");
    CHECK(eval_arithmetic("10.0 * 2") == "20.0");
    CHECK(eval_arithmetic("20 * (200 / 20)") == "200.0");
    CHECK(eval_arithmetic("2 ** 10") == "1024");
    CHECK(eval_arithmetic("-3 + 5") == "2");
    CHECK(eval_arithmetic("1 + 2 * 3") == "7");
    CHECK(eval_arithmetic("7 / 2") == "3.5");
    CHECK_ERROR_CODE(eval_arithmetic("1/0"), ErrorCode::DivisionByZero);
    CHECK_ERROR_CODE(eval_arithmetic("2 +"), ErrorCode::ParseError);
    CHECK_ERROR_CODE(eval_arithmetic("(1"), ErrorCode::ParseError);
    CHECK_ERROR_CODE(eval_arithmetic("abc"), ErrorCode::ParseError);
}

TEST_CASE("python float rendering") {
    CHECK(format_float(200.0) == "200.0");
    CHECK(format_float(0.1) == "0.1");
    CHECK(format_float(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_float(1e20) == "1e+20");
    CHECK(format_float(1e-7) == "1e-07");
    CHECK(format_float(123456789012345678.0) == "1.2345678901234568e+17");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double v = dist(rng);
        CHECK(std::stod(format_float(v)) == v);
    }
}

TEST_CASE("invoke") {
    auto reg = build_registry({});
    FailureInjection off;
    CHECK(invoke("Calculator", "50 * 4", reg, off, {}).evidence == "200");

    auto div = invoke("Calculator", "1/0", reg, off, {});
    CHECK(div.failed);
    CHECK(div.evidence == std::string(kNoEvidence));
    CHECK(div.error.find("DivisionByZero") != std::string::npos);

    auto unknown = invoke("Nope", "x", reg, off, {});
    CHECK(unknown.failed);
    CHECK(unknown.evidence == "Unknown tool: Nope");
    CHECK_ERROR_CODE(invoke("Nope", "x", reg, off, {}, Policy::strict), ErrorCode::UnknownTool);

    auto all = FailureInjection::parse("all");
    for (const auto& name : reg.names()) {
        auto r = invoke(name, "anything", reg, all, {});
        CHECK(r.evidence == "No evidence found.");
        CHECK(r.injected);
    }
    auto named = FailureInjection::parse("Google, Calculator");
    CHECK(named.applies_to("Calculator"));
    CHECK_FALSE(named.applies_to("LLM"));
    CHECK_FALSE(FailureInjection::parse("off").applies_to("Calculator"));
}

TEST_CASE("fixture-backed search") {
    auto reg = fixture_registry("triviaqa");
    auto r = invoke("Wikipedia", "Melanie C", reg, {}, {});
    CHECK_FALSE(r.failed);
    CHECK(r.evidence.starts_with("Could not find [Melanie C]. Similar: "));

    // Hermetic: no fixture and not live is a failure, never a network call.
    auto miss = invoke("Wikipedia", "Something never recorded", reg, {}, {});
    CHECK(miss.failed);
    CHECK(miss.error.find("ReplayMiss") != std::string::npos);
}

TEST_CASE("registry") {
    auto reg = build_registry({});
    for (const char* name : {"Google", "Wikipedia", "WolframAlpha", "Calculator", "LLM", "SearchSOTU"})
        CHECK(reg.contains(name));
    auto d = reg.describe({"Calculator", "Google"});
    REQUIRE(d.size() == 2);
    CHECK(d[0].name == "Calculator");
    CHECK_FALSE(d[0].description.empty());
    CHECK_ERROR_CODE(reg.describe({"Missing"}), ErrorCode::UnknownTool);

    Handler h = [](std::string_view, const InvokeContext&) { return std::string("abcdef"); };
    CHECK_THROWS_AS(ToolRegistry({{"A", "d", ToolKind::stub, h}, {"A", "d", ToolKind::stub, h}}), Error);
    CHECK_THROWS_AS(ToolRegistry({{"1bad", "d", ToolKind::stub, h}}), Error);
    ToolRegistry small({{"A", "d", ToolKind::stub, h}}, 3);
    CHECK(invoke("A", "", small, {}, {}).evidence == "abc");
}

TEST_CASE("model-backed LLM tool uses the short-answer template") {
    auto backend = std::make_shared<model::ScriptedBackend>(
        model::ScriptedBackend::Responder([](const model::ModelRequest& r) { return "[" + r.prompt + "]"; }));
    model::ModelClient client(backend, nullptr, std::make_shared<accounting::WhitespaceTokenizer>());
    accounting::TokenLedger ledger;
    InvokeContext ctx{&client, &ledger};
    auto reg = build_registry({});
    auto r = invoke("LLM", "What is 1 + 1?", reg, {}, ctx);
    CHECK(r.evidence == "[Respond in short directly with no extra words.\n\nWhat is 1 + 1?\n]");
    CHECK(ledger.count(accounting::CallKind::tool_model) == 1);
}

TEST_CASE("tool fixture store round trip") {
    test_support::TempDir dir;
    ToolFixtureStore store;
    store.add("Google", "q", "answer");
    store.save(dir.file("tools.jsonl"));
    auto loaded = ToolFixtureStore::load(dir.file("tools.jsonl"));
    CHECK(loaded->lookup("Google", "q") == std::optional<std::string>("answer"));
    CHECK_FALSE(loaded->lookup("Google", "other"));
}
