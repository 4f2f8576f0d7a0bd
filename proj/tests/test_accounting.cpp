// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"
#include "harness.hpp"

#include "planwork/accounting.hpp"
#include "planwork/text.hpp"

#include <cmath>

using namespace planwork;
using namespace planwork::accounting;
using test_support::Harness;
using test_support::source_path;

TEST_CASE("whitespace tokenizer") {
    WhitespaceTokenizer ws;
    CHECK(count_tokens("", ws) == 0);
    CHECK(count_tokens("a b c", ws) == 3);
    CHECK(count_tokens("  a\n\tb  ", ws) == 2);
}

TEST_CASE("byte pair tokenizer matches the reference encoder") {
    auto bpe = BytePairTokenizer::load(planwork::data_path("vocab/cl100k_base.tiktoken"));
    auto cases = nlohmann::json::parse(text::read_file(source_path("tests/data/bpe_oracle.json")));
    REQUIRE(cases.size() >= 10);
    for (const auto& c : cases) {
        auto text = c["text"].get<std::string>();
        auto ids = c["ids"].get<std::vector<std::uint32_t>>();
        CHECK_MESSAGE(bpe->encode(text) == ids, text);
        CHECK(bpe->count(text) == static_cast<TokenCount>(ids.size()));
    }
    CHECK(bpe->scheme().starts_with("byte_pair("));
    CHECK_ERROR_CODE(BytePairTokenizer::load("/nonexistent/vocab.tiktoken"), ErrorCode::UnknownVocabulary);
    CHECK_ERROR_CODE(make_tokenizer("bpe", "/nonexistent/vocab.tiktoken"), ErrorCode::UnknownVocabulary);
    CHECK_ERROR_CODE(make_tokenizer("nope"), ErrorCode::Config);
}

TEST_CASE("interleaved loop prediction") {
    std::vector<TokenCount> tao{15, 15, 15};
    CHECK(predict_tao_tokens(10, 20, 30, tao) == 225);
    std::vector<TokenCount> one{99};
    CHECK(predict_tao_tokens(10, 20, 30, one) == 60);
    std::vector<TokenCount> two{1, 1};
    CHECK(predict_tao_tokens(0, 0, 0, two) == 1);
}

TEST_CASE("plan-work-solve prediction") {
    std::vector<TokenCount> pe{15, 15, 15};
    CHECK(predict_rewoo_tokens(10, 20, 20, 30, pe) == 135);
    CHECK(predict_rewoo_tokens(10, 20, 25, 30, {}) == 2 * 10 + 20 + 25 + 30);
    std::vector<TokenCount> tao{15, 15, 15};
    CHECK(predict_tao_tokens(10, 20, 30, tao) - predict_rewoo_tokens(10, 20, 20, 30, pe) == 90);
}

TEST_CASE("cost per 1k queries") {
    CHECK(std::abs(cost_per_1k(1986.2, 0.002) - 3.97) <= 0.005);
    CHECK(std::abs(cost_per_1k(9795.1, 0.002) - 19.59) <= 0.005);
    CHECK(cost_per_1k(0, 0.002) == 0.0);
}

TEST_CASE("pricing table") {
    auto t = PricingTable::load(planwork::data_path("pricing.json"));
    CHECK(t.price_for("gpt-3.5-turbo") == doctest::Approx(0.002));
    CHECK(t.price_for("unknown-model") == doctest::Approx(t.default_price()));
    auto flat = PricingTable::from_json(nlohmann::json{{"m", 0.01}});
    CHECK(flat.price_for("m") == doctest::Approx(0.01));
}

TEST_CASE("ledger totals and serialization") {
    TokenLedger l;
    l.record({CallKind::planner, 10, 2, ComponentBreakdown{1, 2, 3, 4}});
    l.record({CallKind::solver, 5, 1, std::nullopt});
    CHECK(l.totals().input_tokens == 15);
    CHECK(l.totals().total() == 18);
    CHECK(l.totals(CallKind::solver).input_tokens == 5);
    CHECK(l.count(CallKind::planner) == 1);
    nlohmann::json j = l;
    CHECK(j.get<TokenLedger>() == l);
    CHECK_ERROR_CODE(decompose_ledger(l), ErrorCode::MissingBreakdown);
}

TEST_CASE("decomposition: exemplars charged once for plan-work-solve") {
    auto h = Harness::replay(source_path("fixtures/hotpotqa"));
    auto t = fixtures::load_trajectory(source_path("fixtures/trajectories/hotpotqa.rewoo.txt"));
    auto rec = engine::run_rewoo(test_support::task_from(t), h.deps(engine::Paradigm::rewoo));
    auto b = decompose_ledger(rec.ledger);
    WhitespaceTokenizer ws;
    CHECK(b.exemplars == ws.count(prompting::render_planner_exemplars(h.exemplars)));
    CHECK(b.total() == rec.ledger.totals().input_tokens);
}

TEST_CASE("decomposition: exemplars charged on every loop call") {
    // "Question: x" + 98 words = 100 tokens of exemplar text.
    std::string demo = "Thought:";
    for (int i = 0; i < 97; ++i)
        demo += " w";
    prompting::Exemplar ex{"x", std::nullopt, demo, "test"};
    CHECK(WhitespaceTokenizer().count(prompting::render_tao_exemplars({ex})) == 100);

    int call = 0;
    auto h = Harness::scripted(
        [&](const model::ModelRequest&) {
            return ++call < 5 ? std::string("Thought: t\nAction: Calculator[1+1]") : std::string("Thought: t\nAction: Finish[2]");
        },
        {ex});
    auto rec = engine::run_react({"t", "q", {}, {"Calculator"}, {}}, h.deps(engine::Paradigm::react), 7);
    CHECK(rec.ledger.entries().size() == 5);
    CHECK(decompose_ledger(rec.ledger).exemplars == 500);
}

TEST_CASE("decomposition: direct has no exemplars") {
    auto h = Harness::queued({"Paris"});
    auto rec = engine::run_single({"t", "q", {}, {}, {}}, h.deps(engine::Paradigm::direct), engine::SingleStyle::direct);
    CHECK(decompose_ledger(rec.ledger).exemplars == 0);
}
