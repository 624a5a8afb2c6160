#include <cmath>

#include <gtest/gtest.h>

#include "lexforge/error.hpp"
#include "lexforge/generate.hpp"
#include "lexforge/judge.hpp"
#include "lexforge/prompts.hpp"
#include "support.hpp"

using namespace lexforge;
using nlohmann::json;
using testsupport::entry;

namespace {

const HeadwordEntry& kizuku() {
    static const auto es = load_dataset(testsupport::fixture_dataset());
    return es.front();
}

const std::vector<Definition> kHypothesis{{"(建物や構造物を)作り上げる。"}, {"(関係や地位などを)時間をかけて作り上げる。"}};

ProviderConfig replay_judge() {
    ProviderConfig c;
    c.kind = ProviderKind::replay;
    c.cache_mode = CacheMode::replay;
    c.cache_dir = testsupport::data_dir() / "replay";
    c.model = "fixture-judge";
    return c;
}

std::map<Criterion, CriterionResult> scored(std::array<double, 4> s) {
    std::map<Criterion, CriterionResult> out;
    for (std::size_t i = 0; i < 4; ++i) out[kAllCriteria[i]] = {kAllCriteria[i], "", s[i]};
    return out;
}

}  // namespace

TEST(RubricPrompt, TruthfulnessCarriesRubricAndInputs) {
    const auto p = build_rubric_prompt(Criterion::truthfulness, kizuku(), kHypothesis);
    EXPECT_NE(p.user_text.find("one-to-one correspondences between the reference and response are not required"),
              std::string::npos);
    EXPECT_NE(p.user_text.find(prompts::instructions()), std::string::npos);
    EXPECT_NE(p.user_text.find("Input: 築く, きずく, verb"), std::string::npos);
    const auto resp = p.user_text.find("1. (建物や構造物を)作り上げる。");
    const auto ref = p.user_text.find("1. (建物(を))造る。");
    ASSERT_NE(resp, std::string::npos);
    ASSERT_NE(ref, std::string::npos);
    EXPECT_LT(resp, ref);
    EXPECT_NE(p.user_text.find("[RESULT]"), std::string::npos);
    EXPECT_EQ(p.system_text, prompts::judge_system());
}

TEST(RubricPrompt, EachCriterionUsesItsRubric) {
    for (auto c : kAllCriteria) {
        const auto p = build_rubric_prompt(c, kizuku(), kHypothesis);
        EXPECT_NE(p.user_text.find(rubric_text(c)), std::string::npos) << to_string(c);
        for (auto other : kAllCriteria)
            if (other != c) EXPECT_EQ(p.user_text.find(rubric_text(other)), std::string::npos);
    }
}

TEST(ResultScore, RoundTripAllIntegers) {
    for (int s = 0; s <= 100; ++s) {
        EXPECT_DOUBLE_EQ(parse_result_score("Some reasoning.\n" + render_result(s)), s);
        EXPECT_EQ(render_result(s), "[RESULT] " + std::to_string(s));
    }
}

TEST(ResultScore, Variants) {
    EXPECT_DOUBLE_EQ(parse_result_score("[RESULT] 87.5"), 87.5);
    EXPECT_DOUBLE_EQ(parse_result_score("[RESULT]: 90%"), 90);
    EXPECT_DOUBLE_EQ(parse_result_score("[RESULT] 10 then [RESULT] 20"), 20);
    EXPECT_DOUBLE_EQ(parse_result_score("[RESULT]\n 75"), 75);
    EXPECT_EQ(render_result(87.5), "[RESULT] 87.5");
}

TEST(ResultScore, Rejections) {
    EXPECT_THROW(parse_result_score("All senses match, so 100."), ParseError);
    EXPECT_THROW(parse_result_score("[RESULT] none"), ParseError);
    EXPECT_THROW(parse_result_score("[RESULT] 101"), RangeError);
    EXPECT_THROW(parse_result_score("[RESULT] -5"), Error);
}

TEST(Overall, MeanOfFour) {
    EXPECT_DOUBLE_EQ(overall_score(scored({100, 100, 100, 100})), 100.0);
    EXPECT_DOUBLE_EQ(overall_score(scored({100, 100, 50, 100})), 87.5);
    auto three = scored({1, 2, 3, 4});
    three.erase(Criterion::coverage);
    EXPECT_THROW(overall_score(three), ValidationError);
}

TEST(Overall, ReportedCriterionMeansAverage) {
    const std::array<double, 4> means{91.5, 91.9, 88.0, 92.0};
    const double overall = overall_score(scored(means));
    EXPECT_NEAR(overall, 90.85, 1e-12);
    // The reported one-decimal value 90.8 lies within rounding of 90.85 (binary 90.85 sits just below).
    EXPECT_LE(std::abs(overall - 90.8), 0.05 + 1e-12);
}

TEST(Evaluate, BuildFixtureAllHundred) {
    auto config = replay_judge();
    auto client = make_client(config);
    const auto r = evaluate_entry(kizuku(), kHypothesis, *client, config);
    ASSERT_TRUE(r.complete());
    for (auto c : kAllCriteria) EXPECT_DOUBLE_EQ(r.results.at(c).score, 100.0) << to_string(c);
    ASSERT_TRUE(r.overall.has_value());
    EXPECT_DOUBLE_EQ(*r.overall, 100.0);
    EXPECT_NE(r.results.at(Criterion::truthfulness).assessment.find("2 out of 2 = 100%"), std::string::npos);
}

TEST(Evaluate, EmptyResponseMakesNoCalls) {
    auto counting = std::make_shared<testsupport::CountingProvider>([](const LlmRequest&) { return std::string("[RESULT] 1"); });
    LlmClient client(counting, std::nullopt, CacheMode::off);
    ProviderConfig config;
    const auto r = evaluate_entry(kizuku(), std::vector<Definition>{}, client, config);
    EXPECT_EQ(counting->calls, 0);
    EXPECT_FALSE(r.complete());
    EXPECT_FALSE(r.overall.has_value());
}

TEST(Evaluate, UnparseableCriterionRecorded) {
    auto client = testsupport::scripted_client(json{
        {"rules", json::array({json{{"contains", "Score rubric (coverage)"}, {"response", "Looks fine to me."}}})},
        {"default", "ok [RESULT] 80"}});
    ProviderConfig config;
    const auto r = evaluate_entry(kizuku(), kHypothesis, *client, config);
    EXPECT_FALSE(r.complete());
    EXPECT_EQ(r.results.size(), 3u);
    EXPECT_TRUE(r.errors.contains(Criterion::coverage));
    EXPECT_FALSE(r.overall.has_value());
}

TEST(Evaluate, SubsetOfCriteria) {
    auto client = testsupport::scripted_client(json{{"rules", json::array()}, {"default", "[RESULT] 70"}});
    ProviderConfig config;
    const std::vector<Criterion> three{Criterion::truthfulness, Criterion::coverage, Criterion::sense_specificity};
    const auto r = evaluate_entry(kizuku(), kHypothesis, *client, config, three);
    EXPECT_TRUE(r.complete());
    EXPECT_FALSE(r.overall.has_value());
}

TEST(Evaluate, RecordJsonRoundTrip) {
    auto client = testsupport::scripted_client(json{{"rules", json::array()}, {"default", "[RESULT] 70"}});
    ProviderConfig config;
    auto r = evaluate_entry(kizuku(), kHypothesis, *client, config);
    r.bleu = 12.5;
    EXPECT_EQ(to_json(evaluation_from_json(to_json(r))), to_json(r));
}

TEST(Corpus, MeanAndPopulationStd) {
    const auto a = mean_std(std::vector<double>{90, 100});
    EXPECT_DOUBLE_EQ(a.mean, 95);
    EXPECT_DOUBLE_EQ(a.std, 5);
    EXPECT_EQ(a.n, 2u);
    EXPECT_THROW(mean_std(std::vector<double>{}), ValidationError);

    auto client = testsupport::scripted_client(
        json{{"rules", json::array({json{{"contains", "揺らぐ"}, {"response", "[RESULT] 50"}}})}, {"default", "[RESULT] 100"}});
    ProviderConfig config;
    const auto other = entry("揺らぐ", "ゆらぐ", PartOfSpeech::verb, {"揺れる。"});
    std::vector<EvaluationRecord> records{evaluate_entry(kizuku(), kHypothesis, *client, config),
                                          evaluate_entry(other, std::vector<Definition>{{"揺れる。"}}, *client, config),
                                          evaluate_entry(other, std::vector<Definition>{}, *client, config)};
    const auto agg = evaluate_corpus(records);
    EXPECT_DOUBLE_EQ(agg.at("overall").mean, 75);
    EXPECT_DOUBLE_EQ(agg.at("overall").std, 25);
    EXPECT_EQ(agg.at("truthfulness").n, 2u);
    EXPECT_THROW(evaluate_corpus(std::vector<EvaluationRecord>{records[2]}), ValidationError);
}
