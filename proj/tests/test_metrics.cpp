#include <chrono>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lexforge/error.hpp"
#include "lexforge/metrics.hpp"
#include "support.hpp"

using namespace lexforge;

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

// Pair enumeration, straight from the definition of tau-b.
double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, pairs = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++pairs;
            const int s = sign(x[i] - x[j]) * sign(y[i] - y[j]);
            if (s > 0) ++concordant;
            if (s < 0) ++discordant;
            if (x[i] == x[j]) ++tied_x;
            if (y[i] == y[j]) ++tied_y;
        }
    return (concordant - discordant) / std::sqrt(double(pairs - tied_x) * double(pairs - tied_y));
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t p = 0;
    while (p < s.size()) {
        auto q = s.find(' ', p);
        if (q == std::string_view::npos) q = s.size();
        out.emplace_back(s.substr(p, q - p));
        p = q + 1;
    }
    return out;
}

RaterScores rater(const std::string& name) {
    return load_rater_scores(testsupport::data_dir() / "annotators" / (name + ".tsv"), name);
}

}  // namespace

TEST(Tau, MatchesPairEnumeration) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 11;
        const int levels = trial % 2 ? 3 : 1000000;  // odd trials: heavy ties
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = double(rng() % levels);
        for (auto& v : y) v = double(rng() % levels);
        const double expected = brute_tau_b(x, y);
        if (!std::isfinite(expected)) {
            EXPECT_THROW(kendall_tau(x, y), UndefinedTauError);
            continue;
        }
        EXPECT_NEAR(kendall_tau(x, y), expected, 1e-12);
    }
}

TEST(Tau, IdentityAndReversal) {
    const std::vector<double> x{3, 1, 4, 1.5, 9, 2.6};
    std::vector<double> rev;
    for (double v : x) rev.push_back(-v);
    EXPECT_DOUBLE_EQ(kendall_tau(x, x), 1.0);
    EXPECT_DOUBLE_EQ(kendall_tau(x, rev), -1.0);
}

TEST(Tau, KnownValueWithTies) {
    // tau-b for these vectors by hand: C=7, D=1, ties_x=1, ties_y=1, n0=10 -> 6/9.
    const std::vector<double> x{1, 2, 2, 3, 4}, y{2, 1, 3, 4, 4};
    EXPECT_NEAR(kendall_tau(x, y), 6.0 / 9.0, 1e-15);
    EXPECT_NEAR(brute_tau_b(x, y), 6.0 / 9.0, 1e-15);
    EXPECT_NEAR(kendall_tau(x, y, TauVariant::a), (7.0 - 1.0) / 10.0, 1e-15);
}

TEST(Tau, Errors) {
    const std::vector<double> a{1, 2, 3}, b{1, 2}, c{5, 5, 5}, one{1};
    EXPECT_THROW(kendall_tau(a, b), ValidationError);
    EXPECT_THROW(kendall_tau(one, one), ValidationError);
    EXPECT_THROW(kendall_tau(a, c), UndefinedTauError);
    EXPECT_DOUBLE_EQ(kendall_tau(a, c, TauVariant::a), 0.0);
    const std::vector<double> nan{1, std::nan(""), 3};
    EXPECT_THROW(kendall_tau(a, nan), ValidationError);
}

TEST(Tau, LargeInputIsFast) {
    std::mt19937_64 rng(5);
    std::vector<double> x(200000), y(200000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = double(rng() % 1000);
        y[i] = x[i] + double(rng() % 300);
    }
    const auto start = std::chrono::steady_clock::now();
    const double t = kendall_tau(x, y);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
    EXPECT_GT(t, 0.5);
}

TEST(Bleu, IdentityAndDisjoint) {
    const auto h = words("a b c d e");
    EXPECT_DOUBLE_EQ(bleu_tokens(h, h).score, 100.0);
    EXPECT_DOUBLE_EQ(bleu_tokens(words("a b c d"), words("w x y z")).score, 0.0);
}

TEST(Bleu, ToyCaseByHand) {
    // hyp "a b c d" vs ref "a b x c e"
    //   1-grams: a b c match of 4             -> 3/4
    //   2-grams: only "a b" matches of 3      -> 1/3
    //   3-grams: 0 of 2, smoothed 1/(2*2)     -> 1/4
    //   4-grams: 0 of 1, smoothed 1/(4*1)     -> 1/4
    //   brevity: exp(1 - 5/4)
    const double expected = 100.0 * std::exp(1.0 - 5.0 / 4.0) *
                            std::exp((std::log(0.75) + std::log(1.0 / 3.0) + std::log(0.25) + std::log(0.25)) / 4.0);
    const auto s = bleu_tokens(words("a b c d"), words("a b x c e"));
    EXPECT_NEAR(s.score, expected, 1e-9);
    EXPECT_EQ(s.matches, (std::array<std::size_t, 4>{3, 1, 0, 0}));
    EXPECT_EQ(s.totals, (std::array<std::size_t, 4>{4, 3, 2, 1}));
    EXPECT_NEAR(s.brevity_penalty, std::exp(-0.25), 1e-15);
}

TEST(Bleu, ClippedCounts) {
    // "the" appears once in the reference, so only one of the hypothesis' three counts.
    const auto s = bleu_tokens(words("the the the"), words("the cat"));
    EXPECT_EQ(s.matches[0], 1u);
    EXPECT_EQ(s.totals[0], 3u);
}

TEST(Bleu, EmptyHypothesisScoresZero) {
    EXPECT_DOUBLE_EQ(bleu_tokens(std::vector<std::string>{}, words("a b")).score, 0.0);
}

TEST(Bleu, DefinitionsJoinedWithBoundary) {
    auto seg = testsupport::bundle_segmenter();
    const std::vector<Definition> defs{{"揺れる。"}, {"今までになかった。"}};
    const auto toks = definition_tokens(defs, *seg);
    EXPECT_EQ(toks, (std::vector<std::string>{"揺れる", "。", std::string(kDefinitionBoundary), "今", "まで", "に",
                                              "なかっ", "た", "。"}));
    EXPECT_DOUBLE_EQ(bleu_definitions(defs, defs, *seg), 100.0);
    EXPECT_THROW(bleu_definitions(std::vector<Definition>{}, defs, *seg), ValidationError);
}

TEST(Scores, ParseAndDump) {
    const auto r = parse_rater_scores("headword\ttruthfulness\tcoverage\tsense_specificity\tguideline_compliance\n"
                                      "築く\t100\t90\t80\t70\n",
                                      "r");
    ASSERT_EQ(r.headwords.size(), 1u);
    EXPECT_DOUBLE_EQ(r.by_criterion.at(Criterion::coverage)[0], 90);
    EXPECT_DOUBLE_EQ(r.overall()[0], 85);
    EXPECT_EQ(parse_rater_scores(dump_rater_scores(r), "r").by_criterion, r.by_criterion);

    const auto bleu = parse_rater_scores("headword\tscore\n築く\t12.5\n", "bleu");
    for (auto c : kAllCriteria) EXPECT_DOUBLE_EQ(bleu.by_criterion.at(c)[0], 12.5);

    EXPECT_THROW(parse_rater_scores("word\tx\n", "bad"), ParseError);
    EXPECT_THROW(parse_rater_scores("headword\tscore\n築く\tabc\n", "bad"), ParseError);
}

TEST(Agreement, MachineEqualToAnnotatorIsOne) {
    auto r1 = rater("rater1");
    auto machine = r1;
    machine.rater_id = "copy";
    const auto report = compute_agreement({machine}, {r1});
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_DOUBLE_EQ(*report.rows[0].overall, 1.0);
    for (auto c : kAllCriteria) EXPECT_DOUBLE_EQ(report.rows[0].by_criterion.at(c), 1.0);
    ASSERT_EQ(report.notices.size(), 1u);
}

TEST(Agreement, ThreeAnnotatorsMatchOracle) {
    const std::vector<RaterScores> humans{rater("rater1"), rater("rater2"), rater("rater3")};
    auto machine = rater("rater3");
    machine.rater_id = "judge";
    // Perturb the machine so it is not identical to any annotator.
    std::swap(machine.by_criterion[Criterion::truthfulness][0], machine.by_criterion[Criterion::truthfulness][6]);
    const auto report = compute_agreement({machine}, humans);
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_EQ(report.rows[1].label, "Inter-human");

    for (auto c : kAllCriteria) {
        double mh = 0, hh = 0;
        for (const auto& h : humans) mh += brute_tau_b(machine.by_criterion.at(c), h.by_criterion.at(c));
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                hh += brute_tau_b(humans[i].by_criterion.at(c), humans[j].by_criterion.at(c));
        EXPECT_NEAR(report.rows[0].by_criterion.at(c), mh / 3, 1e-12) << to_string(c);
        EXPECT_NEAR(report.rows[1].by_criterion.at(c), hh / 3, 1e-12) << to_string(c);
    }
    double mo = 0;
    for (const auto& h : humans) mo += brute_tau_b(machine.overall(), h.overall());
    EXPECT_NEAR(*report.rows[0].overall, mo / 3, 1e-12);

    const auto md = agreement_markdown(report);
    EXPECT_NE(md.find("| Overall | Truthfulness | Coverage | Sense Specificity | Guideline Compliance |"),
              std::string::npos);
    EXPECT_NE(agreement_tsv(report).find("Inter-human\t"), std::string::npos);
}

TEST(Agreement, AlignsByHeadword) {
    auto a = rater("rater1");
    auto b = a;
    std::reverse(b.headwords.begin(), b.headwords.end());
    for (auto& [c, v] : b.by_criterion) std::reverse(v.begin(), v.end());
    const auto report = compute_agreement({a}, {b});
    EXPECT_DOUBLE_EQ(*report.rows[0].overall, 1.0);
}

TEST(Agreement, MisalignedHeadwordsListed) {
    auto a = rater("rater1");
    auto b = rater("rater2");
    b.headwords[0] = "城";
    try {
        compute_agreement({a}, {b});
        FAIL();
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("築く"), std::string::npos);
        EXPECT_NE(what.find("城"), std::string::npos);
    }
}
