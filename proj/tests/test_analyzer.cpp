#include <filesystem>

#include <gtest/gtest.h>

#include "lexforge/analyzer.hpp"
#include "lexforge/lexicon.hpp"
#include "support.hpp"

using namespace lexforge;

namespace {

std::string joined(Segmenter& seg, std::string_view text) {
    std::string out;
    for (const auto& t : seg.segment(text)) out += (out.empty() ? "" : "/") + t.surface;
    return out;
}

}  // namespace

TEST(Analyzer, BundleSegmentsKnownSentence) {
    auto seg = testsupport::bundle_segmenter();
    EXPECT_EQ(joined(*seg, "自分より前の世代の血縁者。"), "自分/より/前/の/世代/の/血縁/者/。");
}

TEST(Analyzer, LemmaIsDictionaryForm) {
    auto seg = testsupport::bundle_segmenter();
    const auto tokens = seg->segment("急がないで、時間をかけて物事をするさま。");
    ASSERT_FALSE(tokens.empty());
    EXPECT_EQ(tokens[0].surface, "急が");
    EXPECT_EQ(tokens[0].lemma, "急ぐ");
    EXPECT_EQ(tokens[0].pos_major, "動詞");
}

TEST(Analyzer, SurfaceReconstructionOnFixtureTexts) {
    auto seg = testsupport::bundle_segmenter();
    for (const auto& text : testsupport::bundle_texts()) {
        std::string rebuilt, expected;
        for (const auto& t : seg->segment(text)) {
            EXPECT_FALSE(t.surface.empty());
            EXPECT_FALSE(t.lemma.empty());
            rebuilt += t.surface;
        }
        for (char c : text)
            if (c != ' ') expected += c;
        EXPECT_EQ(rebuilt, expected) << text;
    }
}

TEST(Analyzer, BundleMatchesFullDictionary) {
    if (!std::filesystem::exists(testsupport::unidic_dir() / "sys.dic")) GTEST_SKIP() << "unidic-lite not installed";
    EmbeddedSegmenter full(analyzer::open_mecab_dictionary(testsupport::unidic_dir()));
    auto bundle = testsupport::bundle_segmenter();
    for (const auto& text : testsupport::bundle_texts()) EXPECT_EQ(full.segment(text), bundle->segment(text)) << text;
}

TEST(Analyzer, BundleWriteReadRoundTrip) {
    if (!std::filesystem::exists(testsupport::unidic_dir() / "sys.dic")) GTEST_SKIP() << "unidic-lite not installed";
    const auto dict = analyzer::open_mecab_dictionary(testsupport::unidic_dir());
    const std::vector<std::string> texts{"犬が走る。", "ｶﾀｶﾅとＡＢＣ123を混ぜた文。"};
    const auto dir = testsupport::temp_dir("bundle");
    analyzer::write_bundle(*dict, texts, dir);
    EmbeddedSegmenter a(dict), b(analyzer::open_bundle(dir));
    for (const auto& t : texts) EXPECT_EQ(a.segment(t), b.segment(t)) << t;
}

TEST(Analyzer, SplitFeatureHonorsQuotes) {
    const auto f = analyzer::split_feature(R"(名詞,"a,b",c)");
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[1], "a,b");
}

TEST(Analyzer, CharPropertyTextRoundTrip) {
    const auto text = "DEFAULT 0 1 0\nKANJI 0 0 2\nSPACE 0 1 0\n0x4E00..0x9FFF KANJI\n0x0020 SPACE\n";
    const auto cp = analyzer::CharProperty::from_text(text);
    EXPECT_EQ(analyzer::CharProperty::from_text(cp.to_text()), cp);
    EXPECT_EQ(cp.category_name(cp.info(0x4E00).default_type), "KANJI");
    EXPECT_EQ(cp.category_name(cp.info(0x3042).default_type), "DEFAULT");
}
