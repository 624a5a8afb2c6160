#include <random>

#include <gtest/gtest.h>

#include "lexforge/dataset.hpp"
#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/lexicon.hpp"
#include "support.hpp"

using namespace lexforge;

namespace {

DefiningVocabulary vocab_of(std::vector<std::string> words, std::string name = "v") {
    return DefiningVocabulary(std::move(name), words);
}

std::vector<Definition> reference_definitions() {
    std::vector<Definition> out;
    for (const auto& e : load_dataset(testsupport::fixture_dataset()))
        out.insert(out.end(), e.definitions.begin(), e.definitions.end());
    return out;
}

}  // namespace

TEST(Lexicon, ComplexWordOfAncestorDefinition) {
    auto seg = testsupport::bundle_segmenter();
    EXPECT_EQ(find_complex_words({"自分より前の世代の血縁者。"}, testsupport::vocab16k(), *seg),
              std::vector<std::string>{"血縁"});
    EXPECT_TRUE(find_complex_words({"自分より前の世代で、血のつながりがある人。"}, testsupport::vocab16k(), *seg).empty());
}

TEST(Lexicon, EmptyVocabularyFlagsEveryContentLemma) {
    auto seg = testsupport::bundle_segmenter();
    // を inside the brackets is tagged 記号 (as MeCab does), so it is exempt.
    const auto words = find_complex_words({"(建物(を))造る。"}, DefiningVocabulary{}, *seg);
    EXPECT_EQ(words, (std::vector<std::string>{"建物", "作る"}));
    EXPECT_EQ(find_complex_words({"家を造る。"}, DefiningVocabulary{}, *seg),
              (std::vector<std::string>{"家", "を", "作る"}));
}

TEST(Lexicon, FirstOccurrenceOrderDeduplicated) {
    auto seg = testsupport::bundle_segmenter();
    const auto v = vocab_of({"自分", "より", "前", "の"});
    EXPECT_EQ(find_complex_words({"自分より前の世代の血縁の人。"}, v, *seg),
              (std::vector<std::string>{"世代", "血縁", "人"}));
}

TEST(Lexicon, NumbersAndPunctuationExempt) {
    auto seg = testsupport::bundle_segmenter();
    const auto v = vocab_of({"年", "に", "立てる", "た", "家"});
    EXPECT_TRUE(find_complex_words({"2024年に建てた家。"}, v, *seg).empty());
    EXPECT_TRUE(is_exempt_token({"。", "。", "補助記号"}));
    EXPECT_TRUE(is_exempt_token({"2024", "2024", "名詞"}));
    EXPECT_FALSE(is_exempt_token({"犬", "犬", "名詞"}));
}

TEST(Lexicon, Ratio) {
    auto seg = testsupport::bundle_segmenter();
    const std::vector<Definition> defs{{"自分より前の世代で、血のつながりがある人。"}, {"自分より前の世代の血縁者。"}};
    EXPECT_DOUBLE_EQ(vocab_ratio(defs, testsupport::vocab16k(), *seg), 50.0);
    EXPECT_THROW(vocab_ratio(std::vector<Definition>{}, testsupport::vocab16k(), *seg), ValidationError);
}

TEST(Lexicon, ReferenceDefinitionsInsideFixtureVocabulary) {
    auto seg = testsupport::bundle_segmenter();
    EXPECT_DOUBLE_EQ(vocab_ratio(reference_definitions(), testsupport::vocab16k(), *seg), 100.0);
}

TEST(Lexicon, SmallerVocabularyRatioOnReferences) {
    // Hand count: of the 15 reference definitions only (建物(を))造る。, 揺れる。,
    // 苦しみ。苦しくて嫌なこと。, できてから、まだ時間がたっていない。 and 今までになかった。
    // avoid every word left out of fixture3k.txt.
    auto seg = testsupport::bundle_segmenter();
    EXPECT_NEAR(vocab_ratio(reference_definitions(), testsupport::vocab3k(), *seg), 100.0 * 5 / 15, 1e-9);
}

TEST(Lexicon, LoadVocabulary) {
    const auto dir = testsupport::temp_dir("vocab");
    io::write_file_atomic(dir / "dup.txt", "犬\n犬\n\n# comment\n猫\t1234\n");
    const auto v = load_vocabulary(dir / "dup.txt", "x");
    EXPECT_EQ(v.size(), 2u);
    EXPECT_TRUE(v.contains("猫"));
    EXPECT_FALSE(v.contains("1234"));

    io::write_file_atomic(dir / "comment.txt", "# nothing here\n");
    EXPECT_TRUE(load_vocabulary(dir / "comment.txt", "y").empty());
    EXPECT_THROW(load_vocabulary(dir / "missing.txt", "z"), IoError);
}

TEST(Lexicon, MembershipIsNfc) {
    const auto v = vocab_of({"\xE3\x81\x8B\xE3\x82\x99"});  // decomposed が
    EXPECT_TRUE(v.contains("が"));
}

TEST(Lexicon, MonotonicityOverNestedVocabularies) {
    auto seg = testsupport::bundle_segmenter();
    const auto texts = testsupport::bundle_texts();
    const std::vector<std::string> all(testsupport::vocab16k().lemmas().begin(), testsupport::vocab16k().lemmas().end());
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> big, small;
        for (const auto& w : all) {
            if (rng() % 4 == 0) continue;
            big.push_back(w);
            if (rng() % 2) small.push_back(w);
        }
        const auto a = vocab_of(small), b = vocab_of(big);
        const Definition d{texts[rng() % texts.size()]};
        const auto ca = find_complex_words(d, a, *seg), cb = find_complex_words(d, b, *seg);
        for (const auto& w : cb) EXPECT_NE(std::find(ca.begin(), ca.end(), w), ca.end()) << d.text << " " << w;
    }
}

TEST(Lexicon, ProcessSegmenterAgreesWithEmbedded) {
    const auto config = testsupport::temp_dir("procseg") / "seg.toml";
    io::write_file_atomic(config, "run_id = \"x\"\ndataset = \"" + testsupport::fixture_dataset().string() +
                                      "\"\n[segmenter]\nkind = \"bundle\"\npath = \"" + testsupport::bundle_dir().string() +
                                      "\"\n");
    ProcessSegmenter proc({LEXFORGE_CLI, "segment", "-c", config.string(), "--serve"});
    auto embedded = testsupport::bundle_segmenter();
    for (const auto& text : testsupport::bundle_texts()) EXPECT_EQ(proc.segment(text), embedded->segment(text)) << text;
}

TEST(Lexicon, ProcessSegmenterFailureIsSegmentationError) {
    EXPECT_THROW(
        {
            ProcessSegmenter proc({"/bin/false"});
            proc.segment("犬。");
        },
        SegmentationError);
}

TEST(Lexicon, FactoryKinds) {
    SegmenterSpec spec;
    spec.kind = SegmenterSpec::Kind::bundle;
    spec.path = testsupport::bundle_dir();
    auto factory = make_segmenter_factory(spec);
    auto a = factory(), b = factory();
    EXPECT_EQ(a->segment("揺れる。"), b->segment("揺れる。"));

    spec.path = "/nonexistent/bundle";
    EXPECT_THROW(make_segmenter_factory(spec)(), Error);
}
