#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexforge/analyzer.hpp"
#include "lexforge/dataset.hpp"

namespace lexforge {

struct Token {
    std::string surface;
    std::string lemma;      // dictionary form used for vocabulary membership
    std::string pos_major;  // analyzer's top-level part-of-speech tag

    friend bool operator==(const Token&, const Token&) = default;
};

/// Word segmentation. Implementations are deterministic for a fixed analyzer and
/// dictionary version. Token surfaces concatenate back to the input minus whitespace.
class Segmenter {
public:
    virtual ~Segmenter() = default;

    /// Throws SegmentationError.
    virtual std::vector<Token> segment(std::string_view text) = 0;
    virtual std::string name() const = 0;
};

/// Segmenter over the embedded lattice analyzer. Stateless, so one instance can be
/// shared across threads.
class EmbeddedSegmenter final : public Segmenter {
public:
    explicit EmbeddedSegmenter(std::shared_ptr<const analyzer::Dictionary> dictionary);

    std::vector<Token> segment(std::string_view text) override;
    std::string name() const override;

private:
    analyzer::Analyzer analyzer_;
};

/// Turns a UniDic-layout feature string into a token. The lemma is field 7 with any
/// "-english" loanword gloss suffix removed; unknown words fall back to the surface.
Token token_from_feature(std::string_view surface, std::string_view feature);

/// Talks to a child process over the line protocol: one sentence per line in,
/// `surface<TAB>lemma<TAB>pos_major` lines terminated by `EOS` out. Calls are serialized
/// internally; a pipeline should still hold one instance per worker for throughput.
class ProcessSegmenter final : public Segmenter {
public:
    explicit ProcessSegmenter(std::vector<std::string> command);
    ~ProcessSegmenter() override;
    ProcessSegmenter(const ProcessSegmenter&) = delete;
    ProcessSegmenter& operator=(const ProcessSegmenter&) = delete;

    std::vector<Token> segment(std::string_view text) override;
    std::string name() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Where a segmenter comes from; one factory call per worker.
struct SegmenterSpec {
    enum class Kind { bundle, mecab_dictionary, process } kind = Kind::bundle;
    std::filesystem::path path;        // bundle dir or dicdir
    std::vector<std::string> command;  // process
};

using SegmenterFactory = std::function<std::unique_ptr<Segmenter>()>;

/// Dictionaries are loaded once and shared across the segmenters the factory makes.
SegmenterFactory make_segmenter_factory(const SegmenterSpec& spec);

class DefiningVocabulary {
public:
    DefiningVocabulary() = default;
    /// NFC-normalizes and deduplicates.
    DefiningVocabulary(std::string name, std::span<const std::string> lemmas);

    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return lemmas_.size(); }
    bool empty() const noexcept { return lemmas_.empty(); }
    /// Exact match on the NFC form of `lemma`.
    bool contains(std::string_view lemma) const;
    const std::set<std::string, std::less<>>& lemmas() const noexcept { return lemmas_; }

private:
    std::string name_;
    std::set<std::string, std::less<>> lemmas_;
};

/// One lemma per line, '#' comments, blank lines ignored. Only the first tab-separated
/// column is read, so frequency lists can be used directly.
DefiningVocabulary load_vocabulary(const std::filesystem::path& path, std::string name);

/// Punctuation, symbols, whitespace and Arabic numerals never count as complex.
bool is_exempt_token(const Token& token);

/// Distinct lemmas of non-exempt tokens missing from `vocab`, in first-occurrence order.
std::vector<std::string> find_complex_words(const Definition& definition, const DefiningVocabulary& vocab,
                                            Segmenter& segmenter);

/// Percentage of definitions with no complex words. Throws ValidationError on empty input.
double vocab_ratio(std::span<const Definition> definitions, const DefiningVocabulary& vocab, Segmenter& segmenter);

}  // namespace lexforge
