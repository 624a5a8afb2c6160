#pragma once

// Embedded morphological analyzer.
//
// A lattice/Viterbi analyzer that follows MeCab 0.996's lookup, unknown-word
// and connection-cost rules, so that with the same dictionary it yields the
// same best path. Two dictionary sources are supported: a compiled MeCab
// dictionary directory (sys.dic, unk.dic, matrix.bin, char.bin, e.g. UniDic)
// and a plain-text "bundle" holding the subset of such a dictionary that a
// given set of texts can reach.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lexforge::analyzer {

struct CharInfo {
    std::uint32_t type = 0;  // bit set of categories
    std::uint8_t default_type = 0;
    std::uint8_t length = 0;
    bool group = false;
    bool invoke = false;

    bool is_kind_of(const CharInfo& other) const noexcept { return (type & other.type) != 0; }
    friend bool operator==(const CharInfo&, const CharInfo&) = default;
};

/// Character categories for unknown-word processing (MeCab char.def semantics).
class CharProperty {
public:
    /// Parses MeCab's compiled char.bin.
    static CharProperty from_binary(std::string_view bytes);
    /// Parses a char.def-style text: "NAME INVOKE GROUP LENGTH" category lines and
    /// "0xSTART[..0xEND] CAT [CAT...]" range lines. Unmapped code points get DEFAULT.
    static CharProperty from_text(std::string_view text);
    /// Serializes to the text form accepted by from_text.
    std::string to_text() const;

    /// MeCab decodes UTF-8 to UCS-2; code points beyond the BMP map to entry 0.
    CharInfo info_at(std::string_view text, std::size_t pos, std::size_t& mblen) const;
    CharInfo info(std::uint32_t ucs2) const;

    const std::string& category_name(std::size_t index) const { return names_.at(index); }
    std::size_t category_count() const noexcept { return names_.size(); }

    friend bool operator==(const CharProperty&, const CharProperty&) = default;

private:
    std::vector<std::string> names_;
    std::vector<CharInfo> map_;  // indexed by UCS-2 code, 0xFFFF entries
};

/// One dictionary word. `feature` is the CSV feature string.
struct Entry {
    std::uint16_t left_id = 0;
    std::uint16_t right_id = 0;
    std::int16_t cost = 0;
    std::string_view feature;
};

struct PrefixMatch {
    std::size_t length;  // bytes
    Entry entry;
};

/// Source of dictionary words, unknown-word templates and connection costs.
class Dictionary {
public:
    virtual ~Dictionary() = default;

    /// Appends words whose surface is a prefix of `text`, shortest surface first.
    virtual void prefix_matches(std::string_view text, std::vector<PrefixMatch>& out) const = 0;
    /// Unknown-word templates for a character category index.
    virtual std::span<const Entry> unknown_entries(std::size_t category) const = 0;
    virtual const CharProperty& chars() const = 0;
    /// Cost of placing a word with left context `left_id` after one with right context `right_id`.
    virtual int connection_cost(std::uint16_t right_id, std::uint16_t left_id) const = 0;
    virtual std::string description() const = 0;
};

/// Compiled MeCab dictionary directory (memory-mapped).
std::shared_ptr<const Dictionary> open_mecab_dictionary(const std::filesystem::path& dicdir);

/// Text bundle directory written by write_bundle.
std::shared_ptr<const Dictionary> open_bundle(const std::filesystem::path& dir);

/// Collects every dictionary word and connection cost that analyzing `texts` can touch,
/// and writes them as a bundle: dict.tsv, unk.tsv, char.def, matrix.tsv, README.
/// Analyzing those texts with the bundle gives the same best paths as with `source`.
void write_bundle(const Dictionary& source, std::span<const std::string> texts, const std::filesystem::path& dir);

struct Morph {
    std::string_view surface;
    Entry entry;
    bool unknown = false;
};

struct AnalyzerOptions {
    std::size_t max_grouping_size = 24;
};

class Analyzer {
public:
    explicit Analyzer(std::shared_ptr<const Dictionary> dictionary, AnalyzerOptions options = {});

    /// Best path through the lattice. Surfaces view into `text`; whitespace is dropped.
    /// Safe to call concurrently.
    std::vector<Morph> parse(std::string_view text) const;

    const Dictionary& dictionary() const noexcept { return *dictionary_; }

private:
    std::shared_ptr<const Dictionary> dictionary_;
    AnalyzerOptions options_;
};

/// Splits a MeCab CSV feature string, honoring double-quoted fields.
std::vector<std::string> split_feature(std::string_view feature);

}  // namespace lexforge::analyzer
