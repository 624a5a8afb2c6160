#include "lexforge/lexicon.hpp"

#include <algorithm>
#include <array>

#include <spdlog/spdlog.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

namespace {

constexpr std::size_t kLemmaField = 7;

/// "ペット-pet" -> "ペット"; UniDic appends the source word to loanword lemmas.
std::string strip_gloss_suffix(std::string lemma) {
    const auto dash = lemma.rfind('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == lemma.size()) return lemma;
    const bool ascii_tail = std::all_of(lemma.begin() + static_cast<std::ptrdiff_t>(dash) + 1, lemma.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == ' ' || c == '_' || c == '-';
    });
    if (ascii_tail) lemma.resize(dash);
    return lemma;
}

constexpr std::array<std::string_view, 11> kExemptPos = {
    "補助記号", "記号", "空白", "BOS/EOS", "PUNCT", "SYM", "NUM", "punctuation", "symbol", "numeral", "whitespace",
};

}  // namespace

Token token_from_feature(std::string_view surface, std::string_view feature) {
    const auto fields = analyzer::split_feature(feature);
    Token t;
    t.surface = std::string(surface);
    t.pos_major = fields.empty() ? std::string("*") : fields[0];
    if (fields.size() > kLemmaField && !fields[kLemmaField].empty() && fields[kLemmaField] != "*")
        t.lemma = strip_gloss_suffix(fields[kLemmaField]);
    else
        t.lemma = t.surface;
    if (t.lemma.empty()) t.lemma = t.surface;
    return t;
}

EmbeddedSegmenter::EmbeddedSegmenter(std::shared_ptr<const analyzer::Dictionary> dictionary)
    : analyzer_(std::move(dictionary)) {}

std::vector<Token> EmbeddedSegmenter::segment(std::string_view text) {
    if (!unicode::is_valid_utf8(text)) throw SegmentationError("input is not valid UTF-8");
    std::vector<Token> tokens;
    for (const auto& m : analyzer_.parse(text)) tokens.push_back(token_from_feature(m.surface, m.entry.feature));
    return tokens;
}

std::string EmbeddedSegmenter::name() const { return "embedded:" + analyzer_.dictionary().description(); }

SegmenterFactory make_segmenter_factory(const SegmenterSpec& spec) {
    switch (spec.kind) {
        case SegmenterSpec::Kind::bundle: {
            auto dict = analyzer::open_bundle(spec.path);
            return [dict] { return std::make_unique<EmbeddedSegmenter>(dict); };
        }
        case SegmenterSpec::Kind::mecab_dictionary: {
            auto dict = analyzer::open_mecab_dictionary(spec.path);
            return [dict] { return std::make_unique<EmbeddedSegmenter>(dict); };
        }
        case SegmenterSpec::Kind::process: {
            if (spec.command.empty()) throw ValidationError("process segmenter needs a command");
            auto command = spec.command;
            return [command] { return std::make_unique<ProcessSegmenter>(command); };
        }
    }
    throw ValidationError("unknown segmenter kind");
}

// --- vocabulary ---------------------------------------------------------------

DefiningVocabulary::DefiningVocabulary(std::string name, std::span<const std::string> lemmas) : name_(std::move(name)) {
    for (const auto& l : lemmas) lemmas_.insert(unicode::nfc(l));
}

bool DefiningVocabulary::contains(std::string_view lemma) const {
    if (lemmas_.contains(lemma)) return true;
    const auto normalized = unicode::nfc(lemma);
    return normalized != lemma && lemmas_.contains(normalized);
}

DefiningVocabulary load_vocabulary(const std::filesystem::path& path, std::string name) {
    const std::string content = io::read_file(path);
    if (!unicode::is_valid_utf8(content)) throw ParseError(path.string() + ": vocabulary is not valid UTF-8");
    std::vector<std::string> lemmas;
    std::string_view rest = content;
    if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        auto line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        line = unicode::trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (const auto tab = line.find('\t'); tab != std::string_view::npos) line = unicode::trim(line.substr(0, tab));
        if (!line.empty()) lemmas.emplace_back(line);
    }
    DefiningVocabulary vocab(std::move(name), lemmas);
    if (vocab.empty()) spdlog::warn("vocabulary {} ({}) contains no lemmas", vocab.name(), path.string());
    return vocab;
}

// --- complex words ----------------------------------------------------------------

bool is_exempt_token(const Token& token) {
    if (std::find(kExemptPos.begin(), kExemptPos.end(), token.pos_major) != kExemptPos.end()) return true;
    // Arabic numerals (with separators) and pure punctuation/symbol runs, whatever the tag says.
    bool any_digit = false, all_digit_like = true, all_symbol = true;
    std::size_t pos = 0;
    while (pos < token.surface.size()) {
        const char32_t cp = unicode::next_code_point(token.surface, pos);
        const bool digit = unicode::is_arabic_digit(cp);
        any_digit = any_digit || digit;
        if (!digit && cp != U'.' && cp != U',' && cp != U'．' && cp != U'，') all_digit_like = false;
        if (!unicode::is_punctuation_or_symbol(cp)) all_symbol = false;
    }
    return (any_digit && all_digit_like) || (!token.surface.empty() && all_symbol);
}

std::vector<std::string> find_complex_words(const Definition& definition, const DefiningVocabulary& vocab,
                                            Segmenter& segmenter) {
    std::vector<std::string> out;
    for (const auto& token : segmenter.segment(definition.text)) {
        if (is_exempt_token(token) || vocab.contains(token.lemma)) continue;
        if (std::find(out.begin(), out.end(), token.lemma) == out.end()) out.push_back(token.lemma);
    }
    return out;
}

double vocab_ratio(std::span<const Definition> definitions, const DefiningVocabulary& vocab, Segmenter& segmenter) {
    if (definitions.empty()) throw ValidationError("vocab_ratio: no definitions");
    std::size_t clean = 0;
    for (const auto& d : definitions)
        if (find_complex_words(d, vocab, segmenter).empty()) ++clean;
    return 100.0 * static_cast<double>(clean) / static_cast<double>(definitions.size());
}

}  // namespace lexforge
