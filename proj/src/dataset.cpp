#include "lexforge/dataset.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

namespace {

constexpr std::string_view kPeriod = "。";

struct PosName {
    PartOfSpeech value;
    std::string_view name;
};
constexpr PosName kPosNames[] = {
    {PartOfSpeech::noun, "noun"},           {PartOfSpeech::verb, "verb"},
    {PartOfSpeech::i_adjective, "i_adjective"}, {PartOfSpeech::na_adjective, "na_adjective"},
    {PartOfSpeech::adnominal, "adnominal"}, {PartOfSpeech::adverb, "adverb"},
};

struct BandName {
    FrequencyBand value;
    std::string_view name;
};
constexpr BandName kBandNames[] = {
    {FrequencyBand::f320_1k, "320-1k"},     {FrequencyBand::f1k_3_2k, "1k-3.2k"},
    {FrequencyBand::f3_2k_10k, "3.2k-10k"}, {FrequencyBand::f10k_32k, "10k-32k"},
    {FrequencyBand::f32k_100k, "32k-100k"}, {FrequencyBand::unknown, "unknown"},
};

std::string require_string(const nlohmann::json& obj, const char* field, const std::string& where) {
    const auto it = obj.find(field);
    if (it == obj.end()) throw ValidationError(where + ": missing field '" + field + "'");
    if (!it->is_string()) throw ValidationError(where + ": field '" + field + "' must be a string");
    return it->get<std::string>();
}

HeadwordEntry entry_from_json(const nlohmann::json& obj, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": entry must be a JSON object");
    HeadwordEntry entry;
    entry.headword = unicode::nfc(require_string(obj, "headword", where));
    if (const auto it = obj.find("reading"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError(where + ": field 'reading' must be a string or null");
        entry.reading = unicode::nfc(it->get<std::string>());
    }
    try {
        entry.pos = parse_part_of_speech(require_string(obj, "pos", where));
        entry.freq_band = parse_frequency_band(require_string(obj, "freq_band", where));
        entry.split = parse_split(require_string(obj, "split", where));
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    const auto defs = obj.find("definitions");
    if (defs == obj.end() || !defs->is_array())
        throw ValidationError(where + ": field 'definitions' must be an array of strings");
    for (const auto& d : *defs) {
        if (!d.is_string()) throw ValidationError(where + ": field 'definitions' must be an array of strings");
        entry.definitions.push_back({unicode::nfc(d.get<std::string>())});
    }
    return entry;
}

nlohmann::ordered_json entry_to_json(const HeadwordEntry& e) {
    nlohmann::ordered_json obj;
    obj["headword"] = e.headword;
    obj["reading"] = e.reading ? nlohmann::ordered_json(*e.reading) : nlohmann::ordered_json(nullptr);
    obj["pos"] = to_string(e.pos);
    obj["freq_band"] = to_string(e.freq_band);
    obj["split"] = to_string(e.split);
    auto defs = nlohmann::ordered_json::array();
    for (const auto& d : e.definitions) defs.push_back(d.text);
    obj["definitions"] = std::move(defs);
    return obj;
}

BandStats finish(BandStats s) {
    s.senses_per_word = s.words ? static_cast<double>(s.senses) / static_cast<double>(s.words) : 0.0;
    return s;
}

}  // namespace

std::string_view to_string(PartOfSpeech pos) {
    for (const auto& p : kPosNames)
        if (p.value == pos) return p.name;
    return "noun";
}

std::string_view to_string(FrequencyBand band) {
    for (const auto& b : kBandNames)
        if (b.value == band) return b.name;
    return "unknown";
}

std::string_view to_string(Split split) { return split == Split::demo ? "demo" : "test"; }

HeadwordKey key_of(const HeadwordEntry& entry) { return {entry.headword, entry.reading, entry.pos}; }

std::string input_line(const HeadwordKey& key) {
    std::string line = key.headword;
    if (key.reading) line += ", " + *key.reading;
    line += ", ";
    line += to_string(key.pos);
    return line;
}

PartOfSpeech parse_part_of_speech(std::string_view s) {
    for (const auto& p : kPosNames)
        if (p.name == s) return p.value;
    throw ValidationError("field 'pos' has unknown value '" + std::string(s) + "'");
}

FrequencyBand parse_frequency_band(std::string_view s) {
    for (const auto& b : kBandNames)
        if (b.name == s) return b.value;
    throw ValidationError("field 'freq_band' has unknown value '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
    if (s == "demo") return Split::demo;
    if (s == "test") return Split::test;
    throw ValidationError("field 'split' has unknown value '" + std::string(s) + "'");
}

FrequencyBand band_for_frequency(double count) {
    if (count <= 320) return FrequencyBand::unknown;
    if (count <= 1000) return FrequencyBand::f320_1k;
    if (count <= 3200) return FrequencyBand::f1k_3_2k;
    if (count <= 10000) return FrequencyBand::f3_2k_10k;
    if (count <= 32000) return FrequencyBand::f10k_32k;
    if (count <= 100000) return FrequencyBand::f32k_100k;
    return FrequencyBand::unknown;
}

void validate_entry(const HeadwordEntry& entry, std::string_view where_view) {
    const std::string where(where_view);
    if (entry.headword.empty()) throw ValidationError(where + ": field 'headword' is empty");
    const bool has_kanji = unicode::contains_kanji(entry.headword);
    if (has_kanji && (!entry.reading || entry.reading->empty()))
        throw ValidationError(where + " (" + entry.headword + "): field 'reading' is required for a headword with kanji");
    if (!has_kanji && entry.reading)
        throw ValidationError(where + " (" + entry.headword +
                              "): field 'reading' must be null for a headword without kanji");
    if (entry.definitions.empty())
        throw ValidationError(where + " (" + entry.headword + "): field 'definitions' is empty");
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < entry.definitions.size(); ++i) {
        const auto& text = entry.definitions[i].text;
        const std::string field = "definitions[" + std::to_string(i) + "]";
        if (unicode::trim(text).empty())
            throw ValidationError(where + " (" + entry.headword + "): field '" + field + "' is empty");
        if (!unicode::trim(text).ends_with(kPeriod))
            throw ValidationError(where + " (" + entry.headword + "): field '" + field +
                                  "' must end with a full-width period");
        if (!seen.insert(text).second)
            throw ValidationError(where + " (" + entry.headword + "): field '" + field + "' duplicates another sense");
    }
}

std::vector<HeadwordEntry> parse_dataset(std::string_view json_text) {
    if (!unicode::is_valid_utf8(json_text)) throw ParseError("dataset is not valid UTF-8");
    const auto doc = io::parse_json(json_text, "dataset");
    if (!doc.is_array()) throw ValidationError("dataset: top-level value must be an array of entries");
    std::vector<HeadwordEntry> entries;
    entries.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "entry " + std::to_string(i);
        auto entry = entry_from_json(doc[i], where);
        validate_entry(entry, where);
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<HeadwordEntry> load_dataset(const std::filesystem::path& path) {
    return parse_dataset(io::read_file(path));
}

std::string dump_dataset(std::span<const HeadwordEntry> entries) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& e : entries) doc.push_back(entry_to_json(e));
    return doc.dump(2, ' ', false) + "\n";
}

void save_dataset(const std::filesystem::path& path, std::span<const HeadwordEntry> entries) {
    io::write_file_atomic(path, dump_dataset(entries));
}

DatasetStats dataset_stats(std::span<const HeadwordEntry> entries) {
    if (entries.empty()) throw ValidationError("dataset_stats: no entries");
    DatasetStats stats;
    for (const auto& e : entries) {
        ++stats.words;
        stats.senses += e.definitions.size();
        auto& band = stats.per_band[e.freq_band];
        ++band.words;
        band.senses += e.definitions.size();
        auto& split = stats.per_split[e.split];
        ++split.words;
        split.senses += e.definitions.size();
    }
    stats.senses_per_word = static_cast<double>(stats.senses) / static_cast<double>(stats.words);
    for (auto& [_, b] : stats.per_band) b = finish(b);
    for (auto& [_, s] : stats.per_split) s = finish(s);
    return stats;
}

// --- lint -----------------------------------------------------------------

std::string_view to_string(LintCode code) {
    switch (code) {
        case LintCode::unterminated_sentence: return "unterminated_sentence";
        case LintCode::empty_parentheses: return "empty_parentheses";
        case LintCode::unbalanced_parentheses: return "unbalanced_parentheses";
        case LintCode::usage_marker_misplaced: return "usage_marker_misplaced";
    }
    return "unknown";
}

LintReport lint_guidelines(const Definition& definition, std::size_t definition_index) {
    LintReport report;
    report.definition_index = definition_index;
    const std::string_view text = unicode::trim(definition.text);
    auto add = [&](LintCode code, std::string message) { report.violations.push_back({code, std::move(message)}); };

    if (text.empty()) {
        add(LintCode::unterminated_sentence, "definition is empty");
        return report;
    }

    // Sentences: split after each 。; whatever remains after the last one is unterminated.
    std::vector<std::size_t> sentence_starts{0};
    for (std::size_t p = text.find(kPeriod); p != std::string_view::npos; p = text.find(kPeriod, p + kPeriod.size()))
        sentence_starts.push_back(p + kPeriod.size());
    if (sentence_starts.back() < text.size()) {
        const auto tail = unicode::trim(text.substr(sentence_starts.back()));
        if (!tail.empty())
            add(LintCode::unterminated_sentence, "sentence does not end with 。: " + std::string(tail));
    }

    // Parentheses: ASCII and full-width forms form one bracket class.
    struct Open {
        std::size_t content_begin;
    };
    std::vector<Open> stack;
    std::size_t pos = 0;
    bool reported_unbalanced = false;
    while (pos < text.size()) {
        const auto at = pos;
        const char32_t cp = unicode::next_code_point(text, pos);
        if (cp == U'(' || cp == U'（') {
            stack.push_back({pos});
        } else if (cp == U')' || cp == U'）') {
            if (stack.empty()) {
                if (!reported_unbalanced) add(LintCode::unbalanced_parentheses, "closing parenthesis without opening");
                reported_unbalanced = true;
                continue;
            }
            const auto inner = text.substr(stack.back().content_begin, at - stack.back().content_begin);
            if (unicode::trim(inner).empty()) add(LintCode::empty_parentheses, "parentheses enclose nothing");
            stack.pop_back();
        }
    }
    if (!stack.empty() && !reported_unbalanced)
        add(LintCode::unbalanced_parentheses, "opening parenthesis is never closed");

    // Usage marker: every 語法 must be written [語法] at the start of a sentence.
    constexpr std::string_view kUsage = "語法";
    constexpr std::string_view kMarker = "[語法]";
    for (std::size_t p = text.find(kUsage); p != std::string_view::npos; p = text.find(kUsage, p + kUsage.size())) {
        const bool bracketed = p >= 1 && text[p - 1] == '[' && text.substr(p + kUsage.size()).starts_with("]");
        bool at_sentence_start = false;
        if (bracketed) {
            const auto marker_at = p - 1;
            for (const auto s : sentence_starts) {
                if (s > marker_at) break;
                if (unicode::trim(text.substr(s, marker_at - s)).empty()) at_sentence_start = true;
            }
        }
        if (!bracketed)
            add(LintCode::usage_marker_misplaced, "usage marker must be written exactly as " + std::string(kMarker));
        else if (!at_sentence_start)
            add(LintCode::usage_marker_misplaced, std::string(kMarker) + " must begin a sentence");
    }
    return report;
}

}  // namespace lexforge
