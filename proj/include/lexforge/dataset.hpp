#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lexforge {

enum class PartOfSpeech { noun, verb, i_adjective, na_adjective, adnominal, adverb };

/// Frequency bands over raw corpus counts, half-open on the left: (320,1K], (1K,3.2K], ...
enum class FrequencyBand { f320_1k, f1k_3_2k, f3_2k_10k, f10k_32k, f32k_100k, unknown };

enum class Split { demo, test };

/// One sense's full definition text.
struct Definition {
    std::string text;

    friend bool operator==(const Definition&, const Definition&) = default;
};

struct HeadwordEntry {
    std::string headword;
    std::optional<std::string> reading;
    PartOfSpeech pos = PartOfSpeech::noun;
    FrequencyBand freq_band = FrequencyBand::unknown;
    std::vector<Definition> definitions;
    Split split = Split::test;

    friend bool operator==(const HeadwordEntry&, const HeadwordEntry&) = default;
};

/// Identifies an entry in run artifacts: the task input triple.
struct HeadwordKey {
    std::string headword;
    std::optional<std::string> reading;
    PartOfSpeech pos = PartOfSpeech::noun;

    friend bool operator==(const HeadwordKey&, const HeadwordKey&) = default;
    friend auto operator<=>(const HeadwordKey&, const HeadwordKey&) = default;
};

HeadwordKey key_of(const HeadwordEntry& entry);

/// `headword, reading, pos`, or `headword, pos` without a reading.
std::string input_line(const HeadwordKey& key);

std::string_view to_string(PartOfSpeech pos);
std::string_view to_string(FrequencyBand band);
std::string_view to_string(Split split);
PartOfSpeech parse_part_of_speech(std::string_view s);
FrequencyBand parse_frequency_band(std::string_view s);
Split parse_split(std::string_view s);

/// Band containing a raw corpus frequency; counts outside (320, 100K] map to unknown.
FrequencyBand band_for_frequency(double count);

/// Throws ValidationError naming `where` and the offending field.
void validate_entry(const HeadwordEntry& entry, std::string_view where);

std::vector<HeadwordEntry> parse_dataset(std::string_view json_text);
std::vector<HeadwordEntry> load_dataset(const std::filesystem::path& path);
std::string dump_dataset(std::span<const HeadwordEntry> entries);
void save_dataset(const std::filesystem::path& path, std::span<const HeadwordEntry> entries);

struct BandStats {
    std::size_t words = 0;
    std::size_t senses = 0;
    double senses_per_word = 0.0;
};

struct DatasetStats {
    std::size_t words = 0;
    std::size_t senses = 0;
    double senses_per_word = 0.0;
    std::map<FrequencyBand, BandStats> per_band;
    std::map<Split, BandStats> per_split;
};

/// Throws ValidationError on empty input.
DatasetStats dataset_stats(std::span<const HeadwordEntry> entries);

// --- guideline lint -------------------------------------------------------

enum class LintCode { unterminated_sentence, empty_parentheses, unbalanced_parentheses, usage_marker_misplaced };

std::string_view to_string(LintCode code);

struct LintViolation {
    LintCode code;
    std::string message;
};

struct LintReport {
    std::size_t definition_index = 0;
    std::vector<LintViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Mechanical subset of the style guidelines; never throws.
LintReport lint_guidelines(const Definition& definition, std::size_t definition_index = 0);

}  // namespace lexforge
