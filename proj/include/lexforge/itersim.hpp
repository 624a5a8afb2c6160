#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/dataset.hpp"
#include "lexforge/lexicon.hpp"
#include "lexforge/llm.hpp"

namespace lexforge {

/// Which branch produced a prompting round.
enum class SimplifyStep {
    first,           // round 1 on the current definition
    ban_new_words,   // round 2 on the current definition, banning words round 1 introduced
    retarget_output  // round 2 on round 1's output, which still contained the target
};

std::string_view to_string(SimplifyStep step);

struct SimplifyAttempt {
    SimplifyStep step = SimplifyStep::first;
    std::string target_word;
    std::vector<std::string> banned_words;
    std::string input_definition;  // definition text placed in the prompt
    std::string prompt_text;
    std::string response_text;
    std::optional<std::string> output;   // parsed rewrite, absent if the response was unusable
    std::vector<std::string> complex_output;  // complex lemmas of the rewrite
    bool accepted = false;
    std::size_t complex_before = 0;  // distinct complex lemmas of the current definition
    std::size_t complex_after = 0;
    std::optional<std::string> error;
};

struct SimplifyOutcome {
    bool success = false;
    Definition simplified;
    std::vector<SimplifyAttempt> attempts;
};

enum class WordStatus { accepted, rejected, skipped_absent, failed };

std::string_view to_string(WordStatus status);

struct WordOutcome {
    std::string word;
    WordStatus status = WordStatus::rejected;
    std::optional<std::string> error;
};

struct SimplificationTrace {
    std::string headword;
    Definition initial;
    Definition final;
    std::vector<std::string> complex_initial;
    std::vector<std::string> complex_final;
    std::vector<WordOutcome> words;
    std::vector<SimplifyAttempt> attempts;
};

nlohmann::json to_json(const SimplifyAttempt& a);
nlohmann::json to_json(const SimplificationTrace& t);

/// Everything simplification needs besides the definition itself.
struct SimplifyContext {
    const DefiningVocabulary& vocab;
    Segmenter& segmenter;
    LlmClient& client;
    const ProviderConfig& provider;
};

std::string build_simplify_prompt(const std::string& headword, const std::string& definition,
                                  const std::string& target_word, const std::vector<std::string>& banned_words);

/// Pulls the rewritten definition out of a free-text reply: drops code fences, an echoed
/// "Simplified Definition:" label and wrapping quotes, and keeps the first non-empty line.
/// Returns nullopt if nothing is left.
std::optional<std::string> parse_simplified(std::string_view response_text);

/// At most two prompting rounds for one complex word `word` of `current`. Provider and
/// format failures end the word as unsuccessful; segmentation errors propagate.
SimplifyOutcome simplify_once(const Definition& current, const std::string& word, const std::string& headword,
                              const SimplifyContext& ctx);

/// Complex words are found once on the input; each is then tried against the running
/// definition. Words no longer present are skipped without a model call.
SimplificationTrace iter_sim(const std::string& headword, const Definition& definition, const SimplifyContext& ctx);

}  // namespace lexforge
