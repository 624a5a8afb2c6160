#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/dataset.hpp"
#include "lexforge/llm.hpp"

namespace lexforge {

enum class ShotMode { zero_shot, few_shot };

std::string_view to_string(ShotMode mode);
ShotMode parse_shot_mode(std::string_view s);

struct GenerationSpec {
    ShotMode mode = ShotMode::few_shot;
    std::size_t shots = 5;
    std::uint64_t demo_seed = 1;
    std::string model;
};

/// Throws ValidationError when shots is 0 in few-shot mode or exceeds the demo pool.
void validate_spec(const GenerationSpec& spec, std::size_t demo_pool_size);

struct Prompt {
    std::string system_text;
    std::string user_text;
};

/// System text is the instructions with the guidelines filled in. User text lists each demo
/// as an `Input:` line and an `Output:` JSON array, then the target input line.
Prompt build_generation_prompt(const HeadwordEntry& entry, std::span<const HeadwordEntry> demos);

/// Appended to the user text for the single reprompt after unparseable output.
std::string_view format_reminder();

/// k distinct entries, without replacement, in draw order. The draw uses mt19937_64 with
/// rejection sampling, so a seed gives the same sample on every platform.
std::vector<HeadwordEntry> sample_demos(std::span<const HeadwordEntry> demo_entries, std::size_t k,
                                        std::uint64_t seed);

struct GeneratedEntry {
    HeadwordKey key;
    std::vector<Definition> definitions;
    std::string raw_response;
    GenerationSpec spec;
    std::vector<std::string> demo_headwords;
    std::size_t attempts = 0;
    std::optional<std::string> error;  // set iff generation failed
    std::string error_kind;            // format, empty_output, provider, cache_miss

    bool ok() const noexcept { return !error.has_value(); }
};

nlohmann::json to_json(const GeneratedEntry& g);
GeneratedEntry generated_from_json(const nlohmann::json& j);

/// One completion; on a format error, one more with the reminder appended. Failures are
/// recorded on the result rather than thrown. Throws ValidationError if the target is
/// among its own demos.
GeneratedEntry generate_definitions(const HeadwordEntry& entry, std::span<const HeadwordEntry> demos,
                                    const GenerationSpec& spec, LlmClient& client, const ProviderConfig& provider);

}  // namespace lexforge
