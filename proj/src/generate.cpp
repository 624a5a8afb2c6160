#include "lexforge/generate.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/prompts.hpp"

namespace lexforge {

using nlohmann::json;

namespace {

std::string definitions_json(std::span<const Definition> defs) {
    json arr = json::array();
    for (const auto& d : defs) arr.push_back(d.text);
    return io::dump_compact(arr);
}

/// Uniform in [0, bound) from a 64-bit engine; rejection keeps it unbiased.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    while (true) {
        const std::uint64_t x = rng();
        if (x < limit) return x % bound;
    }
}

std::string_view kind_of(const std::exception& e) {
    if (dynamic_cast<const EmptyOutputError*>(&e)) return "empty_output";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const CacheMissError*>(&e)) return "cache_miss";
    return "provider";
}

}  // namespace

std::string_view to_string(ShotMode mode) { return mode == ShotMode::zero_shot ? "zero_shot" : "few_shot"; }

ShotMode parse_shot_mode(std::string_view s) {
    if (s == "zero_shot") return ShotMode::zero_shot;
    if (s == "few_shot") return ShotMode::few_shot;
    throw ValidationError("unknown generation mode: " + std::string(s));
}

void validate_spec(const GenerationSpec& spec, std::size_t demo_pool_size) {
    if (spec.mode == ShotMode::zero_shot) return;
    if (spec.shots == 0) throw ValidationError("few-shot generation needs at least one shot");
    if (spec.shots > demo_pool_size)
        throw ValidationError("few-shot generation asks for " + std::to_string(spec.shots) + " demos but only " +
                              std::to_string(demo_pool_size) + " are available");
}

Prompt build_generation_prompt(const HeadwordEntry& entry, std::span<const HeadwordEntry> demos) {
    Prompt p;
    p.system_text = prompts::instructions();
    std::string& u = p.user_text;
    for (const auto& d : demos) {
        u += "Input: " + input_line(key_of(d)) + "\n";
        u += "Output: " + definitions_json(d.definitions) + "\n\n";
    }
    u += "Input: " + input_line(key_of(entry)) + "\n";
    u += "Answer with a JSON array of strings, one definition per sense, and nothing else.\n";
    u += "Output:";
    return p;
}

std::string_view format_reminder() {
    return "\n\nYour previous answer could not be read. Reply with only a JSON array of strings, "
           "for example [\"...。\", \"...。\"].";
}

std::vector<HeadwordEntry> sample_demos(std::span<const HeadwordEntry> demo_entries, std::size_t k,
                                        std::uint64_t seed) {
    if (k > demo_entries.size())
        throw ValidationError("cannot sample " + std::to_string(k) + " demos from " +
                              std::to_string(demo_entries.size()));
    std::vector<std::size_t> idx(demo_entries.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first k slots end up as the sample.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(bounded(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<HeadwordEntry> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(demo_entries[idx[i]]);
    return out;
}

json to_json(const GeneratedEntry& g) {
    json defs = json::array();
    for (const auto& d : g.definitions) defs.push_back(d.text);
    json j;
    j["headword"] = g.key.headword;
    j["reading"] = g.key.reading ? json(*g.key.reading) : json(nullptr);
    j["pos"] = to_string(g.key.pos);
    j["definitions"] = std::move(defs);
    j["raw_response"] = g.raw_response;
    j["spec"] = {{"mode", to_string(g.spec.mode)},
                 {"shots", g.spec.mode == ShotMode::few_shot ? g.spec.shots : 0},
                 {"demo_seed", g.spec.demo_seed},
                 {"model", g.spec.model}};
    j["demos"] = g.demo_headwords;
    j["attempts"] = g.attempts;
    j["error"] = g.error ? json(*g.error) : json(nullptr);
    j["error_kind"] = g.error_kind;
    return j;
}

GeneratedEntry generated_from_json(const json& j) {
    GeneratedEntry g;
    try {
        g.key.headword = j.at("headword").get<std::string>();
        if (j.contains("reading") && !j.at("reading").is_null()) g.key.reading = j.at("reading").get<std::string>();
        g.key.pos = parse_part_of_speech(j.at("pos").get<std::string>());
        for (const auto& d : j.at("definitions")) g.definitions.push_back(Definition{d.get<std::string>()});
        g.raw_response = j.value("raw_response", std::string());
        if (j.contains("spec")) {
            const auto& s = j.at("spec");
            g.spec.mode = parse_shot_mode(s.value("mode", std::string("few_shot")));
            g.spec.shots = s.value("shots", std::size_t{5});
            g.spec.demo_seed = s.value("demo_seed", std::uint64_t{1});
            g.spec.model = s.value("model", std::string());
        }
        if (j.contains("demos")) g.demo_headwords = j.at("demos").get<std::vector<std::string>>();
        g.attempts = j.value("attempts", std::size_t{0});
        if (j.contains("error") && !j.at("error").is_null()) g.error = j.at("error").get<std::string>();
        g.error_kind = j.value("error_kind", std::string());
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed generated entry: ") + e.what());
    }
    return g;
}

GeneratedEntry generate_definitions(const HeadwordEntry& entry, std::span<const HeadwordEntry> demos,
                                    const GenerationSpec& spec, LlmClient& client, const ProviderConfig& provider) {
    const auto target = key_of(entry);
    for (const auto& d : demos)
        if (key_of(d) == target) throw ValidationError("target " + entry.headword + " appears among its own demos");

    GeneratedEntry g;
    g.key = target;
    g.spec = spec;
    for (const auto& d : demos) g.demo_headwords.push_back(d.headword);

    const auto prompt = build_generation_prompt(entry, demos);
    auto request = make_request(provider, prompt.system_text, prompt.user_text, ResponseFormat::json);
    if (!spec.model.empty()) request.model = spec.model;

    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) request.user_text += format_reminder();
        ++g.attempts;
        try {
            g.raw_response = client.complete(request);
            g.definitions = parse_json_definitions(g.raw_response);
            g.error.reset();
            g.error_kind.clear();
            return g;
        } catch (const EmptyOutputError& e) {
            g.error = e.what();
            g.error_kind = kind_of(e);
            return g;
        } catch (const FormatError& e) {
            g.error = e.what();
            g.error_kind = kind_of(e);
        } catch (const ProviderError& e) {
            g.error = e.what();
            g.error_kind = kind_of(e);
            return g;
        } catch (const CacheMissError& e) {
            g.error = e.what();
            g.error_kind = kind_of(e);
            return g;
        }
    }
    return g;
}

}  // namespace lexforge
