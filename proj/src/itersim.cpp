#include "lexforge/itersim.hpp"

#include <algorithm>

#include "lexforge/error.hpp"
#include "lexforge/prompts.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

constexpr std::string_view kLabel = "Simplified Definition:";

/// Wrapping quote pairs stripped from a reply line.
constexpr std::pair<std::string_view, std::string_view> kQuotes[] = {
    {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"「", "」"}, {"『", "』"}, {"`", "`"},
};

}  // namespace

std::string_view to_string(SimplifyStep step) {
    switch (step) {
        case SimplifyStep::first: return "first";
        case SimplifyStep::ban_new_words: return "ban_new_words";
        case SimplifyStep::retarget_output: return "retarget_output";
    }
    return "?";
}

std::string_view to_string(WordStatus status) {
    switch (status) {
        case WordStatus::accepted: return "accepted";
        case WordStatus::rejected: return "rejected";
        case WordStatus::skipped_absent: return "skipped_absent";
        case WordStatus::failed: return "failed";
    }
    return "?";
}

json to_json(const SimplifyAttempt& a) {
    return json{{"step", to_string(a.step)},
                {"target_word", a.target_word},
                {"banned_words", a.banned_words},
                {"input_definition", a.input_definition},
                {"prompt_text", a.prompt_text},
                {"response_text", a.response_text},
                {"output", a.output ? json(*a.output) : json(nullptr)},
                {"complex_output", a.complex_output},
                {"accepted", a.accepted},
                {"complex_before", a.complex_before},
                {"complex_after", a.complex_after},
                {"error", a.error ? json(*a.error) : json(nullptr)}};
}

json to_json(const SimplificationTrace& t) {
    json words = json::array();
    for (const auto& w : t.words)
        words.push_back({{"word", w.word},
                         {"status", to_string(w.status)},
                         {"error", w.error ? json(*w.error) : json(nullptr)}});
    json attempts = json::array();
    for (const auto& a : t.attempts) attempts.push_back(to_json(a));
    return json{{"headword", t.headword},
                {"initial", t.initial.text},
                {"final", t.final.text},
                {"complex_initial", t.complex_initial},
                {"complex_final", t.complex_final},
                {"words", std::move(words)},
                {"attempts", std::move(attempts)}};
}

std::string build_simplify_prompt(const std::string& headword, const std::string& definition,
                                  const std::string& target_word, const std::vector<std::string>& banned_words) {
    return prompts::fill(prompts::simplify_template(), {{"headword", headword},
                                                        {"definition", definition},
                                                        {"target_word", target_word},
                                                        {"banned_words", join(banned_words, ", ")}});
}

std::optional<std::string> parse_simplified(std::string_view response_text) {
    std::string_view rest = response_text;
    if (const auto label = rest.rfind(kLabel); label != std::string_view::npos)
        rest = rest.substr(label + kLabel.size());
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        auto line = unicode::trim(rest.substr(0, nl));
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (line.empty() || line.starts_with("```")) continue;
        for (bool stripped = true; stripped;) {
            stripped = false;
            for (const auto& [open, close] : kQuotes) {
                if (line.size() >= open.size() + close.size() && line.starts_with(open) && line.ends_with(close)) {
                    line = unicode::trim(line.substr(open.size(), line.size() - open.size() - close.size()));
                    stripped = true;
                }
            }
        }
        if (line.empty()) continue;
        if (!unicode::is_valid_utf8(line)) return std::nullopt;
        return unicode::nfc(line);
    }
    return std::nullopt;
}

SimplifyOutcome simplify_once(const Definition& current, const std::string& word, const std::string& headword,
                              const SimplifyContext& ctx) {
    SimplifyOutcome out;
    out.simplified = current;
    const auto before = find_complex_words(current, ctx.vocab, ctx.segmenter);

    auto run = [&](SimplifyStep step, const std::string& input, const std::vector<std::string>& banned) {
        SimplifyAttempt a;
        a.step = step;
        a.target_word = word;
        a.banned_words = banned;
        a.input_definition = input;
        a.prompt_text = build_simplify_prompt(headword, input, word, banned);
        a.complex_before = before.size();
        try {
            a.response_text =
                ctx.client.complete(make_request(ctx.provider, "", a.prompt_text, ResponseFormat::free_text));
            a.output = parse_simplified(a.response_text);
            if (!a.output) a.error = "no usable definition in model output";
        } catch (const ProviderError& e) {
            a.error = e.what();
        } catch (const CacheMissError& e) {
            a.error = e.what();
        }
        if (a.output) {
            a.complex_output = find_complex_words(Definition{*a.output}, ctx.vocab, ctx.segmenter);
            a.complex_after = a.complex_output.size();
            a.accepted = a.complex_after < a.complex_before;
        } else {
            a.complex_after = a.complex_before;
        }
        out.attempts.push_back(a);
        return out.attempts.back();
    };

    const auto first = run(SimplifyStep::first, current.text, {});
    if (first.accepted) {
        out.success = true;
        out.simplified = Definition{*first.output};
        return out;
    }
    if (!first.output) return out;

    std::vector<std::string> introduced;
    for (const auto& w : first.complex_output)
        if (!contains(before, w)) introduced.push_back(w);

    std::optional<SimplifyAttempt> second;
    if (!introduced.empty())
        second = run(SimplifyStep::ban_new_words, current.text, introduced);
    else if (contains(first.complex_output, word))
        second = run(SimplifyStep::retarget_output, *first.output, {});

    if (second && second->accepted) {
        out.success = true;
        out.simplified = Definition{*second->output};
    }
    return out;
}

SimplificationTrace iter_sim(const std::string& headword, const Definition& definition, const SimplifyContext& ctx) {
    SimplificationTrace t;
    t.headword = headword;
    t.initial = definition;
    t.complex_initial = find_complex_words(definition, ctx.vocab, ctx.segmenter);

    Definition current = definition;
    auto current_complex = t.complex_initial;
    for (const auto& w : t.complex_initial) {
        WordOutcome wo{w, WordStatus::rejected, std::nullopt};
        if (!contains(current_complex, w)) {
            wo.status = WordStatus::skipped_absent;
            t.words.push_back(std::move(wo));
            continue;
        }
        auto r = simplify_once(current, w, headword, ctx);
        for (const auto& a : r.attempts)
            if (a.error) wo.error = a.error;
        if (r.success) {
            current = r.simplified;
            current_complex = find_complex_words(current, ctx.vocab, ctx.segmenter);
            wo.status = WordStatus::accepted;
        } else if (wo.error && std::none_of(r.attempts.begin(), r.attempts.end(),
                                            [](const SimplifyAttempt& a) { return a.output.has_value(); })) {
            wo.status = WordStatus::failed;
        }
        for (auto& a : r.attempts) t.attempts.push_back(std::move(a));
        t.words.push_back(std::move(wo));
    }
    t.final = current;
    t.complex_final = current_complex;
    return t;
}

}  // namespace lexforge
