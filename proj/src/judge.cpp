#include "lexforge/judge.hpp"

#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "lexforge/error.hpp"
#include "lexforge/prompts.hpp"

namespace lexforge {

using nlohmann::json;

namespace {

constexpr std::string_view kMarker = "[RESULT]";

std::string numbered(std::span<const Definition> defs) {
    std::string out;
    for (std::size_t i = 0; i < defs.size(); ++i) out += std::to_string(i + 1) + ". " + defs[i].text + "\n";
    return out;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json defs_to_json(std::span<const Definition> defs) {
    json arr = json::array();
    for (const auto& d : defs) arr.push_back(d.text);
    return arr;
}

std::vector<Definition> defs_from_json(const json& arr) {
    std::vector<Definition> out;
    for (const auto& d : arr) out.push_back(Definition{d.get<std::string>()});
    return out;
}

}  // namespace

std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::truthfulness: return "truthfulness";
        case Criterion::coverage: return "coverage";
        case Criterion::sense_specificity: return "sense_specificity";
        case Criterion::guideline_compliance: return "guideline_compliance";
    }
    return "?";
}

Criterion parse_criterion(std::string_view s) {
    for (auto c : kAllCriteria)
        if (to_string(c) == s) return c;
    throw ValidationError("unknown criterion: " + std::string(s));
}

std::string_view display_name(Criterion c) {
    switch (c) {
        case Criterion::truthfulness: return "Truthfulness";
        case Criterion::coverage: return "Coverage";
        case Criterion::sense_specificity: return "Sense Specificity";
        case Criterion::guideline_compliance: return "Guideline Compliance";
    }
    return "?";
}

std::string_view rubric_text(Criterion c) {
    switch (c) {
        case Criterion::truthfulness: return prompts::rubric_truthfulness();
        case Criterion::coverage: return prompts::rubric_coverage();
        case Criterion::sense_specificity: return prompts::rubric_sense_specificity();
        case Criterion::guideline_compliance: return prompts::rubric_guideline_compliance();
    }
    return {};
}

Prompt build_rubric_prompt(Criterion criterion, const HeadwordEntry& entry, std::span<const Definition> response) {
    Prompt p;
    p.system_text = prompts::judge_system();
    std::string& u = p.user_text;
    u += "Instructions given to the writer:\n";
    u += prompts::instructions();
    u += "\n\nInput: " + input_line(key_of(entry)) + "\n\n";
    u += "RESPONSE definitions:\n" + numbered(response) + "\n";
    u += "REFERENCE definitions:\n" + numbered(entry.definitions) + "\n";
    u += "Score rubric (" + std::string(to_string(criterion)) + "):\n";
    u += rubric_text(criterion);
    u += "\n\nWrite your assessment, then end with `[RESULT] <integer 0–100>`.";
    return p;
}

double parse_result_score(std::string_view assessment) {
    const auto at = assessment.rfind(kMarker);
    if (at == std::string_view::npos) throw ParseError("assessment has no [RESULT] marker");
    auto rest = assessment.substr(at + kMarker.size());
    std::size_t i = 0;
    while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t' || rest[i] == ':' || rest[i] == '\n' || rest[i] == '\r'))
        ++i;
    rest = rest.substr(i);
    if (rest.starts_with('+')) rest.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), value, std::chars_format::fixed);
    if (res.ec != std::errc{} || !std::isfinite(value)) throw ParseError("no number after [RESULT] marker");
    if (value < 0.0 || value > 100.0) throw RangeError("score " + format_number(value) + " is outside [0, 100]");
    return value;
}

std::string render_result(double score) { return std::string(kMarker) + " " + format_number(score); }

double overall_score(const std::map<Criterion, CriterionResult>& results) {
    double sum = 0.0;
    for (auto c : kAllCriteria) {
        const auto it = results.find(c);
        if (it == results.end()) throw ValidationError("overall score needs all four criteria");
        sum += it->second.score;
    }
    return sum / 4.0;
}

json to_json(const EvaluationRecord& r) {
    json results = json::object();
    for (const auto& [c, res] : r.results)
        results[std::string(to_string(c))] = {{"assessment", res.assessment}, {"score", res.score}};
    json errors = json::object();
    for (const auto& [c, e] : r.errors) errors[std::string(to_string(c))] = e;
    json criteria = json::array();
    for (auto c : r.criteria) criteria.push_back(to_string(c));
    return json{{"headword", r.key.headword},
                {"reading", r.key.reading ? json(*r.key.reading) : json(nullptr)},
                {"pos", to_string(r.key.pos)},
                {"response", defs_to_json(r.response)},
                {"reference", defs_to_json(r.reference)},
                {"criteria", std::move(criteria)},
                {"results", std::move(results)},
                {"errors", std::move(errors)},
                {"overall", r.overall ? json(*r.overall) : json(nullptr)},
                {"bleu", r.bleu ? json(*r.bleu) : json(nullptr)},
                {"complete", r.complete()}};
}

EvaluationRecord evaluation_from_json(const json& j) {
    EvaluationRecord r;
    try {
        r.key.headword = j.at("headword").get<std::string>();
        if (!j.at("reading").is_null()) r.key.reading = j.at("reading").get<std::string>();
        r.key.pos = parse_part_of_speech(j.at("pos").get<std::string>());
        r.response = defs_from_json(j.at("response"));
        r.reference = defs_from_json(j.at("reference"));
        for (const auto& c : j.at("criteria")) r.criteria.push_back(parse_criterion(c.get<std::string>()));
        for (const auto& [name, v] : j.at("results").items()) {
            const auto c = parse_criterion(name);
            r.results[c] = CriterionResult{c, v.at("assessment").get<std::string>(), v.at("score").get<double>()};
        }
        for (const auto& [name, v] : j.at("errors").items()) r.errors[parse_criterion(name)] = v.get<std::string>();
        if (!j.at("overall").is_null()) r.overall = j.at("overall").get<double>();
        if (j.contains("bleu") && !j.at("bleu").is_null()) r.bleu = j.at("bleu").get<double>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed evaluation record: ") + e.what());
    }
    return r;
}

EvaluationRecord evaluate_entry(const HeadwordEntry& entry, std::span<const Definition> response, LlmClient& client,
                                const ProviderConfig& provider, std::span<const Criterion> criteria) {
    EvaluationRecord r;
    r.key = key_of(entry);
    r.response.assign(response.begin(), response.end());
    r.reference = entry.definitions;
    r.criteria.assign(criteria.begin(), criteria.end());
    if (response.empty()) {
        for (auto c : criteria) r.errors[c] = "no response definitions to evaluate";
        return r;
    }
    for (auto c : criteria) {
        const auto prompt = build_rubric_prompt(c, entry, response);
        try {
            const auto text =
                client.complete(make_request(provider, prompt.system_text, prompt.user_text, ResponseFormat::free_text));
            r.results[c] = CriterionResult{c, text, parse_result_score(text)};
        } catch (const ProviderError& e) {
            r.errors[c] = e.what();
        } catch (const CacheMissError& e) {
            r.errors[c] = e.what();
        } catch (const ParseError& e) {
            r.errors[c] = e.what();
        } catch (const RangeError& e) {
            r.errors[c] = e.what();
        }
    }
    if (r.errors.empty() && r.results.size() == kAllCriteria.size()) r.overall = overall_score(r.results);
    return r;
}

Aggregate mean_std(std::span<const double> values) {
    if (values.empty()) throw ValidationError("mean of an empty list");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return Aggregate{mean, std::sqrt(ss / static_cast<double>(values.size())), values.size()};
}

std::map<std::string, Aggregate> evaluate_corpus(std::span<const EvaluationRecord> records) {
    std::map<Criterion, std::vector<double>> per;
    std::vector<double> overall;
    std::size_t skipped = 0;
    for (const auto& r : records) {
        if (!r.complete()) {
            ++skipped;
            continue;
        }
        for (const auto& [c, res] : r.results) per[c].push_back(res.score);
        if (r.overall) overall.push_back(*r.overall);
    }
    if (skipped) spdlog::warn("excluding {} incomplete evaluation record(s) from aggregates", skipped);
    if (skipped == records.size()) throw ValidationError("no complete evaluation records to aggregate");
    std::map<std::string, Aggregate> out;
    for (const auto& [c, v] : per) out[std::string(to_string(c))] = mean_std(v);
    if (!overall.empty()) out["overall"] = mean_std(overall);
    return out;
}

}  // namespace lexforge
