#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/dataset.hpp"
#include "lexforge/generate.hpp"
#include "lexforge/llm.hpp"

namespace lexforge {

enum class Criterion { truthfulness, coverage, sense_specificity, guideline_compliance };

inline constexpr std::array<Criterion, 4> kAllCriteria = {
    Criterion::truthfulness, Criterion::coverage, Criterion::sense_specificity, Criterion::guideline_compliance};

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);
/// Column heading used in reports ("Truthfulness", ...).
std::string_view display_name(Criterion c);
std::string_view rubric_text(Criterion c);

struct CriterionResult {
    Criterion criterion = Criterion::truthfulness;
    std::string assessment;
    double score = 0.0;
};

/// Prompt for one criterion. The user text carries, in order: the generation instructions
/// with guidelines, the task input line, RESPONSE and REFERENCE as numbered lists, the
/// rubric, and the closing `[RESULT]` contract.
Prompt build_rubric_prompt(Criterion criterion, const HeadwordEntry& entry, std::span<const Definition> response);

/// Score after the last `[RESULT]` marker: integer or decimal, optional trailing '%'.
/// ParseError without a marker or number; RangeError outside [0, 100].
double parse_result_score(std::string_view assessment);

/// `[RESULT] <score>`, integers without a fractional part.
std::string render_result(double score);

struct EvaluationRecord {
    HeadwordKey key;
    std::vector<Definition> response;
    std::vector<Definition> reference;
    std::vector<Criterion> criteria;  // what was asked for
    std::map<Criterion, CriterionResult> results;
    std::map<Criterion, std::string> errors;
    std::optional<double> overall;  // mean of all four scores; absent otherwise
    std::optional<double> bleu;

    bool complete() const noexcept { return errors.empty() && results.size() == criteria.size(); }
};

/// Arithmetic mean of the four scores. Throws ValidationError unless all four are present.
double overall_score(const std::map<Criterion, CriterionResult>& results);

nlohmann::json to_json(const EvaluationRecord& r);
EvaluationRecord evaluation_from_json(const nlohmann::json& j);

/// One completion per criterion. Failures are recorded per criterion and leave the record
/// incomplete. An empty response set makes no calls and is incomplete.
EvaluationRecord evaluate_entry(const HeadwordEntry& entry, std::span<const Definition> response, LlmClient& client,
                                const ProviderConfig& provider,
                                std::span<const Criterion> criteria = kAllCriteria);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t n = 0;
};

/// Keys: criterion names and "overall". Only complete records count; skipped ones are
/// logged. Throws ValidationError when no record is complete.
std::map<std::string, Aggregate> evaluate_corpus(std::span<const EvaluationRecord> records);

/// Population mean and standard deviation. Throws ValidationError on empty input.
Aggregate mean_std(std::span<const double> values);

}  // namespace lexforge
