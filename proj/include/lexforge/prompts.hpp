#pragma once

#include <map>
#include <string>
#include <string_view>

namespace lexforge::prompts {

/// Raw asset texts, without the trailing newline of the file.
std::string_view instructions_template();
std::string_view guidelines();
std::string_view simplify_template();
std::string_view judge_system();
std::string_view rubric_truthfulness();
std::string_view rubric_coverage();
std::string_view rubric_sense_specificity();
std::string_view rubric_guideline_compliance();

/// Instructions with the guidelines filled in.
const std::string& instructions();

/// Replaces each `{name}` with `values.at(name)` in one left-to-right pass; substituted
/// text is not rescanned. Throws ValidationError for a placeholder without a value.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);

}  // namespace lexforge::prompts
