#include "lexforge/prompts.hpp"

#include "lexforge/error.hpp"

namespace lexforge::assets {
std::string_view instructions();
std::string_view guidelines();
std::string_view simplify();
std::string_view judge_system();
std::string_view rubric_truthfulness();
std::string_view rubric_coverage();
std::string_view rubric_sense_specificity();
std::string_view rubric_guideline_compliance();
}  // namespace lexforge::assets

namespace lexforge::prompts {

namespace {

std::string_view chomp(std::string_view s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view instructions_template() { return chomp(assets::instructions()); }
std::string_view guidelines() { return chomp(assets::guidelines()); }
std::string_view simplify_template() { return chomp(assets::simplify()); }
std::string_view judge_system() { return chomp(assets::judge_system()); }
std::string_view rubric_truthfulness() { return chomp(assets::rubric_truthfulness()); }
std::string_view rubric_coverage() { return chomp(assets::rubric_coverage()); }
std::string_view rubric_sense_specificity() { return chomp(assets::rubric_sense_specificity()); }
std::string_view rubric_guideline_compliance() { return chomp(assets::rubric_guideline_compliance()); }

const std::string& instructions() {
    static const std::string text = fill(instructions_template(), {{"guidelines", std::string(guidelines())}});
    return text;
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find('}', open + 1);
        if (close == std::string_view::npos) break;
        const auto name = tmpl.substr(open + 1, close - open - 1);
        const bool identifier = !name.empty() && name.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") == std::string_view::npos;
        out.append(tmpl.substr(pos, open - pos));
        if (!identifier) {
            out += '{';
            pos = open + 1;
            continue;
        }
        const auto it = values.find(name);
        if (it == values.end()) throw ValidationError("prompt placeholder {" + std::string(name) + "} has no value");
        out += it->second;
        pos = close + 1;
    }
    out.append(tmpl.substr(pos));
    return out;
}

}  // namespace lexforge::prompts
