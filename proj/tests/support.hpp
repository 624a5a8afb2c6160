#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "lexforge/analyzer.hpp"
#include "lexforge/dataset.hpp"
#include "lexforge/lexicon.hpp"
#include "lexforge/llm.hpp"

namespace testsupport {

inline std::filesystem::path source_dir() { return LEXFORGE_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path fixture_dataset() { return data_dir() / "fixture" / "d3j_fixture.json"; }
inline std::filesystem::path bundle_dir() { return data_dir() / "lexicon" / "bundle"; }
inline std::filesystem::path unidic_dir() { return "/usr/local/lib/python3.10/dist-packages/unidic_lite/dicdir"; }

inline std::shared_ptr<lexforge::EmbeddedSegmenter> bundle_segmenter() {
    static const auto dict = lexforge::analyzer::open_bundle(bundle_dir());
    return std::make_shared<lexforge::EmbeddedSegmenter>(dict);
}

inline const lexforge::DefiningVocabulary& vocab16k() {
    static const auto v = lexforge::load_vocabulary(data_dir() / "vocab" / "fixture16k.txt", "TUBE16K");
    return v;
}

inline const lexforge::DefiningVocabulary& vocab3k() {
    static const auto v = lexforge::load_vocabulary(data_dir() / "vocab" / "fixture3k.txt", "TUBE3K");
    return v;
}

/// Every line of the text file the bundle was extracted from.
inline std::vector<std::string> bundle_texts() {
    std::vector<std::string> out;
    std::ifstream in(data_dir() / "lexicon" / "texts.txt");
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

inline lexforge::HeadwordEntry entry(std::string headword, std::optional<std::string> reading,
                                     lexforge::PartOfSpeech pos, std::vector<std::string> defs,
                                     lexforge::Split split = lexforge::Split::test) {
    lexforge::HeadwordEntry e;
    e.headword = std::move(headword);
    e.reading = std::move(reading);
    e.pos = pos;
    for (auto& d : defs) e.definitions.push_back({std::move(d)});
    e.split = split;
    return e;
}

/// Counts calls and answers from a fixed function.
class CountingProvider final : public lexforge::Provider {
public:
    explicit CountingProvider(std::function<std::string(const lexforge::LlmRequest&)> answer)
        : answer_(std::move(answer)) {}
    std::string send(const lexforge::LlmRequest& request) override {
        ++calls;
        seen.push_back(request);
        return answer_(request);
    }
    std::string name() const override { return "counting"; }
    bool offline() const override { return true; }

    int calls = 0;
    std::vector<lexforge::LlmRequest> seen;

private:
    std::function<std::string(const lexforge::LlmRequest&)> answer_;
};

inline std::shared_ptr<lexforge::LlmClient> scripted_client(const nlohmann::json& script) {
    return std::make_shared<lexforge::LlmClient>(std::make_shared<lexforge::ScriptedProvider>(script), std::nullopt,
                                                 lexforge::CacheMode::off);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lexforge-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
