#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexforge/dataset.hpp"
#include "lexforge/generate.hpp"
#include "lexforge/judge.hpp"
#include "lexforge/lexicon.hpp"
#include "lexforge/llm.hpp"
#include "lexforge/metrics.hpp"

namespace lexforge {

struct RunConfig {
    std::filesystem::path dataset_path;
    std::map<std::string, std::filesystem::path> vocab_paths;  // name -> word list
    std::string simplify_vocab;  // which vocabulary IterSim works against
    SegmenterSpec segmenter;
    ProviderConfig generator;
    ProviderConfig simplifier;
    ProviderConfig judge;
    GenerationSpec generation;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string run_id;
    std::filesystem::path cache_dir;
    std::filesystem::path output_dir = "runs";
    std::size_t workers = 4;
    double max_failure_ratio = 0.10;
};

/// Relative paths are resolved against `base_dir`. Throws ValidationError on bad values.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// TOML (.toml) or JSON (anything else).
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
    std::optional<CacheMode> cache_mode;
    std::optional<std::uint64_t> seed;  // replaces the seed list
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::size_t> workers;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

/// `<output_dir>/<run_id>`.
std::filesystem::path run_dir(const RunConfig& config);

/// Calls fn(index, worker) for every index on `workers` threads. Each worker number is used
/// by one thread only. The first exception is rethrown after all threads stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn);

struct CommandResult {
    std::size_t total = 0;
    std::size_t failed = 0;
    std::vector<std::filesystem::path> outputs;
    std::vector<std::string> report_lines;  // human-readable summary

    bool over_threshold(double ratio) const noexcept {
        return total > 0 && static_cast<double>(failed) > ratio * static_cast<double>(total);
    }
};

/// One generated.jsonl per seed (few-shot) or a single one (zero-shot), over the test split.
CommandResult cmd_generate(const RunConfig& config);

/// Runs IterSim over every definition of a generated file. Writes simplified.jsonl (same
/// shape as generated.jsonl) and itersim.jsonl into `out_dir`.
CommandResult cmd_simplify(const RunConfig& config, const std::filesystem::path& generated_path,
                           const std::filesystem::path& out_dir);

/// A definition set read from a generated/simplified/external file.
struct DefinitionSet {
    std::string headword;
    std::optional<std::string> reading;
    std::optional<PartOfSpeech> pos;
    std::vector<Definition> definitions;
    std::optional<std::string> error;
};

/// JSONL of objects with `headword` and `definitions` (reading, pos, error optional), or
/// one JSON object mapping headword to a list of definitions.
std::vector<DefinitionSet> load_definition_sets(const std::filesystem::path& path);

struct EvaluateOptions {
    bool external = false;  // definitions not written to the guidelines: skip compliance
};

/// Judges every input file (one per seed, typically) and writes per-run eval.jsonl,
/// machine_scores.tsv and bleu.tsv, plus summary.tsv and summary.md in `out_dir`.
CommandResult cmd_evaluate(const RunConfig& config, std::span<const std::filesystem::path> defs_paths,
                           const std::filesystem::path& out_dir, const EvaluateOptions& options = {});

/// Writes agreement.tsv and agreement.md into `out_dir`.
AgreementReport cmd_agree(std::span<const std::filesystem::path> machine_files,
                          std::span<const std::filesystem::path> human_files, const std::filesystem::path& out_dir,
                          TauVariant variant = TauVariant::b);

/// Dataset statistics (and reference vocabulary ratios when vocabularies are configured)
/// as TSV followed by Markdown.
std::string cmd_stats(const RunConfig& config);

/// Lint report over the dataset's reference definitions, or over a definitions file.
CommandResult cmd_lint(const RunConfig& config, const std::optional<std::filesystem::path>& defs_path);

}  // namespace lexforge
