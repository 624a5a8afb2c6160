// lexforge: generate, simplify and evaluate Japanese dictionary definitions.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lexforge/analyzer.hpp"
#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/lexicon.hpp"
#include "lexforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lexforge;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string cache_mode;
    std::string out;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_seed) {
    cmd->add_option("-c,--config", f.config, "run configuration (TOML or JSON)")->required()->check(CLI::ExistingFile);
    if (with_seed) cmd->add_option("--seed", f.seed, "use this demo seed only");
    cmd->add_option("--cache-mode", f.cache_mode, "record | replay | off")
        ->check(CLI::IsMember({"record", "replay", "off"}));
    cmd->add_option("-o,--out", f.out, "output directory");
    cmd->add_option("-j,--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig load(const CommonFlags& f, bool out_is_output_dir) {
    auto config = load_run_config(f.config);
    Overrides o;
    if (!f.cache_mode.empty()) o.cache_mode = parse_cache_mode(f.cache_mode);
    o.seed = f.seed;
    if (out_is_output_dir && !f.out.empty()) o.output_dir = fs::path(f.out);
    o.workers = f.workers;
    apply_overrides(config, o);
    return config;
}

int finish(const CommandResult& r, double max_ratio) {
    for (const auto& line : r.report_lines) std::cout << line << "\n";
    for (const auto& p : r.outputs) spdlog::info("wrote {}", p.string());
    if (r.over_threshold(max_ratio)) {
        spdlog::error("{} of {} items failed, above the allowed ratio {}", r.failed, r.total, max_ratio);
        return 3;
    }
    if (r.failed) spdlog::warn("{} of {} items failed", r.failed, r.total);
    return 0;
}

int serve_segmenter(Segmenter& seg) {
    std::string line;
    while (std::getline(std::cin, line)) {
        for (const auto& t : seg.segment(line)) std::cout << t.surface << '\t' << t.lemma << '\t' << t.pos_major << '\n';
        std::cout << "EOS" << std::endl;
    }
    return 0;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::vector<std::string> out;
    const auto text = io::read_file(p);
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        if (nl > start) out.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate, simplify and evaluate Japanese dictionary definitions"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    CommonFlags gen_flags;
    auto* gen = app.add_subcommand("generate", "generate definitions for the test split");
    add_common(gen, gen_flags, true);

    CommonFlags sim_flags;
    std::string sim_input;
    auto* sim = app.add_subcommand("simplify", "simplify a generated.jsonl against the defining vocabulary");
    add_common(sim, sim_flags, false);
    sim->add_option("input", sim_input, "generated.jsonl")->required()->check(CLI::ExistingFile);

    CommonFlags eval_flags;
    std::vector<std::string> eval_inputs;
    bool external = false;
    auto* eval = app.add_subcommand("evaluate", "judge definitions and summarize scores");
    add_common(eval, eval_flags, false);
    eval->add_option("inputs", eval_inputs, "definition files, one per run")->required()->check(CLI::ExistingFile);
    eval->add_flag("--external", external, "definitions from another source: skip guideline compliance");

    std::vector<std::string> agree_machine, agree_human;
    std::string agree_out = ".";
    std::string agree_variant = "b";
    auto* agree = app.add_subcommand("agree", "Kendall tau agreement between score files");
    agree->add_option("--machine", agree_machine, "machine score TSVs")->check(CLI::ExistingFile);
    agree->add_option("--human", agree_human, "human score TSVs")->required()->check(CLI::ExistingFile);
    agree->add_option("-o,--out", agree_out, "output directory");
    agree->add_option("--variant", agree_variant, "tau variant")->check(CLI::IsMember({"a", "b"}));

    CommonFlags stats_flags;
    auto* stats = app.add_subcommand("stats", "dataset statistics");
    stats->add_option("-c,--config", stats_flags.config)->required()->check(CLI::ExistingFile);

    CommonFlags lint_flags;
    std::string lint_input;
    auto* lint = app.add_subcommand("lint", "check definitions against the formatting guidelines");
    lint->add_option("-c,--config", lint_flags.config)->required()->check(CLI::ExistingFile);
    lint->add_option("input", lint_input, "definitions file (default: the dataset's references)")
        ->check(CLI::ExistingFile);

    CommonFlags seg_flags;
    std::vector<std::string> seg_text;
    bool serve = false;
    auto* seg = app.add_subcommand("segment", "print the segmentation of text");
    seg->add_option("-c,--config", seg_flags.config)->required()->check(CLI::ExistingFile);
    seg->add_option("text", seg_text, "sentences (default: stdin lines)");
    seg->add_flag("--serve", serve, "line protocol on stdin/stdout");

    std::string ex_dicdir, ex_out;
    std::vector<std::string> ex_texts;
    auto* extract = app.add_subcommand("lexicon-extract", "write a dictionary bundle covering the given texts");
    extract->add_option("--dicdir", ex_dicdir, "compiled MeCab dictionary")->required()->check(CLI::ExistingDirectory);
    extract->add_option("-o,--out", ex_out, "bundle directory")->required();
    extract->add_option("texts", ex_texts, "text files, one sentence per line")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_default_logger(spdlog::stderr_color_mt("lexforge"));

    try {
        if (*gen) {
            const auto config = load(gen_flags, true);
            return finish(cmd_generate(config), config.max_failure_ratio);
        }
        if (*sim) {
            const auto config = load(sim_flags, false);
            const fs::path out = sim_flags.out.empty() ? fs::path(sim_input).parent_path() : fs::path(sim_flags.out);
            return finish(cmd_simplify(config, sim_input, out), config.max_failure_ratio);
        }
        if (*eval) {
            const auto config = load(eval_flags, false);
            std::vector<fs::path> inputs(eval_inputs.begin(), eval_inputs.end());
            const fs::path out = eval_flags.out.empty() ? run_dir(config) / "eval" : fs::path(eval_flags.out);
            return finish(cmd_evaluate(config, inputs, out, EvaluateOptions{external}), config.max_failure_ratio);
        }
        if (*agree) {
            std::vector<fs::path> m(agree_machine.begin(), agree_machine.end());
            std::vector<fs::path> h(agree_human.begin(), agree_human.end());
            const auto report = cmd_agree(m, h, agree_out, agree_variant == "a" ? TauVariant::a : TauVariant::b);
            std::cout << agreement_markdown(report);
            return 0;
        }
        if (*stats) {
            std::cout << cmd_stats(load_run_config(stats_flags.config));
            return 0;
        }
        if (*lint) {
            const auto config = load_run_config(lint_flags.config);
            std::optional<fs::path> input;
            if (!lint_input.empty()) input = lint_input;
            const auto r = cmd_lint(config, input);
            for (const auto& line : r.report_lines) std::cout << line << "\n";
            std::cerr << r.failed << " of " << r.total << " definitions have guideline violations\n";
            return r.failed ? 1 : 0;
        }
        if (*seg) {
            const auto config = load_run_config(seg_flags.config);
            auto segmenter = make_segmenter_factory(config.segmenter)();
            if (serve) return serve_segmenter(*segmenter);
            if (seg_text.empty()) {
                std::string line;
                while (std::getline(std::cin, line)) seg_text.push_back(line);
            }
            for (const auto& s : seg_text) {
                std::string out;
                for (const auto& t : segmenter->segment(s)) {
                    if (!out.empty()) out += ' ';
                    out += t.surface;
                    if (t.lemma != t.surface) out += "(" + t.lemma + ")";
                }
                std::cout << out << "\n";
            }
            return 0;
        }
        if (*extract) {
            std::vector<std::string> lines;
            for (const auto& t : ex_texts) {
                auto l = read_lines(t);
                lines.insert(lines.end(), l.begin(), l.end());
            }
            const auto dict = analyzer::open_mecab_dictionary(ex_dicdir);
            analyzer::write_bundle(*dict, lines, ex_out);
            spdlog::info("bundle for {} lines written to {}", lines.size(), ex_out);
            return 0;
        }
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const ValidationError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
