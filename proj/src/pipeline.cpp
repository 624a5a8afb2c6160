#include "lexforge/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/itersim.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return (base / p).lexically_normal();
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Role config = "default" overlaid with the role's own keys.
json merged_provider(const json& providers, const std::string& role) {
    json out = providers.value("default", json::object());
    if (providers.contains(role)) out.update(providers.at(role));
    return out;
}

ProviderConfig provider_for(const json& providers, const std::string& role, const fs::path& base,
                            const fs::path& default_cache) {
    auto c = provider_config_from_json(merged_provider(providers, role));
    c.script_path = resolve(base, c.script_path);
    c.cache_dir = c.cache_dir.empty() ? default_cache : resolve(base, c.cache_dir);
    return c;
}

void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
    std::string out;
    for (const auto& l : lines) out += io::dump_compact(l) + "\n";
    io::write_file_atomic(path, out);
}

std::vector<json> read_jsonl(const fs::path& path) {
    const auto text = io::read_file(path);
    std::vector<json> out;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        ++line_no;
        const std::string_view line(text.data() + start, nl - start);
        if (!unicode::trim(line).empty()) {
            try {
                out.push_back(io::parse_json(line, path.string()));
            } catch (const ParseError& e) {
                throw ParseError(path.string() + ": " + e.what(), line_no, e.column());
            }
        }
        start = nl + 1;
    }
    return out;
}

void write_metadata(const fs::path& dir, std::string_view command, const RunConfig& config,
                    const std::string& started_at, const CommandResult& result, json extra = json::object()) {
    json meta{{"command", command},
              {"started_at", started_at},
              {"finished_at", utc_now()},
              {"config", to_json(config)},
              {"total", result.total},
              {"failed", result.failed}};
    meta.update(extra);
    io::write_file_atomic(dir / ("metadata." + std::string(command) + ".json"), meta.dump(2) + "\n");
}

std::map<std::string, DefiningVocabulary> load_vocabularies(const RunConfig& config) {
    std::map<std::string, DefiningVocabulary> out;
    for (const auto& [name, path] : config.vocab_paths) out.emplace(name, load_vocabulary(path, name));
    return out;
}

SegmenterFactory segmenter_factory(const RunConfig& config) {
    if (config.segmenter.kind != SegmenterSpec::Kind::process && config.segmenter.path.empty())
        throw ValidationError("config has no segmenter");
    return make_segmenter_factory(config.segmenter);
}

std::vector<HeadwordEntry> split_of(const std::vector<HeadwordEntry>& entries, Split split) {
    std::vector<HeadwordEntry> out;
    for (const auto& e : entries)
        if (e.split == split) out.push_back(e);
    return out;
}

double safe_ratio(const std::vector<Definition>& defs, const DefiningVocabulary& vocab, Segmenter& seg) {
    return defs.empty() ? 0.0 : vocab_ratio(defs, vocab, seg);
}

std::string pm(const Aggregate& a, bool with_std) {
    return with_std ? fmt::format("{:.1f}±{:.1f}", a.mean, a.std) : fmt::format("{:.1f}", a.mean);
}

const HeadwordEntry* match_entry(const DefinitionSet& set, const std::vector<HeadwordEntry>& entries) {
    const HeadwordEntry* found = nullptr;
    for (const auto& e : entries) {
        if (e.headword != set.headword) continue;
        if (set.pos && e.pos != *set.pos) continue;
        if (set.pos && set.reading != e.reading) continue;
        if (found) throw ValidationError("headword " + set.headword + " matches more than one dataset entry");
        found = &e;
    }
    return found;
}

}  // namespace

// --- config ---------------------------------------------------------------------------

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be an object");
    RunConfig c;
    try {
        c.run_id = j.value("run_id", std::string("run"));
        if (c.run_id.empty() || c.run_id.find('/') != std::string::npos)
            throw ValidationError("run_id must be a non-empty name without '/'");
        c.dataset_path = resolve(base_dir, j.at("dataset").get<std::string>());
        c.output_dir = resolve(base_dir, j.value("output_dir", std::string("runs")));
        c.cache_dir = resolve(base_dir, j.value("cache_dir", std::string()));
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.workers = j.value("workers", c.workers);
        c.max_failure_ratio = j.value("max_failure_ratio", c.max_failure_ratio);
        if (j.contains("vocab"))
            for (const auto& [name, p] : j.at("vocab").items()) c.vocab_paths[name] = resolve(base_dir, p.get<std::string>());
        c.simplify_vocab = j.value("simplify_vocab", c.vocab_paths.empty() ? std::string() : c.vocab_paths.begin()->first);
        if (j.contains("segmenter")) {
            const auto& s = j.at("segmenter");
            const auto kind = s.value("kind", std::string("bundle"));
            if (kind == "bundle") c.segmenter.kind = SegmenterSpec::Kind::bundle;
            else if (kind == "mecab_dictionary") c.segmenter.kind = SegmenterSpec::Kind::mecab_dictionary;
            else if (kind == "process") c.segmenter.kind = SegmenterSpec::Kind::process;
            else throw ValidationError("unknown segmenter kind: " + kind);
            c.segmenter.path = resolve(base_dir, s.value("path", std::string()));
            if (s.contains("command")) c.segmenter.command = s.at("command").get<std::vector<std::string>>();
        }
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            c.generation.mode = parse_shot_mode(g.value("mode", std::string("few_shot")));
            c.generation.shots = g.value("shots", c.generation.shots);
            c.generation.model = g.value("model", std::string());
        }
        const json providers = j.value("providers", json::object());
        c.generator = provider_for(providers, "generator", base_dir, c.cache_dir);
        c.simplifier = provider_for(providers, "simplifier", base_dir, c.cache_dir);
        c.judge = provider_for(providers, "judge", base_dir, c.cache_dir);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (c.generation.mode == ShotMode::few_shot && c.seeds.empty())
        throw ValidationError("few-shot generation needs at least one seed");
    if (c.workers == 0) throw ValidationError("workers must be at least 1");
    if (!c.simplify_vocab.empty() && !c.vocab_paths.contains(c.simplify_vocab))
        throw ValidationError("simplify_vocab " + c.simplify_vocab + " is not among the configured vocabularies");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    const auto text = io::read_file(path);
    json j;
    if (path.extension() == ".toml") {
        toml::table table;
        try {
            table = toml::parse(text, path.string());
        } catch (const toml::parse_error& e) {
            throw ParseError(path.string() + ": " + std::string(e.description()), e.source().begin.line,
                             e.source().begin.column);
        }
        std::ostringstream out;
        out << toml::json_formatter{table};
        j = io::parse_json(out.str(), path.string());
    } else {
        j = io::parse_json(text, path.string());
    }
    return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
    json vocab = json::object();
    for (const auto& [n, p] : c.vocab_paths) vocab[n] = p.string();
    std::string kind = c.segmenter.kind == SegmenterSpec::Kind::bundle             ? "bundle"
                       : c.segmenter.kind == SegmenterSpec::Kind::mecab_dictionary ? "mecab_dictionary"
                                                                                    : "process";
    return json{{"run_id", c.run_id},
                {"dataset", c.dataset_path.string()},
                {"output_dir", c.output_dir.string()},
                {"cache_dir", c.cache_dir.string()},
                {"seeds", c.seeds},
                {"workers", c.workers},
                {"max_failure_ratio", c.max_failure_ratio},
                {"vocab", vocab},
                {"simplify_vocab", c.simplify_vocab},
                {"segmenter", {{"kind", kind}, {"path", c.segmenter.path.string()}, {"command", c.segmenter.command}}},
                {"generation",
                 {{"mode", to_string(c.generation.mode)}, {"shots", c.generation.shots}, {"model", c.generation.model}}},
                {"providers", {{"generator", to_json(c.generator)}, {"simplifier", to_json(c.simplifier)}, {"judge", to_json(c.judge)}}}};
}

void apply_overrides(RunConfig& c, const Overrides& o) {
    if (o.cache_mode)
        for (auto* p : {&c.generator, &c.simplifier, &c.judge}) p->cache_mode = *o.cache_mode;
    if (o.seed) c.seeds = {*o.seed};
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.workers) c.workers = std::max<std::size_t>(1, *o.workers);
}

fs::path run_dir(const RunConfig& c) { return c.output_dir / c.run_id; }

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::atomic<bool> stop{false};
    auto body = [&](std::size_t worker) {
        while (!stop) {
            const auto i = next++;
            if (i >= n) return;
            try {
                fn(i, worker);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                stop = true;
            }
        }
    };
    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body, w);
    }
    if (first_error) std::rethrow_exception(first_error);
}

// --- generate -------------------------------------------------------------------------

CommandResult cmd_generate(const RunConfig& config) {
    const auto started = utc_now();
    const auto entries = load_dataset(config.dataset_path);
    const auto tests = split_of(entries, Split::test);
    const auto demos = split_of(entries, Split::demo);
    validate_spec(config.generation, demos.size());
    auto client = make_client(config.generator);

    std::vector<std::optional<std::uint64_t>> seeds;
    if (config.generation.mode == ShotMode::zero_shot) seeds.emplace_back(std::nullopt);
    else
        for (auto s : config.seeds) seeds.emplace_back(s);

    CommandResult result;
    for (const auto& seed : seeds) {
        const auto dir = seed ? run_dir(config) / fmt::format("seed-{}", *seed) : run_dir(config);
        GenerationSpec spec = config.generation;
        spec.demo_seed = seed.value_or(0);
        if (spec.model.empty()) spec.model = config.generator.model;
        std::vector<HeadwordEntry> sample;
        if (seed) sample = sample_demos(demos, spec.shots, *seed);

        std::vector<GeneratedEntry> out(tests.size());
        parallel_for(tests.size(), config.workers, [&](std::size_t i, std::size_t) {
            out[i] = generate_definitions(tests[i], sample, spec, *client, config.generator);
        });

        std::vector<json> lines;
        std::size_t failed = 0;
        for (const auto& g : out) {
            lines.push_back(to_json(g));
            if (!g.ok()) {
                ++failed;
                spdlog::error("generate {}: {}", g.key.headword, *g.error);
            }
        }
        const auto path = dir / "generated.jsonl";
        write_jsonl(path, lines);
        result.total += out.size();
        result.failed += failed;
        result.outputs.push_back(path);
        result.report_lines.push_back(
            fmt::format("{}: {} entries, {} failed", path.string(), out.size(), failed));
        CommandResult one{out.size(), failed, {path}, {}};
        write_metadata(dir, "generate", config, started, one,
                       json{{"demos", [&] {
                                 std::vector<std::string> v;
                                 for (const auto& d : sample) v.push_back(d.headword);
                                 return v;
                             }()}});
    }
    return result;
}

// --- simplify -------------------------------------------------------------------------

CommandResult cmd_simplify(const RunConfig& config, const fs::path& generated_path, const fs::path& out_dir) {
    const auto started = utc_now();
    const auto vocabs = load_vocabularies(config);
    if (config.simplify_vocab.empty()) throw ValidationError("config names no vocabulary to simplify against");
    const auto& vocab = vocabs.at(config.simplify_vocab);
    if (vocab.empty()) throw ValidationError("vocabulary " + vocab.name() + " is empty");
    auto factory = segmenter_factory(config);
    auto client = make_client(config.simplifier);

    std::vector<GeneratedEntry> inputs;
    for (const auto& j : read_jsonl(generated_path)) inputs.push_back(generated_from_json(j));

    const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, inputs.size()));
    std::vector<std::unique_ptr<Segmenter>> segmenters;
    for (std::size_t w = 0; w < workers; ++w) segmenters.push_back(factory());

    std::vector<std::vector<SimplificationTrace>> traces(inputs.size());
    parallel_for(inputs.size(), workers, [&](std::size_t i, std::size_t w) {
        const SimplifyContext ctx{vocab, *segmenters[w], *client, config.simplifier};
        for (const auto& d : inputs[i].definitions) traces[i].push_back(iter_sim(inputs[i].key.headword, d, ctx));
    });

    CommandResult result;
    std::vector<json> simplified, trace_lines;
    std::vector<Definition> before_all, after_all;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        GeneratedEntry g = inputs[i];
        json before = json::array();
        bool failed = false;
        for (std::size_t k = 0; k < traces[i].size(); ++k) {
            const auto& t = traces[i][k];
            before.push_back(t.initial.text);
            before_all.push_back(t.initial);
            after_all.push_back(t.final);
            g.definitions[k] = t.final;
            for (const auto& w : t.words)
                if (w.status == WordStatus::failed) failed = true;
            auto tj = to_json(t);
            tj["definition_index"] = k;
            trace_lines.push_back(std::move(tj));
        }
        auto j = to_json(g);
        j["before_definitions"] = std::move(before);
        simplified.push_back(std::move(j));
        ++result.total;
        if (failed) {
            ++result.failed;
            spdlog::error("simplify {}: a model call failed; see itersim.jsonl", g.key.headword);
        }
    }
    write_jsonl(out_dir / "simplified.jsonl", simplified);
    write_jsonl(out_dir / "itersim.jsonl", trace_lines);
    result.outputs = {out_dir / "simplified.jsonl", out_dir / "itersim.jsonl"};

    auto& seg = *segmenters.front();
    for (const auto& [name, v] : vocabs) {
        if (v.empty()) continue;
        result.report_lines.push_back(fmt::format("{} ratio: {:.1f} -> {:.1f}", name, safe_ratio(before_all, v, seg),
                                                  safe_ratio(after_all, v, seg)));
    }
    result.report_lines.push_back(fmt::format("model calls: {} provider, {} cached", client->provider_calls(),
                                              client->cache_hits()));
    write_metadata(out_dir, "simplify", config, started, result, json{{"input", generated_path.string()}});
    return result;
}

// --- evaluate -------------------------------------------------------------------------

std::vector<DefinitionSet> load_definition_sets(const fs::path& path) {
    const auto text = io::read_file(path);
    std::vector<json> objects;
    const auto whole = json::parse(text, nullptr, false);
    if (!whole.is_discarded() && whole.is_object() && !whole.contains("headword")) {
        for (const auto& [h, defs] : whole.items()) objects.push_back(json{{"headword", h}, {"definitions", defs}});
    } else {
        objects = read_jsonl(path);
    }
    std::vector<DefinitionSet> out;
    for (const auto& o : objects) {
        DefinitionSet s;
        try {
            s.headword = unicode::nfc(o.at("headword").get<std::string>());
            if (o.contains("reading") && !o.at("reading").is_null()) s.reading = o.at("reading").get<std::string>();
            if (o.contains("pos") && !o.at("pos").is_null()) s.pos = parse_part_of_speech(o.at("pos").get<std::string>());
            for (const auto& d : o.at("definitions")) s.definitions.push_back(Definition{unicode::nfc(d.get<std::string>())});
            if (o.contains("error") && !o.at("error").is_null()) s.error = o.at("error").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": malformed definition set: " + e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

CommandResult cmd_evaluate(const RunConfig& config, std::span<const fs::path> defs_paths, const fs::path& out_dir,
                           const EvaluateOptions& options) {
    if (defs_paths.empty()) throw ValidationError("evaluate needs at least one definitions file");
    const auto started = utc_now();
    const auto entries = load_dataset(config.dataset_path);
    const auto vocabs = load_vocabularies(config);
    std::optional<SegmenterFactory> factory;
    if (config.segmenter.kind == SegmenterSpec::Kind::process || !config.segmenter.path.empty())
        factory = segmenter_factory(config);
    auto client = make_client(config.judge);

    std::vector<Criterion> criteria(kAllCriteria.begin(), kAllCriteria.end());
    if (options.external) std::erase(criteria, Criterion::guideline_compliance);

    // Labels for per-run subdirectories: the input's parent directory name when distinct.
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < defs_paths.size(); ++i) labels.push_back(defs_paths[i].parent_path().filename().string());
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size() ||
        std::any_of(labels.begin(), labels.end(), [](const std::string& l) { return l.empty(); }))
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = fmt::format("run-{}", i + 1);

    struct RunSummary {
        std::string label;
        std::map<std::string, Aggregate> scores;
        std::map<std::string, double> ratios;
        std::optional<double> bleu;
        std::size_t n = 0;
    };
    std::vector<RunSummary> runs;
    CommandResult result;

    for (std::size_t r = 0; r < defs_paths.size(); ++r) {
        const auto sets = load_definition_sets(defs_paths[r]);
        std::vector<const HeadwordEntry*> targets;
        std::set<const HeadwordEntry*> seen;
        for (const auto& s : sets) {
            const auto* e = match_entry(s, entries);
            if (!e) throw ValidationError(defs_paths[r].string() + ": headword " + s.headword + " is not in the dataset");
            if (!seen.insert(e).second) throw ValidationError(defs_paths[r].string() + ": duplicate headword " + s.headword);
            targets.push_back(e);
        }
        for (const auto& e : entries)
            if (e.split == Split::test && !seen.contains(&e))
                spdlog::warn("{}: no definitions for test headword {}", defs_paths[r].string(), e.headword);

        const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, sets.size()));
        std::vector<std::unique_ptr<Segmenter>> segmenters;
        if (factory)
            for (std::size_t w = 0; w < workers; ++w) segmenters.push_back((*factory)());

        std::vector<EvaluationRecord> records(sets.size());
        parallel_for(sets.size(), workers, [&](std::size_t i, std::size_t w) {
            const auto& defs = sets[i].error ? std::vector<Definition>{} : sets[i].definitions;
            records[i] = evaluate_entry(*targets[i], defs, *client, config.judge, criteria);
            if (sets[i].error) records[i].errors[criteria.front()] = "generation failed: " + *sets[i].error;
            if (!segmenters.empty() && !defs.empty())
                records[i].bleu = bleu_definitions(targets[i]->definitions, defs, *segmenters[w]);
        });

        const fs::path dir = defs_paths.size() == 1 ? out_dir : out_dir / labels[r];
        std::vector<json> lines;
        std::string bleu_tsv = "headword\tscore\n";
        RunSummary summary;
        summary.label = labels[r];
        std::vector<double> bleus;
        std::vector<Definition> all_defs;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& rec = records[i];
            lines.push_back(to_json(rec));
            ++result.total;
            if (!rec.complete()) {
                ++result.failed;
                for (const auto& [c, e] : rec.errors) spdlog::error("evaluate {} {}: {}", rec.key.headword, to_string(c), e);
            }
            if (rec.bleu) {
                bleus.push_back(*rec.bleu);
                bleu_tsv += rec.key.headword + "\t" + fmt::format("{}", *rec.bleu) + "\n";
            }
            all_defs.insert(all_defs.end(), rec.response.begin(), rec.response.end());
        }
        write_jsonl(dir / "eval.jsonl", lines);
        result.outputs.push_back(dir / "eval.jsonl");
        if (!options.external) {
            io::write_file_atomic(dir / "machine_scores.tsv", dump_rater_scores(rater_scores_from_records(records, "judge")));
            result.outputs.push_back(dir / "machine_scores.tsv");
        }
        if (!bleus.empty()) {
            io::write_file_atomic(dir / "bleu.tsv", bleu_tsv);
            result.outputs.push_back(dir / "bleu.tsv");
            summary.bleu = mean_std(bleus).mean;
        }
        summary.scores = evaluate_corpus(records);
        summary.n = summary.scores.begin()->second.n;
        if (!segmenters.empty())
            for (const auto& [name, v] : vocabs)
                if (!v.empty() && !all_defs.empty()) summary.ratios[name] = vocab_ratio(all_defs, v, *segmenters.front());
        runs.push_back(std::move(summary));
    }

    // One row per run, then mean±std across runs (population std) when there are several.
    std::vector<std::string> score_cols{"overall"};
    for (auto c : kAllCriteria) score_cols.emplace_back(to_string(c));
    std::vector<std::string> header{"run", "n", "Overall"};
    for (auto c : kAllCriteria) header.emplace_back(display_name(c));
    header.emplace_back("BLEU");
    for (const auto& [name, path] : config.vocab_paths) header.push_back(name);

    auto cell = [](const std::optional<Aggregate>& a, bool with_std) { return a ? pm(*a, with_std) : std::string("—"); };
    auto across = [&](auto get) -> std::optional<Aggregate> {
        std::vector<double> v;
        for (const auto& r : runs)
            if (auto x = get(r)) v.push_back(*x);
        if (v.size() != runs.size() || v.empty()) return std::nullopt;
        return mean_std(v);
    };
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : runs) {
        std::vector<std::string> row{r.label, std::to_string(r.n)};
        for (const auto& col : score_cols) {
            const auto it = r.scores.find(col);
            row.push_back(it == r.scores.end() ? "—" : fmt::format("{:.1f}", it->second.mean));
        }
        row.push_back(r.bleu ? fmt::format("{:.1f}", *r.bleu) : "—");
        for (const auto& [name, path] : config.vocab_paths) {
            const auto it = r.ratios.find(name);
            row.push_back(it == r.ratios.end() ? "—" : fmt::format("{:.1f}", it->second));
        }
        rows.push_back(std::move(row));
    }
    if (runs.size() > 1) {
        std::vector<std::string> row{"mean", std::to_string(runs.size()) + " runs"};
        for (const auto& col : score_cols)
            row.push_back(cell(across([&](const RunSummary& r) -> std::optional<double> {
                                   const auto it = r.scores.find(col);
                                   if (it == r.scores.end()) return std::nullopt;
                                   return it->second.mean;
                               }),
                               true));
        row.push_back(cell(across([](const RunSummary& r) { return r.bleu; }), true));
        for (const auto& [name, path] : config.vocab_paths)
            row.push_back(cell(across([&](const RunSummary& r) -> std::optional<double> {
                                   const auto it = r.ratios.find(name);
                                   if (it == r.ratios.end()) return std::nullopt;
                                   return it->second;
                               }),
                               true));
        rows.push_back(std::move(row));
    }

    std::string tsv, md;
    for (std::size_t i = 0; i < header.size(); ++i) tsv += (i ? "\t" : "") + header[i];
    tsv += "\n";
    md += "|";
    for (const auto& h : header) md += " " + h + " |";
    md += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) tsv += (i ? "\t" : "") + row[i];
        tsv += "\n";
        md += "|";
        for (const auto& c : row) md += " " + c + " |";
        md += "\n";
    }
    io::write_file_atomic(out_dir / "summary.tsv", tsv);
    io::write_file_atomic(out_dir / "summary.md", md);
    result.outputs.push_back(out_dir / "summary.tsv");
    result.outputs.push_back(out_dir / "summary.md");
    result.report_lines.push_back(md);
    json inputs = json::array();
    for (const auto& p : defs_paths) inputs.push_back(p.string());
    write_metadata(out_dir, "evaluate", config, started, result, json{{"inputs", inputs}, {"external", options.external}});
    return result;
}

// --- agree ------------------------------------------------------------------------------

AgreementReport cmd_agree(std::span<const fs::path> machine_files, std::span<const fs::path> human_files,
                          const fs::path& out_dir, TauVariant variant) {
    auto rater_name = [](const fs::path& p) {
        const auto stem = p.stem().string();
        const auto parent = p.parent_path().filename().string();
        return stem == "machine_scores" && !parent.empty() ? parent : stem;
    };
    std::vector<RaterScores> machines, humans;
    for (const auto& p : machine_files) machines.push_back(load_rater_scores(p, rater_name(p)));
    for (const auto& p : human_files) humans.push_back(load_rater_scores(p, rater_name(p)));
    auto report = compute_agreement(std::move(machines), std::move(humans), variant);
    io::write_file_atomic(out_dir / "agreement.tsv", agreement_tsv(report));
    io::write_file_atomic(out_dir / "agreement.md", agreement_markdown(report));
    for (const auto& n : report.notices) spdlog::info("{}", n);
    return report;
}

// --- stats / lint -----------------------------------------------------------------------

std::string cmd_stats(const RunConfig& config) {
    const auto entries = load_dataset(config.dataset_path);
    const auto s = dataset_stats(entries);
    std::string tsv = "band\twords\tsenses\tS/W\n";
    std::string md = "| Band | Words | Senses | S/W |\n|---|---|---|---|\n";
    auto add = [&](std::string_view label, std::size_t w, std::size_t n, double spw) {
        tsv += fmt::format("{}\t{}\t{}\t{:.2f}\n", label, w, n, spw);
        md += fmt::format("| {} | {} | {} | {:.2f} |\n", label, w, n, spw);
    };
    for (const auto& [band, b] : s.per_band) add(to_string(band), b.words, b.senses, b.senses_per_word);
    add("total", s.words, s.senses, s.senses_per_word);
    for (const auto& [split, b] : s.per_split) add(fmt::format("split:{}", to_string(split)), b.words, b.senses, b.senses_per_word);

    std::string ratios;
    if (!config.vocab_paths.empty() && (config.segmenter.kind == SegmenterSpec::Kind::process || !config.segmenter.path.empty())) {
        auto seg = segmenter_factory(config)();
        std::vector<Definition> defs;
        for (const auto& e : entries) defs.insert(defs.end(), e.definitions.begin(), e.definitions.end());
        for (const auto& [name, v] : load_vocabularies(config))
            if (!v.empty()) ratios += fmt::format("{} ratio of reference definitions: {:.1f}\n", name, vocab_ratio(defs, v, *seg));
    }
    return tsv + "\n" + md + (ratios.empty() ? "" : "\n" + ratios);
}

CommandResult cmd_lint(const RunConfig& config, const std::optional<fs::path>& defs_path) {
    std::vector<std::pair<std::string, std::vector<Definition>>> sets;
    if (defs_path) {
        for (auto& s : load_definition_sets(*defs_path)) sets.emplace_back(s.headword, std::move(s.definitions));
    } else {
        for (const auto& e : load_dataset(config.dataset_path)) sets.emplace_back(e.headword, e.definitions);
    }
    CommandResult result;
    for (const auto& [headword, defs] : sets) {
        for (std::size_t i = 0; i < defs.size(); ++i) {
            ++result.total;
            const auto report = lint_guidelines(defs[i], i);
            if (report.ok()) continue;
            ++result.failed;
            for (const auto& v : report.violations)
                result.report_lines.push_back(fmt::format("{}\t{}\t{}\t{}", headword, i, to_string(v.code), v.message));
        }
    }
    return result;
}

}  // namespace lexforge
