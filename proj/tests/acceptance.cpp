// Acceptance checks. One PASS/FAIL line per criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/itersim.hpp"
#include "lexforge/judge.hpp"
#include "lexforge/metrics.hpp"
#include "lexforge/pipeline.hpp"
#include "support.hpp"

using namespace lexforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances.
constexpr double kTauTolerance = 1e-12;
constexpr double kBleuTolerance = 1e-9;
constexpr double kTauSeconds = 5.0;
constexpr double kIterSimSeconds = 10.0;

struct Check {
    std::vector<std::string> problems;
    void expect(bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    }
};

int failures = 0;

void report(const std::string& id, const std::string& title, const std::function<void(Check&)>& body) {
    Check c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.problems.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.problems.empty() ? "PASS" : "FAIL") << "  " << id << "  " << title << "\n";
    for (const auto& p : c.problems) std::cout << "        " << p << "\n";
    if (!c.problems.empty()) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int sign(double v) { return (v > 0) - (v < 0); }

double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, pairs = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++pairs;
            const int s = sign(x[i] - x[j]) * sign(y[i] - y[j]);
            concordant += s > 0;
            discordant += s < 0;
            tied_x += x[i] == x[j];
            tied_y += y[i] == y[j];
        }
    return (concordant - discordant) / std::sqrt(double(pairs - tied_x) * double(pairs - tied_y));
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

json rule(std::vector<std::string> contains, std::string response) {
    return json{{"contains", contains}, {"field", "user"}, {"response", response}};
}

std::vector<json> read_jsonl(const fs::path& p) {
    std::vector<json> out;
    std::istringstream in(io::read_file(p));
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

// --- criteria ----------------------------------------------------------------------------

void tau(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    int with_ties = 0, compared = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 11;
        const bool ties = trial % 2 == 1;
        std::vector<double> x(n), y(n);
        if (ties) {
            for (auto& v : x) v = double(rng() % 4);
            for (auto& v : y) v = double(rng() % 4);
        } else {
            // Distinct values: shuffled ranks.
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] = double(i);
            std::shuffle(x.begin(), x.end(), rng);
            std::shuffle(y.begin(), y.end(), rng);
        }
        const double expected = brute_tau_b(x, y);
        if (!std::isfinite(expected)) {
            bool threw = false;
            try {
                kendall_tau(x, y);
            } catch (const UndefinedTauError&) {
                threw = true;
            }
            c.expect(threw, "degenerate vector did not raise UndefinedTauError");
            continue;
        }
        ++compared;
        with_ties += ties;
        const double got = kendall_tau(x, y);
        if (std::abs(got - expected) > kTauTolerance)
            c.expect(false, fmt::format("trial {}: {} vs oracle {}", trial, got, expected));
        if (!ties) {
            std::vector<double> rev;
            for (double v : x) rev.push_back(double(n) - v);
            c.expect(kendall_tau(x, x) == 1.0, "tau(x, x) != 1");
            c.expect(kendall_tau(x, rev) == -1.0, "tau(x, reversed ranks) != -1");
        }
    }
    c.expect(with_ties > 300, "too few tied cases compared");
    const double secs = seconds_since(start);
    c.expect(secs < kTauSeconds, fmt::format("took {:.2f} s", secs));
    std::cout << fmt::format("        {} vectors compared ({} with ties), {:.3f} s\n", compared, with_ties, secs);
}

void bleu(Check& c) {
    const auto id = words("a b c d e");
    c.expect(bleu_tokens(id, id).score == 100.0, "identity != 100");
    c.expect(bleu_tokens(words("a b c d"), words("w x y z")).score == 0.0, "disjoint != 0");
    // hyp "a b c d", ref "a b x c e": clipped matches 3/4, 1/3, 0/2, 0/1; the zero orders
    // smooth to 1/(2*2) and 1/(4*1); brevity penalty exp(1 - 5/4).
    const double expected =
        100.0 * std::exp(-0.25) * std::pow(0.75 * (1.0 / 3.0) * 0.25 * 0.25, 0.25);
    const double got = bleu_tokens(words("a b c d"), words("a b x c e")).score;
    c.expect(std::abs(got - expected) <= kBleuTolerance, fmt::format("toy {} vs {}", got, expected));
    std::cout << fmt::format("        toy case {:.12f} (oracle {:.12f})\n", got, expected);
}

void judge(Check& c) {
    const auto entries = load_dataset(testsupport::fixture_dataset());
    ProviderConfig config;
    config.kind = ProviderKind::replay;
    config.cache_mode = CacheMode::replay;
    config.cache_dir = testsupport::data_dir() / "replay";
    config.model = "fixture-judge";
    auto client = make_client(config);
    const std::vector<Definition> hyp{{"(建物や構造物を)作り上げる。"}, {"(関係や地位などを)時間をかけて作り上げる。"}};
    const auto rec = evaluate_entry(entries.front(), hyp, *client, config);
    c.expect(rec.complete(), "築く record incomplete");
    for (auto cr : kAllCriteria)
        c.expect(rec.results.contains(cr) && rec.results.at(cr).score == 100.0,
                 std::string("築く ") + std::string(to_string(cr)) + " != 100");
    c.expect(rec.overall && *rec.overall == 100.0, "築く overall != 100");

    std::map<Criterion, CriterionResult> mixed;
    const std::array<double, 4> s{100, 80, 50, 75};
    for (std::size_t i = 0; i < 4; ++i) mixed[kAllCriteria[i]] = {kAllCriteria[i], "", s[i]};
    c.expect(overall_score(mixed) == (100.0 + 80.0 + 50.0 + 75.0) / 4.0, "overall is not the mean of four");

    std::map<Criterion, CriterionResult> reported;
    const std::array<double, 4> means{91.5, 91.9, 88.0, 92.0};
    for (std::size_t i = 0; i < 4; ++i) reported[kAllCriteria[i]] = {kAllCriteria[i], "", means[i]};
    const double overall = overall_score(reported);
    c.expect(std::abs(overall - 90.85) < 1e-12, fmt::format("criterion means average to {}", overall));
    c.expect(fmt::format("{:.1f}", overall) == "90.8", fmt::format("{:.1f} does not round to 90.8", overall));
}

void result_parsing(Check& c) {
    for (int s = 0; s <= 100; ++s) {
        const double got = parse_result_score("Assessment text.\n" + render_result(s));
        if (got != s) c.expect(false, fmt::format("{} parsed as {}", s, got));
    }
    bool rejected = false;
    try {
        parse_result_score("Both senses are covered, so the score is 100.");
    } catch (const ParseError&) {
        rejected = true;
    }
    c.expect(rejected, "marker-free text was accepted");

    // The four 築く assessments shipped in the fixture script.
    const auto script = io::parse_json(io::read_file(testsupport::data_dir() / "scripts" / "fixture_llm.json"), "script");
    int n = 0;
    for (const auto& r : script.at("rules")) {
        const auto& contains = r.at("contains");
        if (!contains.is_array() || contains.size() != 2 || contains[0] != "Input: 築く, きずく, verb\n\n") continue;
        ++n;
        c.expect(parse_result_score(r.at("response").get<std::string>()) == 100.0,
                 "築く assessment does not parse to 100: " + contains[1].get<std::string>());
    }
    c.expect(n == 4, fmt::format("expected four 築く assessments, found {}", n));
}

void itersim(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    auto seg = testsupport::bundle_segmenter();
    const auto& vocab = testsupport::vocab16k();
    ProviderConfig provider;

    auto run = [&](const json& script, const std::string& text, const DefiningVocabulary& v) {
        auto client = testsupport::scripted_client(script);
        const SimplifyContext ctx{v, *seg, *client, provider};
        return iter_sim("先祖", {text}, ctx);
    };
    auto check_invariants = [&](const SimplificationTrace& t, const std::string& label) {
        std::map<std::string, int> per_word;
        for (const auto& a : t.attempts) ++per_word[a.target_word];
        for (const auto& [w, n] : per_word) c.expect(n <= 2, label + ": " + w + " took more than two calls");
        for (const auto& a : t.attempts)
            if (a.accepted) c.expect(a.complex_after < a.complex_before, label + ": accepted without a decrease");
    };

    // (c) clean input
    {
        auto counting = std::make_shared<testsupport::CountingProvider>([](const LlmRequest&) { return std::string("x。"); });
        LlmClient client(counting, std::nullopt, CacheMode::off);
        const SimplifyContext ctx{vocab, *seg, client, provider};
        const Definition clean{"自分より前の世代で、血のつながりがある人。"};
        const auto t = iter_sim("先祖", clean, ctx);
        c.expect(counting->calls == 0, "clean input made model calls");
        c.expect(t.final == clean, "clean input changed");
    }
    // (d) step 3: round 1 brings in 祖先, round 2 bans it.
    {
        const auto t = run(json{{"rules", json::array({rule({"Target word: 血縁", "Banned words: 祖先\n"},
                                                            "自分より前の世代で、血のつながりがある人。"),
                                                       rule({"Target word: 血縁", "Banned words: \n"}, "祖先にあたる人。")})}},
                           "自分より前の世代の血縁者。", vocab);
        check_invariants(t, "banned path");
        const bool shape = t.attempts.size() == 2 && t.attempts[0].step == SimplifyStep::first &&
                           t.attempts[1].step == SimplifyStep::ban_new_words &&
                           t.attempts[1].banned_words == std::vector<std::string>{"祖先"} && t.attempts[1].accepted &&
                           t.complex_final.empty();
        c.expect(shape, "banned-word trace shape");
    }
    // (d) step 4: target survives round 1, round 2 works on round 1's output and also fails.
    {
        const auto t = run(json{{"rules", json::array({rule({"Definition: 自分より前の世代の血縁の人。"}, "自分より昔の世代の血縁の人。"),
                                                       rule({"Definition: 自分より前の世代の血縁者。"}, "自分より前の世代の血縁の人。")})}},
                           "自分より前の世代の血縁者。", vocab);
        check_invariants(t, "retarget path");
        const bool shape = t.attempts.size() == 2 && t.attempts[1].step == SimplifyStep::retarget_output &&
                           t.attempts[1].input_definition == "自分より前の世代の血縁の人。" && !t.attempts[1].accepted &&
                           t.final.text == "自分より前の世代の血縁者。" && !t.words.empty() &&
                           t.words[0].status == WordStatus::rejected;
        c.expect(shape, "retarget trace shape");
    }
    // (a), (b) on random rewrites.
    const auto texts = testsupport::bundle_texts();
    const std::vector<std::string> all(vocab.lemmas().begin(), vocab.lemmas().end());
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> kept;
        for (const auto& w : all)
            if (rng() % 3) kept.push_back(w);
        const DefiningVocabulary v("random", kept);
        std::mt19937_64 answers(trial);
        auto provider_fn = std::make_shared<testsupport::CountingProvider>(
            [&](const LlmRequest&) { return texts[answers() % texts.size()]; });
        LlmClient client(provider_fn, std::nullopt, CacheMode::off);
        const SimplifyContext ctx{v, *seg, client, provider};
        const auto t = iter_sim("語", {texts[rng() % texts.size()]}, ctx);
        check_invariants(t, fmt::format("random trial {}", trial));
        c.expect(t.complex_final.size() <= t.complex_initial.size(), "complex count grew");
    }
    const double secs = seconds_since(start);
    c.expect(secs < kIterSimSeconds, fmt::format("took {:.2f} s", secs));
    std::cout << fmt::format("        {:.3f} s\n", secs);
}

void lexicon(Check& c) {
    auto seg = testsupport::bundle_segmenter();
    std::vector<Definition> refs;
    for (const auto& e : load_dataset(testsupport::fixture_dataset()))
        refs.insert(refs.end(), e.definitions.begin(), e.definitions.end());
    const double ratio = vocab_ratio(refs, testsupport::vocab16k(), *seg);
    c.expect(ratio == 100.0, fmt::format("reference ratio {}", ratio));

    const auto texts = testsupport::bundle_texts();
    const std::vector<std::string> all(testsupport::vocab16k().lemmas().begin(), testsupport::vocab16k().lemmas().end());
    std::mt19937_64 rng(500);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::string> outer, inner;
        for (const auto& w : all) {
            if (rng() % 5 == 0) continue;
            outer.push_back(w);
            if (rng() % 2) inner.push_back(w);
        }
        const DefiningVocabulary small("inner", inner), big("outer", outer);
        std::vector<Definition> defs;
        for (int k = 0; k < 3; ++k) defs.push_back({texts[rng() % texts.size()]});
        for (const auto& d : defs) {
            const auto in_small = find_complex_words(d, small, *seg);
            for (const auto& w : find_complex_words(d, big, *seg))
                if (std::find(in_small.begin(), in_small.end(), w) == in_small.end())
                    c.expect(false, fmt::format("trial {}: {} complex only under the larger vocabulary", trial, w));
        }
        if (vocab_ratio(defs, big, *seg) < vocab_ratio(defs, small, *seg))
            c.expect(false, fmt::format("trial {}: ratio fell with the larger vocabulary", trial));
    }
}

std::map<std::string, std::string> pipeline_outputs(const fs::path& out) {
    auto config = load_run_config(testsupport::data_dir() / "configs" / "fixture.toml");
    Overrides o;
    o.output_dir = out;
    apply_overrides(config, o);
    const auto gen = cmd_generate(config);
    std::vector<fs::path> simplified;
    for (const auto& g : gen.outputs) simplified.push_back(cmd_simplify(config, g, g.parent_path()).outputs.front());
    cmd_evaluate(config, simplified, run_dir(config) / "eval");
    std::map<std::string, std::string> files;
    for (const auto& f : fs::recursive_directory_iterator(out))
        if (f.is_regular_file() && f.path().extension() == ".jsonl")
            files[fs::relative(f.path(), out).string()] = io::read_file(f.path());
    return files;
}

void determinism(Check& c) {
    const auto a = pipeline_outputs(testsupport::temp_dir("acc-run-a"));
    const auto b = pipeline_outputs(testsupport::temp_dir("acc-run-b"));
    c.expect(a.size() >= 10, fmt::format("only {} JSONL files produced", a.size()));
    c.expect(a.size() == b.size(), "runs produced different file sets");
    for (const auto& [path, bytes] : a) {
        const auto it = b.find(path);
        c.expect(it != b.end() && it->second == bytes, path + " differs between runs");
    }
    std::cout << fmt::format("        {} JSONL files compared\n", a.size());
}

// Needs LEXFORGE_LIVE_CONFIG (a run config with remote providers and the real vocabulary)
// and the API key variable that config names.
bool live(Check& c) {
    const char* path = std::getenv("LEXFORGE_LIVE_CONFIG");
    if (!path || !*path) return false;
    auto config = load_run_config(path);
    const char* key = std::getenv(config.generator.api_key_env.c_str());
    if (!key || !*key) return false;

    const auto out = testsupport::temp_dir("live");
    auto entries = load_dataset(config.dataset_path);
    std::vector<HeadwordEntry> subset;
    std::size_t tests = 0;
    for (const auto& e : entries)
        if (e.split == Split::demo || tests++ < 10) subset.push_back(e);
    save_dataset(out / "subset.json", subset);
    config.dataset_path = out / "subset.json";
    config.output_dir = out;
    if (!config.seeds.empty()) config.seeds.resize(1);
    for (auto* p : {&config.generator, &config.simplifier, &config.judge}) {
        p->cache_mode = CacheMode::record;
        p->cache_dir = out / "cache";
    }

    const auto gen = cmd_generate(config);
    c.expect(gen.failed == 0, fmt::format("{} generation failures", gen.failed));
    const auto sim = cmd_simplify(config, gen.outputs.front(), gen.outputs.front().parent_path());
    std::vector<Definition> before, after;
    for (const auto& l : read_jsonl(sim.outputs.front())) {
        for (const auto& d : l.at("before_definitions")) before.push_back({d.get<std::string>()});
        for (const auto& d : l.at("definitions")) after.push_back({d.get<std::string>()});
    }
    auto seg = make_segmenter_factory(config.segmenter)();
    const auto vocab = load_vocabulary(config.vocab_paths.at(config.simplify_vocab), config.simplify_vocab);
    const double r0 = vocab_ratio(before, vocab, *seg), r1 = vocab_ratio(after, vocab, *seg);
    c.expect(r1 >= r0, fmt::format("ratio fell from {:.1f} to {:.1f}", r0, r1));
    const std::vector<fs::path> inputs{sim.outputs.front()};
    const auto ev = cmd_evaluate(config, inputs, out / "eval");
    for (const auto& rec : read_jsonl(out / "eval" / "eval.jsonl"))
        c.expect(rec.at("errors").empty(), "judge output without a parseable result for " + rec.at("headword").get<std::string>());
    std::cout << fmt::format("        ratio {:.1f} -> {:.1f}\n", r0, r1);
    return true;
}

}  // namespace

int main() {
    report("tau", "Kendall tau-b equals pair enumeration on 1000 vectors", tau);
    report("bleu", "BLEU identity, disjoint and hand-computed toy case", bleu);
    report("judge", "judge arithmetic and the 築く replay fixture", judge);
    report("result", "[RESULT] parsing round trip and 築く assessments", result_parsing);
    report("itersim", "IterSim call bound, strict decrease, clean input, step 3/4 traces", itersim);
    report("lexicon", "reference ratio 100 and monotonicity on 500 cases", lexicon);
    report("determinism", "two replay pipeline runs give identical JSONL", determinism);

    Check c;
    bool ran = false;
    try {
        ran = live(c);
    } catch (const std::exception& e) {
        ran = true;
        c.problems.push_back(std::string("exception: ") + e.what());
    }
    if (!ran) {
        std::cout << "SKIP  live  smoke run with real credentials (set LEXFORGE_LIVE_CONFIG and its API key)\n";
    } else {
        std::cout << (c.problems.empty() ? "PASS" : "FAIL") << "  live  smoke run with real credentials\n";
        for (const auto& p : c.problems) std::cout << "        " << p << "\n";
        failures += !c.problems.empty();
    }
    return failures;
}
