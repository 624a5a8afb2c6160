#include "lexforge/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lexforge/error.hpp"
#include "lexforge/io.hpp"
#include "lexforge/unicode.hpp"

namespace lexforge {

namespace {

using i64 = std::int64_t;

i64 pairs(i64 t) { return t * (t - 1) / 2; }

/// Sorts v in place, returning the number of strict inversions.
i64 sort_count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    i64 inv = sort_count_inversions(v, buf, lo, mid) + sort_count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<i64>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

/// Sum of t(t-1)/2 over runs of equal adjacent values.
template <typename Eq>
i64 tied_pairs(std::size_t n, Eq eq) {
    i64 total = 0, run = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (eq(i - 1, i)) {
            ++run;
        } else {
            total += pairs(run);
            run = 1;
        }
    }
    return total + pairs(run);
}

std::optional<double> parse_number(std::string_view s) {
    s = unicode::trim(s);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string fmt_tau(double v) { return fmt::format("{:.3f}", v); }

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y, TauVariant variant) {
    if (x.size() != y.size())
        throw ValidationError(fmt::format("kendall_tau: length mismatch ({} vs {})", x.size(), y.size()));
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("kendall_tau: needs at least two observations");
    for (std::size_t i = 0; i < n; ++i)
        if (std::isnan(x[i]) || std::isnan(y[i])) throw ValidationError("kendall_tau: NaN in input");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    const i64 n0 = pairs(static_cast<i64>(n));
    const i64 tx = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
    const i64 txy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
        return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
    });
    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    const i64 swaps = sort_count_inversions(ys, buf, 0, n);
    const i64 ty = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

    const i64 numerator = n0 - tx - ty + txy - 2 * swaps;
    if (variant == TauVariant::a) return static_cast<double>(numerator) / static_cast<double>(n0);
    const i64 dx = n0 - tx, dy = n0 - ty;
    if (dx == 0 || dy == 0) throw UndefinedTauError("kendall_tau: a score vector is constant");
    return static_cast<double>(numerator) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

double machine_human_agreement(const ScoreVector& machine, std::span<const ScoreVector> humans, TauVariant variant) {
    if (humans.empty()) throw ValidationError("machine_human_agreement: no human score vectors");
    double sum = 0.0;
    for (const auto& h : humans) {
        try {
            sum += kendall_tau(machine.scores, h.scores, variant);
        } catch (const UndefinedTauError& e) {
            throw UndefinedTauError(machine.rater_id + " vs " + h.rater_id + ": " + e.what());
        }
    }
    return sum / static_cast<double>(humans.size());
}

double inter_human_agreement(std::span<const ScoreVector> humans, TauVariant variant) {
    if (humans.size() < 2) throw ValidationError("inter_human_agreement: needs at least two human score vectors");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < humans.size(); ++i) {
        for (std::size_t j = i + 1; j < humans.size(); ++j) {
            try {
                sum += kendall_tau(humans[i].scores, humans[j].scores, variant);
            } catch (const UndefinedTauError& e) {
                throw UndefinedTauError(humans[i].rater_id + " vs " + humans[j].rater_id + ": " + e.what());
            }
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

// --- BLEU -------------------------------------------------------------------------

BleuStats bleu_tokens(std::span<const std::string> hyp, std::span<const std::string> ref) {
    constexpr std::size_t kOrder = 4;
    BleuStats s;
    s.hyp_len = hyp.size();
    s.ref_len = ref.size();
    if (hyp.empty()) return s;

    for (std::size_t n = 1; n <= kOrder; ++n) {
        std::map<std::vector<std::string_view>, std::size_t> ref_counts, hyp_counts;
        for (std::size_t i = 0; i + n <= ref.size(); ++i)
            ++ref_counts[std::vector<std::string_view>(ref.begin() + static_cast<std::ptrdiff_t>(i),
                                                       ref.begin() + static_cast<std::ptrdiff_t>(i + n))];
        for (std::size_t i = 0; i + n <= hyp.size(); ++i)
            ++hyp_counts[std::vector<std::string_view>(hyp.begin() + static_cast<std::ptrdiff_t>(i),
                                                       hyp.begin() + static_cast<std::ptrdiff_t>(i + n))];
        std::size_t match = 0;
        for (const auto& [gram, c] : hyp_counts) {
            const auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) match += std::min(c, it->second);
        }
        s.matches[n - 1] = match;
        s.totals[n - 1] = hyp.size() >= n ? hyp.size() - n + 1 : 0;
    }

    // Orders the hypothesis is too short for are left out of the geometric mean.
    std::size_t effective_order = 0;
    double smooth = 1.0;
    for (std::size_t n = 1; n <= kOrder; ++n) {
        if (s.totals[n - 1] == 0) break;
        effective_order = n;
        if (s.matches[n - 1] == 0) {
            smooth *= 2.0;
            s.precisions[n - 1] = 100.0 / (smooth * static_cast<double>(s.totals[n - 1]));
        } else {
            s.precisions[n - 1] =
                100.0 * static_cast<double>(s.matches[n - 1]) / static_cast<double>(s.totals[n - 1]);
        }
    }
    s.brevity_penalty = s.hyp_len >= s.ref_len
                            ? 1.0
                            : std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
    if (s.matches[0] == 0) return s;

    double log_sum = 0.0;
    for (std::size_t n = 0; n < effective_order; ++n) log_sum += std::log(s.precisions[n] / 100.0);
    s.score = 100.0 * s.brevity_penalty * std::exp(log_sum / static_cast<double>(effective_order));
    return s;
}

std::vector<std::string> definition_tokens(std::span<const Definition> definitions, Segmenter& segmenter) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < definitions.size(); ++i) {
        if (i) out.emplace_back(kDefinitionBoundary);
        for (auto& t : segmenter.segment(definitions[i].text)) out.push_back(std::move(t.surface));
    }
    return out;
}

double bleu_definitions(std::span<const Definition> reference, std::span<const Definition> hypothesis,
                        Segmenter& segmenter) {
    if (reference.empty() || hypothesis.empty()) throw ValidationError("bleu_definitions: empty definition list");
    const auto ref = definition_tokens(reference, segmenter);
    const auto hyp = definition_tokens(hypothesis, segmenter);
    const bool hyp_empty = std::all_of(hyp.begin(), hyp.end(), [](const std::string& t) { return t == kDefinitionBoundary; });
    if (hyp_empty) {
        spdlog::warn("bleu_definitions: hypothesis has no tokens; scoring 0");
        return 0.0;
    }
    return bleu_tokens(hyp, ref).score;
}

// --- score files ------------------------------------------------------------------

std::vector<double> RaterScores::overall() const {
    std::vector<double> out(headwords.size(), 0.0);
    for (auto c : kAllCriteria) {
        const auto& v = by_criterion.at(c);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    for (auto& v : out) v /= 4.0;
    return out;
}

RaterScores parse_rater_scores(std::string_view tsv, std::string rater_id) {
    RaterScores r;
    r.rater_id = std::move(rater_id);
    if (tsv.starts_with("\xEF\xBB\xBF")) tsv.remove_prefix(3);
    std::vector<std::optional<Criterion>> columns;
    std::optional<std::size_t> score_column;
    bool header_seen = false;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!tsv.empty()) {
        const auto nl = tsv.find('\n');
        auto line = tsv.substr(0, nl);
        tsv = nl == std::string_view::npos ? std::string_view{} : tsv.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (unicode::trim(line).empty()) continue;
        const auto cells = split_tabs(line);
        if (!header_seen) {
            header_seen = true;
            if (cells.empty() || unicode::trim(cells[0]) != "headword")
                throw ParseError(r.rater_id + ": header must start with 'headword'", line_no, 1);
            for (std::size_t i = 1; i < cells.size(); ++i) {
                const auto name = unicode::trim(cells[i]);
                if (name == "score") {
                    score_column = i - 1;
                    columns.emplace_back(std::nullopt);
                } else if (name == "overall") {
                    columns.emplace_back(std::nullopt);
                } else {
                    columns.emplace_back(parse_criterion(name));
                }
            }
            std::set<Criterion> have;
            for (const auto& c : columns)
                if (c) have.insert(*c);
            if (!score_column && have.size() != kAllCriteria.size())
                throw ParseError(r.rater_id + ": header needs all four criteria or a 'score' column", line_no, 1);
            for (auto c : kAllCriteria) r.by_criterion[c];
            continue;
        }
        if (cells.size() != columns.size() + 1)
            throw ParseError(r.rater_id + ": expected " + std::to_string(columns.size() + 1) + " cells", line_no, 1);
        const std::string headword = unicode::nfc(unicode::trim(cells[0]));
        if (!seen.insert(headword).second) throw ParseError(r.rater_id + ": duplicate headword " + headword, line_no, 1);
        r.headwords.push_back(headword);
        std::optional<double> score_col;
        std::map<Criterion, double> row;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto v = parse_number(cells[i + 1]);
            if (!v) throw ParseError(r.rater_id + ": not a number: " + std::string(cells[i + 1]), line_no, i + 2);
            if (columns[i]) row[*columns[i]] = *v;
            else if (score_column == i) score_col = *v;
        }
        for (auto c : kAllCriteria) {
            const auto it = row.find(c);
            r.by_criterion[c].push_back(it != row.end() ? it->second : *score_col);
        }
    }
    if (!header_seen) throw ParseError(r.rater_id + ": empty score file");
    return r;
}

RaterScores load_rater_scores(const std::filesystem::path& path, std::string rater_id) {
    return parse_rater_scores(io::read_file(path), std::move(rater_id));
}

std::string dump_rater_scores(const RaterScores& scores) {
    std::string out = "headword";
    for (auto c : kAllCriteria) out += "\t" + std::string(to_string(c));
    out += "\n";
    for (std::size_t i = 0; i < scores.headwords.size(); ++i) {
        out += scores.headwords[i];
        for (auto c : kAllCriteria) out += "\t" + fmt::format("{}", scores.by_criterion.at(c)[i]);
        out += "\n";
    }
    return out;
}

RaterScores rater_scores_from_records(std::span<const EvaluationRecord> records, std::string rater_id) {
    RaterScores r;
    r.rater_id = std::move(rater_id);
    for (auto c : kAllCriteria) r.by_criterion[c];
    for (const auto& rec : records) {
        if (!rec.complete() || !rec.overall) continue;
        r.headwords.push_back(rec.key.headword);
        for (auto c : kAllCriteria) r.by_criterion[c].push_back(rec.results.at(c).score);
    }
    return r;
}

void align_raters(std::vector<RaterScores*> raters) {
    if (raters.empty()) return;
    const auto& base = raters.front()->headwords;
    const std::set<std::string> base_set(base.begin(), base.end());
    for (auto* r : raters) {
        const std::set<std::string> other(r->headwords.begin(), r->headwords.end());
        if (other != base_set) {
            std::vector<std::string> diff;
            std::set_symmetric_difference(base_set.begin(), base_set.end(), other.begin(), other.end(),
                                          std::back_inserter(diff));
            std::string list;
            for (const auto& d : diff) list += (list.empty() ? "" : ", ") + d;
            throw ValidationError("headwords of " + raters.front()->rater_id + " and " + r->rater_id +
                                  " differ: " + list);
        }
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < r->headwords.size(); ++i) pos[r->headwords[i]] = i;
        for (auto& [c, v] : r->by_criterion) {
            std::vector<double> reordered;
            reordered.reserve(base.size());
            for (const auto& h : base) reordered.push_back(v[pos.at(h)]);
            v = std::move(reordered);
        }
        r->headwords = base;
    }
}

AgreementReport compute_agreement(std::vector<RaterScores> machines, std::vector<RaterScores> humans,
                                  TauVariant variant) {
    if (humans.empty()) throw ValidationError("agreement needs at least one human score file");
    std::vector<RaterScores*> all;
    for (auto& h : humans) all.push_back(&h);
    for (auto& m : machines) all.push_back(&m);
    align_raters(all);

    auto vectors = [](const std::vector<RaterScores>& rs, std::optional<Criterion> c) {
        std::vector<ScoreVector> out;
        for (const auto& r : rs) out.push_back({r.rater_id, c ? r.by_criterion.at(*c) : r.overall()});
        return out;
    };

    AgreementReport report;
    for (const auto& m : machines) {
        AgreementRow row;
        row.label = m.rater_id + "–human";
        const std::vector<RaterScores> one{m};
        row.overall = machine_human_agreement(vectors(one, std::nullopt)[0], vectors(humans, std::nullopt), variant);
        for (auto c : kAllCriteria)
            row.by_criterion[c] = machine_human_agreement(vectors(one, c)[0], vectors(humans, c), variant);
        report.rows.push_back(std::move(row));
    }
    if (humans.size() >= 2) {
        AgreementRow row;
        row.label = "Inter-human";
        row.overall = inter_human_agreement(vectors(humans, std::nullopt), variant);
        for (auto c : kAllCriteria) row.by_criterion[c] = inter_human_agreement(vectors(humans, c), variant);
        report.rows.push_back(std::move(row));
    } else {
        report.notices.push_back("only one human score file; inter-human agreement omitted");
    }
    return report;
}

std::string agreement_tsv(const AgreementReport& report) {
    std::string out = "\tOverall";
    for (auto c : kAllCriteria) out += "\t" + std::string(display_name(c));
    out += "\n";
    for (const auto& row : report.rows) {
        out += row.label + "\t" + (row.overall ? fmt_tau(*row.overall) : "");
        for (auto c : kAllCriteria) {
            const auto it = row.by_criterion.find(c);
            out += "\t" + (it != row.by_criterion.end() ? fmt_tau(it->second) : std::string());
        }
        out += "\n";
    }
    return out;
}

std::string agreement_markdown(const AgreementReport& report) {
    std::string out = "| | Overall";
    for (auto c : kAllCriteria) out += " | " + std::string(display_name(c));
    out += " |\n|---|---";
    for (std::size_t i = 0; i < kAllCriteria.size(); ++i) out += "|---";
    out += "|\n";
    for (const auto& row : report.rows) {
        out += "| " + row.label + " | " + (row.overall ? fmt_tau(*row.overall) : "—");
        for (auto c : kAllCriteria) {
            const auto it = row.by_criterion.find(c);
            out += " | " + (it != row.by_criterion.end() ? fmt_tau(it->second) : std::string("—"));
        }
        out += " |\n";
    }
    for (const auto& n : report.notices) out += "\n_" + n + "_\n";
    return out;
}

}  // namespace lexforge
