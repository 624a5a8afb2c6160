#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexforge/dataset.hpp"
#include "lexforge/judge.hpp"
#include "lexforge/lexicon.hpp"

namespace lexforge {

// --- Kendall's tau ---------------------------------------------------------------

enum class TauVariant { b, a };

/// O(n log n) tau. Variant b divides by sqrt((n0 - ties_x)(n0 - ties_y)), variant a by n0.
/// Throws ValidationError on a length mismatch, n < 2 or NaN; UndefinedTauError when the
/// denominator is zero.
double kendall_tau(std::span<const double> x, std::span<const double> y, TauVariant variant = TauVariant::b);

struct ScoreVector {
    std::string rater_id;
    std::vector<double> scores;  // aligned to a shared headword order
};

/// Mean tau of the machine against each human.
double machine_human_agreement(const ScoreVector& machine, std::span<const ScoreVector> humans,
                               TauVariant variant = TauVariant::b);

/// Mean tau over unordered human pairs. Needs at least two vectors.
double inter_human_agreement(std::span<const ScoreVector> humans, TauVariant variant = TauVariant::b);

// --- BLEU -------------------------------------------------------------------------

struct BleuStats {
    double score = 0.0;  // 0..100
    double brevity_penalty = 0.0;
    std::array<double, 4> precisions{};  // percentages after smoothing
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
};

/// Sentence-level 4-gram BLEU over token sequences: clipped counts, exponential smoothing
/// of zero-match orders, effective order when the hypothesis is shorter than four tokens.
BleuStats bleu_tokens(std::span<const std::string> hypothesis, std::span<const std::string> reference);

/// Sits between concatenated definitions; the segmenter never yields it as one token.
inline constexpr std::string_view kDefinitionBoundary = "</d>";

/// Concatenates each side's segmenter surfaces with the boundary token between definitions.
std::vector<std::string> definition_tokens(std::span<const Definition> definitions, Segmenter& segmenter);

/// BLEU of the hypothesis definitions against the reference definitions. Throws
/// ValidationError if either list is empty; an empty hypothesis tokenization scores 0.
double bleu_definitions(std::span<const Definition> reference, std::span<const Definition> hypothesis,
                        Segmenter& segmenter);

// --- score files ------------------------------------------------------------------

/// One rater's per-headword scores for the four criteria. A file holding only a single
/// `score` column (e.g. a BLEU baseline) uses that value for every criterion.
struct RaterScores {
    std::string rater_id;
    std::vector<std::string> headwords;
    std::map<Criterion, std::vector<double>> by_criterion;

    /// Per-headword mean of the four criteria.
    std::vector<double> overall() const;
};

RaterScores parse_rater_scores(std::string_view tsv, std::string rater_id);
RaterScores load_rater_scores(const std::filesystem::path& path, std::string rater_id);
std::string dump_rater_scores(const RaterScores& scores);

/// Machine scores from complete evaluation records, in record order.
RaterScores rater_scores_from_records(std::span<const EvaluationRecord> records, std::string rater_id);

/// Reorders every rater to the first rater's headword order. Throws ValidationError
/// listing the symmetric difference when the headword sets differ.
void align_raters(std::vector<RaterScores*> raters);

struct AgreementRow {
    std::string label;
    std::optional<double> overall;
    std::map<Criterion, double> by_criterion;
};

struct AgreementReport {
    std::vector<AgreementRow> rows;
    std::vector<std::string> notices;
};

/// Machine-human rows for each machine, and an inter-human row when there are at least two
/// humans. Raters are aligned first.
AgreementReport compute_agreement(std::vector<RaterScores> machines, std::vector<RaterScores> humans,
                                  TauVariant variant = TauVariant::b);

std::string agreement_tsv(const AgreementReport& report);
std::string agreement_markdown(const AgreementReport& report);

}  // namespace lexforge
