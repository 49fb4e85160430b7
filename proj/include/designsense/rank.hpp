#pragma once

// Pairwise tournaments over candidate layouts, best-of-N selection and the
// inference-time scaling evaluation.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "designsense/judge.hpp"
#include "designsense/metrics.hpp"

namespace dsense {

enum class TournamentMode { full, swiss };
std::string_view to_string(TournamentMode m);
TournamentMode tournament_mode_from_string(std::string_view s);

struct TournamentOptions {
    TournamentMode mode = TournamentMode::full;
    // Swiss mode pair budget; default ceil(n log2 n), capped at C(n, 2).
    std::optional<std::size_t> budget;
    bool debias = true;
    // Credit each side of a both_bad verdict; off means 0/0.
    double both_bad_credit = 0.0;
};

struct Match {
    std::string a;  // presented left
    std::string b;  // presented right
    std::optional<Verdict> verdict;  // nullopt when the judge threw
    double score_a = 0.0;
    double score_b = 0.0;
    std::string error;
};

struct Tournament {
    std::vector<std::string> candidates;  // input order
    std::vector<Match> matches;           // judging order
    std::map<std::string, double> scores;
    std::vector<std::string> ranking;  // best first
    std::vector<std::size_t> unjudged;  // indices into matches
};

// Needs >= 2 candidates sharing one element-id set (DomainError otherwise).
Tournament run_tournament(const std::vector<Layout>& cands, Judge& judge, const TournamentOptions& opt = {});

// Ranking order: Copeland score, then heuristic score, then smaller layout_id.
std::vector<std::string> rank_candidates(const std::vector<Layout>& cands, const std::map<std::string, double>& scores);

// n = 1 returns the only candidate without judging.
Layout best_of_n(const std::vector<Layout>& cands, Judge& judge, const TournamentOptions& opt = {});

Json to_json(const Tournament& t);

struct ScalingSample {
    std::string sample_id;
    std::vector<Layout> candidates;  // candidates[0] is the generator's default output
    Layout reference;
};

struct ScalingReport {
    double baseline_win_rate = 0.0;  // percent
    double scaled_win_rate = 0.0;    // percent
    double delta = 0.0;
    std::vector<std::string> scaled_choices;
    std::vector<Verdict> baseline_verdicts;
    std::vector<Verdict> scaled_verdicts;
};

// The referee sees (generated = left, reference = right).
ScalingReport scaling_eval(const std::vector<ScalingSample>& samples, Judge& selection, Judge& referee,
                           const TournamentOptions& opt = {}, bool half_win_both_good = false);

Json to_json(const ScalingReport& r);

}  // namespace dsense
