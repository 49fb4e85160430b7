#pragma once

// 4-class pairwise judging: a geometric heuristic judge, a client for remote
// VLM judges, a position-debiasing wrapper, and the low-quality filter gate.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"
#include "designsense/remote.hpp"

namespace dsense {

// Order: non_overlap, in_bounds, alignment, balance, whitespace.
struct HeuristicWeights {
    std::array<double, 5> w{0.35, 0.25, 0.2, 0.1, 0.1};

    // Throws DomainError unless every weight is >= 0 and they sum to 1.
    void validate() const;
};

struct HeuristicParams {
    HeuristicWeights weights;
    double area_budget = 0.05;  // overlap area at which the non-overlap score hits 0
    double snap_tolerance = kDefaultSnapTolerance;
};

struct HeuristicBreakdown {
    double non_overlap = 0.0;
    double in_bounds = 0.0;
    double alignment = 0.0;
    double balance = 0.0;
    double whitespace = 0.0;
    double total = 0.0;
};

HeuristicBreakdown heuristic_breakdown(const Layout& l, const HeuristicParams& params = {});
double heuristic_score(const Layout& l, const HeuristicParams& params = {});

// Any overlap above kOverlapEpsilon or any overflow.
bool has_visual_defect(const Layout& l);

class Judge {
public:
    virtual ~Judge() = default;
    virtual Verdict judge(const PreferencePair& p) = 0;
};

struct HeuristicJudgeConfig {
    HeuristicParams params;
    double good_threshold = 0.75;
    double bad_threshold = 0.4;
    double margin = 0.05;
};

// Decision order: a defect-free side beats a defective one; both >= good and
// within margin -> both_good; both < bad -> both_bad; otherwise the higher
// score wins; an exact tie is both_good above the good threshold, else both_bad.
Verdict judge_pair_heuristic(const PreferencePair& p, const HeuristicJudgeConfig& cfg = {});

class HeuristicJudge final : public Judge {
public:
    explicit HeuristicJudge(HeuristicJudgeConfig cfg = {}) : cfg_(cfg) {}
    Verdict judge(const PreferencePair& p) override { return judge_pair_heuristic(p, cfg_); }

private:
    HeuristicJudgeConfig cfg_;
};

// Wraps a callable; used for oracles and stubs.
class FunctionJudge final : public Judge {
public:
    explicit FunctionJudge(std::function<Verdict(const PreferencePair&)> fn) : fn_(std::move(fn)) {}
    Verdict judge(const PreferencePair& p) override { return fn_(p); }

private:
    std::function<Verdict(const PreferencePair&)> fn_;
};

// Request body for POST /judge: pair_id, base64 SVG renders, layout metadata.
Json judge_request(const PreferencePair& p);

// POST /judge; the response label must be one of the four class names.
class RemoteJudge final : public Judge {
public:
    explicit RemoteJudge(Endpoint ep) : ep_(std::move(ep)) {}
    Verdict judge(const PreferencePair& p) override;

private:
    Endpoint ep_;
};

Verdict judge_pair_remote(const PreferencePair& p, RemoteJudge& client);

// Combines the verdict for (left, right) with the verdict for (right, left)
// mapped back to the original frame.
PreferenceLabel reconcile(PreferenceLabel first, PreferenceLabel second_unswapped);

// Judges both presentation orders and reconciles them; the result is
// invariant under swapping the pair's sides.
Verdict debias(const PreferencePair& p, Judge& inner);

class DebiasedJudge final : public Judge {
public:
    explicit DebiasedJudge(std::shared_ptr<Judge> inner) : inner_(std::move(inner)) {}
    Verdict judge(const PreferencePair& p) override { return debias(p, *inner_); }

private:
    std::shared_ptr<Judge> inner_;
};

// --- quality filter ------------------------------------------------------------

enum class DiscardReason { overflow, overlap, low_score, judge_flagged };
std::string_view to_string(DiscardReason r);

struct Discarded {
    Layout layout;
    std::vector<DiscardReason> reasons;
};

struct FilterResult {
    std::vector<Layout> kept;
    std::vector<Discarded> discarded;
};

class QualityGate {
public:
    virtual ~QualityGate() = default;
    // Empty result means keep.
    virtual std::vector<DiscardReason> assess(const Layout& l) = 0;
};

struct HeuristicGateConfig {
    HeuristicParams params;
    double overlap_budget = 0.01;
    double threshold = 0.4;
};

class HeuristicGate final : public QualityGate {
public:
    explicit HeuristicGate(HeuristicGateConfig cfg = {}) : cfg_(cfg) {}
    std::vector<DiscardReason> assess(const Layout& l) override;

private:
    HeuristicGateConfig cfg_;
};

// Presents the layout against itself; a both_bad verdict flags it.
class JudgeGate final : public QualityGate {
public:
    explicit JudgeGate(std::shared_ptr<Judge> judge) : judge_(std::move(judge)) {}
    std::vector<DiscardReason> assess(const Layout& l) override;

private:
    std::shared_ptr<Judge> judge_;
};

FilterResult filter_low_quality(const std::vector<Layout>& pool, QualityGate& gate);

}  // namespace dsense
