#include "designsense/judge.hpp"

#include <cmath>
#include <numeric>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"
#include "designsense/render.hpp"

namespace dsense {

void HeuristicWeights::validate() const {
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw DomainError("heuristic weights must be non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("heuristic weights must sum to 1");
}

HeuristicBreakdown heuristic_breakdown(const Layout& l, const HeuristicParams& params) {
    params.weights.validate();
    const ValidationReport report = validate_layout(l, params.snap_tolerance);
    const std::size_t n = l.elements.size();
    HeuristicBreakdown b;

    b.non_overlap = 1.0 - std::min(1.0, report.overlap_area / params.area_budget);
    b.in_bounds = 1.0 - std::min(1.0, report.overflow_area * 10.0);

    if (n < 2) {
        b.alignment = 1.0;
        b.whitespace = 1.0;
    } else {
        std::size_t aligned = 0, pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j, ++pairs)
                if (shares_alignment_line(l.elements[i].bbox, l.elements[j].bbox, params.snap_tolerance)) ++aligned;
        b.alignment = static_cast<double>(aligned) / static_cast<double>(pairs);

        std::vector<double> nearest(n, 1e300);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) nearest[i] = std::min(nearest[i], std::max(0.0, box_gap(l.elements[i].bbox, l.elements[j].bbox)));
        const double mean = std::accumulate(nearest.begin(), nearest.end(), 0.0) / n;
        double var = 0.0;
        for (double g : nearest) var += (g - mean) * (g - mean);
        const double sd = std::sqrt(var / n);
        b.whitespace = mean > 0.0 ? 1.0 - std::min(1.0, sd / mean) : 1.0;
    }

    double mass = 0.0, mx = 0.0, my = 0.0;
    for (const auto& e : l.elements) {
        const double a = e.bbox.area();
        mass += a;
        mx += a * e.bbox.cx();
        my += a * e.bbox.cy();
    }
    const double offset = std::hypot(mx / mass - 0.5, my / mass - 0.5);
    b.balance = 1.0 - std::min(1.0, offset / std::sqrt(0.5));

    const auto& w = params.weights.w;
    b.total = std::clamp(w[0] * b.non_overlap + w[1] * b.in_bounds + w[2] * b.alignment + w[3] * b.balance +
                             w[4] * b.whitespace,
                         0.0, 1.0);
    return b;
}

double heuristic_score(const Layout& l, const HeuristicParams& params) { return heuristic_breakdown(l, params).total; }

bool has_visual_defect(const Layout& l) { return !validate_layout(l).is_clean; }

Verdict judge_pair_heuristic(const PreferencePair& p, const HeuristicJudgeConfig& cfg) {
    const double sl = heuristic_score(p.left, cfg.params);
    const double sr = heuristic_score(p.right, cfg.params);
    const bool dl = has_visual_defect(p.left);
    const bool dr = has_visual_defect(p.right);

    Verdict v;
    v.left_score = sl;
    v.right_score = sr;
    if (dl != dr) {
        v.label = dl ? PreferenceLabel::right : PreferenceLabel::left;
    } else if (sl >= cfg.good_threshold && sr >= cfg.good_threshold && std::abs(sl - sr) < cfg.margin) {
        v.label = PreferenceLabel::both_good;
    } else if (sl < cfg.bad_threshold && sr < cfg.bad_threshold) {
        v.label = PreferenceLabel::both_bad;
    } else if (sl != sr) {
        v.label = sl > sr ? PreferenceLabel::left : PreferenceLabel::right;
    } else {
        v.label = sl >= cfg.good_threshold ? PreferenceLabel::both_good : PreferenceLabel::both_bad;
    }
    return v;
}

Json judge_request(const PreferencePair& p) {
    return Json{{"pair_id", p.pair_id},
                {"render_format", "image/svg+xml;base64"},
                {"left_render", base64_encode(render_svg(p.left))},
                {"right_render", base64_encode(render_svg(p.right))},
                {"left_meta", to_json(p.left)},
                {"right_meta", to_json(p.right)}};
}

Verdict RemoteJudge::judge(const PreferencePair& p) {
    const Json response = post_json(ep_, "/judge", judge_request(p));
    if (!response.is_object() || !response.contains("label") || !response["label"].is_string()) {
        throw ProtocolError("judge response lacks a string 'label'", excerpt(response.dump()));
    }
    const std::string s = response["label"].get<std::string>();
    const auto label = try_label_from_string(s);
    if (!label) throw ProtocolError("judge returned unknown label '" + s + "'", excerpt(response.dump()));
    Verdict v;
    v.label = *label;
    if (response.contains("left_score") && response["left_score"].is_number()) v.left_score = response["left_score"].get<double>();
    if (response.contains("right_score") && response["right_score"].is_number())
        v.right_score = response["right_score"].get<double>();
    return v;
}

Verdict judge_pair_remote(const PreferencePair& p, RemoteJudge& client) { return client.judge(p); }

PreferenceLabel reconcile(PreferenceLabel first, PreferenceLabel second) {
    const bool d1 = is_directional(first), d2 = is_directional(second);
    if (d1 && d2) return first == second ? first : PreferenceLabel::both_bad;
    if (!d1 && !d2) return first == second ? first : PreferenceLabel::both_good;
    return d1 ? second : first;
}

Verdict debias(const PreferencePair& p, Judge& inner) {
    const Verdict v1 = inner.judge(p);
    const Verdict v2 = inner.judge(swap_sides(p));
    Verdict out;
    out.label = reconcile(v1.label, swapped(v2.label));
    out.swapped_label = v2.label;
    out.debiased = true;
    if (v1.left_score && v2.right_score) out.left_score = 0.5 * (*v1.left_score + *v2.right_score);
    if (v1.right_score && v2.left_score) out.right_score = 0.5 * (*v1.right_score + *v2.left_score);
    return out;
}

std::string_view to_string(DiscardReason r) {
    switch (r) {
        case DiscardReason::overflow: return "overflow";
        case DiscardReason::overlap: return "overlap";
        case DiscardReason::low_score: return "low_score";
        case DiscardReason::judge_flagged: return "judge_flagged";
    }
    return "?";
}

std::vector<DiscardReason> HeuristicGate::assess(const Layout& l) {
    std::vector<DiscardReason> reasons;
    const ValidationReport r = validate_layout(l, cfg_.params.snap_tolerance);
    if (r.overflow_area > 0.0) reasons.push_back(DiscardReason::overflow);
    if (r.overlap_area > cfg_.overlap_budget) reasons.push_back(DiscardReason::overlap);
    if (heuristic_score(l, cfg_.params) < cfg_.threshold) reasons.push_back(DiscardReason::low_score);
    return reasons;
}

std::vector<DiscardReason> JudgeGate::assess(const Layout& l) {
    PreferencePair self;
    self.pair_id = l.layout_id + "~self";
    self.left = l;
    self.right = l;
    if (judge_->judge(self).label == PreferenceLabel::both_bad) return {DiscardReason::judge_flagged};
    return {};
}

FilterResult filter_low_quality(const std::vector<Layout>& pool, QualityGate& gate) {
    FilterResult out;
    for (const auto& l : pool) {
        auto reasons = gate.assess(l);
        if (reasons.empty()) {
            out.kept.push_back(l);
        } else {
            out.discarded.push_back({l, std::move(reasons)});
        }
    }
    return out;
}

}  // namespace dsense
