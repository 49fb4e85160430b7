#include "designsense/preference.hpp"

#include <algorithm>

#include "designsense/error.hpp"

namespace dsense {

std::string_view to_string(PreferenceLabel l) {
    switch (l) {
        case PreferenceLabel::left: return "left";
        case PreferenceLabel::right: return "right";
        case PreferenceLabel::both_good: return "both_good";
        case PreferenceLabel::both_bad: return "both_bad";
    }
    return "?";
}

std::optional<PreferenceLabel> try_label_from_string(std::string_view s) {
    for (auto l : kAllLabels) {
        if (to_string(l) == s) return l;
    }
    return std::nullopt;
}

PreferenceLabel label_from_string(std::string_view s) {
    if (auto l = try_label_from_string(s)) return *l;
    throw DomainError("unknown preference label '" + std::string(s) + "'");
}

PreferenceLabel swapped(PreferenceLabel l) {
    if (l == PreferenceLabel::left) return PreferenceLabel::right;
    if (l == PreferenceLabel::right) return PreferenceLabel::left;
    return l;
}

std::string_view to_string(PairProvenance p) {
    switch (p) {
        case PairProvenance::pipeline: return "pipeline";
        case PairProvenance::perturbation: return "perturbation";
        case PairProvenance::external: return "external";
    }
    return "?";
}

PairProvenance pair_provenance_from_string(std::string_view s) {
    for (auto p : {PairProvenance::pipeline, PairProvenance::perturbation, PairProvenance::external}) {
        if (to_string(p) == s) return p;
    }
    throw DomainError("unknown pair provenance '" + std::string(s) + "'");
}

PreferencePair swap_sides(const PreferencePair& p) {
    PreferencePair s = p;
    std::swap(s.left, s.right);
    if (s.gold_label) s.gold_label = swapped(*s.gold_label);
    for (auto& a : s.annotator_labels) a.label = swapped(a.label);
    return s;
}

PreferenceLabel resolve_majority(const std::vector<AnnotatorLabel>& labels) {
    if (labels.empty()) throw DomainError("cannot resolve a gold label from zero annotations");
    std::array<int, 4> counts{};
    for (const auto& a : labels) ++counts[static_cast<int>(a.label)];
    const int best = *std::max_element(counts.begin(), counts.end());
    if (std::count(counts.begin(), counts.end(), best) > 1) return PreferenceLabel::both_bad;
    return kAllLabels[std::max_element(counts.begin(), counts.end()) - counts.begin()];
}

}  // namespace dsense
