#pragma once

// The 4-class pairwise preference vocabulary shared by judging, metrics,
// ranking and dataset persistence.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "designsense/layout.hpp"

namespace dsense {

// Order is fixed: it is the row/column order of every confusion matrix.
enum class PreferenceLabel { left = 0, right = 1, both_good = 2, both_bad = 3 };

inline constexpr std::array<PreferenceLabel, 4> kAllLabels{
    PreferenceLabel::left, PreferenceLabel::right, PreferenceLabel::both_good, PreferenceLabel::both_bad};

std::string_view to_string(PreferenceLabel l);
// Throws DomainError naming the string when it is not one of the four labels.
PreferenceLabel label_from_string(std::string_view s);
std::optional<PreferenceLabel> try_label_from_string(std::string_view s);

inline bool is_directional(PreferenceLabel l) {
    return l == PreferenceLabel::left || l == PreferenceLabel::right;
}

// left <-> right; both_good and both_bad are fixed points.
PreferenceLabel swapped(PreferenceLabel l);

enum class PairProvenance { pipeline, perturbation, external };

std::string_view to_string(PairProvenance p);
PairProvenance pair_provenance_from_string(std::string_view s);

struct AnnotatorLabel {
    std::string annotator_id;
    PreferenceLabel label;

    friend bool operator==(const AnnotatorLabel&, const AnnotatorLabel&) = default;
};

struct PreferencePair {
    std::string pair_id;
    Layout left;
    Layout right;
    std::optional<PreferenceLabel> gold_label;
    std::vector<AnnotatorLabel> annotator_labels;
    PairProvenance provenance = PairProvenance::pipeline;
    Json extra = Json::object();  // e.g. construction mode, resolution policy

    friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// The same pair with sides exchanged; gold label is swapped accordingly.
PreferencePair swap_sides(const PreferencePair& p);

struct Verdict {
    PreferenceLabel label = PreferenceLabel::both_bad;
    std::optional<double> left_score;
    std::optional<double> right_score;
    // Raw label returned for the order-swapped presentation (right shown first).
    std::optional<PreferenceLabel> swapped_label;
    bool debiased = false;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Majority vote; ties resolve to both_bad. Throws DomainError on no labels.
PreferenceLabel resolve_majority(const std::vector<AnnotatorLabel>& labels);

}  // namespace dsense
