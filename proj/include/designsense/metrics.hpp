#pragma once

// Evaluation metrics for 4-class preference predictions, inter-annotator
// agreement and generator win rates.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "designsense/json_io.hpp"
#include "designsense/preference.hpp"

namespace dsense {

// Rows are gold labels, columns predictions, both in kAllLabels order.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 4>, 4> counts{};

    std::int64_t total() const;
    std::int64_t gold_support(PreferenceLabel c) const;
    std::int64_t predicted_count(PreferenceLabel c) const;
    std::int64_t at(PreferenceLabel gold, PreferenceLabel pred) const {
        return counts[static_cast<int>(gold)][static_cast<int>(pred)];
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws DomainError on a length mismatch or empty input.
ConfusionMatrix confusion(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds);

double accuracy(const ConfusionMatrix& cm);

// Per-class F1; 0/0 precision or recall counts as 0. Absent classes (no gold
// and no prediction) are nullopt.
std::array<std::optional<double>, 4> per_class_f1(const ConfusionMatrix& cm);

// Averages over classes present in gold or predictions, or over all four.
double macro_f1(const ConfusionMatrix& cm, bool fixed_classes = false);
double weighted_f1(const ConfusionMatrix& cm);

// nullopt when expected agreement is 1 (degenerate marginals). Computed in
// integer arithmetic so hand fixtures come out exact.
std::optional<double> cohen_kappa(const ConfusionMatrix& cm);

struct BinaryAccuracy {
    std::optional<double> value;  // nullopt when the directional subset is empty
    std::int64_t subset_size = 0;
};

// Restricted to indices where both gold and prediction are left or right.
BinaryAccuracy binary_accuracy(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds);

struct MetricsReport {
    ConfusionMatrix cm;
    double accuracy = 0.0;
    std::optional<double> binary_accuracy;
    std::optional<double> cohen_kappa;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::int64_t n_total = 0;
    std::int64_t n_binary_subset = 0;
    bool fixed_classes = false;
};

MetricsReport evaluate(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds,
                       bool fixed_classes = false);

// Undefined values are serialized as null with a reason alongside.
Json to_json(const MetricsReport& r);
std::string format_table(const MetricsReport& r);

struct AgreementRates {
    double four_class = 0.0;
    std::optional<double> binary;  // nullopt when no annotator pair is directional on both sides
    std::int64_t four_class_pairs = 0;
    std::int64_t binary_pairs = 0;
    std::int64_t items = 0;
};

// One inner vector per item, holding every annotator's label. Items with a
// single label are ignored; throws DomainError when none has two or more.
AgreementRates agreement_rates(const std::vector<std::vector<PreferenceLabel>>& items);

Json to_json(const AgreementRates& a);

enum class GeneratedSide { left, right };

struct Comparison {
    Verdict verdict;
    GeneratedSide generated = GeneratedSide::left;
};

// Percentage in [0, 100]. both_good and both_bad are non-wins unless
// half_win_both_good gives both_good half a win. Throws DomainError on empty input.
double win_rate(const std::vector<Comparison>& comparisons, bool half_win_both_good = false);

// Two decimals followed by '%', e.g. "14.27%".
std::string format_percent(double pct);

}  // namespace dsense
