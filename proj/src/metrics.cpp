#include "designsense/metrics.hpp"

#include <cstdio>

#include "designsense/error.hpp"

namespace dsense {

namespace {

constexpr int kN = 4;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (auto c : row) t += c;
    return t;
}

std::int64_t ConfusionMatrix::gold_support(PreferenceLabel c) const {
    std::int64_t t = 0;
    for (auto v : counts[static_cast<int>(c)]) t += v;
    return t;
}

std::int64_t ConfusionMatrix::predicted_count(PreferenceLabel c) const {
    std::int64_t t = 0;
    for (const auto& row : counts) t += row[static_cast<int>(c)];
    return t;
}

ConfusionMatrix confusion(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds) {
    if (preds.size() != golds.size())
        throw DomainError("prediction and gold lists differ in length (" + std::to_string(preds.size()) + " vs " +
                          std::to_string(golds.size()) + ")");
    if (preds.empty()) throw DomainError("confusion matrix needs at least one pair");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) ++cm.counts[static_cast<int>(golds[i])][static_cast<int>(preds[i])];
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto n = cm.total();
    if (n == 0) throw DomainError("empty confusion matrix");
    std::int64_t diag = 0;
    for (int i = 0; i < kN; ++i) diag += cm.counts[i][i];
    return static_cast<double>(diag) / static_cast<double>(n);
}

std::array<std::optional<double>, 4> per_class_f1(const ConfusionMatrix& cm) {
    std::array<std::optional<double>, 4> out;
    for (int c = 0; c < kN; ++c) {
        const auto label = static_cast<PreferenceLabel>(c);
        const auto tp = cm.counts[c][c];
        const auto support = cm.gold_support(label);
        const auto predicted = cm.predicted_count(label);
        if (support == 0 && predicted == 0) continue;
        const double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
        const double recall = support ? static_cast<double>(tp) / support : 0.0;
        out[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm, bool fixed_classes) {
    if (cm.total() == 0) throw DomainError("empty confusion matrix");
    const auto f1 = per_class_f1(cm);
    double sum = 0.0;
    int count = 0;
    for (const auto& v : f1) {
        if (v) {
            sum += *v;
            ++count;
        } else if (fixed_classes) {
            ++count;
        }
    }
    return sum / count;
}

double weighted_f1(const ConfusionMatrix& cm) {
    const auto n = cm.total();
    if (n == 0) throw DomainError("empty confusion matrix");
    const auto f1 = per_class_f1(cm);
    double sum = 0.0;
    for (int c = 0; c < kN; ++c)
        if (f1[c]) sum += static_cast<double>(cm.gold_support(static_cast<PreferenceLabel>(c))) * *f1[c];
    return sum / static_cast<double>(n);
}

std::optional<double> cohen_kappa(const ConfusionMatrix& cm) {
    const std::int64_t n = cm.total();
    if (n == 0) throw DomainError("empty confusion matrix");
    std::int64_t diag = 0, chance = 0;
    for (int c = 0; c < kN; ++c) {
        const auto label = static_cast<PreferenceLabel>(c);
        diag += cm.counts[c][c];
        chance += cm.gold_support(label) * cm.predicted_count(label);
    }
    // (p_o - p_e) / (1 - p_e) scaled by n^2.
    const std::int64_t den = n * n - chance;
    if (den == 0) return std::nullopt;
    return static_cast<double>(n * diag - chance) / static_cast<double>(den);
}

BinaryAccuracy binary_accuracy(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds) {
    if (preds.size() != golds.size()) throw DomainError("prediction and gold lists differ in length");
    if (preds.empty()) throw DomainError("binary accuracy needs at least one pair");
    BinaryAccuracy out;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!is_directional(preds[i]) || !is_directional(golds[i])) continue;
        ++out.subset_size;
        if (preds[i] == golds[i]) ++correct;
    }
    if (out.subset_size > 0) out.value = static_cast<double>(correct) / static_cast<double>(out.subset_size);
    return out;
}

MetricsReport evaluate(const std::vector<PreferenceLabel>& preds, const std::vector<PreferenceLabel>& golds,
                       bool fixed_classes) {
    MetricsReport r;
    r.cm = confusion(preds, golds);
    r.accuracy = accuracy(r.cm);
    const auto b = binary_accuracy(preds, golds);
    r.binary_accuracy = b.value;
    r.n_binary_subset = b.subset_size;
    r.cohen_kappa = cohen_kappa(r.cm);
    r.macro_f1 = macro_f1(r.cm, fixed_classes);
    r.weighted_f1 = weighted_f1(r.cm);
    r.n_total = r.cm.total();
    r.fixed_classes = fixed_classes;
    return r;
}

Json to_json(const MetricsReport& r) {
    Json classes = Json::array();
    for (auto l : kAllLabels) classes.push_back(std::string(to_string(l)));
    Json counts = Json::array();
    for (const auto& row : r.cm.counts) counts.push_back(Json(row));
    Json j{{"accuracy", r.accuracy},
           {"binary_accuracy", opt_json(r.binary_accuracy)},
           {"cohen_kappa", opt_json(r.cohen_kappa)},
           {"macro_f1", r.macro_f1},
           {"weighted_f1", r.weighted_f1},
           {"n_total", r.n_total},
           {"n_binary_subset", r.n_binary_subset},
           {"macro_f1_classes", r.fixed_classes ? "fixed" : "present"},
           {"confusion", Json{{"classes", classes}, {"counts", counts}, {"rows", "gold"}, {"cols", "predicted"}}}};
    Json undefined = Json::object();
    if (!r.binary_accuracy) undefined["binary_accuracy"] = "empty directional subset";
    if (!r.cohen_kappa) undefined["cohen_kappa"] = "degenerate marginals";
    if (!undefined.empty()) j["undefined"] = undefined;
    return j;
}

std::string format_table(const MetricsReport& r) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt("%.4f", *v) : std::string("undef"); };
    char line[256];
    std::string out;
    std::snprintf(line, sizeof line, "%-10s %-10s %-10s %-10s %-11s %-7s %-8s\n", "Accuracy", "Binary Acc", "Kappa",
                  "Macro F1", "Weighted F1", "N", "N binary");
    out += line;
    std::snprintf(line, sizeof line, "%-10s %-10s %-10s %-10s %-11s %-7lld %-8lld\n",
                  fmt("%.4f", r.accuracy).c_str(), cell(r.binary_accuracy).c_str(), cell(r.cohen_kappa).c_str(),
                  fmt("%.4f", r.macro_f1).c_str(), fmt("%.4f", r.weighted_f1).c_str(),
                  static_cast<long long>(r.n_total), static_cast<long long>(r.n_binary_subset));
    out += line;
    return out;
}

AgreementRates agreement_rates(const std::vector<std::vector<PreferenceLabel>>& items) {
    AgreementRates out;
    std::int64_t agree = 0, binary_agree = 0;
    for (const auto& labels : items) {
        if (labels.size() < 2) continue;
        ++out.items;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            for (std::size_t j = i + 1; j < labels.size(); ++j) {
                ++out.four_class_pairs;
                if (labels[i] == labels[j]) ++agree;
                if (is_directional(labels[i]) && is_directional(labels[j])) {
                    ++out.binary_pairs;
                    if (labels[i] == labels[j]) ++binary_agree;
                }
            }
        }
    }
    if (out.items == 0) throw DomainError("agreement needs at least one item with two or more annotations");
    out.four_class = static_cast<double>(agree) / static_cast<double>(out.four_class_pairs);
    if (out.binary_pairs > 0) out.binary = static_cast<double>(binary_agree) / static_cast<double>(out.binary_pairs);
    return out;
}

Json to_json(const AgreementRates& a) {
    return Json{{"four_class_rate", a.four_class},
                {"binary_rate", opt_json(a.binary)},
                {"four_class_pairs", a.four_class_pairs},
                {"binary_pairs", a.binary_pairs},
                {"items", a.items}};
}

double win_rate(const std::vector<Comparison>& comparisons, bool half_win_both_good) {
    if (comparisons.empty()) throw DomainError("win rate needs at least one comparison");
    double wins = 0.0;
    for (const auto& c : comparisons) {
        const auto target = c.generated == GeneratedSide::left ? PreferenceLabel::left : PreferenceLabel::right;
        if (c.verdict.label == target)
            wins += 1.0;
        else if (half_win_both_good && c.verdict.label == PreferenceLabel::both_good)
            wins += 0.5;
    }
    return 100.0 * wins / static_cast<double>(comparisons.size());
}

std::string format_percent(double pct) { return fmt("%.2f%%", pct); }

}  // namespace dsense
