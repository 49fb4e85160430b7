#pragma once

// Brute-force execution of greedy average-linkage clustering: every step
// rescans all live cluster pairs and recomputes their mean cross similarity
// from the raw matrix.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

constexpr double kTie = 1e-12;

struct SimTable {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> v;

    double at(const std::string& a, const std::string& b) const {
        const auto ia = std::find(ids.begin(), ids.end(), a) - ids.begin();
        const auto ib = std::find(ids.begin(), ids.end(), b) - ids.begin();
        return v[ia][ib];
    }
};

inline double mean_cross(const SimTable& s, const std::vector<std::string>& a, const std::vector<std::string>& b) {
    double sum = 0.0;
    for (const auto& x : a)
        for (const auto& y : b) sum += s.at(x, y);
    return sum / static_cast<double>(a.size() * b.size());
}

// Clusters sorted internally; list ordered by smallest id.
inline std::vector<std::vector<std::string>> cluster(const SimTable& s, double tau) {
    std::vector<std::vector<std::string>> live;
    for (const auto& id : s.ids) live.push_back({id});

    auto min_id = [](const std::vector<std::string>& c) { return *std::min_element(c.begin(), c.end()); };

    while (live.size() > 1) {
        bool found = false;
        double best = 0.0;
        std::pair<std::string, std::string> best_key;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t j = i + 1; j < live.size(); ++j) {
                const double avg = mean_cross(s, live[i], live[j]);
                std::string ka = min_id(live[i]), kb = min_id(live[j]);
                if (kb < ka) std::swap(ka, kb);
                const std::pair<std::string, std::string> key{ka, kb};
                const bool better = !found || avg > best + kTie || (avg >= best - kTie && key < best_key);
                if (better) {
                    found = true;
                    best = avg;
                    best_key = key;
                    bi = i;
                    bj = j;
                }
            }
        if (best < tau - kTie) break;
        std::vector<std::string> merged = live[bi];
        merged.insert(merged.end(), live[bj].begin(), live[bj].end());
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
        live[bi] = merged;
    }
    for (auto& c : live) std::sort(c.begin(), c.end());
    std::sort(live.begin(), live.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return live;
}

// Member with the highest mean similarity to the rest; ties to the smaller id.
inline std::string representative(const SimTable& s, const std::vector<std::string>& members) {
    if (members.size() == 1) return members.front();
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& m : members) {
        double sum = 0.0;
        for (const auto& o : members)
            if (o != m) sum += s.at(m, o);
        scored.push_back({sum / static_cast<double>(members.size() - 1), m});
    }
    double top = scored.front().first;
    for (const auto& [mean, id] : scored) top = std::max(top, mean);
    std::string best;
    for (const auto& [mean, id] : scored)
        if (mean >= top - kTie && (best.empty() || id < best)) best = id;
    return best;
}

}  // namespace oracle
