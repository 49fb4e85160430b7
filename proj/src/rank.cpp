#include "designsense/rank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

std::string_view to_string(TournamentMode m) { return m == TournamentMode::full ? "full" : "swiss"; }

TournamentMode tournament_mode_from_string(std::string_view s) {
    if (s == "full") return TournamentMode::full;
    if (s == "swiss") return TournamentMode::swiss;
    throw DomainError("unknown tournament mode '" + std::string(s) + "'");
}

namespace {

void check_candidates(const std::vector<Layout>& cands) {
    std::set<std::string> ids;
    for (const auto& c : cands) {
        if (!same_element_set(c, cands.front()))
            throw DomainError("candidate " + c.layout_id + " does not share the element set of " +
                              cands.front().layout_id);
        if (!ids.insert(c.layout_id).second) throw DomainError("duplicate candidate id " + c.layout_id);
    }
}

Match play(const Layout& a, const Layout& b, Judge& judge, const TournamentOptions& opt) {
    Match m;
    m.a = a.layout_id;
    m.b = b.layout_id;
    PreferencePair p;
    p.pair_id = a.layout_id + "__vs__" + b.layout_id;
    p.left = a;
    p.right = b;
    try {
        m.verdict = opt.debias ? debias(p, judge) : judge.judge(p);
    } catch (const std::exception& e) {
        m.error = e.what();
        return m;
    }
    switch (m.verdict->label) {
        case PreferenceLabel::left: m.score_a = 1.0; break;
        case PreferenceLabel::right: m.score_b = 1.0; break;
        case PreferenceLabel::both_good: m.score_a = m.score_b = 0.5; break;
        case PreferenceLabel::both_bad: m.score_a = m.score_b = opt.both_bad_credit; break;
    }
    return m;
}

}  // namespace

std::vector<std::string> rank_candidates(const std::vector<Layout>& cands, const std::map<std::string, double>& scores) {
    struct Key {
        double score;
        double heuristic;
        std::string id;
    };
    std::vector<Key> keys;
    for (const auto& c : cands) {
        const auto it = scores.find(c.layout_id);
        keys.push_back({it == scores.end() ? 0.0 : it->second, heuristic_score(c), c.layout_id});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.heuristic != y.heuristic) return x.heuristic > y.heuristic;
        return x.id < y.id;
    });
    std::vector<std::string> out;
    for (auto& k : keys) out.push_back(std::move(k.id));
    return out;
}

Tournament run_tournament(const std::vector<Layout>& cands, Judge& judge, const TournamentOptions& opt) {
    if (cands.size() < 2) throw DomainError("a tournament needs at least two candidates");
    check_candidates(cands);
    const std::size_t n = cands.size();
    Tournament t;
    for (const auto& c : cands) {
        t.candidates.push_back(c.layout_id);
        t.scores[c.layout_id] = 0.0;
    }
    auto record = [&](std::size_t i, std::size_t j) {
        Match m = play(cands[i], cands[j], judge, opt);
        t.scores[m.a] += m.score_a;
        t.scores[m.b] += m.score_b;
        if (!m.verdict) t.unjudged.push_back(t.matches.size());
        t.matches.push_back(std::move(m));
    };

    if (opt.mode == TournamentMode::full) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) record(i, j);
    } else {
        const std::size_t all = n * (n - 1) / 2;
        const auto def = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * std::log2(static_cast<double>(n))));
        const std::size_t budget = std::min(all, opt.budget.value_or(def));
        std::set<std::pair<std::size_t, std::size_t>> played;
        auto key = [](std::size_t i, std::size_t j) { return std::make_pair(std::min(i, j), std::max(i, j)); };
        while (t.matches.size() < budget) {
            // Order by current score, ties by input position, and pair neighbours not yet met.
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                return t.scores[cands[x].layout_id] > t.scores[cands[y].layout_id];
            });
            std::vector<bool> used(n, false);
            std::size_t before = t.matches.size();
            for (std::size_t a = 0; a < n && t.matches.size() < budget; ++a) {
                if (used[order[a]]) continue;
                for (std::size_t b = a + 1; b < n; ++b) {
                    const std::size_t i = order[a], j = order[b];
                    if (used[j] || played.count(key(i, j))) continue;
                    used[i] = used[j] = true;
                    played.insert(key(i, j));
                    record(std::min(i, j), std::max(i, j));
                    break;
                }
            }
            if (t.matches.size() == before) {
                // No neighbour pairing left in this round: take the first unplayed pair.
                bool found = false;
                for (std::size_t i = 0; i < n && !found; ++i)
                    for (std::size_t j = i + 1; j < n && !found; ++j)
                        if (!played.count({i, j})) {
                            played.insert({i, j});
                            record(i, j);
                            found = true;
                        }
                if (!found) break;
            }
        }
    }
    t.ranking = rank_candidates(cands, t.scores);
    return t;
}

Layout best_of_n(const std::vector<Layout>& cands, Judge& judge, const TournamentOptions& opt) {
    if (cands.empty()) throw DomainError("best_of_n needs at least one candidate");
    if (cands.size() == 1) return cands.front();
    const Tournament t = run_tournament(cands, judge, opt);
    for (const auto& c : cands)
        if (c.layout_id == t.ranking.front()) return c;
    throw Error("tournament winner missing from candidates");
}

Json to_json(const Tournament& t) {
    Json matches = Json::array();
    for (const auto& m : t.matches) {
        Json j{{"a", m.a}, {"b", m.b}, {"score_a", m.score_a}, {"score_b", m.score_b}};
        j["verdict"] = m.verdict ? to_json(*m.verdict) : Json(nullptr);
        if (!m.verdict) j["error"] = m.error;
        matches.push_back(std::move(j));
    }
    Json scores = Json::object();
    for (const auto& [id, s] : t.scores) scores[id] = s;
    return Json{{"candidates", t.candidates}, {"matches", matches}, {"scores", scores},
                {"ranking", t.ranking},       {"unjudged", t.unjudged}};
}

ScalingReport scaling_eval(const std::vector<ScalingSample>& samples, Judge& selection, Judge& referee,
                           const TournamentOptions& opt, bool half_win_both_good) {
    if (samples.empty()) throw DomainError("scaling evaluation needs at least one sample");
    ScalingReport r;
    std::vector<Comparison> base, scaled;
    auto referee_verdict = [&](const Layout& generated, const Layout& reference, const std::string& tag) {
        PreferencePair p;
        p.pair_id = tag;
        p.left = generated;
        p.right = reference;
        return referee.judge(p);
    };
    for (const auto& s : samples) {
        if (s.candidates.empty()) throw DomainError("sample " + s.sample_id + " has no candidates");
        const Layout& first = s.candidates.front();
        const Layout chosen = best_of_n(s.candidates, selection, opt);
        r.scaled_choices.push_back(chosen.layout_id);
        r.baseline_verdicts.push_back(referee_verdict(first, s.reference, s.sample_id));
        r.scaled_verdicts.push_back(referee_verdict(chosen, s.reference, s.sample_id));
        base.push_back({r.baseline_verdicts.back(), GeneratedSide::left});
        scaled.push_back({r.scaled_verdicts.back(), GeneratedSide::left});
    }
    r.baseline_win_rate = win_rate(base, half_win_both_good);
    r.scaled_win_rate = win_rate(scaled, half_win_both_good);
    r.delta = r.scaled_win_rate - r.baseline_win_rate;
    return r;
}

Json to_json(const ScalingReport& r) {
    return Json{{"baseline_win_rate", r.baseline_win_rate},
                {"scaled_win_rate", r.scaled_win_rate},
                {"delta", r.delta},
                {"baseline", format_percent(r.baseline_win_rate)},
                {"scaled", format_percent(r.scaled_win_rate)},
                {"scaled_choices", r.scaled_choices}};
}

}  // namespace dsense
