#include "designsense/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <set>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

namespace {

// Averages closer than this are treated as equal for tie-breaking.
constexpr double kTieTolerance = 1e-12;

double union_area(std::vector<BBox> boxes) {
    std::vector<double> xs;
    for (const auto& b : boxes) {
        xs.push_back(b.x);
        xs.push_back(b.right());
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i], x1 = xs[i + 1];
        std::vector<std::pair<double, double>> spans;
        for (const auto& b : boxes) {
            if (b.x <= x0 && b.right() >= x1) spans.emplace_back(b.y, b.bottom());
        }
        std::sort(spans.begin(), spans.end());
        double covered = 0.0, lo = 0.0, hi = -1.0;
        for (const auto& [s, e] : spans) {
            if (s > hi) {
                if (hi > lo) covered += hi - lo;
                lo = s;
                hi = e;
            } else {
                hi = std::max(hi, e);
            }
        }
        if (hi > lo) covered += hi - lo;
        area += covered * (x1 - x0);
    }
    return area;
}

std::optional<BBox> clip(const BBox& b, double x0, double y0, double x1, double y1) {
    const double l = std::max(b.x, x0), t = std::max(b.y, y0);
    const double r = std::min(b.right(), x1), d = std::min(b.bottom(), y1);
    if (r <= l || d <= t) return std::nullopt;
    return BBox{l, t, r - l, d - t};
}

void check_pool(const std::vector<Layout>& pool) {
    if (pool.empty()) throw DomainError("cannot cluster an empty pool");
    std::set<std::string> ids;
    const auto element_ids = pool.front().element_ids();
    for (const auto& l : pool) {
        if (!ids.insert(l.layout_id).second) throw DomainError("duplicate layout id '" + l.layout_id + "' in pool");
        if (l.element_ids() != element_ids)
            throw DomainError("layout '" + l.layout_id + "' does not share the pool's element-id set");
    }
}

}  // namespace

double layout_similarity(const Layout& a, const Layout& b) {
    if (!same_element_set(a, b)) {
        throw DomainError("layouts '" + a.layout_id + "' and '" + b.layout_id + "' have different element ids");
    }
    if (a.elements.empty()) throw EmptyLayoutError("similarity of empty layouts is undefined");
    double sum = 0.0;
    for (const auto& e : a.elements) sum += iou(e.bbox, b.find(e.id)->bbox);
    return sum / static_cast<double>(a.elements.size());
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
    if (values_.size() != ids_.size() * ids_.size()) throw DomainError("similarity matrix must be n x n");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) throw DomainError("duplicate id '" + ids_[i] + "' in similarity matrix");
    }
}

std::size_t SimilarityMatrix::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DomainError("id '" + id + "' not in similarity matrix");
    return it->second;
}

SimilarityMatrix similarity_matrix(const std::vector<Layout>& pool) {
    const std::size_t n = pool.size();
    std::vector<std::string> ids;
    for (const auto& l : pool) ids.push_back(l.layout_id);
    std::vector<double> v(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            v[i * n + j] = v[j * n + i] = layout_similarity(pool[i], pool[j]);
        }
    }
    return {std::move(ids), std::move(v)};
}

ClusterSet cluster_layouts(const std::vector<Layout>& pool, double tau) {
    check_pool(pool);
    return cluster_layouts(similarity_matrix(pool), tau);
}

ClusterSet cluster_layouts(const SimilarityMatrix& sim, double tau) {
    const std::size_t n = sim.size();
    if (n == 0) throw DomainError("cannot cluster an empty pool");

    struct Cluster {
        std::vector<std::size_t> members;
        std::string min_id;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({{i}, sim.ids()[i]});
    // Summed cross similarity between live clusters, indexed like `clusters`.
    std::vector<std::vector<double>> cross(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cross[i][j] = sim.at(i, j);
    std::vector<bool> alive(n, true);

    while (true) {
        double best = -1.0;
        std::size_t bi = n, bj = n;
        std::pair<std::string, std::string> best_key;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                const double avg = cross[i][j] / static_cast<double>(clusters[i].members.size() * clusters[j].members.size());
                auto key = std::minmax(clusters[i].min_id, clusters[j].min_id);
                std::pair<std::string, std::string> k{key.first, key.second};
                if (bi == n || avg > best + kTieTolerance || (avg >= best - kTieTolerance && k < best_key)) {
                    best = avg;
                    bi = i;
                    bj = j;
                    best_key = std::move(k);
                }
            }
        }
        if (bi == n || best < tau - kTieTolerance) break;
        auto& keep = clusters[bi];
        auto& gone = clusters[bj];
        keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
        keep.min_id = std::min(keep.min_id, gone.min_id);
        alive[bj] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi) continue;
            cross[bi][k] += cross[bj][k];
            cross[k][bi] = cross[bi][k];
        }
    }

    ClusterSet out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        std::vector<std::string> ids;
        for (auto m : clusters[i].members) ids.push_back(sim.ids()[m]);
        std::sort(ids.begin(), ids.end());
        out.clusters.push_back(std::move(ids));
    }
    std::sort(out.clusters.begin(), out.clusters.end());
    out.representatives = select_representatives(out, sim);
    return out;
}

std::vector<std::string> select_representatives(const ClusterSet& cs, const SimilarityMatrix& sim) {
    std::vector<std::string> reps;
    for (const auto& cluster : cs.clusters) {
        if (cluster.empty()) throw DomainError("cluster is empty");
        if (cluster.size() == 1) {
            reps.push_back(cluster.front());
            continue;
        }
        std::vector<std::string> sorted = cluster;
        std::sort(sorted.begin(), sorted.end());
        std::string best_id;
        double best = -1.0;
        for (const auto& id : sorted) {
            double sum = 0.0;
            for (const auto& other : sorted) {
                if (other != id) sum += sim.at(id, other);
            }
            const double mean = sum / static_cast<double>(sorted.size() - 1);
            if (best_id.empty() || mean > best + kTieTolerance) {
                best = mean;
                best_id = id;
            }
        }
        reps.push_back(best_id);
    }
    return reps;
}

std::string_view to_string(DistinctSelection s) {
    return s == DistinctSelection::cluster_reps ? "cluster-reps" : "min-mutual";
}

DistinctSelection distinct_selection_from_string(std::string_view s) {
    if (s == "cluster-reps") return DistinctSelection::cluster_reps;
    if (s == "min-mutual") return DistinctSelection::min_mutual;
    throw DomainError("unknown selection mode '" + std::string(s) + "'");
}

std::vector<std::string> select_distinct(const std::vector<Layout>& pool, std::size_t k, DistinctSelection mode,
                                         double tau) {
    check_pool(pool);
    const SimilarityMatrix sim = similarity_matrix(pool);
    const std::size_t n = pool.size();
    k = std::min(k, n);
    if (mode == DistinctSelection::cluster_reps) {
        const ClusterSet cs = cluster_layouts(sim, tau);
        std::vector<std::size_t> order(cs.clusters.size());
        std::iota(order.begin(), order.end(), 0);
        // Largest clusters first; clusters are already ordered by smallest id.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cs.clusters[a].size() > cs.clusters[b].size(); });
        std::vector<std::string> out;
        for (std::size_t i = 0; i < order.size() && out.size() < k; ++i) out.push_back(cs.representatives[order[i]]);
        return out;
    }

    // Exhaustive search over k-subsets in lexicographic index order; the
    // sorted-id pool makes the first minimum the lexicographically smallest.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pool[a].layout_id < pool[b].layout_id; });
    std::vector<std::size_t> pick(k), best;
    double best_sum = 0.0;
    std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t start, std::size_t depth, double sum) {
        if (!best.empty() && sum > best_sum + kTieTolerance) return;
        if (depth == k) {
            if (best.empty() || sum < best_sum - kTieTolerance) {
                best_sum = sum;
                best = pick;
            }
            return;
        }
        for (std::size_t i = start; i + (k - depth) <= n; ++i) {
            double add = 0.0;
            for (std::size_t d = 0; d < depth; ++d) add += sim.at(order[pick[d]], order[i]);
            pick[depth] = i;
            rec(i + 1, depth + 1, sum + add);
        }
    };
    rec(0, 0, 0.0);
    std::vector<std::string> out;
    for (auto i : best) out.push_back(pool[order[i]].layout_id);
    return out;
}

FeatureVector embed_geometric(const Layout& l) {
    if (l.elements.empty()) throw EmptyLayoutError("cannot embed an empty layout");
    FeatureVector f;
    f.source = FeatureSource::geometric;
    f.dims.reserve(kGeometricEmbeddingDims);
    constexpr int kGrid = 8;
    constexpr double kCell = 1.0 / kGrid;
    for (int r = 0; r < kGrid; ++r) {
        for (int c = 0; c < kGrid; ++c) {
            const double x0 = c * kCell, y0 = r * kCell;
            std::vector<BBox> parts;
            for (const auto& e : l.elements) {
                if (auto p = clip(e.bbox, x0, y0, x0 + kCell, y0 + kCell)) parts.push_back(*p);
            }
            f.dims.push_back(std::min(1.0, union_area(std::move(parts)) / (kCell * kCell)));
        }
    }
    for (auto kind : kAllElementKinds) {
        double area = 0.0;
        for (const auto& e : l.elements) {
            if (e.kind != kind) continue;
            if (auto p = clip(e.bbox, 0.0, 0.0, 1.0, 1.0)) area += p->area();
        }
        f.dims.push_back(area);
    }
    f.dims.push_back(static_cast<double>(l.elements.size()));
    f.dims.push_back(std::log2(l.canvas.aspect()));
    return f;
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
    if (a.dims.size() != b.dims.size()) throw DomainError("feature vectors differ in dimensionality");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dims.size(); ++i) {
        dot += a.dims[i] * b.dims[i];
        na += a.dims[i] * a.dims[i];
        nb += b.dims[i] * b.dims[i];
    }
    if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<FeatureVector> GeometricEmbedder::embed(const std::vector<Layout>& layouts) {
    std::vector<FeatureVector> out;
    out.reserve(layouts.size());
    for (const auto& l : layouts) out.push_back(embed_geometric(l));
    return out;
}

std::vector<FeatureVector> RemoteEmbedder::embed(const std::vector<Layout>& layouts) {
    Json body{{"layouts", Json::array()}};
    for (const auto& l : layouts) body["layouts"].push_back(to_json(l));
    const Json response = post_json(ep_, "/embed", body);
    if (!response.is_object() || !response.contains("vectors") || !response["vectors"].is_array() ||
        response["vectors"].size() != layouts.size()) {
        throw ProtocolError("embedder must return one vector per layout", excerpt(response.dump()));
    }
    std::vector<FeatureVector> out;
    for (const auto& v : response["vectors"]) {
        FeatureVector f;
        f.source = FeatureSource::remote;
        try {
            f.dims = v.get<std::vector<double>>();
        } catch (const Json::exception&) {
            throw ProtocolError("embedder vector is not numeric", excerpt(v.dump()));
        }
        for (double d : f.dims) {
            if (!std::isfinite(d)) throw ProtocolError("embedder vector has non-finite values", excerpt(v.dump()));
        }
        if (!out.empty() && f.dims.size() != out.front().dims.size())
            throw ProtocolError("embedder vectors differ in dimensionality");
        out.push_back(std::move(f));
    }
    return out;
}

std::map<Variant, int> quotas_from_ratio(int total, const std::array<double, 3>& ratio) {
    if (total < 0) throw DomainError("total must be non-negative");
    const double sum = ratio[0] + ratio[1] + ratio[2];
    if (!(sum > 0.0) || ratio[0] < 0.0 || ratio[1] < 0.0 || ratio[2] < 0.0)
        throw DomainError("ratio must be non-negative with a positive sum");
    const std::array<Variant, 3> order{Variant::stretching_2x, Variant::inverse_ratio, Variant::original_ratio};
    std::array<int, 3> q{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = total * ratio[i] / sum;
        q[i] = static_cast<int>(std::floor(exact));
        frac[i] = exact - q[i];
        assigned += q[i];
    }
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (int r = 0; r < total - assigned; ++r) ++q[idx[r % 3]];
    std::map<Variant, int> out;
    for (int i = 0; i < 3; ++i) out[order[i]] = q[i];
    return out;
}

namespace {

// Source design recorded by the generator; absent for hand-built pools.
std::optional<std::string> design_of(const Layout& l) {
    const auto it = l.extra.find("design_id");
    if (it == l.extra.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

SamplingResult sample_diverse_pairs(const std::map<Variant, std::vector<Layout>>& pool,
                                    const std::map<Variant, int>& quotas, Embedder& embedder,
                                    const SamplingOptions& options) {
    if (options.max_reuse < 1) throw DomainError("max_reuse must be >= 1");
    SamplingResult result;
    for (const auto& [variant, quota] : quotas) {
        if (quota <= 0) continue;
        auto it = pool.find(variant);
        const std::vector<Layout> empty;
        const std::vector<Layout>& bucket = it == pool.end() ? empty : it->second;

        std::vector<FeatureVector> features = bucket.empty() ? std::vector<FeatureVector>{} : embedder.embed(bucket);
        if (features.size() != bucket.size()) throw ProtocolError("embedder returned the wrong number of vectors");

        struct Candidate {
            double sim;
            std::size_t i, j;
        };
        std::vector<Candidate> candidates;
        std::vector<std::vector<std::string>> id_sets;
        for (const auto& l : bucket) id_sets.push_back(l.element_ids());
        for (std::size_t i = 0; i < bucket.size(); ++i) {
            for (std::size_t j = i + 1; j < bucket.size(); ++j) {
                if (id_sets[i] != id_sets[j] || !(bucket[i].canvas == bucket[j].canvas)) continue;
                if (design_of(bucket[i]) != design_of(bucket[j])) continue;
                candidates.push_back({cosine_similarity(features[i], features[j]), i, j});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
            if (a.sim != b.sim) return a.sim < b.sim;
            const auto ka = std::minmax(bucket[a.i].layout_id, bucket[a.j].layout_id);
            const auto kb = std::minmax(bucket[b.i].layout_id, bucket[b.j].layout_id);
            return ka < kb;
        });

        std::vector<int> uses(bucket.size(), 0);
        int emitted = 0;
        for (const auto& c : candidates) {
            if (emitted >= quota) break;
            if (uses[c.i] >= options.max_reuse || uses[c.j] >= options.max_reuse) continue;
            ++uses[c.i];
            ++uses[c.j];
            ++emitted;
            SampledPair sp;
            sp.pair.pair_id = bucket[c.i].layout_id + "__vs__" + bucket[c.j].layout_id;
            sp.pair.left = bucket[c.i];
            sp.pair.right = bucket[c.j];
            sp.pair.provenance = PairProvenance::pipeline;
            sp.pair.extra = Json{{"similarity", c.sim}, {"variant", std::string(to_string(variant))}};
            sp.similarity = c.sim;
            sp.low_diversity = c.sim >= options.low_diversity_threshold;
            if (sp.low_diversity) sp.pair.extra["low_diversity"] = true;
            result.pairs.push_back(std::move(sp));
        }
        if (emitted < quota) result.shortfall[variant] = quota - emitted;
    }
    return result;
}

}  // namespace dsense
