#pragma once

// IoU-based clustering of candidate layouts with representative selection,
// and diversity sampling of preference pairs over feature embeddings.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"
#include "designsense/remote.hpp"

namespace dsense {

// Mean IoU over corresponding (same-id) elements. Throws DomainError when the
// two layouts do not carry the same element ids.
double layout_similarity(const Layout& a, const Layout& b);

class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::vector<std::string> ids, std::vector<double> values);

    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * ids_.size() + j]; }
    double at(const std::string& a, const std::string& b) const { return at(index_of(a), index_of(b)); }
    std::size_t index_of(const std::string& id) const;

private:
    std::vector<std::string> ids_;
    std::vector<double> values_;
    std::map<std::string, std::size_t> index_;
};

SimilarityMatrix similarity_matrix(const std::vector<Layout>& pool);

struct ClusterSet {
    // Each cluster sorted by id; clusters ordered by their smallest id.
    std::vector<std::vector<std::string>> clusters;
    std::vector<std::string> representatives;  // parallel to clusters, when selected
};

// Greedy average-linkage agglomeration: starting from singletons, merge the
// cluster pair with the highest mean cross similarity while it is >= tau.
// Equal candidates resolve to the pair whose smallest ids sort first.
ClusterSet cluster_layouts(const std::vector<Layout>& pool, double tau = 0.6);
ClusterSet cluster_layouts(const SimilarityMatrix& sim, double tau = 0.6);

// Per cluster, the member with the highest mean similarity to the other
// members; singletons return their member; ties go to the smaller id.
std::vector<std::string> select_representatives(const ClusterSet& cs, const SimilarityMatrix& sim);

enum class DistinctSelection { cluster_reps, min_mutual };

std::string_view to_string(DistinctSelection s);
DistinctSelection distinct_selection_from_string(std::string_view s);

// Picks up to k mutually distinct layouts: representatives of the k largest
// clusters, or the k-subset with the lowest summed pairwise similarity.
std::vector<std::string> select_distinct(const std::vector<Layout>& pool, std::size_t k, DistinctSelection mode,
                                         double tau = 0.6);

enum class FeatureSource { geometric, remote };

struct FeatureVector {
    std::vector<double> dims;
    FeatureSource source = FeatureSource::geometric;
};

// 64 occupancy cells (8x8, row-major, union coverage per cell), 4 per-kind
// area totals (text, image, shape, other), element count, log2 canvas aspect.
inline constexpr std::size_t kGeometricEmbeddingDims = 70;
FeatureVector embed_geometric(const Layout& l);

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<FeatureVector> embed(const std::vector<Layout>& layouts) = 0;
};

class GeometricEmbedder final : public Embedder {
public:
    std::vector<FeatureVector> embed(const std::vector<Layout>& layouts) override;
};

// POST /embed {layouts} -> {vectors}; every vector must share one dimensionality.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(Endpoint ep) : ep_(std::move(ep)) {}
    std::vector<FeatureVector> embed(const std::vector<Layout>& layouts) override;

private:
    Endpoint ep_;
};

// Quotas per variant from a stretching_2x : inverse_ratio : original_ratio
// ratio, scaled to `total` with largest-remainder rounding.
std::map<Variant, int> quotas_from_ratio(int total, const std::array<double, 3>& ratio = {4.0, 4.0, 2.0});

struct SamplingOptions {
    int max_reuse = 1;
    double low_diversity_threshold = 0.99;  // cosine at or above this is flagged
};

struct SampledPair {
    PreferencePair pair;
    double similarity = 0.0;
    bool low_diversity = false;
};

struct SamplingResult {
    std::vector<SampledPair> pairs;
    std::map<Variant, int> shortfall;  // quota minus emitted, only where positive
};

// Within each variant bucket, candidate pairs are layouts with the same
// element-id set, canvas and source design (extra.design_id, set by the
// generator); they are taken in ascending cosine similarity, skipping any
// pair that would use a layout more than max_reuse times.
SamplingResult sample_diverse_pairs(const std::map<Variant, std::vector<Layout>>& pool,
                                    const std::map<Variant, int>& quotas, Embedder& embedder,
                                    const SamplingOptions& options = {});

}  // namespace dsense
