#pragma once

// Stage 5: remove residual overlaps, snap near-alignments and clamp overflow.

#include <optional>
#include <string>
#include <vector>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"
#include "designsense/remote.hpp"

namespace dsense {

struct RefineConfig {
    double snap_tolerance = kDefaultSnapTolerance;
    int max_iterations = 200;
    double step_damping = 0.5;  // in (0, 1]
    bool preserve_scale = true;

    void validate() const;
};

struct RefineResult {
    Layout layout;
    bool converged = false;
    int iterations = 0;
    // total_overlap after the initial clamp, then after each iteration.
    std::vector<double> overlap_history;
    // Per element (layout order): accumulated path length of all moves.
    std::vector<double> displacement;
    std::vector<std::string> log;
};

// Projection-style optimizer. Each iteration clamps boxes into the canvas,
// pushes overlapping pairs apart along their minimum-penetration axis (half
// the penetration each, damped; penetrations within the snap tolerance are
// resolved in full), then snaps lines within the tolerance onto same-type
// peer lines or canvas guides. Steps that would raise total overlap are
// backtracked, so the overlap history is non-increasing. Each element snaps
// at most once per axis in a run. Stops once overlap <= kOverlapEpsilon and
// nothing moved.
RefineResult refine_layout_detailed(const Layout& l, const RefineConfig& cfg = {});
Layout refine_layout(const Layout& l, const RefineConfig& cfg = {});

// POST /refine {layout} -> {layout}. The remote boxes are adopted only when the
// response is schema-valid and carries exactly the input's element ids;
// otherwise the local refiner runs and the fallback is logged.
class RemoteRefiner {
public:
    RemoteRefiner(Endpoint ep, RefineConfig fallback = {}) : ep_(std::move(ep)), fallback_(fallback) {}
    RefineResult refine(const Layout& l) const;

private:
    Endpoint ep_;
    RefineConfig fallback_;
};

RefineResult refine_remote(const Layout& l, const RemoteRefiner& client);

// One human comparison between an original layout and its refined version.
struct HprRecord {
    std::string pair_id;
    PreferenceLabel refined_side = PreferenceLabel::left;  // left or right
    PreferenceLabel preferred = PreferenceLabel::left;     // non-directional labels are ties
};

struct HprResult {
    std::optional<double> ratio;  // empty when the original never won
    int refined_preferred = 0;
    int original_preferred = 0;
    int ties_excluded = 0;
    bool refined_always_preferred() const noexcept { return !ratio.has_value(); }
};

// refined-preferred count / original-preferred count. Throws DomainError on
// empty input or when every record is a tie.
HprResult hpr(const std::vector<HprRecord>& records);

std::vector<HprRecord> read_hpr_records(const std::string& path);  // JSON array or JSONL

}  // namespace dsense
