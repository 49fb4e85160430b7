#pragma once

// Stage 1: partition a layout's elements into groups that move together,
// and score groupings against gold partitions.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "designsense/layout.hpp"
#include "designsense/remote.hpp"

namespace dsense {

struct Partition {
    std::vector<std::vector<std::string>> groups;

    std::size_t size() const noexcept { return groups.size(); }
    friend bool operator==(const Partition&, const Partition&) = default;
};

// Which of the three partition conditions failed.
enum class PartitionRule {
    covers_all,      // every element belongs to some group
    disjoint,        // no element belongs to two groups
    nonempty,        // no group is empty
    unknown_member,  // a group names an id that is not in the layout
};

struct PartitionViolation {
    PartitionRule rule;
    std::vector<std::string> ids;  // offending element ids; group index for `nonempty`
};

std::vector<PartitionViolation> validate_partition(const Partition& p, const Layout& l);
inline bool is_valid_partition(const Partition& p, const Layout& l) { return validate_partition(p, l).empty(); }

// Canonical form: ids sorted inside groups, groups sorted by first id.
Partition canonical(Partition p);

struct KindCompatibility {
    std::set<std::pair<ElementKind, ElementKind>> allowed;  // stored with first <= second

    bool compatible(ElementKind a, ElementKind b) const;
    void allow(ElementKind a, ElementKind b);

    // text-text, text-shape, image-text.
    static KindCompatibility defaults();
};

struct HeuristicGroupingParams {
    double gap_threshold = 0.02;
    KindCompatibility compatibility = KindCompatibility::defaults();
};

// Single-link agglomeration on bbox gap, gated by kind compatibility.
// Groups are listed in order of their first element in the layout.
Partition group_heuristic(const Layout& l, const HeuristicGroupingParams& params = {});

struct RepairLog {
    std::vector<std::string> entries;
    bool empty() const noexcept { return entries.empty(); }
};

// Makes any proposed grouping valid: duplicate memberships stay in the
// first-listed group, unknown ids and empty groups are dropped, orphaned ids
// become singletons (in layout order).
Partition repair_partition(const Partition& proposed, const Layout& l, RepairLog& log);

Partition partition_from_json(const Json& j, const std::string& path = "groups");
Json to_json(const Partition& p);

// POST /group {layout} -> {groups}; the response goes through repair_partition.
class RemoteGrouper {
public:
    explicit RemoteGrouper(Endpoint ep) : ep_(std::move(ep)) {}
    Partition group(const Layout& l, RepairLog& log) const;

private:
    Endpoint ep_;
};

Partition group_remote(const Layout& l, const RemoteGrouper& client, RepairLog& log);

// Adjusted Rand Index from the pair-counting contingency table.
// Throws DomainError when the two partitions cover different element sets.
double ari(const Partition& a, const Partition& b);

// Gold partition file: {"layout_id": ..., "groups": [[id, ...], ...]}.
struct GoldPartition {
    std::string layout_id;
    Partition partition;
};
GoldPartition read_gold_partition(const std::string& path);
void write_gold_partition(const std::string& path, const GoldPartition& g);

}  // namespace dsense
