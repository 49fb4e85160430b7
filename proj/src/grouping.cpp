#include "designsense/grouping.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

std::vector<PartitionViolation> validate_partition(const Partition& p, const Layout& l) {
    std::vector<PartitionViolation> out;
    std::map<std::string, int> membership;
    std::vector<std::string> unknown;
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        if (p.groups[g].empty()) out.push_back({PartitionRule::nonempty, {std::to_string(g)}});
        for (const auto& id : p.groups[g]) {
            ++membership[id];
            if (!l.find(id) && std::find(unknown.begin(), unknown.end(), id) == unknown.end()) unknown.push_back(id);
        }
    }
    std::vector<std::string> missing;
    for (const auto& e : l.elements) {
        if (!membership.count(e.id)) missing.push_back(e.id);
    }
    if (!missing.empty()) out.push_back({PartitionRule::covers_all, missing});
    std::vector<std::string> dup;
    for (const auto& [id, n] : membership) {
        if (n > 1) dup.push_back(id);
    }
    if (!dup.empty()) out.push_back({PartitionRule::disjoint, dup});
    if (!unknown.empty()) out.push_back({PartitionRule::unknown_member, unknown});
    return out;
}

Partition canonical(Partition p) {
    for (auto& g : p.groups) std::sort(g.begin(), g.end());
    std::sort(p.groups.begin(), p.groups.end());
    return p;
}

bool KindCompatibility::compatible(ElementKind a, ElementKind b) const {
    if (b < a) std::swap(a, b);
    return allowed.count({a, b}) > 0;
}

void KindCompatibility::allow(ElementKind a, ElementKind b) {
    if (b < a) std::swap(a, b);
    allowed.insert({a, b});
}

KindCompatibility KindCompatibility::defaults() {
    KindCompatibility k;
    k.allow(ElementKind::text, ElementKind::text);
    k.allow(ElementKind::text, ElementKind::shape);
    k.allow(ElementKind::image, ElementKind::text);
    return k;
}

Partition group_heuristic(const Layout& l, const HeuristicGroupingParams& params) {
    const std::size_t n = l.elements.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = l.elements[i];
            const auto& b = l.elements[j];
            if (!params.compatibility.compatible(a.kind, b.kind)) continue;
            if (box_gap(a.bbox, b.bbox) <= params.gap_threshold) {
                const auto ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    Partition p;
    std::map<std::size_t, std::size_t> group_of_root;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(i);
        auto [it, inserted] = group_of_root.emplace(r, p.groups.size());
        if (inserted) p.groups.emplace_back();
        p.groups[it->second].push_back(l.elements[i].id);
    }
    return p;
}

Partition repair_partition(const Partition& proposed, const Layout& l, RepairLog& log) {
    Partition out;
    std::set<std::string> assigned;
    for (std::size_t g = 0; g < proposed.groups.size(); ++g) {
        std::vector<std::string> kept;
        for (const auto& id : proposed.groups[g]) {
            if (!l.find(id)) {
                log.entries.push_back("dropped unknown id '" + id + "' from group " + std::to_string(g));
            } else if (!assigned.insert(id).second) {
                log.entries.push_back("duplicate id '" + id + "' in group " + std::to_string(g) +
                                      " kept in its first group");
            } else {
                kept.push_back(id);
            }
        }
        if (kept.empty()) {
            log.entries.push_back("dropped empty group " + std::to_string(g));
        } else {
            out.groups.push_back(std::move(kept));
        }
    }
    for (const auto& e : l.elements) {
        if (!assigned.count(e.id)) {
            log.entries.push_back("orphaned id '" + e.id + "' placed in a singleton group");
            out.groups.push_back({e.id});
        }
    }
    return out;
}

Partition partition_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected a list of groups");
    Partition p;
    for (std::size_t g = 0; g < j.size(); ++g) {
        if (!j[g].is_array()) throw ParseError(path + "[" + std::to_string(g) + "]", "expected a list of ids");
        std::vector<std::string> group;
        for (std::size_t k = 0; k < j[g].size(); ++k) {
            if (!j[g][k].is_string())
                throw ParseError(path + "[" + std::to_string(g) + "][" + std::to_string(k) + "]", "expected a string id");
            group.push_back(j[g][k].get<std::string>());
        }
        p.groups.push_back(std::move(group));
    }
    return p;
}

Json to_json(const Partition& p) { return Json(p.groups); }

Partition RemoteGrouper::group(const Layout& l, RepairLog& log) const {
    const Json response = post_json(ep_, "/group", Json{{"layout", to_json(l)}});
    if (!response.is_object() || !response.contains("groups")) {
        throw ProtocolError("grouper response lacks 'groups'", excerpt(response.dump()));
    }
    Partition proposed;
    try {
        proposed = partition_from_json(response["groups"]);
    } catch (const ParseError& e) {
        throw ProtocolError(std::string("grouper response: ") + e.what(), excerpt(response.dump()));
    }
    return repair_partition(proposed, l, log);
}

Partition group_remote(const Layout& l, const RemoteGrouper& client, RepairLog& log) { return client.group(l, log); }

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double ari(const Partition& a, const Partition& b) {
    std::map<std::string, std::size_t> label_a, label_b;
    for (std::size_t g = 0; g < a.groups.size(); ++g)
        for (const auto& id : a.groups[g]) {
            if (!label_a.emplace(id, g).second) throw DomainError("ari: id '" + id + "' appears twice in first partition");
        }
    for (std::size_t g = 0; g < b.groups.size(); ++g)
        for (const auto& id : b.groups[g]) {
            if (!label_b.emplace(id, g).second) throw DomainError("ari: id '" + id + "' appears twice in second partition");
        }
    if (label_a.size() != label_b.size() ||
        !std::equal(label_a.begin(), label_a.end(), label_b.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw DomainError("ari: partitions cover different element sets");
    }

    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::vector<double> rows(a.groups.size(), 0.0), cols(b.groups.size(), 0.0);
    for (const auto& [id, ga] : label_a) {
        const std::size_t gb = label_b.at(id);
        table[{ga, gb}] += 1.0;
        rows[ga] += 1.0;
        cols[gb] += 1.0;
    }
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [k, v] : table) sum_cells += choose2(v);
    for (double r : rows) sum_rows += choose2(r);
    for (double c : cols) sum_cols += choose2(c);
    const double total_pairs = choose2(static_cast<double>(label_a.size()));
    if (total_pairs == 0.0) return 1.0;

    const double expected = sum_rows * sum_cols / total_pairs;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    // Zero denominator only when both partitions are all-singletons or both
    // a single group, i.e. they are identical.
    if (max_index == expected) return 1.0;
    return (sum_cells - expected) / (max_index - expected);
}

GoldPartition read_gold_partition(const std::string& path) {
    const Json j = read_json_file(path);
    if (!j.is_object() || !j.contains("layout_id") || !j["layout_id"].is_string())
        throw ParseError(path + ": layout_id", "missing or not a string");
    if (!j.contains("groups")) throw ParseError(path + ": groups", "missing required field");
    return {j["layout_id"].get<std::string>(), partition_from_json(j["groups"], path + ": groups")};
}

void write_gold_partition(const std::string& path, const GoldPartition& g) {
    write_json_file(path, Json{{"layout_id", g.layout_id}, {"groups", to_json(g.partition)}});
}

}  // namespace dsense
