#include <algorithm>
#include <map>

#include "doctest.h"
#include "designsense/error.hpp"
#include "designsense/grouping.hpp"
#include "designsense/random.hpp"
#include "designsense/synthetic.hpp"
#include "oracles/ari_oracle.hpp"
#include "support/fixtures.hpp"

using namespace dsense;
using dsense::testing::make_layout;

namespace {

Layout abc() { return make_layout("abc", {{0.1, 0.1, 0.1, 0.1}, {0.3, 0.1, 0.1, 0.1}, {0.5, 0.1, 0.1, 0.1}}); }

Partition from_labels(const oracle::Labels& labels) {
    std::map<int, std::vector<std::string>> blocks;
    for (std::size_t i = 0; i < labels.size(); ++i) blocks[labels[i]].push_back("e" + std::to_string(i));
    Partition p;
    for (auto& [k, ids] : blocks) p.groups.push_back(ids);
    return p;
}

bool has_rule(const std::vector<PartitionViolation>& v, PartitionRule r, const std::string& id) {
    for (const auto& x : v)
        if (x.rule == r && std::find(x.ids.begin(), x.ids.end(), id) != x.ids.end()) return true;
    return false;
}

}  // namespace

TEST_CASE("validate_partition fixtures") {
    const auto l3 = abc();
    CHECK(validate_partition({{{"e0", "e1"}, {"e2"}}}, l3).empty());

    const auto l2 = make_layout("ab", {{0.1, 0.1, 0.1, 0.1}, {0.3, 0.1, 0.1, 0.1}});
    const auto dup = validate_partition({{{"e0"}, {"e0", "e1"}}}, l2);
    CHECK(has_rule(dup, PartitionRule::disjoint, "e0"));

    const auto missing = validate_partition({{{"e0"}}}, l2);
    CHECK(has_rule(missing, PartitionRule::covers_all, "e1"));

    const auto empty = validate_partition({{{"e0", "e1"}, {}}}, l2);
    CHECK(!empty.empty());
    CHECK(empty.front().rule == PartitionRule::nonempty);

    CHECK(has_rule(validate_partition({{{"e0", "e1", "zz"}}}, l2), PartitionRule::unknown_member, "zz"));
}

TEST_CASE("group_heuristic fixtures") {
    SUBCASE("overlapping elements join") {
        const auto l = make_layout("o", {{0.1, 0.1, 0.3, 0.3}, {0.2, 0.2, 0.3, 0.3}});
        CHECK(group_heuristic(l).size() == 1);
    }
    SUBCASE("far apart elements stay single") {
        const auto l = make_layout("f", {{0.0, 0.0, 0.1, 0.1}, {0.6, 0.0, 0.1, 0.1}});
        CHECK(group_heuristic(l).size() == 2);
    }
    SUBCASE("single-link closure over a chain") {
        const auto l = make_layout("c", {{0.0, 0.0, 0.1, 0.1}, {0.11, 0.0, 0.1, 0.1}, {0.22, 0.0, 0.1, 0.1}});
        const auto p = group_heuristic(l);
        REQUIRE(p.size() == 1);
        CHECK(p.groups[0].size() == 3);
    }
    SUBCASE("incompatible kinds never join") {
        auto l = make_layout("k", {{0.1, 0.1, 0.3, 0.3}, {0.2, 0.2, 0.3, 0.3}});
        l.elements[0].kind = ElementKind::image;
        l.elements[1].kind = ElementKind::image;
        CHECK(group_heuristic(l).size() == 2);
        HeuristicGroupingParams params;
        params.compatibility.allow(ElementKind::image, ElementKind::image);
        CHECK(group_heuristic(l, params).size() == 1);
    }
}

TEST_CASE("default kind compatibility table") {
    const auto k = KindCompatibility::defaults();
    CHECK(k.compatible(ElementKind::text, ElementKind::text));
    CHECK(k.compatible(ElementKind::shape, ElementKind::text));
    CHECK(k.compatible(ElementKind::text, ElementKind::image));
    CHECK_FALSE(k.compatible(ElementKind::image, ElementKind::shape));
    CHECK_FALSE(k.compatible(ElementKind::other, ElementKind::other));
}

TEST_CASE("group_heuristic output is always a valid partition") {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        auto l = random_layout(rng, "r" + std::to_string(t), 2 + static_cast<int>(rng.below(10)));
        for (auto& e : l.elements) e.kind = kAllElementKinds[rng.below(4)];
        CHECK(is_valid_partition(group_heuristic(l), l));
    }
}

TEST_CASE("repair_partition") {
    const auto l = abc();
    SUBCASE("valid input unchanged") {
        RepairLog log;
        const Partition p{{{"e0", "e1"}, {"e2"}}};
        CHECK(repair_partition(p, l, log) == p);
        CHECK(log.empty());
    }
    SUBCASE("orphan becomes singleton") {
        RepairLog log;
        const auto r = repair_partition({{{"e0", "e1"}}}, l, log);
        CHECK(r.groups.size() == 2);
        CHECK(r.groups[1] == std::vector<std::string>{"e2"});
        CHECK(log.entries.size() == 1);
    }
    SUBCASE("duplicate stays in first group") {
        RepairLog log;
        const auto r = repair_partition({{{"e0", "e1"}, {"e1", "e2"}}}, l, log);
        CHECK(r.groups[0] == std::vector<std::string>{"e0", "e1"});
        CHECK(r.groups[1] == std::vector<std::string>{"e2"});
        CHECK(log.entries.size() == 1);
        CHECK(is_valid_partition(r, l));
    }
    SUBCASE("unknown ids and empty groups dropped") {
        RepairLog log;
        const auto r = repair_partition({{{"e0", "nope"}, {}, {"e1", "e2"}}}, l, log);
        CHECK(is_valid_partition(r, l));
        CHECK(log.entries.size() >= 2);
    }
}

TEST_CASE("ari fixtures") {
    const Partition a{{{"e0", "e1"}, {"e2", "e3"}}};
    CHECK(ari(a, a) == 1.0);
    const Partition singles{{{"e0"}, {"e1"}, {"e2"}, {"e3"}}};
    const Partition big{{{"e0", "e1", "e2", "e3"}}};
    CHECK(ari(singles, big) == doctest::Approx(0.0));
    const Partition crossed{{{"e0", "e2"}, {"e1", "e3"}}};
    CHECK(ari(a, crossed) == doctest::Approx(oracle::ari_pairs({0, 0, 1, 1}, {0, 1, 0, 1})).epsilon(1e-12));
    CHECK(ari(a, crossed) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("ari domain errors") {
    CHECK_THROWS_AS(ari({{{"e0", "e1"}}}, {{{"e0"}, {"e2"}}}), DomainError);
    CHECK_THROWS_AS(ari({{{"e0", "e1"}}}, {{{"e0"}}}), DomainError);
}

TEST_CASE("ari symmetry, relabeling and oracle agreement on five elements") {
    const auto parts = oracle::all_partitions(5);
    CHECK(parts.size() == 52);
    for (const auto& x : parts)
        for (const auto& y : parts) {
            const Partition px = from_labels(x), py = from_labels(y);
            const double v = ari(px, py);
            CHECK(v == doctest::Approx(oracle::ari_pairs(x, y)).epsilon(1e-12));
            CHECK(v == doctest::Approx(ari(py, px)).epsilon(1e-15));
            Partition reordered = py;
            std::reverse(reordered.groups.begin(), reordered.groups.end());
            CHECK(ari(px, reordered) == doctest::Approx(v).epsilon(1e-15));
        }
}

TEST_CASE("gold partition file round trip") {
    dsense::testing::TempDir dir("gold");
    const GoldPartition g{"abc", {{{"e0", "e1"}, {"e2"}}}};
    write_gold_partition(dir / "g.json", g);
    const auto back = read_gold_partition(dir / "g.json");
    CHECK(back.layout_id == "abc");
    CHECK(back.partition == g.partition);
}
