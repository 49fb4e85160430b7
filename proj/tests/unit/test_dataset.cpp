#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "designsense/dataset.hpp"
#include "designsense/error.hpp"
#include "support/dataset_fixtures.hpp"
#include "support/fixtures.hpp"

using namespace dsense;
using namespace dsense::testing;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path().string());
    return files;
}

std::vector<PreferencePair> n_pairs(std::size_t n) {
    std::vector<PreferencePair> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i].pair_id = "p" + std::to_string(i);
        v[i].gold_label = kAllLabels[(i * 7) % 4];
    }
    return v;
}

}  // namespace

TEST_CASE("apportion by largest remainder") {
    CHECK(apportion(10235, kDefaultSplitRatio) == std::vector<std::size_t>{8735, 500, 1000});
    CHECK(apportion(1024, kDefaultSplitRatio) == std::vector<std::size_t>{874, 50, 100});
    CHECK(apportion(10, {1, 1, 1}) == std::vector<std::size_t>{4, 3, 3});
    CHECK(apportion(0, {1, 2}) == std::vector<std::size_t>{0, 0});
    CHECK_THROWS_AS(apportion(5, {}), DomainError);
    CHECK_THROWS_AS(apportion(5, {1, -1}), DomainError);
}

TEST_CASE("split sizes and determinism") {
    const auto pairs = n_pairs(10235);
    SplitOptions opt;
    opt.seed = 4;
    const auto a = split_pairs(pairs, opt);
    const auto sizes = split_sizes(a);
    CHECK(sizes.at(Split::train) == 8735);
    CHECK(sizes.at(Split::val) == 500);
    CHECK(sizes.at(Split::test) == 1000);
    CHECK(a.size() == pairs.size());
    CHECK(split_pairs(pairs, opt) == a);
    opt.seed = 5;
    CHECK(split_pairs(pairs, opt) != a);

    const auto small = split_sizes(split_pairs(n_pairs(1024)));
    CHECK(small.at(Split::train) == 874);
    CHECK(small.at(Split::val) == 50);
    CHECK(small.at(Split::test) == 100);

    CHECK_THROWS_AS(split_pairs(n_pairs(2)), DomainError);
}

TEST_CASE("split is a partition for arbitrary ratios and seeds") {
    Rng rng(110);
    for (int t = 0; t < 40; ++t) {
        const auto pairs = n_pairs(3 + rng.below(300));
        SplitOptions opt;
        opt.seed = rng.next();
        opt.ratios = {rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5)};
        opt.stratified = rng.coin();
        const auto a = split_pairs(pairs, opt);
        CHECK(a.size() == pairs.size());
        const auto expect = apportion(pairs.size(), opt.ratios);
        const auto sizes = split_sizes(a);
        std::size_t total = 0;
        for (const auto& [s, c] : sizes) total += c;
        CHECK(total == pairs.size());
        CHECK((sizes.count(Split::train) ? sizes.at(Split::train) : 0) == expect[0]);
    }
}

TEST_CASE("stratified split keeps label proportions within two percent") {
    auto pairs = n_pairs(2000);
    // Skewed label mix.
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].gold_label = kAllLabels[i % 10 < 6 ? 0 : (i % 10 < 8 ? 1 : i % 4)];
    SplitOptions opt;
    opt.seed = 9;
    opt.ratios = {70, 15, 15};
    opt.stratified = true;
    const auto a = split_pairs(pairs, opt);
    std::map<PreferenceLabel, double> global;
    for (const auto& p : pairs) global[*p.gold_label] += 1.0 / pairs.size();
    for (Split s : {Split::train, Split::val, Split::test}) {
        std::map<PreferenceLabel, double> local;
        double n = 0;
        for (const auto& p : pairs)
            if (a.at(p.pair_id) == s) {
                local[*p.gold_label] += 1;
                n += 1;
            }
        for (const auto& [label, share] : global) CHECK(std::abs(local[label] / n - share) <= 0.02);
    }
}

TEST_CASE("dataset round trip is byte stable") {
    Dataset d = synthetic_dataset(40, 3);
    d.pairs[0].annotator_labels = {{"ann1", PreferenceLabel::left}, {"ann2", PreferenceLabel::right}};
    d.pairs[1].extra["custom"] = "kept";
    d.annotations.push_back({"pair_2", "ann1", PreferenceLabel::both_good, 1700000000000, 1234, Json{{"note", "x"}}});
    d.split_assignment = split_pairs(d.pairs);
    d.manifest_extra["curator"] = "test";

    TempDir a("ds_a"), b("ds_b");
    save_dataset(d, a.str());
    const Dataset loaded = load_dataset(a.str());
    CHECK(loaded.pairs == d.pairs);
    CHECK(loaded.layouts == d.layouts);
    CHECK(loaded.annotations == d.annotations);
    CHECK(loaded.split_assignment == d.split_assignment);
    CHECK(loaded.manifest_extra.value("curator", "") == "test");
    save_dataset(loaded, b.str());
    CHECK(snapshot(a.path()) == snapshot(b.path()));
}

TEST_CASE("unknown fields survive a load") {
    Dataset d = synthetic_dataset(3, 4);
    TempDir dir("ds_extra");
    save_dataset(d, dir.str());
    // Append an unknown field to the first pair line.
    const std::string path = dir / "pairs.jsonl";
    std::string text = read_file(path);
    const auto nl = text.find('\n');
    Json first = Json::parse(text.substr(0, nl));
    first["future_field"] = {{"a", 1}};
    text = first.dump() + text.substr(nl);
    write_file(path, text);
    const Dataset loaded = load_dataset(dir.str());
    CHECK(loaded.pairs[0].extra["future_field"]["a"] == 1);
}

TEST_CASE("load errors") {
    Dataset d = synthetic_dataset(3, 5);
    SUBCASE("absent layout id") {
        TempDir dir("ds_missing");
        save_dataset(d, dir.str());
        fs::remove(dir.path() / "layouts" / "p1_b.json");
        try {
            (void)load_dataset(dir.str());
            FAIL("expected IntegrityError");
        } catch (const IntegrityError& e) {
            CHECK(std::string(e.what()).find("p1_b") != std::string::npos);
        }
    }
    SUBCASE("malformed line names the line and field") {
        TempDir dir("ds_bad");
        save_dataset(d, dir.str());
        const std::string path = dir / "pairs.jsonl";
        std::string text = read_file(path);
        text += "{\"pair_id\": \"x\", \"left\": 5, \"right\": \"p0_a\"}\n";
        write_file(path, text);
        try {
            (void)load_dataset(dir.str());
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            const std::string what = e.what();
            CHECK(what.find("line 4") != std::string::npos);
            CHECK(what.find("left") != std::string::npos);
        }
    }
    SUBCASE("bad label in annotations") {
        TempDir dir("ds_label");
        save_dataset(d, dir.str());
        write_file(dir / "annotations.jsonl",
                   "{\"pair_id\":\"pair_0\",\"annotator_id\":\"a\",\"label\":\"maybe\",\"timestamp_ms\":1}\n");
        CHECK_THROWS_AS((void)load_dataset(dir.str()), ParseError);
    }
}

TEST_CASE("add_pair rejects conflicting layout content") {
    Dataset d = synthetic_dataset(1, 6);
    PreferencePair p = d.pairs[0];
    p.pair_id = "other";
    p.left.elements[0].bbox.x += 0.01;
    CHECK_THROWS_AS(d.add_pair(p), IntegrityError);
}

TEST_CASE("stats report reproduces constructed distributions") {
    const Dataset d = synthetic_dataset(100, 7);
    const auto r = stats_report(d);
    const Json& v = r.json["variants"]["proportions"];
    CHECK(v["stretching_2x"].get<double>() == 0.4);
    CHECK(v["inverse_ratio"].get<double>() == 0.4);
    CHECK(v["original_ratio"].get<double>() == 0.2);
    for (auto l : kAllLabels) CHECK(r.json["labels"]["counts"][std::string(to_string(l))] == 25);
    CHECK(r.csv.rfind("section,key,count,proportion\n", 0) == 0);
    CHECK(r.csv.find("variant,stretching_2x,40,0.4\n") != std::string::npos);
    CHECK(stats_report(d).csv == r.csv);
    CHECK(stats_report(d).json == r.json);
    CHECK(r.json["agreement"].is_null());
}

TEST_CASE("square canvases concentrate the aspect histogram at zero") {
    Dataset d;
    for (int i = 0; i < 5; ++i) {
        auto a = make_layout("a" + std::to_string(i), {{0.1, 0.1, 0.2, 0.2}}, {900, 900});
        auto b = a;
        b.layout_id = "b" + std::to_string(i);
        d.add_pair(make_pair("p" + std::to_string(i), a, b));
    }
    const auto r = stats_report(d);
    const Json& bins = r.json["aspect_log2"]["bins"];
    REQUIRE(bins.size() == 1);
    CHECK(bins[0]["center"] == 0.0);
    CHECK(bins[0]["count"] == 10);
}

TEST_CASE("stats report includes agreement when multiple annotators exist") {
    Dataset d = synthetic_dataset(4, 8);
    d.pairs[0].annotator_labels = {{"a", PreferenceLabel::left}, {"b", PreferenceLabel::left}, {"c", PreferenceLabel::right}};
    const auto r = stats_report(d);
    CHECK(r.json["agreement"]["four_class_rate"].get<double>() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("annotation record json") {
    AnnotationRecord r{"p", "ann", PreferenceLabel::right, 42, std::nullopt, Json{{"task_id", "p#0"}}};
    CHECK(annotation_from_json(to_json(r)) == r);
    Json bad = to_json(r);
    bad["label"] = "maybe";
    CHECK_THROWS_AS(annotation_from_json(bad), ParseError);
}
