#include "doctest.h"
#include "designsense/json_io.hpp"
#include "designsense/pipeline.hpp"
#include "designsense/stubs.hpp"
#include "designsense/synthetic.hpp"
#include "support/canned_server.hpp"
#include "support/fixtures.hpp"

#include <filesystem>
#include <map>

using namespace dsense;
using namespace dsense::testing;
namespace fs = std::filesystem;

namespace {

void write_inputs(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    fs::create_directories(dir);
    for (const auto& l : synthetic_corpus(n, seed)) write_layout_file((dir / (l.layout_id + ".json")).string(), l);
}

PipelineConfig base_config(const TempDir& tmp, const std::string& out = "out") {
    PipelineConfig c;
    c.input_dir = (tmp.path() / "in").string();
    c.output_dir = (tmp.path() / out).string();
    c.seed = 7;
    c.total_pairs = 10;
    return c;
}

const StageReport& stage(const RunReport& r, const std::string& name) {
    for (const auto& s : r.stages)
        if (s.name == name) return s;
    throw std::runtime_error("missing stage " + name);
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and wrong types") {
    CHECK_THROWS_AS(pipeline_config_from_json(Json{{"input_dir", "a"}, {"output_dir", "b"}, {"sed", 1}}), ParseError);
    CHECK_THROWS_AS(pipeline_config_from_json(Json{{"stages", {{"groupng", true}}}}), ParseError);
    CHECK_THROWS_AS(pipeline_config_from_json(Json{{"seed", "seven"}}), ParseError);
    CHECK_THROWS_AS(pipeline_config_from_json(Json{{"endpoints", {{"generator", 3}}}}), ParseError);

    const auto c = pipeline_config_from_json(Json::parse(R"({
      "input_dir": "in", "output_dir": "out", "seed": 3,
      "stages": {"clustering": false},
      "generation": {"num_samples": 4, "variants": ["stretching_2x"]},
      "sampling": {"total_pairs": 6, "ratio": [1, 1, 0]},
      "endpoints": {"generator": "http://127.0.0.1:9/x"}
    })"));
    CHECK(c.seed == 3);
    CHECK_FALSE(c.clustering);
    CHECK(c.num_samples == 4);
    CHECK(c.variants == std::vector<Variant>{Variant::stretching_2x});
    CHECK(c.variant_ratio == std::array<double, 3>{1, 1, 0});
    CHECK(*c.endpoints.generator == "http://127.0.0.1:9/x");
    CHECK(pipeline_config_from_json(to_json(c)).seed == 3);
}

TEST_CASE("config validation") {
    PipelineConfig c;
    c.input_dir = "in";
    c.output_dir = "out";
    CHECK_NOTHROW(c.validate());
    c.endpoints.judge = "not a url";
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.endpoints.judge.reset();
    c.cluster_tau = 1.5;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.cluster_tau = 0.6;
    c.variants = {Variant::original_ratio, Variant::original_ratio};
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("environment overrides and secret handling") {
    PipelineConfig c;
    c.endpoints.grouper = "http://a:1";
    std::map<std::string, std::string> env{{"DSENSE_GENERATOR_URL", "http://gen:2"},
                                           {"DSENSE_GROUPER_URL", ""},
                                           {"DSENSE_API_KEY", "s3cret"}};
    apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
        auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    CHECK(*c.endpoints.generator == "http://gen:2");
    CHECK_FALSE(c.endpoints.grouper.has_value());
    CHECK(c.api_key == "s3cret");
    CHECK(to_json(c).dump().find("s3cret") == std::string::npos);
}

TEST_CASE("end-to-end run on five layouts") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 5, 11);
    const auto cfg = base_config(tmp);
    const RunReport r = run_pipeline(cfg);
    REQUIRE(r.stages.size() == 7);
    for (const auto& s : r.stages) CHECK(s.status == "ran");
    CHECK(stage(r, "grouping").counts["layouts"] == 5);
    CHECK(stage(r, "generation").counts["requests"] == 15);
    CHECK(stage(r, "generation").counts["generated"] == 150);
    const int kept = stage(r, "filtering").counts["kept"];
    CHECK(kept + stage(r, "filtering").counts["discarded"].get<int>() == 150);
    CHECK(stage(r, "clustering").counts["selected"].get<int>() <= 5 * 3 * 3);
    CHECK(r.pair_count == 10);

    const std::string text = read_file(r.pairs_path);
    CHECK(count_occurrences(text, "\n") == 10);
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        const auto p = pair_from_json(Json::parse(text.substr(start, end - start)));
        CHECK(p.provenance == PairProvenance::pipeline);
        CHECK_FALSE(p.gold_label.has_value());
        start = end + 1;
    }
    CHECK(fs::exists(tmp.path() / "out" / "dataset"));
    CHECK(fs::exists(tmp.path() / "out" / "report.json"));
}

TEST_CASE("identical seeds give identical bytes across output directories") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 4, 5);
    auto a = base_config(tmp, "a");
    auto b = base_config(tmp, "b");
    run_pipeline(a);
    run_pipeline(b);
    CHECK(read_file((tmp.path() / "a" / "pairs.jsonl").string()) == read_file((tmp.path() / "b" / "pairs.jsonl").string()));
    auto c = base_config(tmp, "c");
    c.seed = 8;
    run_pipeline(c);
    CHECK(read_file((tmp.path() / "a" / "pairs.jsonl").string()) != read_file((tmp.path() / "c" / "pairs.jsonl").string()));
}

TEST_CASE("resume, from-stage and until-stage") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 3, 2);
    const auto cfg = base_config(tmp);

    RunOptions until;
    until.until_stage = "filtering";
    const auto first = run_pipeline(cfg, until);
    CHECK(first.stages.size() == 3);
    CHECK_FALSE(fs::exists(tmp.path() / "out" / "pairs.jsonl"));

    const auto second = run_pipeline(cfg);
    CHECK(stage(second, "grouping").status == "resumed");
    CHECK(stage(second, "filtering").status == "resumed");
    CHECK(stage(second, "clustering").status == "ran");
    const std::string pairs = read_file(second.pairs_path);

    const auto third = run_pipeline(cfg);
    for (const auto& s : third.stages) CHECK(s.status == "resumed");
    CHECK(third.pair_count == second.pair_count);

    RunOptions from;
    from.from_stage = "refinement";
    const auto fourth = run_pipeline(cfg, from);
    CHECK(stage(fourth, "clustering").status == "resumed");
    CHECK(stage(fourth, "refinement").status == "ran");
    CHECK(stage(fourth, "emission").status == "ran");
    CHECK(read_file(fourth.pairs_path) == pairs);

    RunOptions bad;
    bad.from_stage = "painting";
    CHECK_THROWS_AS(run_pipeline(cfg, bad), DomainError);
}

TEST_CASE("a changed configuration reruns every stage") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 3, 2);
    auto cfg = base_config(tmp);
    run_pipeline(cfg);
    cfg.total_pairs = 6;
    const auto r = run_pipeline(cfg);
    for (const auto& s : r.stages) CHECK(s.status == "ran");
    CHECK(r.warnings.size() >= 1);
    CHECK(r.pair_count == 6);
}

TEST_CASE("disabled stages pass their input through") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 2, 3);
    auto cfg = base_config(tmp);
    cfg.filtering = false;
    cfg.clustering = false;
    cfg.refinement = false;
    const auto r = run_pipeline(cfg);
    CHECK(stage(r, "filtering").counts["kept"] == 60);
    CHECK(stage(r, "clustering").counts["selected"] == 60);
    CHECK(stage(r, "refinement").counts["refined"] == 0);
}

TEST_CASE("remote services through the stub server match the local run") {
    StubServer stub;
    stub.start();
    TempDir tmp;
    write_inputs(tmp.path() / "in", 3, 9);
    auto local = base_config(tmp, "local");
    auto remote = base_config(tmp, "remote");
    remote.endpoints.generator = stub.url();
    remote.endpoints.grouper = stub.url();
    remote.endpoints.refiner = stub.url();
    remote.endpoints.embedder = stub.url();
    remote.heuristic_fallback = false;
    run_pipeline(local);
    const auto r = run_pipeline(remote);
    CHECK(r.warnings.empty());
    CHECK(read_file((tmp.path() / "local" / "pairs.jsonl").string()) == read_file((tmp.path() / "remote" / "pairs.jsonl").string()));
    stub.stop();
}

TEST_CASE("generator down without fallback halts at generation") {
    TempDir tmp;
    write_inputs(tmp.path() / "in", 2, 4);
    auto cfg = base_config(tmp);
    cfg.endpoints.generator = kDeadEndpoint;
    cfg.retries = 1;
    cfg.heuristic_fallback = false;
    cfg.endpoints.grouper.reset();
    // Grouping has no endpoint; without fallback it must fail first, so give it one.
    StubServer stub;
    stub.start();
    cfg.endpoints.grouper = stub.url();
    try {
        run_pipeline(cfg);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "generation");
    }
    CHECK(fs::exists(tmp.path() / "out" / "01_grouping" / "_done.json"));
    CHECK_FALSE(fs::exists(tmp.path() / "out" / "02_generation" / "_done.json"));

    cfg.heuristic_fallback = true;
    const auto r = run_pipeline(cfg);
    CHECK(stage(r, "grouping").status == "ran");  // config changed
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.pair_count > 0);
    CHECK(r.pair_count + stage(r, "sampling").counts["shortfall"].get<std::size_t>() == 10);
    stub.stop();
}

TEST_CASE("missing or duplicate inputs") {
    TempDir tmp;
    auto cfg = base_config(tmp);
    CHECK_THROWS_AS(run_pipeline(cfg), PipelineError);
    write_inputs(tmp.path() / "in", 1, 1);
    fs::copy_file(tmp.path() / "in" / "design_000.json", tmp.path() / "in" / "zz.json");
    CHECK_THROWS_AS(run_pipeline(cfg), PipelineError);
}
