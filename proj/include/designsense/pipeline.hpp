#pragma once

// End-to-end curation run: grouping -> generation per variant -> filtering ->
// clustering and representative selection -> refinement -> diversity sampling
// -> pair emission. Each stage leaves its artifacts and a completion marker
// under the output directory; a rerun resumes after the last completed stage.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "designsense/diversity.hpp"
#include "designsense/error.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

struct PipelineEndpoints {
    std::optional<std::string> generator, grouper, refiner, judge, embedder;
};

struct PipelineConfig {
    std::string input_dir;
    std::string output_dir;
    std::uint64_t seed = 0;

    // Optional stages; a disabled stage passes its input through.
    bool grouping = true;
    bool filtering = true;
    bool clustering = true;
    bool refinement = true;

    PipelineEndpoints endpoints;
    std::string api_key;
    int retries = 2;
    int timeout_ms = 10000;
    // Without an endpoint (or when it fails) use the local implementation.
    bool heuristic_fallback = true;

    int num_samples = 10;
    double temperature = 1.0;
    std::vector<Variant> variants{Variant::original_ratio, Variant::stretching_2x, Variant::inverse_ratio};

    double overlap_budget = 0.01;
    double score_threshold = 0.4;
    bool judge_gate = false;  // also drop layouts the judge flags against themselves

    double cluster_tau = 0.6;
    int top_k = 3;
    DistinctSelection selection = DistinctSelection::cluster_reps;

    double snap_tolerance = kDefaultSnapTolerance;
    int max_iterations = 200;
    double step_damping = 0.5;

    int total_pairs = 10;
    std::array<double, 3> variant_ratio{4.0, 4.0, 2.0};  // stretching_2x : inverse_ratio : original_ratio
    int max_reuse = 1;
    double low_diversity_threshold = 0.99;

    // Throws DomainError on malformed endpoint URLs or out-of-range values.
    void validate() const;
};

inline constexpr const char* kPipelineStages[] = {"grouping",   "generation", "filtering", "clustering",
                                                  "refinement", "sampling",   "emission"};

// Unknown keys raise ParseError so typos are not silently ignored.
PipelineConfig pipeline_config_from_json(const Json& j);
// The api key is never serialized.
Json to_json(const PipelineConfig& c);

// DSENSE_{GENERATOR,GROUPER,REFINER,JUDGE,EMBEDDER}_URL and DSENSE_API_KEY.
// An empty variable clears the endpoint.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env_overrides(PipelineConfig& c, const EnvLookup& env);
std::optional<std::string> process_env(const std::string& name);

class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what)
        : Error("pipeline halted at stage " + stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct StageReport {
    std::string name;
    std::string status;  // ran | resumed
    Json counts = Json::object();
};

struct RunReport {
    std::vector<StageReport> stages;
    std::vector<std::string> warnings;
    std::string pairs_path;
    std::size_t pair_count = 0;
};

Json to_json(const RunReport& r);

struct RunOptions {
    // Rerun this stage and everything after it even if they completed.
    std::optional<std::string> from_stage;
    // Stop after this stage.
    std::optional<std::string> until_stage;
};

// Throws PipelineError naming the failing stage; completed stages keep
// their artifacts.
RunReport run_pipeline(const PipelineConfig& cfg, const RunOptions& opt = {});

}  // namespace dsense
