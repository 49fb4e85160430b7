#include "designsense/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "designsense/augment.hpp"
#include "designsense/dataset.hpp"
#include "designsense/grouping.hpp"
#include "designsense/judge.hpp"
#include "designsense/random.hpp"
#include "designsense/refine.hpp"
#include "designsense/stubs.hpp"

namespace dsense {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
    for (const auto* ep : {&endpoints.generator, &endpoints.grouper, &endpoints.refiner, &endpoints.judge,
                           &endpoints.embedder}) {
        if (*ep && !is_well_formed_url(**ep)) throw DomainError("malformed endpoint URL '" + **ep + "'");
    }
    if (input_dir.empty()) throw DomainError("input_dir is required");
    if (output_dir.empty()) throw DomainError("output_dir is required");
    if (num_samples < 1) throw DomainError("num_samples must be >= 1");
    if (top_k < 1) throw DomainError("top_k must be >= 1");
    if (!(cluster_tau >= 0.0 && cluster_tau <= 1.0)) throw DomainError("cluster tau must be in [0, 1]");
    if (total_pairs < 0) throw DomainError("total_pairs must be >= 0");
    if (max_reuse < 1) throw DomainError("max_reuse must be >= 1");
    if (retries < 0 || timeout_ms < 1) throw DomainError("retries must be >= 0 and timeout_ms >= 1");
    if (variants.empty()) throw DomainError("at least one variant is required");
    if (std::set<Variant>(variants.begin(), variants.end()).size() != variants.size())
        throw DomainError("variants must be distinct");
    RefineConfig{snap_tolerance, max_iterations, step_damping, true}.validate();
}

namespace {

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
            throw ParseError(path + "." + it.key(), "unknown configuration key");
    }
}

template <class T>
void read(const Json& j, const char* key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ParseError(path + "." + key, "wrong type");
    }
}

void read_url(const Json& j, const char* key, std::optional<std::string>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
        return;
    }
    if (!j.at(key).is_string()) throw ParseError(std::string("endpoints.") + key, "expected a URL string or null");
    out = j.at(key).get<std::string>();
}

Json url_json(const std::optional<std::string>& u) { return u ? Json(*u) : Json(nullptr); }

}  // namespace

PipelineConfig pipeline_config_from_json(const Json& j) {
    PipelineConfig c;
    check_keys(j, "config", {"input_dir", "output_dir", "seed", "stages", "endpoints", "api_key", "retries",
                             "timeout_ms", "heuristic_fallback", "generation", "filter", "clustering", "refinement",
                             "sampling"});
    read(j, "input_dir", "config", c.input_dir);
    read(j, "output_dir", "config", c.output_dir);
    read(j, "seed", "config", c.seed);
    read(j, "api_key", "config", c.api_key);
    read(j, "retries", "config", c.retries);
    read(j, "timeout_ms", "config", c.timeout_ms);
    read(j, "heuristic_fallback", "config", c.heuristic_fallback);
    if (j.contains("stages")) {
        const Json& s = j["stages"];
        check_keys(s, "stages", {"grouping", "filtering", "clustering", "refinement"});
        read(s, "grouping", "stages", c.grouping);
        read(s, "filtering", "stages", c.filtering);
        read(s, "clustering", "stages", c.clustering);
        read(s, "refinement", "stages", c.refinement);
    }
    if (j.contains("endpoints")) {
        const Json& e = j["endpoints"];
        check_keys(e, "endpoints", {"generator", "grouper", "refiner", "judge", "embedder"});
        read_url(e, "generator", c.endpoints.generator);
        read_url(e, "grouper", c.endpoints.grouper);
        read_url(e, "refiner", c.endpoints.refiner);
        read_url(e, "judge", c.endpoints.judge);
        read_url(e, "embedder", c.endpoints.embedder);
    }
    if (j.contains("generation")) {
        const Json& g = j["generation"];
        check_keys(g, "generation", {"num_samples", "temperature", "variants"});
        read(g, "num_samples", "generation", c.num_samples);
        read(g, "temperature", "generation", c.temperature);
        if (g.contains("variants")) {
            std::vector<std::string> names;
            read(g, "variants", "generation", names);
            c.variants.clear();
            for (const auto& n : names) {
                try {
                    c.variants.push_back(variant_from_string(n));
                } catch (const DomainError& e) {
                    throw ParseError("generation.variants", e.what());
                }
            }
        }
    }
    if (j.contains("filter")) {
        const Json& f = j["filter"];
        check_keys(f, "filter", {"overlap_budget", "score_threshold", "judge_gate"});
        read(f, "overlap_budget", "filter", c.overlap_budget);
        read(f, "score_threshold", "filter", c.score_threshold);
        read(f, "judge_gate", "filter", c.judge_gate);
    }
    if (j.contains("clustering")) {
        const Json& k = j["clustering"];
        check_keys(k, "clustering", {"tau", "top_k", "select"});
        read(k, "tau", "clustering", c.cluster_tau);
        read(k, "top_k", "clustering", c.top_k);
        if (k.contains("select")) {
            std::string s;
            read(k, "select", "clustering", s);
            try {
                c.selection = distinct_selection_from_string(s);
            } catch (const DomainError& e) {
                throw ParseError("clustering.select", e.what());
            }
        }
    }
    if (j.contains("refinement")) {
        const Json& r = j["refinement"];
        check_keys(r, "refinement", {"snap_tolerance", "max_iterations", "step_damping"});
        read(r, "snap_tolerance", "refinement", c.snap_tolerance);
        read(r, "max_iterations", "refinement", c.max_iterations);
        read(r, "step_damping", "refinement", c.step_damping);
    }
    if (j.contains("sampling")) {
        const Json& s = j["sampling"];
        check_keys(s, "sampling", {"total_pairs", "ratio", "max_reuse", "low_diversity_threshold"});
        read(s, "total_pairs", "sampling", c.total_pairs);
        read(s, "ratio", "sampling", c.variant_ratio);
        read(s, "max_reuse", "sampling", c.max_reuse);
        read(s, "low_diversity_threshold", "sampling", c.low_diversity_threshold);
    }
    return c;
}

Json to_json(const PipelineConfig& c) {
    Json variants = Json::array();
    for (auto v : c.variants) variants.push_back(std::string(to_string(v)));
    return Json{
        {"input_dir", c.input_dir},
        {"output_dir", c.output_dir},
        {"seed", c.seed},
        {"stages",
         {{"grouping", c.grouping}, {"filtering", c.filtering}, {"clustering", c.clustering}, {"refinement", c.refinement}}},
        {"endpoints",
         {{"generator", url_json(c.endpoints.generator)},
          {"grouper", url_json(c.endpoints.grouper)},
          {"refiner", url_json(c.endpoints.refiner)},
          {"judge", url_json(c.endpoints.judge)},
          {"embedder", url_json(c.endpoints.embedder)}}},
        {"retries", c.retries},
        {"timeout_ms", c.timeout_ms},
        {"heuristic_fallback", c.heuristic_fallback},
        {"generation", {{"num_samples", c.num_samples}, {"temperature", c.temperature}, {"variants", variants}}},
        {"filter",
         {{"overlap_budget", c.overlap_budget}, {"score_threshold", c.score_threshold}, {"judge_gate", c.judge_gate}}},
        {"clustering", {{"tau", c.cluster_tau}, {"top_k", c.top_k}, {"select", std::string(to_string(c.selection))}}},
        {"refinement",
         {{"snap_tolerance", c.snap_tolerance}, {"max_iterations", c.max_iterations}, {"step_damping", c.step_damping}}},
        {"sampling",
         {{"total_pairs", c.total_pairs},
          {"ratio", c.variant_ratio},
          {"max_reuse", c.max_reuse},
          {"low_diversity_threshold", c.low_diversity_threshold}}}};
}

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

void apply_env_overrides(PipelineConfig& c, const EnvLookup& env) {
    const std::pair<const char*, std::optional<std::string>*> vars[] = {
        {"DSENSE_GENERATOR_URL", &c.endpoints.generator}, {"DSENSE_GROUPER_URL", &c.endpoints.grouper},
        {"DSENSE_REFINER_URL", &c.endpoints.refiner},     {"DSENSE_JUDGE_URL", &c.endpoints.judge},
        {"DSENSE_EMBEDDER_URL", &c.endpoints.embedder}};
    for (const auto& [name, slot] : vars) {
        if (auto v = env(name)) {
            if (v->empty())
                slot->reset();
            else
                *slot = *v;
        }
    }
    if (auto key = env("DSENSE_API_KEY")) c.api_key = *key;
}

Json to_json(const RunReport& r) {
    Json stages = Json::array();
    for (const auto& s : r.stages) stages.push_back(Json{{"stage", s.name}, {"status", s.status}, {"counts", s.counts}});
    return Json{{"stages", stages}, {"warnings", r.warnings}, {"pairs_path", r.pairs_path}, {"pair_count", r.pair_count}};
}

namespace {

struct Batch {
    std::string design;
    Variant variant = Variant::original_ratio;
    std::vector<Layout> layouts;
};

struct State {
    std::vector<Layout> originals;
    std::vector<Layout> grouped;
    std::vector<Batch> batches;
    std::vector<PreferencePair> pairs;
};

Json layouts_json(const std::vector<Layout>& ls) {
    Json a = Json::array();
    for (const auto& l : ls) a.push_back(to_json(l));
    return a;
}

std::vector<Layout> layouts_from(const Json& a) {
    std::vector<Layout> out;
    for (const auto& j : a) out.push_back(layout_from_json(j));
    return out;
}

Json batches_json(const std::vector<Batch>& bs, const std::function<void(const Batch&, Json&)>& decorate = {}) {
    Json a = Json::array();
    for (const auto& b : bs) {
        Json j{{"design", b.design}, {"variant", std::string(to_string(b.variant))}, {"layouts", layouts_json(b.layouts)}};
        if (decorate) decorate(b, j);
        a.push_back(std::move(j));
    }
    return Json{{"batches", a}};
}

std::vector<Batch> batches_from(const Json& j) {
    std::vector<Batch> out;
    for (const auto& b : j.at("batches"))
        out.push_back({b.at("design").get<std::string>(), variant_from_string(b.at("variant").get<std::string>()),
                       layouts_from(b.at("layouts"))});
    return out;
}

std::vector<Layout> read_inputs(const std::string& dir) {
    fs::path root(dir);
    if (fs::is_directory(root / "layouts")) root /= "layouts";
    if (!fs::is_directory(root)) throw DomainError("input directory '" + dir + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Layout> out;
    std::set<std::string> ids;
    for (const auto& f : files) {
        Layout l = read_layout_file(f.string());
        if (!ids.insert(l.layout_id).second) throw IntegrityError("duplicate input layout id '" + l.layout_id + "'");
        out.push_back(std::move(l));
    }
    if (out.empty()) throw DomainError("no input layouts in '" + dir + "'");
    return out;
}

// Adds a per-request seed so generator sampling follows the run seed.
class SeededBackend final : public GeneratorBackend {
public:
    SeededBackend(GeneratorBackend& inner, std::uint64_t seed) : inner_(inner), seed_(seed) {}
    Json generate(const Json& request) override {
        Json r = request;
        r["seed"] = seed_;
        return inner_.generate(r);
    }

private:
    GeneratorBackend& inner_;
    std::uint64_t seed_;
};

class Runner {
public:
    Runner(const PipelineConfig& cfg, RunReport& report) : cfg_(cfg), report_(report) {}

    Endpoint endpoint(const std::string& url) const {
        Endpoint ep;
        ep.url = url;
        ep.retries = cfg_.retries;
        ep.timeout = std::chrono::milliseconds(cfg_.timeout_ms);
        ep.api_key = cfg_.api_key;
        return ep;
    }

    void warn(const std::string& w) { report_.warnings.push_back(w); }

    // Runs `remote` when an endpoint is configured, `local` otherwise or on a
    // service failure when fallbacks are allowed.
    template <class T>
    T with_fallback(const char* stage, const std::optional<std::string>& url, const std::function<T()>& remote,
                    const std::function<T()>& local) {
        if (url) {
            try {
                return remote();
            } catch (const TransportError& e) {
                if (!cfg_.heuristic_fallback) throw PipelineError(stage, e.what());
                warn(std::string(stage) + ": " + e.what() + "; used local fallback");
            } catch (const ProtocolError& e) {
                if (!cfg_.heuristic_fallback) throw PipelineError(stage, e.what());
                warn(std::string(stage) + ": " + e.what() + "; used local fallback");
            }
        } else if (!cfg_.heuristic_fallback) {
            throw PipelineError(stage, "no endpoint configured and heuristic fallback disabled");
        }
        return local();
    }

    Json grouping(State& st) {
        st.grouped.clear();
        int groups = 0, repairs = 0;
        Json logs = Json::object();
        for (const auto& l : st.originals) {
            Partition p;
            RepairLog log;
            if (!cfg_.grouping) {
                for (const auto& e : l.elements) p.groups.push_back({e.id});
            } else {
                p = with_fallback<Partition>(
                    "grouping", cfg_.endpoints.grouper,
                    [&] { return RemoteGrouper(endpoint(*cfg_.endpoints.grouper)).group(l, log); },
                    [&] { return group_heuristic(l); });
            }
            if (!log.empty()) logs[l.layout_id] = log.entries;
            repairs += static_cast<int>(log.entries.size());
            groups += static_cast<int>(p.size());
            Layout g = l;
            g.groups = p.groups;
            st.grouped.push_back(std::move(g));
        }
        write("grouping", Json{{"layouts", layouts_json(st.grouped)}, {"repairs", logs}});
        return Json{{"layouts", st.grouped.size()}, {"groups", groups}, {"repairs", repairs}};
    }

    Json generation(State& st) {
        st.batches.clear();
        StubGenerator local;
        std::unique_ptr<HttpGenerator> http;
        if (cfg_.endpoints.generator) http = std::make_unique<HttpGenerator>(endpoint(*cfg_.endpoints.generator));
        int generated = 0, dropped = 0, requests = 0;
        Json warnings = Json::array();
        for (const auto& l : st.grouped) {
            for (std::size_t vi = 0; vi < cfg_.variants.size(); ++vi) {
                const Variant v = cfg_.variants[vi];
                const GeneratorRequest req =
                    make_generator_request(l, Partition{*l.groups}, v, cfg_.num_samples, cfg_.temperature);
                const std::uint64_t seed = mix_seed(mix_seed(cfg_.seed, fnv1a64(l.layout_id)), vi);
                FetchResult fr = with_fallback<FetchResult>(
                    "generation", cfg_.endpoints.generator,
                    [&] {
                        SeededBackend b(*http, seed);
                        return fetch_candidates(req, b);
                    },
                    [&] {
                        SeededBackend b(local, seed);
                        return fetch_candidates(req, b);
                    });
                ++requests;
                generated += static_cast<int>(fr.layouts.size());
                dropped += fr.dropped;
                for (auto& w : fr.warnings) warnings.push_back(l.layout_id + ": " + w);
                st.batches.push_back({l.layout_id, v, std::move(fr.layouts)});
            }
        }
        Json out = batches_json(st.batches);
        out["warnings"] = warnings;
        write("generation", out);
        return Json{{"requests", requests}, {"generated", generated}, {"dropped", dropped}};
    }

    Json filtering(State& st) {
        int kept = 0, discarded = 0;
        std::map<std::string, int> reasons;
        std::map<std::string, Json> discards;
        if (cfg_.filtering) {
            HeuristicGateConfig gc;
            gc.params.snap_tolerance = cfg_.snap_tolerance;
            gc.overlap_budget = cfg_.overlap_budget;
            gc.threshold = cfg_.score_threshold;
            HeuristicGate heuristic(gc);
            std::shared_ptr<Judge> judge;
            if (cfg_.judge_gate) {
                if (cfg_.endpoints.judge)
                    judge = std::make_shared<RemoteJudge>(endpoint(*cfg_.endpoints.judge));
                else if (cfg_.heuristic_fallback)
                    judge = std::make_shared<HeuristicJudge>();
                else
                    throw PipelineError("filtering", "judge gate needs a judge endpoint or heuristic fallback");
            }
            for (auto& b : st.batches) {
                FilterResult fr = filter_low_quality(b.layouts, heuristic);
                if (judge) {
                    JudgeGate jg(judge);
                    FilterResult second;
                    try {
                        second = filter_low_quality(fr.kept, jg);
                    } catch (const Error& e) {
                        if (!cfg_.heuristic_fallback) throw PipelineError("filtering", e.what());
                        warn(std::string("filtering: ") + e.what() + "; used heuristic judge");
                        JudgeGate local(std::make_shared<HeuristicJudge>());
                        second = filter_low_quality(fr.kept, local);
                    }
                    fr.kept = std::move(second.kept);
                    for (auto& d : second.discarded) fr.discarded.push_back(std::move(d));
                }
                Json d = Json::array();
                for (const auto& x : fr.discarded) {
                    Json rs = Json::array();
                    for (auto r : x.reasons) {
                        rs.push_back(std::string(to_string(r)));
                        ++reasons[std::string(to_string(r))];
                    }
                    d.push_back(Json{{"layout_id", x.layout.layout_id}, {"reasons", rs}});
                }
                discards[b.design + "__" + std::string(to_string(b.variant))] = d;
                kept += static_cast<int>(fr.kept.size());
                discarded += static_cast<int>(fr.discarded.size());
                b.layouts = std::move(fr.kept);
            }
        } else {
            for (const auto& b : st.batches) kept += static_cast<int>(b.layouts.size());
        }
        Json out = batches_json(st.batches, [&](const Batch& b, Json& j) {
            auto it = discards.find(b.design + "__" + std::string(to_string(b.variant)));
            j["discarded"] = it == discards.end() ? Json::array() : it->second;
        });
        write("filtering", out);
        return Json{{"kept", kept}, {"discarded", discarded}, {"reasons", reasons}};
    }

    Json clustering(State& st) {
        int clusters = 0, selected = 0;
        std::map<std::string, Json> details;
        for (auto& b : st.batches) {
            const std::string key = b.design + "__" + std::string(to_string(b.variant));
            if (!cfg_.clustering || b.layouts.empty()) {
                selected += static_cast<int>(b.layouts.size());
                continue;
            }
            const ClusterSet cs = cluster_layouts(b.layouts, cfg_.cluster_tau);
            const auto ids = select_distinct(b.layouts, static_cast<std::size_t>(cfg_.top_k), cfg_.selection,
                                             cfg_.cluster_tau);
            std::vector<Layout> chosen;
            for (const auto& id : ids)
                for (const auto& l : b.layouts)
                    if (l.layout_id == id) chosen.push_back(l);
            details[key] = Json{{"clusters", cs.clusters}, {"selected", ids}};
            clusters += static_cast<int>(cs.clusters.size());
            selected += static_cast<int>(chosen.size());
            b.layouts = std::move(chosen);
        }
        write("clustering", batches_json(st.batches, [&](const Batch& b, Json& j) {
                  auto it = details.find(b.design + "__" + std::string(to_string(b.variant)));
                  if (it != details.end()) j["clustering"] = it->second;
              }));
        return Json{{"clusters", clusters}, {"selected", selected}};
    }

    Json refinement(State& st) {
        const RefineConfig rc{cfg_.snap_tolerance, cfg_.max_iterations, cfg_.step_damping, true};
        int refined = 0, converged = 0;
        std::map<std::string, Json> logs;
        for (auto& b : st.batches) {
            if (!cfg_.refinement) continue;
            for (auto& l : b.layouts) {
                RefineResult r = with_fallback<RefineResult>(
                    "refinement", cfg_.endpoints.refiner,
                    [&] { return RemoteRefiner(endpoint(*cfg_.endpoints.refiner), rc).refine(l); },
                    [&] { return refine_layout_detailed(l, rc); });
                if (!r.log.empty()) logs[l.layout_id] = r.log;
                ++refined;
                if (r.converged) ++converged;
                l = std::move(r.layout);
            }
        }
        Json out = batches_json(st.batches);
        out["logs"] = logs;
        write("refinement", out);
        return Json{{"refined", refined}, {"converged", converged}};
    }

    Json sampling(State& st) {
        std::map<Variant, std::vector<Layout>> pool;
        for (const auto& b : st.batches)
            for (const auto& l : b.layouts) pool[b.variant].push_back(l);
        auto quotas = quotas_from_ratio(cfg_.total_pairs, cfg_.variant_ratio);
        SamplingOptions so;
        so.max_reuse = cfg_.max_reuse;
        so.low_diversity_threshold = cfg_.low_diversity_threshold;
        GeometricEmbedder geometric;
        SamplingResult sr = with_fallback<SamplingResult>(
            "sampling", cfg_.endpoints.embedder,
            [&] {
                RemoteEmbedder remote(endpoint(*cfg_.endpoints.embedder));
                return sample_diverse_pairs(pool, quotas, remote, so);
            },
            [&] { return sample_diverse_pairs(pool, quotas, geometric, so); });
        st.pairs.clear();
        int low = 0;
        for (auto& sp : sr.pairs) {
            if (sp.low_diversity) ++low;
            sp.pair.provenance = PairProvenance::pipeline;
            st.pairs.push_back(std::move(sp.pair));
        }
        Json pairs = Json::array();
        for (const auto& p : st.pairs) pairs.push_back(to_json(p));
        Json shortfall = Json::object();
        int missing = 0;
        for (const auto& [v, n] : sr.shortfall) {
            shortfall[std::string(to_string(v))] = n;
            missing += n;
        }
        Json q = Json::object();
        for (const auto& [v, n] : quotas) q[std::string(to_string(v))] = n;
        write("sampling", Json{{"pairs", pairs}, {"quotas", q}, {"shortfall", shortfall}});
        return Json{{"pairs", st.pairs.size()}, {"shortfall", missing}, {"low_diversity", low}};
    }

    Json emission(State& st) {
        std::string lines;
        for (const auto& p : st.pairs) lines += to_json(p).dump() + "\n";
        const fs::path out(cfg_.output_dir);
        write_text_atomic((out / "pairs.jsonl").string(), lines);
        Dataset d;
        for (const auto& p : st.pairs) d.add_pair(p);
        Json cfg = to_json(cfg_);
        d.manifest_extra["pipeline"] = Json{{"seed", cfg_.seed}, {"config", cfg}};
        save_dataset(d, (out / "dataset").string());
        write("emission", Json{{"pairs_path", (out / "pairs.jsonl").string()}, {"pairs", st.pairs.size()}});
        return Json{{"pairs", st.pairs.size()}};
    }

    void load(const std::string& stage, State& st) {
        const Json j = read_json_file(artifact(stage).string());
        if (stage == "grouping") {
            st.grouped = layouts_from(j.at("layouts"));
        } else if (stage == "sampling") {
            st.pairs.clear();
            for (const auto& p : j.at("pairs")) st.pairs.push_back(pair_from_json(p));
        } else if (stage != "emission") {
            st.batches = batches_from(j);
        }
    }

    fs::path stage_dir(const std::string& stage) const {
        int idx = 0;
        while (kPipelineStages[idx] != stage) ++idx;
        char name[64];
        std::snprintf(name, sizeof name, "%02d_%s", idx + 1, stage.c_str());
        return fs::path(cfg_.output_dir) / name;
    }
    fs::path artifact(const std::string& stage) const { return stage_dir(stage) / "output.json"; }
    fs::path marker(const std::string& stage) const { return stage_dir(stage) / "_done.json"; }

    void write(const std::string& stage, const Json& j) { write_json_file(artifact(stage).string(), j); }

private:
    const PipelineConfig& cfg_;
    RunReport& report_;
};

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    const std::vector<std::string> stages(std::begin(kPipelineStages), std::end(kPipelineStages));
    auto index_of = [&](const std::string& s) {
        const auto it = std::find(stages.begin(), stages.end(), s);
        if (it == stages.end()) throw DomainError("unknown stage '" + s + "'");
        return static_cast<std::size_t>(it - stages.begin());
    };
    std::size_t rerun_from = opt.from_stage ? index_of(*opt.from_stage) : stages.size();
    const std::size_t until = opt.until_stage ? index_of(*opt.until_stage) : stages.size() - 1;

    RunReport report;
    Runner runner(cfg, report);
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);

    const Json cfg_json = to_json(cfg);
    const fs::path cfg_path = out / "run_config.json";
    if (fs::exists(cfg_path) && read_json_file(cfg_path.string()) != cfg_json) {
        report.warnings.push_back("configuration changed since the previous run; rerunning every stage");
        rerun_from = 0;
    }
    write_json_file(cfg_path.string(), cfg_json);

    State st;
    try {
        st.originals = read_inputs(cfg.input_dir);
    } catch (const Error& e) {
        throw PipelineError("grouping", e.what());
    }

    bool rerun = false;
    for (std::size_t i = 0; i <= until; ++i) {
        const std::string& stage = stages[i];
        if (i >= rerun_from) rerun = true;
        StageReport sr;
        sr.name = stage;
        if (!rerun && fs::exists(runner.marker(stage))) {
            try {
                runner.load(stage, st);
                sr.counts = read_json_file(runner.marker(stage).string()).at("counts");
                sr.status = "resumed";
                report.stages.push_back(std::move(sr));
                continue;
            } catch (const Error& e) {
                report.warnings.push_back(stage + ": could not resume (" + e.what() + "); rerunning");
            } catch (const Json::exception& e) {
                report.warnings.push_back(stage + ": could not resume (" + e.what() + "); rerunning");
            }
        }
        rerun = true;
        fs::remove_all(runner.stage_dir(stage));
        try {
            if (stage == "grouping") sr.counts = runner.grouping(st);
            else if (stage == "generation") sr.counts = runner.generation(st);
            else if (stage == "filtering") sr.counts = runner.filtering(st);
            else if (stage == "clustering") sr.counts = runner.clustering(st);
            else if (stage == "refinement") sr.counts = runner.refinement(st);
            else if (stage == "sampling") sr.counts = runner.sampling(st);
            else sr.counts = runner.emission(st);
        } catch (const PipelineError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(stage, e.what());
        }
        write_json_file(runner.marker(stage).string(), Json{{"stage", stage}, {"counts", sr.counts}});
        sr.status = "ran";
        report.stages.push_back(std::move(sr));
    }
    // Any later stage left over from an earlier run is now stale.
    for (std::size_t i = until + 1; i < stages.size() && rerun; ++i) fs::remove_all(runner.stage_dir(stages[i]));

    report.pair_count = st.pairs.size();
    if (until == stages.size() - 1) report.pairs_path = (out / "pairs.jsonl").string();
    write_json_file((out / "report.json").string(), to_json(report));
    return report;
}

}  // namespace dsense
