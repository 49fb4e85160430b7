// dsense: command-line front end for the DesignSense toolkit.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "designsense/annotation.hpp"
#include "designsense/augment.hpp"
#include "designsense/dataset.hpp"
#include "designsense/diversity.hpp"
#include "designsense/error.hpp"
#include "designsense/grouping.hpp"
#include "designsense/json_io.hpp"
#include "designsense/judge.hpp"
#include "designsense/metrics.hpp"
#include "designsense/pipeline.hpp"
#include "designsense/rank.hpp"
#include "designsense/refine.hpp"
#include "designsense/render.hpp"
#include "designsense/stubs.hpp"
#include "designsense/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dsense;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> nonblank_lines(const std::string& path) {
    std::vector<std::string> out;
    std::istringstream in(read_text(path));
    for (std::string line; std::getline(in, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
    return out;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_atomic(out, text);
}

// A directory of *.json (or its layouts/ subdirectory), a JSONL file, or one layout file.
std::vector<Layout> read_layouts(const std::string& path) {
    std::vector<Layout> out;
    fs::path p(path);
    if (fs::is_directory(p)) {
        if (fs::is_directory(p / "layouts")) p /= "layouts";
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(p))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(read_layout_file(f.string()));
    } else if (p.extension() == ".jsonl") {
        const auto lines = nonblank_lines(path);
        for (std::size_t i = 0; i < lines.size(); ++i)
            out.push_back(layout_from_json(parse_json_text(lines[i], path + " line " + std::to_string(i + 1)),
                                           "line " + std::to_string(i + 1)));
    } else {
        out.push_back(read_layout_file(path));
    }
    return out;
}

std::vector<PreferencePair> read_pairs(const std::string& path) {
    std::vector<PreferencePair> out;
    if (fs::is_directory(path)) return load_dataset(path).pairs;
    const auto lines = nonblank_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = path + " line " + std::to_string(i + 1);
        out.push_back(pair_from_json(parse_json_text(lines[i], where), where));
    }
    return out;
}

std::string pairs_jsonl(const std::vector<PreferencePair>& pairs) {
    std::string s;
    for (const auto& p : pairs) s += to_json(p).dump() + "\n";
    return s;
}

// Lines holding a bare label, or JSON objects with "label" (verdicts) or "gold_label" (pairs).
std::vector<PreferenceLabel> read_labels(const std::string& path) {
    std::vector<PreferenceLabel> out;
    for (const auto& raw : nonblank_lines(path)) {
        std::string line = raw;
        line.erase(0, line.find_first_not_of(" \t"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (!line.empty() && line.front() == '{') {
            const Json j = parse_json_text(line, path);
            const char* key = j.contains("label") ? "label" : "gold_label";
            if (!j.contains(key) || !j[key].is_string()) throw ParseError(path, "line lacks a label");
            out.push_back(label_from_string(j[key].get<std::string>()));
        } else {
            out.push_back(label_from_string(line));
        }
    }
    return out;
}

Endpoint endpoint_from(const std::string& url) {
    if (!is_well_formed_url(url)) throw DomainError("malformed endpoint URL '" + url + "'");
    Endpoint ep;
    ep.url = url;
    if (auto key = process_env("DSENSE_API_KEY")) ep.api_key = *key;
    return ep;
}

// "heuristic" or an http:// judge endpoint.
std::shared_ptr<Judge> make_judge(const std::string& engine) {
    if (engine == "heuristic") return std::make_shared<HeuristicJudge>();
    return std::make_shared<RemoteJudge>(endpoint_from(engine));
}

std::vector<double> parse_ratio(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw DomainError("malformed ratio '" + s + "'");
        }
    }
    return out;
}


}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DesignSense layout curation, judging and evaluation toolkit"};
    app.require_subcommand(1);

    // --- validate --------------------------------------------------------------
    std::string validate_in;
    double validate_tol = kDefaultSnapTolerance;
    auto* validate = app.add_subcommand("validate", "Validate layouts and print geometry reports");
    validate->add_option("--in", validate_in, "Layout file, JSONL file or directory")->required();
    validate->add_option("--snap", validate_tol, "Alignment snap tolerance");
    validate->callback([&] {
        Json out = Json::array();
        for (const auto& l : read_layouts(validate_in)) {
            const auto r = validate_layout(l, validate_tol);
            out.push_back(Json{{"layout_id", l.layout_id},
                               {"overflow_area", r.overflow_area},
                               {"overlap_area", r.overlap_area},
                               {"misaligned_pairs", r.misaligned_pairs},
                               {"is_clean", r.is_clean}});
        }
        std::cout << dump_pretty(out);
    });

    // --- augment ---------------------------------------------------------------
    auto* augment = app.add_subcommand("augment", "Aspect-ratio variants, perturbations and negative pairs");
    augment->require_subcommand(1);

    std::string av_in, av_kind, av_out;
    auto* av = augment->add_subcommand("variant", "Retarget a layout's canvas to a variant");
    av->add_option("--in", av_in, "Layout file")->required();
    av->add_option("--kind", av_kind, "original_ratio | stretching_2x | inverse_ratio")->required();
    av->add_option("--out", av_out, "Output file (default stdout)");
    av->callback([&] {
        Layout l = read_layout_file(av_in);
        const Variant v = variant_from_string(av_kind);
        l.canvas = apply_variant(l.canvas, v);
        l.variant = v;
        emit(av_out, dump_pretty(to_json(l)));
    });

    std::string ap_in, ap_out, ap_records;
    PerturbationConfig ap_cfg;
    auto* ap = augment->add_subcommand("perturb", "Perturb a fraction of a layout's elements");
    ap->add_option("--in", ap_in, "Layout file")->required();
    ap->add_option("--seed", ap_cfg.seed, "Random seed");
    ap->add_option("--fraction", ap_cfg.element_fraction, "Fraction of elements to modify");
    ap->add_option("--out", ap_out, "Output file (default stdout)");
    ap->add_option("--records", ap_records, "Also write the per-element perturbation records here");
    ap->callback([&] {
        const PerturbedLayout r = perturb_layout_detailed(read_layout_file(ap_in), ap_cfg);
        emit(ap_out, dump_pretty(to_json(r.layout)));
        if (!ap_records.empty()) {
            Json recs = Json::array();
            for (const auto& rec : r.records) {
                const char* kind = rec.kind == PerturbationKind::offset ? "offset"
                                   : rec.kind == PerturbationKind::scale_width ? "scale_width"
                                                                               : "scale_height";
                recs.push_back(Json{{"element_id", rec.element_id}, {"kind", kind}, {"dx", rec.dx}, {"dy", rec.dy},
                                    {"factor", rec.factor}});
            }
            write_json_file(ap_records, recs);
        }
    });

    std::string an_in, an_out, an_mode = "original_vs_perturbed";
    PerturbationConfig an_cfg;
    auto* an = augment->add_subcommand("negatives", "Build automatically labeled perturbation pairs");
    an->add_option("--in", an_in, "Directory or JSONL of clean original layouts")->required();
    an->add_option("--mode", an_mode, "original_vs_perturbed | both_perturbed | combined");
    an->add_option("--seed", an_cfg.seed, "Random seed");
    an->add_option("--fraction", an_cfg.element_fraction, "Fraction of elements to modify");
    an->add_option("--out", an_out, "Output pairs JSONL (default stdout)");
    an->callback([&] {
        emit(an_out, pairs_jsonl(make_negative_pairs(read_layouts(an_in), an_cfg, negative_mode_from_string(an_mode))));
    });

    std::string ag_in, ag_variant = "original_ratio", ag_endpoint, ag_out;
    int ag_samples = 10;
    double ag_temperature = 1.0;
    auto* ag = augment->add_subcommand("generate", "Request candidate layouts from a generator service");
    ag->add_option("--in", ag_in, "Grouped layout file (groups field) or plain layout")->required();
    ag->add_option("--variant", ag_variant, "Target variant");
    ag->add_option("--endpoint", ag_endpoint, "Generator URL; omitted uses the built-in stub");
    ag->add_option("--num-samples", ag_samples, "Candidates to request");
    ag->add_option("--temperature", ag_temperature, "Sampling temperature");
    ag->add_option("--out", ag_out, "Output JSONL of candidates (default stdout)");
    ag->callback([&] {
        const Layout l = read_layout_file(ag_in);
        const Partition p = l.groups ? Partition{*l.groups} : group_heuristic(l);
        const auto req = make_generator_request(l, p, variant_from_string(ag_variant), ag_samples, ag_temperature);
        StubGenerator stub;
        std::unique_ptr<HttpGenerator> http;
        if (!ag_endpoint.empty()) http = std::make_unique<HttpGenerator>(endpoint_from(ag_endpoint));
        const FetchResult r = fetch_candidates(req, http ? static_cast<GeneratorBackend&>(*http) : stub);
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::string s;
        for (const auto& c : r.layouts) s += to_json(c).dump() + "\n";
        emit(ag_out, s);
    });

    // --- group -----------------------------------------------------------------
    auto* group = app.add_subcommand("group", "Element grouping and partition scoring");
    group->require_subcommand(1);
    std::string gr_in, gr_endpoint, gr_out;
    double gr_gap = 0.02;
    auto* gr = group->add_subcommand("run", "Group a layout's elements");
    gr->add_option("--in", gr_in, "Layout file")->required();
    gr->add_option("--endpoint", gr_endpoint, "Grouper URL; omitted uses the heuristic grouper");
    gr->add_option("--gap", gr_gap, "Heuristic gap threshold");
    gr->add_option("--out", gr_out, "Output layout with groups (default stdout)");
    gr->callback([&] {
        Layout l = read_layout_file(gr_in);
        RepairLog log;
        HeuristicGroupingParams params;
        params.gap_threshold = gr_gap;
        const Partition p =
            gr_endpoint.empty() ? group_heuristic(l, params) : RemoteGrouper(endpoint_from(gr_endpoint)).group(l, log);
        for (const auto& e : log.entries) std::cerr << "repair: " << e << "\n";
        l.groups = p.groups;
        emit(gr_out, dump_pretty(to_json(l)));
    });
    std::string ga_a, ga_b;
    auto* ga = group->add_subcommand("ari", "Adjusted Rand Index between two partition files");
    ga->add_option("--predicted", ga_a, "Partition file {layout_id, groups}")->required();
    ga->add_option("--gold", ga_b, "Gold partition file")->required();
    ga->callback([&] {
        const auto a = read_gold_partition(ga_a);
        const auto b = read_gold_partition(ga_b);
        std::cout << dump_pretty(Json{{"layout_id", b.layout_id}, {"ari", ari(a.partition, b.partition)}});
    });

    // --- diversity -------------------------------------------------------------
    auto* diversity = app.add_subcommand("diversity", "IoU clustering and diversity sampling");
    diversity->require_subcommand(1);
    std::string dc_in, dc_select = "cluster-reps", dc_out;
    double dc_tau = 0.6;
    std::size_t dc_k = 3;
    auto* dc = diversity->add_subcommand("cluster", "Cluster candidate layouts by mean IoU");
    dc->add_option("--in", dc_in, "Directory or JSONL of candidates over one element set")->required();
    dc->add_option("--tau", dc_tau, "Average-linkage merge threshold");
    dc->add_option("--select", dc_select, "cluster-reps | min-mutual");
    dc->add_option("--k", dc_k, "Number of distinct layouts to select");
    dc->add_option("--out", dc_out, "Output JSON (default stdout)");
    dc->callback([&] {
        const auto pool = read_layouts(dc_in);
        const auto sim = similarity_matrix(pool);
        ClusterSet cs = cluster_layouts(sim, dc_tau);
        cs.representatives = select_representatives(cs, sim);
        const auto picked = select_distinct(pool, dc_k, distinct_selection_from_string(dc_select), dc_tau);
        emit(dc_out, dump_pretty(Json{{"clusters", cs.clusters},
                                      {"representatives", cs.representatives},
                                      {"selected", picked},
                                      {"tau", dc_tau}}));
    });

    std::string ds_in, ds_ratio = "4:4:2", ds_embedder, ds_out;
    int ds_total = 10;
    SamplingOptions ds_opt;
    auto* ds = diversity->add_subcommand("sample", "Sample the most diverse pairs per variant");
    ds->add_option("--in", ds_in, "Directory or JSONL of refined layouts (variant field set)")->required();
    ds->add_option("--total", ds_total, "Total pairs to emit");
    ds->add_option("--ratio", ds_ratio, "stretching_2x:inverse_ratio:original_ratio quota ratio");
    ds->add_option("--max-reuse", ds_opt.max_reuse, "Maximum pairs any layout may appear in");
    ds->add_option("--embedder", ds_embedder, "Embedder URL; omitted uses geometric features");
    ds->add_option("--out", ds_out, "Output pairs JSONL (default stdout)");
    ds->callback([&] {
        const auto r = parse_ratio(ds_ratio);
        if (r.size() != 3) throw DomainError("--ratio needs three parts");
        std::map<Variant, std::vector<Layout>> pool;
        for (auto& l : read_layouts(ds_in)) pool[l.variant].push_back(std::move(l));
        GeometricEmbedder geo;
        std::unique_ptr<RemoteEmbedder> remote;
        if (!ds_embedder.empty()) remote = std::make_unique<RemoteEmbedder>(endpoint_from(ds_embedder));
        const auto res = sample_diverse_pairs(pool, quotas_from_ratio(ds_total, {r[0], r[1], r[2]}),
                                              remote ? static_cast<Embedder&>(*remote) : geo, ds_opt);
        std::vector<PreferencePair> pairs;
        for (const auto& sp : res.pairs) {
            if (sp.low_diversity) std::cerr << "warning: low diversity pair " << sp.pair.pair_id << "\n";
            pairs.push_back(sp.pair);
        }
        for (const auto& [v, n] : res.shortfall)
            std::cerr << "warning: " << to_string(v) << " quota short by " << n << "\n";
        emit(ds_out, pairs_jsonl(pairs));
    });

    // --- refine ----------------------------------------------------------------
    auto* refine = app.add_subcommand("refine", "Layout refinement and human preference ratio");
    refine->require_subcommand(1);
    std::string rr_in, rr_out, rr_endpoint;
    RefineConfig rr_cfg;
    auto* rr = refine->add_subcommand("run", "Remove overlaps, snap alignments, clamp overflow");
    rr->add_option("--in", rr_in, "Layout file")->required();
    rr->add_option("--snap", rr_cfg.snap_tolerance, "Snap tolerance");
    rr->add_option("--max-iter", rr_cfg.max_iterations, "Iteration cap");
    rr->add_option("--damping", rr_cfg.step_damping, "Push step damping in (0, 1]");
    rr->add_option("--endpoint", rr_endpoint, "Remote refiner URL; omitted uses the local optimizer");
    rr->add_option("--out", rr_out, "Output layout (default stdout)");
    rr->callback([&] {
        const Layout l = read_layout_file(rr_in);
        const RefineResult r =
            rr_endpoint.empty() ? refine_layout_detailed(l, rr_cfg) : RemoteRefiner(endpoint_from(rr_endpoint), rr_cfg).refine(l);
        for (const auto& e : r.log) std::cerr << e << "\n";
        std::cerr << "converged: " << (r.converged ? "yes" : "no") << ", iterations: " << r.iterations << "\n";
        emit(rr_out, dump_pretty(to_json(r.layout)));
    });
    std::string rh_records;
    auto* rh = refine->add_subcommand("hpr", "Refined-over-original preference ratio");
    rh->add_option("--records", rh_records, "JSON array or JSONL of comparison records")->required();
    rh->callback([&] {
        const HprResult r = hpr(read_hpr_records(rh_records));
        Json j{{"ratio", r.ratio ? Json(*r.ratio) : Json(nullptr)},
               {"refined_preferred", r.refined_preferred},
               {"original_preferred", r.original_preferred},
               {"ties_excluded", r.ties_excluded}};
        if (!r.ratio) j["undefined"] = "no comparison preferred the original";
        std::cout << dump_pretty(j);
    });

    // --- judge -----------------------------------------------------------------
    auto* judge = app.add_subcommand("judge", "4-class pairwise judging and quality filtering");
    judge->require_subcommand(1);
    std::string jr_pairs, jr_engine = "heuristic", jr_endpoint, jr_out;
    bool jr_debias = false;
    auto* jr = judge->add_subcommand("run", "Judge preference pairs");
    jr->add_option("--pairs", jr_pairs, "Pairs JSONL (inline layouts) or dataset directory")->required();
    jr->add_option("--engine", jr_engine, "heuristic | remote");
    jr->add_option("--endpoint", jr_endpoint, "Judge URL for the remote engine");
    jr->add_flag("--debias", jr_debias, "Judge both presentation orders and reconcile");
    jr->add_option("--out", jr_out, "Output verdicts JSONL (default stdout)");
    jr->callback([&] {
        std::shared_ptr<Judge> inner;
        if (jr_engine == "heuristic") {
            inner = std::make_shared<HeuristicJudge>();
        } else if (jr_engine == "remote") {
            if (jr_endpoint.empty()) throw DomainError("--engine remote needs --endpoint");
            inner = std::make_shared<RemoteJudge>(endpoint_from(jr_endpoint));
        } else {
            throw DomainError("unknown engine '" + jr_engine + "'");
        }
        std::string s;
        for (const auto& p : read_pairs(jr_pairs)) {
            const Verdict v = jr_debias ? debias(p, *inner) : inner->judge(p);
            Json j = to_json(v);
            j["pair_id"] = p.pair_id;
            if (p.gold_label) j["gold_label"] = std::string(to_string(*p.gold_label));
            s += j.dump() + "\n";
        }
        emit(jr_out, s);
    });
    std::string jf_in, jf_out;
    HeuristicGateConfig jf_cfg;
    auto* jf = judge->add_subcommand("filter", "Drop overflowing, overlapping or low-scoring layouts");
    jf->add_option("--in", jf_in, "Directory or JSONL of layouts")->required();
    jf->add_option("--overlap-budget", jf_cfg.overlap_budget, "Maximum total overlap");
    jf->add_option("--threshold", jf_cfg.threshold, "Minimum heuristic score");
    jf->add_option("--out", jf_out, "Output JSONL of kept layouts (default stdout)");
    jf->callback([&] {
        HeuristicGate gate(jf_cfg);
        const FilterResult r = filter_low_quality(read_layouts(jf_in), gate);
        std::string s;
        for (const auto& l : r.kept) s += to_json(l).dump() + "\n";
        for (const auto& d : r.discarded) {
            std::cerr << "discarded " << d.layout.layout_id << ":";
            for (auto reason : d.reasons) std::cerr << " " << to_string(reason);
            std::cerr << "\n";
        }
        emit(jf_out, s);
    });

    // --- metrics ---------------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "Evaluation metrics");
    metrics->require_subcommand(1);
    std::string me_preds, me_golds, me_out;
    bool me_fixed = false, me_json = false;
    auto* me = metrics->add_subcommand("eval", "Accuracy, binary accuracy, kappa and F1 scores");
    me->add_option("--preds", me_preds, "Predicted labels (one per line, or verdict JSONL)")->required();
    me->add_option("--golds", me_golds, "Gold labels (one per line, or pair JSONL)")->required();
    me->add_flag("--fixed-classes", me_fixed, "Average macro F1 over all four classes");
    me->add_flag("--json", me_json, "Print JSON instead of the table");
    me->add_option("--out", me_out, "Also write the JSON report here");
    me->callback([&] {
        const MetricsReport r = evaluate(read_labels(me_preds), read_labels(me_golds), me_fixed);
        if (!me_out.empty()) write_json_file(me_out, to_json(r));
        std::cout << (me_json ? dump_pretty(to_json(r)) : format_table(r));
    });
    std::string ma_in;
    auto* ma = metrics->add_subcommand("agreement", "Inter-annotator agreement from annotation records");
    ma->add_option("--annotations", ma_in, "annotations.jsonl")->required();
    ma->callback([&] {
        std::map<std::string, std::map<std::string, PreferenceLabel>> by_pair;
        const auto lines = nonblank_lines(ma_in);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::string where = ma_in + " line " + std::to_string(i + 1);
            const auto r = annotation_from_json(parse_json_text(lines[i], where), where);
            by_pair[r.pair_id].emplace(r.annotator_id, r.label);
        }
        std::vector<std::vector<PreferenceLabel>> items;
        for (const auto& [pid, m] : by_pair) {
            std::vector<PreferenceLabel> v;
            for (const auto& [a, l] : m) v.push_back(l);
            items.push_back(std::move(v));
        }
        std::cout << dump_pretty(to_json(agreement_rates(items)));
    });
    std::string mw_in, mw_side = "left";
    bool mw_half = false;
    auto* mw = metrics->add_subcommand("win-rate", "Generated-over-reference win rate");
    mw->add_option("--verdicts", mw_in, "Verdict JSONL; optional per-line \"generated\": left|right")->required();
    mw->add_option("--generated", mw_side, "Default side holding the generated layout");
    mw->add_flag("--half-win", mw_half, "Count both_good as half a win");
    mw->callback([&] {
        std::vector<Comparison> cs;
        for (const auto& line : nonblank_lines(mw_in)) {
            const Json j = parse_json_text(line, mw_in);
            const std::string side = j.value("generated", mw_side);
            if (side != "left" && side != "right") throw DomainError("generated side must be left or right");
            cs.push_back({verdict_from_json(j), side == "left" ? GeneratedSide::left : GeneratedSide::right});
        }
        std::cout << format_percent(win_rate(cs, mw_half)) << "\n";
    });

    // --- rank ------------------------------------------------------------------
    auto* rank = app.add_subcommand("rank", "Best-of-N selection and scaling evaluation");
    rank->require_subcommand(1);
    std::string rb_in, rb_judge = "heuristic", rb_mode = "full", rb_dump, rb_out;
    bool rb_no_debias = false;
    auto* rb = rank->add_subcommand("best-of-n", "Pick the tournament winner among candidates");
    rb->add_option("--candidates", rb_in, "Directory or JSONL of candidates")->required();
    rb->add_option("--judge", rb_judge, "heuristic or a judge URL");
    rb->add_option("--mode", rb_mode, "full | swiss");
    rb->add_flag("--no-debias", rb_no_debias, "Judge each pair in one order only");
    rb->add_option("--dump", rb_dump, "Write the tournament (all verdicts) here");
    rb->add_option("--out", rb_out, "Output winning layout (default stdout)");
    rb->callback([&] {
        const auto cands = read_layouts(rb_in);
        auto j = make_judge(rb_judge);
        TournamentOptions opt;
        opt.mode = tournament_mode_from_string(rb_mode);
        opt.debias = !rb_no_debias;
        if (cands.size() == 1) {
            emit(rb_out, dump_pretty(to_json(cands.front())));
            return;
        }
        const Tournament t = run_tournament(cands, *j, opt);
        if (!rb_dump.empty()) write_json_file(rb_dump, to_json(t));
        for (const auto& c : cands)
            if (c.layout_id == t.ranking.front()) emit(rb_out, dump_pretty(to_json(c)));
    });
    std::string rs_manifest, rs_sel = "heuristic", rs_ref = "heuristic";
    bool rs_half = false;
    auto* rs = rank->add_subcommand("scaling-eval", "Baseline versus best-of-N win rates over references");
    rs->add_option("--samples", rs_manifest, "Manifest {samples: [{sample_id, candidates, reference}]}")->required();
    rs->add_option("--selection-judge", rs_sel, "heuristic or a judge URL");
    rs->add_option("--referee-judge", rs_ref, "heuristic or a judge URL");
    rs->add_flag("--half-win", rs_half, "Count both_good as half a win");
    rs->callback([&] {
        const Json m = read_json_file(rs_manifest);
        const fs::path base = fs::path(rs_manifest).parent_path();
        auto layout_ref = [&](const Json& v) {
            return v.is_string() ? read_layout_file((base / v.get<std::string>()).string()) : layout_from_json(v);
        };
        std::vector<ScalingSample> samples;
        for (const auto& s : m.at("samples")) {
            ScalingSample sample;
            sample.sample_id = s.value("sample_id", std::to_string(samples.size()));
            for (const auto& c : s.at("candidates")) sample.candidates.push_back(layout_ref(c));
            sample.reference = layout_ref(s.at("reference"));
            samples.push_back(std::move(sample));
        }
        auto sel = make_judge(rs_sel);
        auto ref = make_judge(rs_ref);
        std::cout << dump_pretty(to_json(scaling_eval(samples, *sel, *ref, {}, rs_half)));
    });

    // --- dataset ---------------------------------------------------------------
    auto* dataset = app.add_subcommand("dataset", "Dataset import, splits and statistics");
    dataset->require_subcommand(1);
    std::string dsp_dir, dsp_ratio = "8735:500:1000";
    std::uint64_t dsp_seed = 0;
    bool dsp_strat = false;
    auto* dsp = dataset->add_subcommand("split", "Assign pairs to train/val/test and update the manifest");
    dsp->add_option("--dataset", dsp_dir, "Dataset directory")->required();
    dsp->add_option("--ratio", dsp_ratio, "train:val:test ratio");
    dsp->add_option("--seed", dsp_seed, "Shuffle seed");
    dsp->add_flag("--stratified", dsp_strat, "Preserve gold-label proportions per split");
    dsp->callback([&] {
        Dataset d = load_dataset(dsp_dir);
        SplitOptions opt;
        opt.ratios = parse_ratio(dsp_ratio);
        opt.seed = dsp_seed;
        opt.stratified = dsp_strat;
        d.split_assignment = split_pairs(d.pairs, opt);
        save_dataset(d, dsp_dir);
        const auto sizes = split_sizes(d.split_assignment);
        std::cout << dump_pretty(Json{{"train", sizes.at(Split::train)},
                                      {"val", sizes.at(Split::val)},
                                      {"test", sizes.at(Split::test)}});
    });
    std::string dst_dir, dst_out;
    auto* dst = dataset->add_subcommand("stats", "Aspect, variant, label, group and agreement statistics");
    dst->add_option("--dataset", dst_dir, "Dataset directory")->required();
    dst->add_option("--out", dst_out, "Output prefix; writes <prefix>.json and <prefix>.csv");
    dst->callback([&] {
        const StatsReport r = stats_report(load_dataset(dst_dir));
        if (dst_out.empty()) {
            std::cout << dump_pretty(r.json);
        } else {
            write_json_file(dst_out + ".json", r.json);
            write_text_atomic(dst_out + ".csv", r.csv);
        }
    });
    std::string dim_pairs, dim_out;
    auto* dim = dataset->add_subcommand("import", "Create a dataset directory from a pairs JSONL file");
    dim->add_option("--pairs", dim_pairs, "Pairs JSONL with inline layouts")->required();
    dim->add_option("--out", dim_out, "Dataset directory")->required();
    dim->callback([&] {
        Dataset d;
        for (const auto& p : read_pairs(dim_pairs)) d.add_pair(p);
        save_dataset(d, dim_out);
        std::cout << d.pairs.size() << " pairs, " << d.layouts.size() << " layouts\n";
    });
    std::string dck_dir;
    auto* dck = dataset->add_subcommand("check", "Load a dataset and report integrity");
    dck->add_option("--dataset", dck_dir, "Dataset directory")->required();
    dck->callback([&] {
        const Dataset d = load_dataset(dck_dir);
        std::cout << "ok: " << d.pairs.size() << " pairs, " << d.layouts.size() << " layouts, "
                  << d.annotations.size() << " annotations\n";
    });

    // --- render ----------------------------------------------------------------
    auto* render = app.add_subcommand("render", "Deterministic SVG rendering");
    render->require_subcommand(1);
    std::string rl_in, rl_out;
    bool rl_no_labels = false, rl_scale_bar = false;
    auto* rl = render->add_subcommand("layout", "Render one layout");
    rl->add_option("--in", rl_in, "Layout file")->required();
    rl->add_option("--out", rl_out, "Output SVG (default stdout)");
    rl->add_flag("--no-labels", rl_no_labels, "Omit element text");
    rl->add_flag("--scale-bar", rl_scale_bar, "Draw a scale bar");
    rl->callback([&] {
        RenderStyle style;
        style.show_labels = !rl_no_labels;
        style.show_scale_bar = rl_scale_bar;
        emit(rl_out, render_svg(read_layout_file(rl_in), style));
    });
    std::string rp_in, rp_id, rp_out;
    auto* rp = render->add_subcommand("pair", "Render a pair side by side");
    rp->add_option("--pairs", rp_in, "Pairs JSONL or dataset directory")->required();
    rp->add_option("--pair-id", rp_id, "Pair to render (default the first)");
    rp->add_option("--out", rp_out, "Output SVG (default stdout)");
    rp->callback([&] {
        for (const auto& p : read_pairs(rp_in)) {
            if (rp_id.empty() || p.pair_id == rp_id) {
                emit(rp_out, render_pair(p));
                return;
            }
        }
        throw DomainError("pair '" + rp_id + "' not found");
    });

    // --- pipeline --------------------------------------------------------------
    auto* pipeline = app.add_subcommand("pipeline", "Run the curation pipeline");
    pipeline->require_subcommand(1);
    std::string pr_config, pr_input, pr_out, pr_from, pr_until;
    auto* pr = pipeline->add_subcommand("run", "Run (or resume) all stages");
    pr->add_option("--config", pr_config, "Pipeline configuration JSON")->required();
    pr->add_option("--input", pr_input, "Override input_dir");
    pr->add_option("--out", pr_out, "Override output_dir");
    pr->add_option("--from-stage", pr_from, "Rerun from this stage even if completed");
    pr->add_option("--until-stage", pr_until, "Stop after this stage");
    pr->callback([&] {
        PipelineConfig cfg = pipeline_config_from_json(read_json_file(pr_config));
        apply_env_overrides(cfg, process_env);
        if (!pr_input.empty()) cfg.input_dir = pr_input;
        if (!pr_out.empty()) cfg.output_dir = pr_out;
        RunOptions opt;
        if (!pr_from.empty()) opt.from_stage = pr_from;
        if (!pr_until.empty()) opt.until_stage = pr_until;
        const RunReport r = run_pipeline(cfg, opt);
        for (const auto& s : r.stages) std::cerr << s.name << " [" << s.status << "] " << s.counts.dump() << "\n";
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << dump_pretty(to_json(r));
    });

    // --- serve -----------------------------------------------------------------
    std::string sv_dataset, sv_host = "127.0.0.1", sv_store, sv_ui;
    int sv_port = 8080, sv_redundancy = 5;
    double sv_lease_minutes = 10.0;
    auto* serve = app.add_subcommand("serve", "Annotation service over a dataset");
    serve->add_option("--dataset", sv_dataset, "Dataset directory")->required();
    serve->add_option("--port", sv_port, "Port");
    serve->add_option("--host", sv_host, "Bind address");
    serve->add_option("--redundancy", sv_redundancy, "Annotators per pair");
    serve->add_option("--lease-minutes", sv_lease_minutes, "Task lease duration");
    serve->add_option("--store", sv_store, "Record store (default <dataset>/annotation_store.jsonl)");
    serve->add_option("--ui-dir", sv_ui, "Static UI bundle to serve under /");
    serve->callback([&] {
        AnnotationServiceOptions opt;
        opt.redundancy = sv_redundancy;
        opt.lease_ms = static_cast<std::int64_t>(sv_lease_minutes * 60000.0);
        opt.store_path = sv_store.empty() ? (fs::path(sv_dataset) / "annotation_store.jsonl").string() : sv_store;
        AnnotationService service(load_dataset(sv_dataset).pairs, opt);
        for (const auto& w : service.replay_warnings()) std::cerr << "warning: " << w << "\n";
        AnnotationServer server(service, sv_ui);
        std::cerr << "serving " << sv_dataset << " on http://" << sv_host << ":" << sv_port << "\n";
        server.listen_blocking(sv_host, sv_port);
    });

    // --- stub ------------------------------------------------------------------
    auto* stub = app.add_subcommand("stub", "Deterministic stand-in services");
    stub->require_subcommand(1);
    std::string st_host = "127.0.0.1";
    int st_port = 8090;
    auto* st = stub->add_subcommand("serve", "Serve /generate, /group, /refine, /judge and /embed");
    st->add_option("--port", st_port, "Port");
    st->add_option("--host", st_host, "Bind address");
    st->callback([&] {
        StubServer server;
        std::cerr << "stub services on http://" << st_host << ":" << st_port << "\n";
        server.listen_blocking(st_host, st_port);
    });

    // --- synth -----------------------------------------------------------------
    std::string sy_out;
    std::size_t sy_n = 5;
    std::uint64_t sy_seed = 0;
    SyntheticOptions sy_opt;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus of clean layouts");
    synth->add_option("--n", sy_n, "Number of layouts");
    synth->add_option("--seed", sy_seed, "Seed");
    synth->add_option("--min-elements", sy_opt.min_elements, "Fewest elements per layout");
    synth->add_option("--max-elements", sy_opt.max_elements, "Most elements per layout");
    synth->add_option("--out", sy_out, "Output directory")->required();
    synth->callback([&] {
        for (const auto& l : synthetic_corpus(sy_n, sy_seed, sy_opt))
            write_layout_file((fs::path(sy_out) / (l.layout_id + ".json")).string(), l);
        std::cout << sy_n << " layouts written to " << sy_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
