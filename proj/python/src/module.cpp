// JSON-text bindings; the Python package converts to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "designsense/augment.hpp"
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
#include "designsense/synthetic.hpp"

namespace py = pybind11;
using namespace dsense;

namespace {

Json parse(const std::string& text) { return parse_json_text(text, "argument"); }

Layout layout_arg(const std::string& text) { return layout_from_json(parse(text)); }

std::vector<Layout> layouts_arg(const std::string& text) {
    const Json j = parse(text);
    if (!j.is_array()) throw ParseError("layouts", "expected a list");
    std::vector<Layout> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(layout_from_json(j[i], "layouts[" + std::to_string(i) + "]"));
    return out;
}

std::vector<PreferenceLabel> labels_arg(const std::vector<std::string>& v) {
    std::vector<PreferenceLabel> out;
    for (const auto& s : v) out.push_back(label_from_string(s));
    return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

PYBIND11_MODULE(_designsense, m) {
    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<InvalidGeometry>(m, "InvalidGeometry", base.ptr());
    py::register_exception<TransportError>(m, "TransportError", base.ptr());
    py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());

    m.def("normalize_layout", [](const std::string& l) { return to_json(layout_arg(l)).dump(); });

    m.def("validate_layout", [](const std::string& l, double tol) {
        const ValidationReport r = validate_layout(layout_arg(l), tol);
        return Json{{"overflow_area", r.overflow_area},
                    {"overlap_area", r.overlap_area},
                    {"misaligned_pairs", r.misaligned_pairs},
                    {"is_clean", r.is_clean}}
            .dump();
    });

    m.def("iou", [](std::array<double, 4> a, std::array<double, 4> b) {
        return iou(BBox{a[0], a[1], a[2], a[3]}, BBox{b[0], b[1], b[2], b[3]});
    });

    m.def("apply_variant", [](int w, int h, const std::string& v) {
        const Canvas c = apply_variant(Canvas{w, h}, variant_from_string(v));
        return std::pair<int, int>{c.width_px, c.height_px};
    });

    m.def("perturb_layout", [](const std::string& l, std::uint64_t seed, double fraction) {
        PerturbationConfig cfg;
        cfg.seed = seed;
        cfg.element_fraction = fraction;
        return to_json(perturb_layout(layout_arg(l), cfg)).dump();
    });

    m.def("group_heuristic", [](const std::string& l, double gap) {
        HeuristicGroupingParams p;
        p.gap_threshold = gap;
        return to_json(group_heuristic(layout_arg(l), p)).dump();
    });

    m.def("ari", [](const std::string& a, const std::string& b) {
        return ari(partition_from_json(parse(a)), partition_from_json(parse(b)));
    });

    m.def("layout_similarity",
          [](const std::string& a, const std::string& b) { return layout_similarity(layout_arg(a), layout_arg(b)); });

    m.def("cluster_layouts", [](const std::string& pool, double tau) {
        const ClusterSet cs = cluster_layouts(layouts_arg(pool), tau);
        return Json{{"clusters", cs.clusters}, {"representatives", cs.representatives}}.dump();
    });

    m.def("refine_layout", [](const std::string& l, double snap, int max_iter, double damping) {
        RefineConfig cfg;
        cfg.snap_tolerance = snap;
        cfg.max_iterations = max_iter;
        cfg.step_damping = damping;
        const RefineResult r = refine_layout_detailed(layout_arg(l), cfg);
        return Json{{"layout", to_json(r.layout)},
                    {"converged", r.converged},
                    {"iterations", r.iterations},
                    {"overlap_history", r.overlap_history}}
            .dump();
    });

    m.def("heuristic_score", [](const std::string& l) { return heuristic_score(layout_arg(l)); });

    m.def("judge_pair", [](const std::string& pair, bool with_debias) {
        const PreferencePair p = pair_from_json(parse(pair));
        HeuristicJudge judge;
        return to_json(with_debias ? debias(p, judge) : judge.judge(p)).dump();
    });

    m.def("best_of_n", [](const std::string& cands) {
        HeuristicJudge judge;
        return best_of_n(layouts_arg(cands), judge).layout_id;
    });

    m.def("evaluate", [](const std::vector<std::string>& preds, const std::vector<std::string>& golds, bool fixed) {
        return to_json(evaluate(labels_arg(preds), labels_arg(golds), fixed)).dump();
    });

    m.def("binary_accuracy", [](const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
        const BinaryAccuracy b = binary_accuracy(labels_arg(preds), labels_arg(golds));
        return Json{{"value", optional_number(b.value)}, {"subset_size", b.subset_size}}.dump();
    });

    m.def("agreement_rates", [](const std::vector<std::vector<std::string>>& items) {
        std::vector<std::vector<PreferenceLabel>> v;
        for (const auto& i : items) v.push_back(labels_arg(i));
        return to_json(agreement_rates(v)).dump();
    });

    m.def("format_percent", &format_percent);

    m.def("render_svg", [](const std::string& l) { return render_svg(layout_arg(l)); });
    m.def("render_pair", [](const std::string& p) { return render_pair(pair_from_json(parse(p))); });

    m.def("synthetic_corpus", [](std::size_t n, std::uint64_t seed) {
        Json out = Json::array();
        for (const auto& l : synthetic_corpus(n, seed)) out.push_back(to_json(l));
        return out.dump();
    });

    m.def("run_pipeline", [](const std::string& cfg) {
        PipelineConfig c = pipeline_config_from_json(parse(cfg));
        py::gil_scoped_release release;
        return to_json(run_pipeline(c)).dump();
    });
}
