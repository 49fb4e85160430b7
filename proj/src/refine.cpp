#include "designsense/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"

namespace dsense {

namespace {

constexpr double kNoMove = 1e-12;
constexpr int kBacktrackSteps = 12;

struct Vec2 {
    double x = 0.0, y = 0.0;
};

double overlap_of(const std::vector<BBox>& boxes) {
    double total = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j) total += intersection_area(boxes[i], boxes[j]);
    return total;
}

double overlap_with(const std::vector<BBox>& boxes, std::size_t i, const BBox& candidate) {
    double total = 0.0;
    for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (j != i) total += intersection_area(candidate, boxes[j]);
    }
    return total;
}

BBox clamp_box(BBox b, bool preserve_scale) {
    if (!preserve_scale) {
        b.w = std::min(b.w, 1.0);
        b.h = std::min(b.h, 1.0);
    }
    b.x = b.w <= 1.0 ? std::clamp(b.x, 0.0, 1.0 - b.w) : 0.0;
    b.y = b.h <= 1.0 ? std::clamp(b.y, 0.0, 1.0 - b.h) : 0.0;
    return b;
}

bool inside_canvas(const BBox& b) { return b.x >= 0.0 && b.y >= 0.0 && b.right() <= 1.0 && b.bottom() <= 1.0; }

// Pair displacements for one Jacobi push step.
std::vector<Vec2> push_displacements(const std::vector<BBox>& boxes, const RefineConfig& cfg) {
    std::vector<Vec2> d(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            const BBox& a = boxes[i];
            const BBox& b = boxes[j];
            if (intersection_area(a, b) <= 0.0) continue;
            const double px = std::min(a.right() - b.x, b.right() - a.x);
            const double py = std::min(a.bottom() - b.y, b.bottom() - a.y);
            const bool along_x = px <= py;
            const double pen = along_x ? px : py;
            const double half = 0.5 * pen * (pen <= cfg.snap_tolerance ? 1.0 : cfg.step_damping);
            if (along_x) {
                const double s = a.cx() <= b.cx() ? -1.0 : 1.0;
                d[i].x += s * half;
                d[j].x -= s * half;
            } else {
                const double s = a.cy() <= b.cy() ? -1.0 : 1.0;
                d[i].y += s * half;
                d[j].y -= s * half;
            }
        }
    }
    return d;
}

// Moves each element of one overlapping pair fully apart, one pair at a time,
// keeping only moves that lower the total.
bool sequential_push(std::vector<BBox>& boxes, const RefineConfig& cfg, double& current) {
    bool improved = false;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            const BBox a = boxes[i], b = boxes[j];
            if (intersection_area(a, b) <= 0.0) continue;
            const double px = std::min(a.right() - b.x, b.right() - a.x);
            const double py = std::min(a.bottom() - b.y, b.bottom() - a.y);
            const std::array<Vec2, 4> options{{{a.cx() <= b.cx() ? -px : px, 0.0},
                                               {0.0, a.cy() <= b.cy() ? -py : py},
                                               {a.cx() <= b.cx() ? px : -px, 0.0},
                                               {0.0, a.cy() <= b.cy() ? py : -py}}};
            for (const auto& mv : options) {
                // Try moving only i, then only j.
                for (int which = 0; which < 2; ++which) {
                    std::vector<BBox> trial = boxes;
                    BBox& m = which == 0 ? trial[i] : trial[j];
                    const double sgn = which == 0 ? 1.0 : -1.0;
                    m.x += sgn * mv.x;
                    m.y += sgn * mv.y;
                    m = clamp_box(m, cfg.preserve_scale);
                    const double o = overlap_of(trial);
                    if (o < current) {
                        boxes = std::move(trial);
                        current = o;
                        improved = true;
                        goto next_pair;
                    }
                }
            }
        next_pair:;
        }
    }
    return improved;
}

// Snaps element i on one axis; returns the applied shift (0 when none).
// Accepted only if the total overlap does not rise above `current`.
double snap_axis(std::vector<BBox>& boxes, std::size_t i, bool x_axis, double tol, double& current) {
    const BBox& self = boxes[i];
    // Same-type peer lines (near/near, center/center, far/far) or a canvas guide.
    const auto own = x_axis ? x_lines(self) : y_lines(self);
    std::vector<double> shifts;
    auto consider = [&](double line, double target) {
        const double d = target - line;
        if (std::abs(d) <= kNoMove) return true;  // axis already aligned
        if (std::abs(d) <= tol) shifts.push_back(d);
        return false;
    };
    for (int k = 0; k < 3; ++k) {
        for (double guide : {0.0, 0.5, 1.0}) {
            if (consider(own[k], guide)) return 0.0;
        }
        for (std::size_t j = 0; j < boxes.size(); ++j) {
            if (j == i) continue;
            const auto peer = x_axis ? x_lines(boxes[j]) : y_lines(boxes[j]);
            if (consider(own[k], peer[k])) return 0.0;
        }
    }
    std::stable_sort(shifts.begin(), shifts.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    const double before = overlap_with(boxes, i, self);
    for (double d : shifts) {
        BBox moved = self;
        (x_axis ? moved.x : moved.y) += d;
        if (!inside_canvas(moved)) continue;
        if (overlap_with(boxes, i, moved) > before) continue;
        std::vector<BBox> trial = boxes;
        trial[i] = moved;
        const double o = overlap_of(trial);
        if (o > current) continue;
        boxes = std::move(trial);
        current = o;
        return d;
    }
    return 0.0;
}

}  // namespace

void RefineConfig::validate() const {
    if (!(snap_tolerance >= 0.0)) throw DomainError("snap_tolerance must be >= 0");
    if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
    if (!(step_damping > 0.0 && step_damping <= 1.0)) throw DomainError("step_damping must lie in (0, 1]");
}

RefineResult refine_layout_detailed(const Layout& l, const RefineConfig& cfg) {
    cfg.validate();
    if (l.elements.empty()) throw EmptyLayoutError("cannot refine layout '" + l.layout_id + "' with no elements");
    check_layout(l);

    const std::size_t n = l.elements.size();
    std::vector<BBox> boxes;
    for (const auto& e : l.elements) boxes.push_back(e.bbox);

    RefineResult r;
    r.displacement.assign(n, 0.0);
    auto track = [&](const std::vector<BBox>& before) {
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double step = std::hypot(boxes[i].x - before[i].x, boxes[i].y - before[i].y);
            r.displacement[i] += step;
            moved = std::max(moved, step);
        }
        return moved;
    };

    {
        const auto before = boxes;
        for (auto& b : boxes) b = clamp_box(b, cfg.preserve_scale);
        track(before);
    }
    double current = overlap_of(boxes);
    r.overlap_history.push_back(current);

    std::vector<bool> snapped_x(n, false), snapped_y(n, false);
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        r.iterations = iter;
        const auto before = boxes;
        bool stalled = false;

        if (current > kOverlapEpsilon) {
            const auto disp = push_displacements(boxes, cfg);
            double t = 1.0;
            bool accepted = false;
            for (int k = 0; k < kBacktrackSteps && !accepted; ++k, t *= 0.5) {
                std::vector<BBox> trial = boxes;
                for (std::size_t i = 0; i < n; ++i) {
                    trial[i].x += t * disp[i].x;
                    trial[i].y += t * disp[i].y;
                    trial[i] = clamp_box(trial[i], cfg.preserve_scale);
                }
                const double o = overlap_of(trial);
                if (o < current) {
                    boxes = std::move(trial);
                    current = o;
                    accepted = true;
                }
            }
            if (!accepted && !sequential_push(boxes, cfg, current)) stalled = true;
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (!snapped_x[i] && snap_axis(boxes, i, true, cfg.snap_tolerance, current) != 0.0) snapped_x[i] = true;
            if (!snapped_y[i] && snap_axis(boxes, i, false, cfg.snap_tolerance, current) != 0.0) snapped_y[i] = true;
        }

        r.overlap_history.push_back(current);
        const double moved = track(before);
        if (current <= kOverlapEpsilon && moved <= kNoMove) break;
        if (stalled && moved <= kNoMove) {
            r.log.push_back("no overlap-reducing move found at iteration " + std::to_string(iter));
            break;
        }
    }

    r.layout = l;
    r.layout.source = LayoutSource::refined;
    for (std::size_t i = 0; i < n; ++i) r.layout.elements[i].bbox = boxes[i];
    r.converged = validate_layout(r.layout, cfg.snap_tolerance).is_clean;
    if (!r.converged) r.log.push_back("did not converge after " + std::to_string(r.iterations) + " iterations");
    return r;
}

Layout refine_layout(const Layout& l, const RefineConfig& cfg) { return refine_layout_detailed(l, cfg).layout; }

RefineResult RemoteRefiner::refine(const Layout& l) const {
    const Json response = post_json(ep_, "/refine", Json{{"layout", to_json(l)}});
    std::string problem;
    Layout remote;
    if (!response.is_object() || !response.contains("layout")) {
        problem = "response lacks 'layout'";
    } else {
        try {
            remote = layout_from_json(response["layout"], "layout");
            if (remote.element_ids() != l.element_ids() || remote.elements.size() != l.elements.size())
                problem = "response element ids differ from the input";
        } catch (const ParseError& e) {
            problem = e.what();
        }
    }
    if (!problem.empty()) {
        RefineResult r = refine_layout_detailed(l, fallback_);
        r.log.insert(r.log.begin(), "remote refiner output rejected (" + problem + "); used local refiner");
        return r;
    }
    RefineResult r;
    r.layout = l;
    r.layout.source = LayoutSource::refined;
    for (auto& e : r.layout.elements) {
        const BBox& nb = remote.find(e.id)->bbox;
        r.displacement.push_back(std::hypot(nb.x - e.bbox.x, nb.y - e.bbox.y));
        e.bbox = nb;
    }
    r.overlap_history = {total_overlap(l), total_overlap(r.layout)};
    r.iterations = 1;
    r.converged = validate_layout(r.layout, fallback_.snap_tolerance).is_clean;
    r.log.push_back("adopted remote refinement");
    return r;
}

RefineResult refine_remote(const Layout& l, const RemoteRefiner& client) { return client.refine(l); }

HprResult hpr(const std::vector<HprRecord>& records) {
    if (records.empty()) throw DomainError("hpr needs at least one record");
    HprResult r;
    for (const auto& rec : records) {
        if (!is_directional(rec.refined_side))
            throw DomainError("record '" + rec.pair_id + "': refined_side must be left or right");
        if (!is_directional(rec.preferred)) {
            ++r.ties_excluded;
        } else if (rec.preferred == rec.refined_side) {
            ++r.refined_preferred;
        } else {
            ++r.original_preferred;
        }
    }
    if (r.refined_preferred + r.original_preferred == 0) throw DomainError("hpr: every record is a tie");
    if (r.original_preferred > 0) r.ratio = static_cast<double>(r.refined_preferred) / r.original_preferred;
    return r;
}

std::vector<HprRecord> read_hpr_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::vector<std::pair<Json, std::string>> items;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        const Json arr = parse_json_text(text, path);
        for (std::size_t i = 0; i < arr.size(); ++i) items.emplace_back(arr[i], path + "[" + std::to_string(i) + "]");
    } else {
        std::istringstream lines(text);
        std::string line;
        for (int no = 1; std::getline(lines, line); ++no) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = path + ": line " + std::to_string(no);
            items.emplace_back(parse_json_text(line, where), where);
        }
    }
    std::vector<HprRecord> out;
    for (const auto& [j, where] : items) {
        try {
            out.push_back({j.value("pair_id", std::string()), label_from_string(j.at("refined_side").get<std::string>()),
                           label_from_string(j.at("preferred").get<std::string>())});
        } catch (const std::exception& e) {
            throw ParseError(where, e.what());
        }
    }
    return out;
}

}  // namespace dsense
