#include "designsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "designsense/error.hpp"
#include "designsense/random.hpp"

namespace dsense {

namespace fs = std::filesystem;

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DomainError("unknown split '" + std::string(s) + "'");
}

Json to_json(const AnnotationRecord& r) {
    Json j{{"pair_id", r.pair_id},
           {"annotator_id", r.annotator_id},
           {"label", std::string(to_string(r.label))},
           {"timestamp_ms", r.timestamp_ms}};
    if (r.duration_ms) j["duration_ms"] = *r.duration_ms;
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it)
        if (!j.contains(it.key())) j[it.key()] = it.value();
    return j;
}

AnnotationRecord annotation_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    auto str = [&](const char* key) {
        if (!j.contains(key)) throw ParseError(path + "." + key, "missing required field");
        if (!j[key].is_string()) throw ParseError(path + "." + key, "expected a string");
        return j[key].get<std::string>();
    };
    AnnotationRecord r;
    r.pair_id = str("pair_id");
    r.annotator_id = str("annotator_id");
    const std::string label = str("label");
    const auto parsed = try_label_from_string(label);
    if (!parsed) throw ParseError(path + ".label", "unknown label '" + label + "'");
    r.label = *parsed;
    if (j.contains("timestamp_ms")) {
        if (!j["timestamp_ms"].is_number_integer()) throw ParseError(path + ".timestamp_ms", "expected an integer");
        r.timestamp_ms = j["timestamp_ms"].get<std::int64_t>();
    }
    if (j.contains("duration_ms") && !j["duration_ms"].is_null()) {
        if (!j["duration_ms"].is_number_integer()) throw ParseError(path + ".duration_ms", "expected an integer");
        r.duration_ms = j["duration_ms"].get<std::int64_t>();
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k != "pair_id" && k != "annotator_id" && k != "label" && k != "timestamp_ms" && k != "duration_ms")
            r.extra[k] = it.value();
    }
    return r;
}

void Dataset::add_pair(const PreferencePair& p) {
    for (const Layout* l : {&p.left, &p.right}) {
        auto [it, inserted] = layouts.emplace(l->layout_id, *l);
        if (!inserted && !(it->second == *l))
            throw IntegrityError("layout id '" + l->layout_id + "' is bound to two different layouts");
    }
    pairs.push_back(p);
}

namespace {

constexpr const char* kManifestKeys[] = {"format", "version", "counts", "split_assignment", "provenance_counts"};

std::string layout_filename(const std::string& id) {
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '~') {
            out += static_cast<char>(c);
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out + ".json";
}

Json manifest_json(const Dataset& d) {
    std::map<std::string, int> by_variant, by_source, by_provenance;
    for (auto v : kAllVariants) by_variant[std::string(to_string(v))] = 0;
    for (const auto& p : d.pairs) {
        ++by_variant[std::string(to_string(p.left.variant))];
        ++by_provenance[std::string(to_string(p.provenance))];
    }
    for (const auto& [id, l] : d.layouts) ++by_source[std::string(to_string(l.source))];
    Json splits = Json::object();
    for (const auto& [pid, s] : d.split_assignment) splits[pid] = std::string(to_string(s));
    Json j{{"format", "designsense-dataset"},
           {"version", 1},
           {"counts",
            Json{{"pairs", d.pairs.size()}, {"layouts", d.layouts.size()}, {"annotations", d.annotations.size()}}},
           {"split_assignment", splits},
           {"provenance_counts",
            Json{{"by_variant", by_variant}, {"by_layout_source", by_source}, {"by_pair_provenance", by_provenance}}}};
    for (auto it = d.manifest_extra.begin(); it != d.manifest_extra.end(); ++it)
        if (!j.contains(it.key())) j[it.key()] = it.value();
    return j;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

template <class F>
auto with_location(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.where(), e.what());
    } catch (const IntegrityError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(where, e.what());
    }
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& dir) {
    const fs::path root(dir);
    const fs::path layouts_dir = root / "layouts";
    fs::create_directories(layouts_dir);

    std::set<std::string> wanted;
    for (const auto& [id, l] : d.layouts) {
        const std::string name = layout_filename(id);
        wanted.insert(name);
        write_layout_file((layouts_dir / name).string(), l);
    }
    for (const auto& entry : fs::directory_iterator(layouts_dir)) {
        if (entry.path().extension() == ".json" && !wanted.count(entry.path().filename().string()))
            fs::remove(entry.path());
    }

    std::string pairs;
    for (const auto& p : d.pairs) {
        for (const Layout* l : {&p.left, &p.right})
            if (!d.layouts.count(l->layout_id))
                throw IntegrityError("pair " + p.pair_id + " references layout '" + l->layout_id +
                                     "' missing from the dataset");
        Json j = to_json(p);
        j["left"] = p.left.layout_id;
        j["right"] = p.right.layout_id;
        pairs += j.dump() + "\n";
    }
    write_text_atomic((root / "pairs.jsonl").string(), pairs);

    std::string annotations;
    for (const auto& a : d.annotations) annotations += to_json(a).dump() + "\n";
    write_text_atomic((root / "annotations.jsonl").string(), annotations);

    write_json_file((root / "manifest.json").string(), manifest_json(d));
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    Dataset d;

    const fs::path layouts_dir = root / "layouts";
    if (fs::is_directory(layouts_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(layouts_dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            Layout l = with_location(f.string(), [&] { return layout_from_json(read_json_file(f.string())); });
            const std::string id = l.layout_id;
            if (!d.layouts.emplace(id, std::move(l)).second)
                throw IntegrityError("duplicate layout id '" + id + "' in " + layouts_dir.string());
        }
    }

    const fs::path pairs_path = root / "pairs.jsonl";
    const auto lines = read_lines(pairs_path);
    std::set<std::string> pair_ids;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) continue;
        const std::string where = "pairs.jsonl line " + std::to_string(i + 1);
        Json j = parse_json_text(lines[i], where);
        for (const char* side : {"left", "right"}) {
            if (!j.is_object() || !j.contains(side)) throw ParseError(where + ": pair." + side, "missing required field");
            if (!j[side].is_string()) throw ParseError(where + ": pair." + side, "expected a layout id string");
            const std::string id = j[side].get<std::string>();
            const auto it = d.layouts.find(id);
            if (it == d.layouts.end()) throw IntegrityError(where + ": references absent layout '" + id + "'");
            j[side] = to_json(it->second);
        }
        PreferencePair p = with_location(where, [&] { return pair_from_json(j); });
        if (!pair_ids.insert(p.pair_id).second) throw IntegrityError(where + ": duplicate pair id '" + p.pair_id + "'");
        d.pairs.push_back(std::move(p));
    }

    const fs::path ann_path = root / "annotations.jsonl";
    if (fs::exists(ann_path)) {
        const auto alines = read_lines(ann_path);
        for (std::size_t i = 0; i < alines.size(); ++i) {
            if (blank(alines[i])) continue;
            const std::string where = "annotations.jsonl line " + std::to_string(i + 1);
            AnnotationRecord r =
                with_location(where, [&] { return annotation_from_json(parse_json_text(alines[i], where)); });
            if (!pair_ids.count(r.pair_id))
                throw IntegrityError(where + ": references absent pair '" + r.pair_id + "'");
            d.annotations.push_back(std::move(r));
        }
    }

    const Json manifest = read_json_file((root / "manifest.json").string());
    if (!manifest.is_object()) throw ParseError("manifest.json", "expected an object");
    if (manifest.contains("split_assignment")) {
        const Json& s = manifest["split_assignment"];
        if (!s.is_object()) throw ParseError("manifest.json: split_assignment", "expected an object");
        for (auto it = s.begin(); it != s.end(); ++it) {
            if (!pair_ids.count(it.key()))
                throw IntegrityError("manifest.json: split assignment references absent pair '" + it.key() + "'");
            if (!it.value().is_string())
                throw ParseError("manifest.json: split_assignment." + it.key(), "expected a string");
            try {
                d.split_assignment[it.key()] = split_from_string(it.value().get<std::string>());
            } catch (const DomainError& e) {
                throw ParseError("manifest.json: split_assignment." + it.key(), e.what());
            }
        }
    }
    for (auto it = manifest.begin(); it != manifest.end(); ++it) {
        const bool known = std::any_of(std::begin(kManifestKeys), std::end(kManifestKeys),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) d.manifest_extra[it.key()] = it.value();
    }
    return d;
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios) {
    if (ratios.empty()) throw DomainError("no ratios given");
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("split ratios must be positive");
        sum += r;
    }
    std::vector<std::size_t> q(ratios.size());
    std::vector<double> frac(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double exact = static_cast<double>(n) * ratios[i] / sum;
        q[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - static_cast<double>(q[i]);
        assigned += q[i];
    }
    std::vector<std::size_t> idx(ratios.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t r = 0; assigned + r < n; ++r) ++q[idx[r % idx.size()]];
    return q;
}

std::map<std::string, Split> split_pairs(const std::vector<PreferencePair>& pairs, const SplitOptions& opt) {
    if (opt.ratios.size() != 3) throw DomainError("split needs three ratios (train:val:test)");
    const std::size_t n = pairs.size();
    if (n < opt.ratios.size())
        throw DomainError("cannot split " + std::to_string(n) + " pairs into " + std::to_string(opt.ratios.size()) +
                          " splits");
    const auto sizes = apportion(n, opt.ratios);
    const std::array<Split, 3> names{Split::train, Split::val, Split::test};

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(opt.seed);

    std::vector<Split> slot(n);
    if (!opt.stratified) {
        rng.shuffle(order);
        std::size_t k = 0;
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t c = 0; c < sizes[s]; ++c) slot[k++] = names[s];
    } else {
        // Group by gold label (unlabeled last), shuffle within each group, then
        // deal positions to splits so every prefix tracks the target ratios.
        std::map<int, std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < n; ++i)
            strata[pairs[i].gold_label ? static_cast<int>(*pairs[i].gold_label) : 4].push_back(i);
        order.clear();
        for (auto& [key, members] : strata) {
            rng.shuffle(members);
            order.insert(order.end(), members.begin(), members.end());
        }
        std::array<std::size_t, 3> taken{};
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t best = 3;
            long double best_deficit = 0;
            for (std::size_t s = 0; s < 3; ++s) {
                if (taken[s] >= sizes[s]) continue;
                const long double deficit = static_cast<long double>(sizes[s]) * (k + 1) -
                                            static_cast<long double>(taken[s]) * n;
                if (best == 3 || deficit > best_deficit) {
                    best = s;
                    best_deficit = deficit;
                }
            }
            ++taken[best];
            slot[k] = names[best];
        }
    }

    std::map<std::string, Split> out;
    for (std::size_t k = 0; k < n; ++k) {
        if (!out.emplace(pairs[order[k]].pair_id, slot[k]).second)
            throw DomainError("duplicate pair id '" + pairs[order[k]].pair_id + "'");
    }
    return out;
}

std::map<Split, std::size_t> split_sizes(const std::map<std::string, Split>& assignment) {
    std::map<Split, std::size_t> out{{Split::train, 0}, {Split::val, 0}, {Split::test, 0}};
    for (const auto& [id, s] : assignment) ++out[s];
    return out;
}

namespace {

Json histogram_json(const std::map<long, std::int64_t>& h, const char* key) {
    Json out = Json::array();
    for (const auto& [v, c] : h) out.push_back(Json{{key, v}, {"count", c}});
    return out;
}

std::string number_text(double v) { return Json(v).dump(); }

}  // namespace

StatsReport stats_report(const Dataset& d) {
    if (d.pairs.empty() && d.layouts.empty()) throw DomainError("stats report needs a nonempty dataset");
    StatsReport out;
    std::string csv = "section,key,count,proportion\n";
    auto row = [&](const std::string& section, const std::string& key, std::int64_t count, double total) {
        csv += section + "," + key + "," + std::to_string(count) + "," +
               (total > 0 ? number_text(static_cast<double>(count) / total) : std::string("")) + "\n";
    };

    // log2 aspect histogram over layouts.
    std::map<long, std::int64_t> aspect;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& [id, l] : d.layouts) {
        const double a = std::log2(static_cast<double>(l.canvas.width_px) / static_cast<double>(l.canvas.height_px));
        ++aspect[std::lround(std::floor(a / kAspectBinWidth + 0.5))];
        lo = first ? a : std::min(lo, a);
        hi = first ? a : std::max(hi, a);
        first = false;
    }
    Json aspect_bins = Json::array();
    const double n_layouts = static_cast<double>(d.layouts.size());
    for (const auto& [bin, c] : aspect) {
        const double centre = static_cast<double>(bin) * kAspectBinWidth;
        aspect_bins.push_back(Json{{"center", centre}, {"count", c}, {"proportion", c / n_layouts}});
        row("aspect_log2", number_text(centre), c, n_layouts);
    }

    // Variants and labels over pairs.
    const double n_pairs = static_cast<double>(d.pairs.size());
    std::map<std::string, std::int64_t> variants;
    for (auto v : kAllVariants) variants[std::string(to_string(v))] = 0;
    std::map<std::string, std::int64_t> labels;
    for (auto l : kAllLabels) labels[std::string(to_string(l))] = 0;
    std::int64_t labeled = 0;
    for (const auto& p : d.pairs) {
        ++variants[std::string(to_string(p.left.variant))];
        if (p.gold_label) {
            ++labels[std::string(to_string(*p.gold_label))];
            ++labeled;
        }
    }
    Json variant_json{{"counts", Json::object()}, {"proportions", Json::object()}};
    for (const auto& [k, c] : variants) {
        variant_json["counts"][k] = c;
        variant_json["proportions"][k] = n_pairs > 0 ? c / n_pairs : 0.0;
        row("variant", k, c, n_pairs);
    }
    Json label_json{{"counts", Json::object()}, {"proportions", Json::object()}, {"unlabeled", d.pairs.size() - labeled}};
    for (const auto& [k, c] : labels) {
        label_json["counts"][k] = c;
        label_json["proportions"][k] = labeled > 0 ? static_cast<double>(c) / labeled : 0.0;
        row("label", k, c, static_cast<double>(labeled));
    }

    // Per-layout group and element counts.
    std::map<long, std::int64_t> groups, elements;
    std::int64_t ungrouped = 0;
    for (const auto& [id, l] : d.layouts) {
        ++elements[static_cast<long>(l.elements.size())];
        if (l.groups)
            ++groups[static_cast<long>(l.groups->size())];
        else
            ++ungrouped;
    }
    for (const auto& [v, c] : groups) row("group_count", std::to_string(v), c, n_layouts);
    for (const auto& [v, c] : elements) row("element_count", std::to_string(v), c, n_layouts);

    // Agreement over the union of stored annotator labels and annotation records.
    std::map<std::string, std::map<std::string, PreferenceLabel>> by_pair;
    for (const auto& p : d.pairs)
        for (const auto& a : p.annotator_labels) by_pair[p.pair_id].emplace(a.annotator_id, a.label);
    for (const auto& r : d.annotations) by_pair[r.pair_id].emplace(r.annotator_id, r.label);
    std::vector<std::vector<PreferenceLabel>> items;
    for (const auto& [pid, m] : by_pair) {
        std::vector<PreferenceLabel> ls;
        for (const auto& [aid, l] : m) ls.push_back(l);
        items.push_back(std::move(ls));
    }
    Json agreement = nullptr;
    const bool multi = std::any_of(items.begin(), items.end(), [](const auto& v) { return v.size() >= 2; });
    if (multi) {
        const auto rates = agreement_rates(items);
        agreement = to_json(rates);
        csv += "agreement,four_class_rate,," + number_text(rates.four_class) + "\n";
        if (rates.binary) csv += "agreement,binary_rate,," + number_text(*rates.binary) + "\n";
    }

    out.json = Json{{"n_pairs", d.pairs.size()},
                    {"n_layouts", d.layouts.size()},
                    {"aspect_log2",
                     Json{{"bin_width", kAspectBinWidth},
                          {"bins", aspect_bins},
                          {"min", d.layouts.empty() ? Json(nullptr) : Json(lo)},
                          {"max", d.layouts.empty() ? Json(nullptr) : Json(hi)}}},
                    {"variants", variant_json},
                    {"labels", label_json},
                    {"group_counts", Json{{"histogram", histogram_json(groups, "groups")}, {"ungrouped", ungrouped}}},
                    {"element_counts", Json{{"histogram", histogram_json(elements, "elements")}}},
                    {"agreement", agreement}};
    if (!multi) out.json["agreement_unavailable"] = "no pair has two or more annotations";
    out.csv = std::move(csv);
    return out;
}

}  // namespace dsense
