#include "designsense/stubs.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

#include "designsense/diversity.hpp"
#include "designsense/error.hpp"
#include "designsense/grouping.hpp"
#include "designsense/judge.hpp"
#include "designsense/random.hpp"
#include "designsense/refine.hpp"

namespace dsense {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Json stub_generate(const Json& request) {
    const GeneratorRequest req = generator_request_from_json(request);
    const std::uint64_t seed = fnv1a64(request.dump());
    Json layouts = Json::array();
    for (int k = 0; k < req.num_samples; ++k) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
        // Rejection sampling against already placed groups; the last draw is kept
        // when no free spot turns up, so some candidates carry overlaps.
        std::vector<BBox> boxes;
        for (const auto& g : req.groups) {
            const double s = rng.uniform(0.85, 1.05);
            const double w = std::min(0.95, g.bbox.w * s);
            const double h = std::min(0.95, g.bbox.h * s);
            BBox b;
            for (int attempt = 0; attempt < 24; ++attempt) {
                b = {rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h), w, h};
                const bool free = std::none_of(boxes.begin(), boxes.end(),
                                               [&](const BBox& o) { return intersection_area(o, b) > 0.0; });
                if (free) break;
            }
            boxes.push_back(b);
        }
        layouts.push_back(to_json(place_groups(req, boxes, "stub_" + std::to_string(k))));
    }
    return Json{{"layouts", layouts}};
}

Json stub_group(const Json& request) {
    const Layout l = layout_from_json(request.at("layout"));
    return Json{{"groups", to_json(group_heuristic(l))}};
}

Json stub_refine(const Json& request) {
    const Layout l = layout_from_json(request.at("layout"));
    return Json{{"layout", to_json(refine_layout(l))}};
}

Json stub_judge(const Json& request) {
    PreferencePair p;
    p.pair_id = request.value("pair_id", "");
    p.left = layout_from_json(request.at("left_meta"), "left_meta");
    p.right = layout_from_json(request.at("right_meta"), "right_meta");
    const Verdict v = judge_pair_heuristic(p);
    return Json{{"label", std::string(to_string(v.label))}, {"left_score", *v.left_score}, {"right_score", *v.right_score}};
}

Json stub_embed(const Json& request) {
    Json vectors = Json::array();
    for (const auto& j : request.at("layouts")) vectors.push_back(embed_geometric(layout_from_json(j)).dims);
    return Json{{"vectors", vectors}};
}

struct StubServer::Impl {
    httplib::Server server;
    std::thread thread;
    std::string host;
    int port = 0;
};

StubServer::StubServer() : impl_(std::make_unique<Impl>()) {
    auto route = [this](const char* path, Json (*fn)(const Json&)) {
        impl_->server.Post(path, [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                res.set_content(fn(Json::parse(req.body)).dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
            }
        });
    };
    route("/generate", stub_generate);
    route("/group", stub_group);
    route("/refine", stub_refine);
    route("/judge", stub_judge);
    route("/embed", stub_embed);
    impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"ok":true})", "application/json");
    });
}

StubServer::~StubServer() { stop(); }

int StubServer::start(const std::string& host, int port) {
    impl_->host = host;
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else {
        if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
        impl_->port = port;
    }
    if (impl_->port <= 0) throw Error("cannot bind " + host);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void StubServer::listen_blocking(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port;
    if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void StubServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

}  // namespace dsense
