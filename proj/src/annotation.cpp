#include "designsense/annotation.hpp"

#include <httplib.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "designsense/error.hpp"
#include "designsense/render.hpp"

namespace dsense {

std::string_view to_string(TaskState s) {
    switch (s) {
        case TaskState::open: return "open";
        case TaskState::assigned: return "assigned";
        case TaskState::done: return "done";
    }
    return "?";
}

Json to_json(const AnnotationTask& t) {
    Json j{{"task_id", t.task_id},
           {"pair_id", t.pair_id},
           {"slot", t.slot},
           {"state", std::string(to_string(t.state))},
           {"assigned_to", t.assigned_to ? Json(*t.assigned_to) : Json(nullptr)},
           {"lease_expiry_ms", t.lease_expiry_ms}};
    if (t.completed_by) j["completed_by"] = *t.completed_by;
    return j;
}

std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

AnnotationService::AnnotationService(std::vector<PreferencePair> pairs, AnnotationServiceOptions opt)
    : opt_(std::move(opt)), pairs_(std::move(pairs)) {
    if (opt_.redundancy < 1) throw DomainError("redundancy must be >= 1");
    if (opt_.lease_ms < 1) throw DomainError("lease duration must be positive");
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (!pair_index_.emplace(pairs_[i].pair_id, i).second)
            throw DomainError("duplicate pair id '" + pairs_[i].pair_id + "'");
        for (int s = 0; s < opt_.redundancy; ++s) {
            AnnotationTask t;
            t.pair_id = pairs_[i].pair_id;
            t.slot = s;
            t.task_id = t.pair_id + "#" + std::to_string(s);
            task_index_[t.task_id] = tasks_.size();
            tasks_.push_back(std::move(t));
        }
    }

    if (opt_.store_path.empty()) return;
    std::ifstream in(opt_.store_path);
    if (!in) return;
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        AnnotationRecord r;
        try {
            r = annotation_from_json(parse_json_text(lines[i], opt_.store_path));
        } catch (const Error& e) {
            if (i + 1 == lines.size()) {
                replay_warnings_.push_back("skipped torn final line: " + std::string(e.what()));
                continue;
            }
            throw ParseError(opt_.store_path + " line " + std::to_string(i + 1), e.what());
        }
        if (!pair_index_.count(r.pair_id)) {
            replay_warnings_.push_back("record for unknown pair '" + r.pair_id + "' kept but not scheduled");
        }
        const auto key = std::make_pair(r.pair_id, r.annotator_id);
        if (by_pair_annotator_.count(key)) continue;
        by_pair_annotator_[key] = records_.size();
        // Bind to the recorded task, else to the first unfinished slot of the pair.
        AnnotationTask* task = nullptr;
        if (r.extra.contains("task_id") && r.extra["task_id"].is_string()) {
            auto it = task_index_.find(r.extra["task_id"].get<std::string>());
            if (it != task_index_.end() && tasks_[it->second].state != TaskState::done) task = &tasks_[it->second];
        }
        if (!task) {
            for (auto& t : tasks_)
                if (t.pair_id == r.pair_id && t.state != TaskState::done) {
                    task = &t;
                    break;
                }
        }
        if (task) {
            task->state = TaskState::done;
            task->assigned_to.reset();
            task->completed_by = r.annotator_id;
        }
        records_.push_back(std::move(r));
    }
}

void AnnotationService::expire_leases(std::int64_t now) {
    for (auto& t : tasks_) {
        if (t.state == TaskState::assigned && t.lease_expiry_ms <= now) {
            t.state = TaskState::open;
            t.assigned_to.reset();
        }
    }
}

std::optional<AnnotationTask> AnnotationService::next_task(const std::string& annotator) {
    std::lock_guard lock(mu_);
    const std::int64_t now = opt_.clock();
    expire_leases(now);
    for (const auto& t : tasks_)
        if (t.state == TaskState::assigned && t.assigned_to == annotator) return t;
    for (auto& t : tasks_) {
        if (t.state != TaskState::open) continue;
        if (by_pair_annotator_.count({t.pair_id, annotator})) continue;
        // One slot per pair per annotator, even while another slot of that pair is leased to them.
        t.state = TaskState::assigned;
        t.assigned_to = annotator;
        t.last_assignee = annotator;
        t.lease_expiry_ms = now + opt_.lease_ms;
        return t;
    }
    return std::nullopt;
}

SubmitResult AnnotationService::submit_label(const std::string& task_id, const std::string& annotator,
                                             const std::string& label, std::optional<std::int64_t> duration_ms) {
    std::lock_guard lock(mu_);
    SubmitResult out;
    const auto parsed = try_label_from_string(label);
    if (!parsed) {
        out.reason = "invalid label '" + label + "'";
        return out;
    }
    const auto it = task_index_.find(task_id);
    if (it == task_index_.end()) {
        out.reason = "unknown task '" + task_id + "'";
        return out;
    }
    AnnotationTask& task = tasks_[it->second];
    const auto existing = by_pair_annotator_.find({task.pair_id, annotator});
    if (existing != by_pair_annotator_.end()) {
        const AnnotationRecord& r = records_[existing->second];
        const bool same_task = r.extra.contains("task_id") && r.extra["task_id"] == task_id;
        if (same_task && r.label == *parsed) {
            out.accepted = true;
            out.duplicate = true;
            out.record = r;
            return out;
        }
        out.reason = "annotator '" + annotator + "' already labeled pair '" + task.pair_id + "'";
        return out;
    }
    const std::int64_t now = opt_.clock();
    expire_leases(now);
    if (task.state == TaskState::done) {
        out.reason = "task already completed";
        return out;
    }
    if (task.state != TaskState::assigned || task.assigned_to != annotator) {
        if (task.state == TaskState::open && task.last_assignee == annotator)
            out.reason = "lease expired";
        else
            out.reason = "task is not leased to annotator '" + annotator + "'";
        return out;
    }
    AnnotationRecord r;
    r.pair_id = task.pair_id;
    r.annotator_id = annotator;
    r.label = *parsed;
    r.timestamp_ms = now;
    r.duration_ms = duration_ms;
    r.extra["task_id"] = task_id;
    append_to_store(r);
    task.state = TaskState::done;
    task.assigned_to.reset();
    task.completed_by = annotator;
    by_pair_annotator_[{r.pair_id, annotator}] = records_.size();
    records_.push_back(r);
    out.accepted = true;
    out.record = std::move(r);
    return out;
}

void AnnotationService::append_to_store(const AnnotationRecord& r) {
    if (opt_.store_path.empty()) return;
    std::ofstream outf(opt_.store_path, std::ios::app | std::ios::binary);
    if (!outf) throw Error("cannot open annotation store '" + opt_.store_path + "'");
    outf << to_json(r).dump() << '\n';
    outf.flush();
    if (!outf) throw Error("write to annotation store '" + opt_.store_path + "' failed");
}

Json AnnotationService::progress() const {
    std::lock_guard lock(mu_);
    const std::int64_t now = opt_.clock();
    std::int64_t open = 0, assigned = 0, done = 0;
    for (const auto& t : tasks_) {
        if (t.state == TaskState::done) ++done;
        else if (t.state == TaskState::assigned && t.lease_expiry_ms > now) ++assigned;
        else ++open;
    }
    std::map<std::string, std::int64_t> per_annotator;
    for (const auto& r : records_) ++per_annotator[r.annotator_id];
    std::int64_t complete_pairs = 0;
    for (const auto& p : pairs_) {
        bool all = true;
        for (int s = 0; s < opt_.redundancy; ++s)
            all = all && tasks_[task_index_.at(p.pair_id + "#" + std::to_string(s))].state == TaskState::done;
        if (all) ++complete_pairs;
    }
    return Json{{"pairs", pairs_.size()},
                {"pairs_complete", complete_pairs},
                {"redundancy", opt_.redundancy},
                {"tasks", Json{{"total", tasks_.size()}, {"open", open}, {"assigned", assigned}, {"done", done}}},
                {"records", records_.size()},
                {"annotators", per_annotator}};
}

AnnotationExport AnnotationService::export_annotations() const {
    std::lock_guard lock(mu_);
    AnnotationExport out;
    std::map<std::string, std::vector<PreferenceLabel>> by_pair;
    for (const auto& r : records_) {
        out.jsonl += to_json(r).dump() + "\n";
        by_pair[r.pair_id].push_back(r.label);
    }
    out.records = records_.size();
    std::vector<std::vector<PreferenceLabel>> items;
    bool multi = false;
    for (auto& [pid, labels] : by_pair) {
        multi = multi || labels.size() >= 2;
        items.push_back(std::move(labels));
    }
    if (multi) out.agreement = agreement_rates(items);
    return out;
}

std::optional<PreferencePair> AnnotationService::pair(const std::string& pair_id) const {
    std::lock_guard lock(mu_);
    const auto it = pair_index_.find(pair_id);
    if (it == pair_index_.end()) return std::nullopt;
    return pairs_[it->second];
}

std::vector<AnnotationRecord> AnnotationService::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::vector<AnnotationTask> AnnotationService::tasks() const {
    std::lock_guard lock(mu_);
    return tasks_;
}

// --- REST ------------------------------------------------------------------

struct AnnotationServer::Impl {
    httplib::Server server;
    std::thread thread;
};

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationService& service, std::string ui_dir) : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    AnnotationService* svc = &service;

    s.Get("/api/task", [svc](const httplib::Request& req, httplib::Response& res) {
        const std::string annotator = req.get_param_value("annotator");
        if (annotator.empty()) return reply(res, 400, Json{{"error", "missing 'annotator' query parameter"}});
        const auto task = svc->next_task(annotator);
        Json body{{"task", task ? to_json(*task) : Json(nullptr)}, {"done", !task}, {"progress", svc->progress()}};
        if (task) body["render_url"] = "/api/pair/" + task->pair_id + "/render";
        reply(res, 200, body);
    });

    s.Post("/api/label", [svc](const httplib::Request& req, httplib::Response& res) {
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const Json::exception&) {
            return reply(res, 400, Json{{"ack", false}, {"reason", "request body is not JSON"}});
        }
        auto str = [&](const char* k) {
            return body.is_object() && body.contains(k) && body[k].is_string() ? body[k].get<std::string>() : "";
        };
        const std::string task_id = str("task_id");
        const std::string annotator = str("annotator_id");
        if (task_id.empty() || annotator.empty() || !body.contains("label") || !body["label"].is_string())
            return reply(res, 400, Json{{"ack", false}, {"reason", "task_id, annotator_id and label are required"}});
        std::optional<std::int64_t> duration;
        if (body.contains("duration_ms") && body["duration_ms"].is_number_integer())
            duration = body["duration_ms"].get<std::int64_t>();
        const SubmitResult r = svc->submit_label(task_id, annotator, body["label"].get<std::string>(), duration);
        if (!r.accepted) return reply(res, 409, Json{{"ack", false}, {"reason", r.reason}});
        reply(res, 200, Json{{"ack", true}, {"duplicate", r.duplicate}, {"record", to_json(*r.record)}});
    });

    s.Get("/api/progress",
          [svc](const httplib::Request&, httplib::Response& res) { reply(res, 200, svc->progress()); });

    s.Get(R"(/api/pair/([^/]+)/render)", [svc](const httplib::Request& req, httplib::Response& res) {
        const auto p = svc->pair(req.matches[1]);
        if (!p) return reply(res, 404, Json{{"error", "unknown pair '" + std::string(req.matches[1]) + "'"}});
        res.set_content(render_pair(*p), "image/svg+xml");
    });

    s.Get("/api/export", [svc](const httplib::Request& req, httplib::Response& res) {
        const AnnotationExport e = svc->export_annotations();
        if (req.get_param_value("format") == "jsonl") {
            res.set_content(e.jsonl, "application/x-ndjson");
            return;
        }
        Json records = Json::array();
        for (const auto& r : svc->records()) records.push_back(to_json(r));
        reply(res, 200,
              Json{{"records", records},
                   {"count", e.records},
                   {"agreement_available", e.agreement.has_value()},
                   {"agreement", e.agreement ? to_json(*e.agreement) : Json(nullptr)}});
    });

    if (!ui_dir.empty() && !s.set_mount_point("/", ui_dir)) throw Error("cannot serve UI directory '" + ui_dir + "'");
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void AnnotationServer::listen_blocking(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void AnnotationServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dsense
