#pragma once

// Human annotation backend: a lease-based task queue over a dataset's pairs,
// an append-only JSONL record store that survives restarts, and the REST
// server the annotation UI talks to.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "designsense/dataset.hpp"
#include "designsense/metrics.hpp"

namespace dsense {

enum class TaskState { open, assigned, done };
std::string_view to_string(TaskState s);

// One of `redundancy` labeling slots for a pair; task_id is "<pair_id>#<slot>".
struct AnnotationTask {
    std::string task_id;
    std::string pair_id;
    int slot = 0;
    std::optional<std::string> assigned_to;
    TaskState state = TaskState::open;
    std::int64_t lease_expiry_ms = 0;
    std::optional<std::string> completed_by;
    std::optional<std::string> last_assignee;
};

Json to_json(const AnnotationTask& t);

using Clock = std::function<std::int64_t()>;  // milliseconds
std::int64_t system_clock_ms();

struct AnnotationServiceOptions {
    int redundancy = 5;
    std::int64_t lease_ms = 10 * 60 * 1000;
    Clock clock = system_clock_ms;
    std::string store_path;  // empty keeps records in memory only
};

struct SubmitResult {
    bool accepted = false;
    bool duplicate = false;
    std::string reason;
    std::optional<AnnotationRecord> record;
};

struct AnnotationExport {
    std::string jsonl;
    std::size_t records = 0;
    std::optional<AgreementRates> agreement;  // nullopt when no pair has two records
};

class AnnotationService {
public:
    // Replays the store, if present, so earlier records keep their tasks done.
    AnnotationService(std::vector<PreferencePair> pairs, AnnotationServiceOptions opt = {});

    // The annotator's current unexpired lease if any, else the oldest open
    // task for a pair they have not labeled. Leases it.
    std::optional<AnnotationTask> next_task(const std::string& annotator);

    SubmitResult submit_label(const std::string& task_id, const std::string& annotator, const std::string& label,
                              std::optional<std::int64_t> duration_ms = std::nullopt);

    Json progress() const;
    AnnotationExport export_annotations() const;

    std::optional<PreferencePair> pair(const std::string& pair_id) const;
    std::vector<AnnotationRecord> records() const;
    std::vector<AnnotationTask> tasks() const;
    // Store lines skipped during replay (a torn final line after a crash).
    const std::vector<std::string>& replay_warnings() const noexcept { return replay_warnings_; }

private:
    void expire_leases(std::int64_t now);
    void append_to_store(const AnnotationRecord& r);

    AnnotationServiceOptions opt_;
    std::vector<PreferencePair> pairs_;
    std::map<std::string, std::size_t> pair_index_;
    std::vector<AnnotationTask> tasks_;
    std::map<std::string, std::size_t> task_index_;
    std::vector<AnnotationRecord> records_;
    std::map<std::pair<std::string, std::string>, std::size_t> by_pair_annotator_;
    std::vector<std::string> replay_warnings_;
    mutable std::mutex mu_;
};

// GET /api/task?annotator=, POST /api/label, GET /api/progress,
// GET /api/pair/{id}/render, GET /api/export[?format=jsonl]. When ui_dir is
// set its files are served under /.
class AnnotationServer {
public:
    explicit AnnotationServer(AnnotationService& service, std::string ui_dir = {});
    ~AnnotationServer();
    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    int start(const std::string& host = "127.0.0.1", int port = 0);
    void listen_blocking(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dsense
