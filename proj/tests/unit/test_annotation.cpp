#include "doctest.h"
#include "designsense/annotation.hpp"
#include "designsense/error.hpp"
#include "designsense/json_io.hpp"
#include "support/dataset_fixtures.hpp"
#include "support/fixtures.hpp"
#include "httplib.h"

using namespace dsense;
using namespace dsense::testing;
using L = PreferenceLabel;

namespace {

struct FakeClock {
    std::int64_t now = 1'000'000;
    Clock fn() {
        return [this] { return now; };
    }
};

std::vector<PreferencePair> three_pairs() {
    std::vector<PreferencePair> out;
    for (int i = 1; i <= 3; ++i) {
        const std::string s = std::to_string(i);
        out.push_back(make_pair("pair_" + s, make_layout("a" + s, {{0.1, 0.1, 0.2, 0.2}}),
                                make_layout("b" + s, {{0.5, 0.5, 0.2, 0.2}})));
    }
    return out;
}

AnnotationServiceOptions opts(FakeClock& clock, int redundancy = 2, std::string store = {}) {
    AnnotationServiceOptions o;
    o.redundancy = redundancy;
    o.lease_ms = 1000;
    o.clock = clock.fn();
    o.store_path = std::move(store);
    return o;
}

}  // namespace

TEST_CASE("fresh queue hands out the first pair") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock));
    CHECK(svc.tasks().size() == 6);
    const auto t = svc.next_task("ann1");
    REQUIRE(t);
    CHECK(t->pair_id == "pair_1");
    CHECK(t->task_id == "pair_1#0");
    CHECK(t->state == TaskState::assigned);
    CHECK(t->lease_expiry_ms == clock.now + 1000);
    // The same annotator keeps the lease; another annotator gets the other slot.
    CHECK(svc.next_task("ann1")->task_id == "pair_1#0");
    CHECK(svc.next_task("ann2")->task_id == "pair_1#1");
}

TEST_CASE("an annotator never labels the same pair twice") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 3));
    for (int i = 0; i < 3; ++i) {
        const auto t = svc.next_task("solo");
        REQUIRE(t);
        CHECK(t->pair_id == "pair_" + std::to_string(i + 1));
        CHECK(svc.submit_label(t->task_id, "solo", "left").accepted);
    }
    CHECK_FALSE(svc.next_task("solo").has_value());
    CHECK(svc.next_task("other").has_value());
}

TEST_CASE("expired leases are reissued") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 1));
    const auto t = svc.next_task("slow");
    REQUIRE(t);
    clock.now += 999;
    CHECK(svc.next_task("fast")->task_id == "pair_2#0");
    clock.now += 1;
    CHECK(svc.next_task("fast2")->task_id == "pair_1#0");
    const auto late = svc.submit_label(t->task_id, "slow", "right");
    CHECK_FALSE(late.accepted);
    CHECK(late.reason == "task is not leased to annotator 'slow'");
}

TEST_CASE("lease expiry is reported when nobody took the task over") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 1));
    const auto t = svc.next_task("slow");
    clock.now += 5000;
    const auto r = svc.submit_label(t->task_id, "slow", "left");
    CHECK_FALSE(r.accepted);
    CHECK(r.reason == "lease expired");
}

TEST_CASE("submission validation and idempotence") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock));
    const auto t = svc.next_task("a");
    CHECK(svc.submit_label(t->task_id, "a", "maybe").reason == "invalid label 'maybe'");
    CHECK(svc.submit_label("nope#0", "a", "left").reason == "unknown task 'nope#0'");
    CHECK_FALSE(svc.submit_label(t->task_id, "b", "left").accepted);

    const auto ok = svc.submit_label(t->task_id, "a", "both_good", 1234);
    REQUIRE(ok.accepted);
    CHECK_FALSE(ok.duplicate);
    CHECK(ok.record->label == L::both_good);
    CHECK(ok.record->duration_ms == 1234);
    CHECK(ok.record->timestamp_ms == clock.now);

    const auto again = svc.submit_label(t->task_id, "a", "both_good");
    CHECK(again.accepted);
    CHECK(again.duplicate);
    CHECK(svc.records().size() == 1);

    const auto changed = svc.submit_label(t->task_id, "a", "left");
    CHECK_FALSE(changed.accepted);
    CHECK(svc.progress()["tasks"]["done"] == 1);
}

TEST_CASE("records survive a restart and a torn final line") {
    TempDir tmp;
    const std::string store = tmp / "store.jsonl";
    FakeClock clock;
    {
        AnnotationService svc(three_pairs(), opts(clock, 2, store));
        for (const char* who : {"a", "b", "a"}) {
            const auto t = svc.next_task(who);
            REQUIRE(svc.submit_label(t->task_id, who, "right").accepted);
        }
    }
    CHECK(count_occurrences(read_file(store), "\n") == 3);
    {
        AnnotationService svc(three_pairs(), opts(clock, 2, store));
        CHECK(svc.records().size() == 3);
        CHECK(svc.progress()["tasks"]["done"] == 3);
        CHECK(svc.progress()["pairs_complete"] == 1);
        CHECK(svc.next_task("a")->pair_id == "pair_3");
        CHECK(svc.replay_warnings().empty());
    }
    write_file(store, read_file(store) + "{\"pair_id\": \"pair_3\", \"annot");
    {
        AnnotationService svc(three_pairs(), opts(clock, 2, store));
        CHECK(svc.records().size() == 3);
        REQUIRE(svc.replay_warnings().size() == 1);
        CHECK(svc.replay_warnings()[0].find("torn") != std::string::npos);
    }
    // Corruption before the last line is an error, not a silent skip.
    write_file(store, "garbage\n" + read_file(store));
    CHECK_THROWS_AS(AnnotationService(three_pairs(), opts(clock, 2, store)), ParseError);
}

TEST_CASE("export agreement matches the metric") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 3));
    CHECK_FALSE(svc.export_annotations().agreement.has_value());
    const std::map<std::string, std::vector<std::string>> plan{
        {"a", {"left", "left", "both_bad"}}, {"b", {"left", "right", "both_bad"}}, {"c", {"right", "right", "both_good"}}};
    for (const auto& [who, labels] : plan) {
        for (const auto& lab : labels) {
            const auto t = svc.next_task(who);
            REQUIRE(svc.submit_label(t->task_id, who, lab).accepted);
        }
    }
    const auto e = svc.export_annotations();
    CHECK(e.records == 9);
    CHECK(count_occurrences(e.jsonl, "\n") == 9);
    REQUIRE(e.agreement);
    const auto expected = agreement_rates({{L::left, L::left, L::right},
                                           {L::left, L::right, L::right},
                                           {L::both_bad, L::both_bad, L::both_good}});
    CHECK(e.agreement->four_class == expected.four_class);
    CHECK(e.agreement->binary == expected.binary);
}

TEST_CASE("single-label export has no agreement") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 1));
    const auto t = svc.next_task("a");
    svc.submit_label(t->task_id, "a", "left");
    CHECK_FALSE(svc.export_annotations().agreement.has_value());
}

TEST_CASE("REST API") {
    FakeClock clock;
    AnnotationService svc(three_pairs(), opts(clock, 2));
    AnnotationServer server(svc);
    const int port = server.start();
    httplib::Client c("127.0.0.1", port);

    auto res = c.Get("/api/task");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = c.Get("/api/task?annotator=alice");
    REQUIRE(res);
    CHECK(res->status == 200);
    Json body = Json::parse(res->body);
    CHECK(body["done"] == false);
    const std::string task_id = body["task"]["task_id"];
    CHECK(task_id == "pair_1#0");
    CHECK(body["render_url"] == "/api/pair/pair_1/render");

    res = c.Get("/api/pair/pair_1/render");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "image/svg+xml");
    CHECK(res->body.find("<svg") != std::string::npos);
    CHECK(c.Get("/api/pair/none/render")->status == 404);

    CHECK(c.Post("/api/label", "{", "application/json")->status == 400);
    CHECK(c.Post("/api/label", R"({"task_id": "x"})", "application/json")->status == 400);
    const Json bad{{"task_id", task_id}, {"annotator_id", "alice"}, {"label", "maybe"}};
    res = c.Post("/api/label", bad.dump(), "application/json");
    CHECK(res->status == 409);
    CHECK(Json::parse(res->body)["ack"] == false);

    const Json good{{"task_id", task_id}, {"annotator_id", "alice"}, {"label", "left"}, {"duration_ms", 5}};
    res = c.Post("/api/label", good.dump(), "application/json");
    REQUIRE(res->status == 200);
    body = Json::parse(res->body);
    CHECK(body["ack"] == true);
    CHECK(body["duplicate"] == false);
    CHECK(Json::parse(c.Post("/api/label", good.dump(), "application/json")->body)["duplicate"] == true);

    body = Json::parse(c.Get("/api/progress")->body);
    CHECK(body["records"] == 1);
    CHECK(body["annotators"]["alice"] == 1);

    body = Json::parse(c.Get("/api/export")->body);
    CHECK(body["count"] == 1);
    CHECK(body["agreement_available"] == false);
    CHECK(body["agreement"].is_null());
    res = c.Get("/api/export?format=jsonl");
    CHECK(annotation_from_json(Json::parse(res->body)).label == L::left);
    server.stop();
}

TEST_CASE("queue over a saved dataset") {
    const Dataset d = synthetic_dataset(20, 3, false);
    FakeClock clock;
    AnnotationService svc(d.pairs, opts(clock, 5));
    CHECK(svc.tasks().size() == 100);
    CHECK(svc.progress()["pairs"] == 20);
}
