#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "error.hpp"
#include "serialize.hpp"
#include "service.hpp"

#include <httplib.h>

#include <thread>

using namespace tbm;

namespace {

struct Fixture {
    PhysicsRules physics = PhysicsRules::paper_defaults();
    Dataset data;
    MappingModel model;

    Fixture() {
        GenConfig g;
        g.sample_count = 80;
        g.seed = 3;
        data = generate_dataset(g);
        Hyperparams hp;
        hp.h1 = 8;
        hp.h2 = 6;
        hp.epochs = 10;
        hp.batch_size = 16;
        hp.seed = 3;
        model = train(data, hp, physics, Split{64, 16}).model;
        model.physics_digest = physics_digest(physics);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

json features_json(const FeatureVector& x) {
    json f = json::object();
    for (std::size_t i = 0; i < kFeatureCount; ++i) f[std::string(kFeatureNames[i])] = x[i];
    return f;
}

const json kContext = {{"ucs", 80}, {"rqd", 40}, {"cai", 3}, {"d_avg", 15}, {"ci", 380}, {"peak_acc", 2.4}, {"main_freq", 113}};

// Running server on an ephemeral port, stopped on scope exit.
struct Running {
    AdvisorService service;
    int port = 0;
    std::thread thread;

    explicit Running(ServiceConfig cfg = {})
        : service(fixture().model, fixture().physics, [&] {
              cfg.port = 0;
              return cfg;
          }()) {
        port = service.bind();
        thread = std::thread([this] { service.listen(); });
    }
    ~Running() {
        service.stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }
};

}  // namespace

TEST_CASE("physics digest mismatch refuses to start") {
    auto other = fixture().physics;
    other.cp.b = 20.0;
    try {
        AdvisorService s(fixture().model, other, ServiceConfig{});
        FAIL("expected mismatch error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidInput);
    }
}

TEST_CASE("handlers without transport") {
    const AdvisorService s(fixture().model, fixture().physics, ServiceConfig{});
    const auto h = s.healthz();
    CHECK(h.status == 200);
    CHECK(json::parse(h.body)["model_digest"] == model_digest(fixture().model));

    const auto info = json::parse(s.model_info().body);
    CHECK(info["dims"]["h1"] == 8);
    CHECK(info["physics_digest"] == physics_digest(fixture().physics));

    // A training sample's features reproduce library predict exactly.
    const auto& sample = fixture().data[5];
    const auto reply = s.predict(json{{"features", features_json(sample.features())}}.dump());
    REQUIRE(reply.status == 200);
    const auto body = json::parse(reply.body);
    const auto t = fixture().model.predict(sample.features());
    CHECK(body["th"].get<double>() == t[kTh]);
    CHECK(body["tor"].get<double>() == t[kTor]);
    CHECK(body["hf"].get<double>() == t[kHf]);
    CHECK(body["pb"].get<double>() == t[kPb]);

    auto f = features_json(sample.features());
    f.erase("cai");
    const auto missing = s.predict(json{{"features", f}}.dump());
    CHECK(missing.status == 400);
    CHECK(json::parse(missing.body)["field"] == "cai");
    CHECK(missing.body.find("cai") != std::string::npos);

    f = features_json(sample.features());
    f["ucs"] = "hard";
    CHECK(json::parse(s.predict(json{{"features", f}}.dump()).body)["field"] == "ucs");

    f = features_json(sample.features());
    f["ucs"] = 1000.0;
    const auto warned = json::parse(s.predict(json{{"features", f}}.dump()).body);
    REQUIRE(warned["warnings"].size() == 1);
    CHECK(warned["warnings"][0].get<std::string>().rfind("ucs=", 0) == 0);

    CHECK(s.predict("{oops").status == 400);
    CHECK(s.optimize("[]").status == 400);
    CHECK(s.optimize(json{{"context", {{"ucs", 80}}}}.dump()).status == 400);
    CHECK(s.optimize(json{{"context", kContext}, {"grid", {{"rpm_step", 0}}}}.dump()).status == 400);
}

TEST_CASE("HTTP endpoints") {
    Running run;
    auto c = run.client();
    const std::string digest = model_digest(fixture().model);

    auto h = c.Get("/healthz");
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(h->get_header_value("X-Model-Digest") == digest);
    CHECK(json::parse(h->body)["model_digest"] == digest);

    auto m = c.Get("/model");
    REQUIRE(m);
    CHECK(m->status == 200);
    CHECK(m->get_header_value("X-Model-Digest") == digest);

    // /optimize matches the library document byte for byte.
    const DecisionContext ctx = context_from_json(kContext);
    const std::string expected =
        to_json(tbm::optimize(fixture().model, fixture().physics, ctx, RatedLimits{}, CostModel{}, GridSpec{})).dump();
    auto o = c.Post("/optimize", json{{"context", kContext}}.dump(), "application/json");
    REQUIRE(o);
    CHECK(o->status == 200);
    CHECK(o->body == expected);
    CHECK(o->get_header_value("X-Model-Digest") == digest);

    // Zeroed limits give an infeasible document, not an error.
    const json zero = {{"thrust_rated", 0}, {"torque_rated", 0}, {"belt_rated", 0}};
    auto z = c.Post("/optimize", json{{"context", kContext}, {"limits", zero}}.dump(), "application/json");
    REQUIRE(z);
    CHECK(z->status == 200);
    CHECK(json::parse(z->body)["status"] == "infeasible");
    CHECK(json::parse(z->body)["feasible_count"] == 0);

    auto bad = c.Post("/predict", R"({"features": {}})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(bad->get_header_value("X-Model-Digest") == digest);

    auto nf = c.Get("/nope");
    REQUIRE(nf);
    CHECK(nf->status == 404);
}

TEST_CASE("concurrent identical requests return identical bodies") {
    Running run;
    const std::string body = json{{"context", kContext}}.dump();
    const std::string predict_body = json{{"features", features_json(fixture().data[0].features())}}.dump();
    constexpr int kClients = 6;
    std::vector<std::string> out(kClients), pred(kClients);
    {
        std::vector<std::thread> clients;
        for (int i = 0; i < kClients; ++i) {
            clients.emplace_back([&, i] {
                auto c = run.client();
                if (auto r = c.Post("/optimize", body, "application/json")) out[i] = r->body;
                if (auto r = c.Post("/predict", predict_body, "application/json")) pred[i] = r->body;
            });
        }
        for (auto& t : clients) t.join();
    }
    REQUIRE_FALSE(out[0].empty());
    for (int i = 1; i < kClients; ++i) {
        CHECK(out[i] == out[0]);
        CHECK(pred[i] == pred[0]);
    }
}

TEST_CASE("restart reproduces responses") {
    std::string first, second;
    {
        Running run;
        first = run.client().Post("/optimize", json{{"context", kContext}}.dump(), "application/json")->body;
    }
    {
        Running run;
        second = run.client().Post("/optimize", json{{"context", kContext}}.dump(), "application/json")->body;
    }
    CHECK(first == second);
}

TEST_CASE("busy port is a startup error") {
    Running run;
    ServiceConfig cfg;
    cfg.port = run.port;
    AdvisorService other(fixture().model, fixture().physics, cfg);
    CHECK_THROWS_AS(other.bind(), Error);
}
