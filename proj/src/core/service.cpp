#include "service.hpp"

#include "error.hpp"
#include "serialize.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace tbm {

namespace {

HttpReply error_reply(int status, const std::string& message, const std::string& field = {}) {
    json j = {{"error", message}};
    if (!field.empty()) j["field"] = field;
    return {status, j.dump()};
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput:
        case ErrorCode::Parse:
        case ErrorCode::Domain: return 400;
        default: return 500;
    }
}

}  // namespace

struct AdvisorService::Transport {
    httplib::Server server;
    bool bound = false;
    // httplib ignores stop() until listen has started; these make a stop that
    // races startup stick.
    std::mutex mutex;
    bool stop_requested = false;
    bool listening = false;
    std::atomic<bool> finished{false};
};

AdvisorService::AdvisorService(MappingModel model, PhysicsRules physics, ServiceConfig config)
    : model_(std::move(model)), physics_(std::move(physics)), config_(std::move(config)),
      transport_(std::make_unique<Transport>()) {
    model_.validate();
    physics_.validate();
    config_.limits.validate();
    config_.cost.validate();
    config_.grid.validate();
    const std::string expected = physics_digest(physics_);
    if (model_.physics_digest != expected) {
        fail(ErrorCode::InvalidInput, "model was trained with physics " + model_.physics_digest +
                                          " but the service was given " + expected);
    }
    model_digest_ = tbm::model_digest(model_);

    auto& srv = transport_->server;
    srv.set_payload_max_length(config_.max_request_bytes);
    // httplib also sets SO_REUSEPORT, which lets a second server share a busy port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    auto send = [this](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_header("X-Model-Digest", model_digest_);
        res.set_content(reply.body, "application/json");
    };
    srv.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
    srv.Get("/model", [this, send](const httplib::Request&, httplib::Response& res) { send(res, model_info()); });
    srv.Post("/predict",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, predict(req.body)); });
    srv.Post("/optimize",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, optimize(req.body)); });
}

AdvisorService::~AdvisorService() = default;

HttpReply AdvisorService::healthz() const {
    return {200, json{{"status", "ok"}, {"model_digest", model_digest_}}.dump()};
}

HttpReply AdvisorService::model_info() const {
    json j = {
        {"model_digest", model_digest_},
        {"dims", {{"in", kFeatureCount}, {"h1", model_.net.h1()}, {"h2", model_.net.h2()}, {"out", kTargetCount}}},
        {"hyperparams", to_json(model_.hp)},
        {"physics_digest", model_.physics_digest},
        {"training_metrics", model_.has_metrics ? to_json(model_.metrics) : json(nullptr)},
        {"feature_names", kFeatureNames},
        {"target_names", kTargetNames},
    };
    return {200, j.dump()};
}

HttpReply AdvisorService::predict(std::string_view body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object() || !req.contains("features") || !req.at("features").is_object())
        return error_reply(400, "request must be an object with a 'features' object", "features");
    const json& f = req.at("features");

    FeatureVector x{};
    json warnings = json::array();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const std::string name(kFeatureNames[i]);
        if (!f.contains(name)) return error_reply(400, "missing feature '" + name + "'", name);
        const json& v = f.at(name);
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            return error_reply(400, "feature '" + name + "' must be a finite number", name);
        x[i] = v.get<double>();
        const double lo = model_.norm.features.min[i];
        const double hi = model_.norm.features.max[i];
        if (x[i] < lo || x[i] > hi) {
            std::ostringstream os;
            os << name << '=' << format_double(x[i]) << " outside training range [" << format_double(lo) << ", "
               << format_double(hi) << ']';
            warnings.push_back(os.str());
        }
    }
    try {
        const TargetVector t = model_.predict(x);
        return {200, json{{"th", t[kTh]}, {"tor", t[kTor]}, {"hf", t[kHf]}, {"pb", t[kPb]}, {"warnings", warnings}}.dump()};
    } catch (const Error& e) {
        return error_reply(status_for(e.code()), e.what());
    }
}

HttpReply AdvisorService::optimize(std::string_view body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    try {
        require(req.is_object(), ErrorCode::InvalidInput, "request must be a JSON object");
        require(req.contains("context"), ErrorCode::InvalidInput, "missing field 'context'");
        const DecisionContext ctx = context_from_json(req.at("context"));
        const RatedLimits limits = req.contains("limits") ? limits_from_json(req.at("limits"), config_.limits) : config_.limits;
        const CostModel cost = req.contains("cost") ? cost_from_json(req.at("cost"), config_.cost) : config_.cost;
        const GridSpec grid = req.contains("grid") ? grid_from_json(req.at("grid"), config_.grid) : config_.grid;
        const DecisionResult result = tbm::optimize(model_, physics_, ctx, limits, cost, grid);
        return {200, to_json(result).dump()};
    } catch (const Error& e) {
        return error_reply(status_for(e.code()), e.what());
    }
}

int AdvisorService::bind() {
    auto& t = *transport_;
    int port = config_.port;
    if (port == 0) {
        port = t.server.bind_to_any_port(config_.host);
    } else if (!t.server.bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0) {
        std::ostringstream os;
        os << "cannot bind " << config_.host << ':' << config_.port << " (address in use or not permitted)";
        fail(ErrorCode::Runtime, os.str());
    }
    t.bound = true;
    config_.port = port;
    return port;
}

void AdvisorService::listen() {
    auto& t = *transport_;
    if (!t.bound) bind();
    {
        std::lock_guard lock(t.mutex);
        if (t.stop_requested) return;
        t.listening = true;
    }
    t.server.listen_after_bind();
    t.finished = true;
}

void AdvisorService::stop() {
    auto& t = *transport_;
    {
        std::lock_guard lock(t.mutex);
        t.stop_requested = true;
        if (!t.listening) return;
    }
    while (!t.server.is_running() && !t.finished) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    t.server.stop();
}

}  // namespace tbm
