#pragma once

#include "decision.hpp"
#include "mapping.hpp"
#include "physics.hpp"

#include <memory>
#include <string>

namespace tbm {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_request_bytes = 1 << 20;
    RatedLimits limits;
    CostModel cost;
    GridSpec grid;
};

struct HttpReply {
    int status = 200;
    std::string body;
};

// Immutable model + physics behind the HTTP endpoints. Handlers are const and
// safe to call concurrently.
class AdvisorService {
public:
    // Fails with InvalidInput when the model's physics digest does not match `physics`.
    AdvisorService(MappingModel model, PhysicsRules physics, ServiceConfig config);
    ~AdvisorService();
    AdvisorService(const AdvisorService&) = delete;
    AdvisorService& operator=(const AdvisorService&) = delete;

    const std::string& model_digest() const { return model_digest_; }
    const ServiceConfig& config() const { return config_; }

    HttpReply healthz() const;
    HttpReply model_info() const;
    HttpReply predict(std::string_view body) const;
    HttpReply optimize(std::string_view body) const;

    // Binds config().host:port (port 0 picks a free one) and returns the bound port.
    int bind();
    // Blocks until stop(); in-flight requests complete before it returns.
    void listen();
    void stop();

private:
    struct Transport;

    MappingModel model_;
    PhysicsRules physics_;
    ServiceConfig config_;
    std::string model_digest_;
    std::unique_ptr<Transport> transport_;
};

}  // namespace tbm
