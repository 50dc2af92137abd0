#include "tbm/tbm.h"

#include "decision.hpp"
#include "error.hpp"
#include "mapping.hpp"
#include "muck.hpp"
#include "physics.hpp"
#include "serialize.hpp"
#include "service.hpp"
#include "study.hpp"
#include "synthetic.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

struct tbm_physics {
    tbm::PhysicsRules rules;
};

struct tbm_model {
    std::optional<tbm::MappingModel> network;
    std::optional<tbm::PhysicsStubMapping> stub;
    tbm::json stub_descriptor;
    tbm::FeatureVector medians{};

    const tbm::Mapping& mapping() const {
        if (network) return *network;
        return *stub;
    }
};

struct tbm_server {
    std::unique_ptr<tbm::AdvisorService> service;
};

namespace {

thread_local std::string g_last_error;

tbm_status set_error(tbm_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class F>
tbm_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return TBM_OK;
    } catch (const tbm::Error& e) {
        return set_error(static_cast<tbm_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(TBM_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return set_error(TBM_ERR_RUNTIME, e.what());
    }
}

void need(const void* p, const char* name) {
    if (!p) tbm::fail(tbm::ErrorCode::InvalidInput, std::string(name) + " must not be NULL");
}

char* dup_string(std::string_view s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size());
    out[s.size()] = '\0';
    return out;
}

void put(char** out, std::string_view s) {
    if (out) *out = dup_string(s);
}

std::ifstream open_in(const char* path) {
    need(path, "path");
    std::ifstream in(path, std::ios::binary);
    if (!in) tbm::fail(tbm::ErrorCode::Io, std::string("cannot open '") + path + "' for reading");
    return in;
}

tbm::FeatureVector range_midpoints() {
    const tbm::FeatureRanges r;
    auto mid = [](const tbm::Range& x) { return 0.5 * (x.min + x.max); };
    return {mid(r.p), mid(r.rpm), mid(r.ucs), mid(r.rqd), mid(r.cai), mid(r.d_avg), mid(r.ci), mid(r.peak_acc),
            mid(r.main_freq)};
}

tbm_status force_call(const tbm_physics* physics, double ucs, double p, double* out, int* ood,
                      tbm::ForceValue (*fn)(const tbm::PhysicsRules&, double, double)) {
    return guarded([&] {
        need(physics, "physics");
        need(out, "out");
        const auto v = fn(physics->rules, ucs, p);
        *out = v.value;
        if (ood) *ood = v.out_of_domain ? 1 : 0;
    });
}

}  // namespace

extern "C" {

const char* tbm_version(void) { return "1.0.0"; }

const char* tbm_last_error(void) { return g_last_error.c_str(); }

const char* tbm_status_name(tbm_status status) {
    switch (status) {
        case TBM_OK: return "ok";
        case TBM_ERR_INVALID_INPUT: return "invalid-input";
        case TBM_ERR_DOMAIN: return "domain";
        case TBM_ERR_FIT: return "fit";
        case TBM_ERR_IO: return "io";
        case TBM_ERR_PARSE: return "parse";
        case TBM_ERR_RUNTIME: return "runtime";
    }
    return "unknown";
}

void tbm_free_string(char* s) { std::free(s); }

tbm_status tbm_physics_default(tbm_physics** out) {
    return guarded([&] {
        need(out, "out");
        *out = new tbm_physics{tbm::PhysicsRules::paper_defaults()};
    });
}

tbm_status tbm_physics_load(const char* path, tbm_physics** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new tbm_physics{tbm::physics_from_json(tbm::read_json_file(path))};
    });
}

tbm_status tbm_physics_parse(const char* json, tbm_physics** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        *out = new tbm_physics{tbm::physics_from_json(tbm::parse_json(json, "physics configuration"))};
    });
}

tbm_status tbm_physics_to_json(const tbm_physics* physics, char** out_json) {
    return guarded([&] {
        need(physics, "physics");
        need(out_json, "out_json");
        put(out_json, tbm::to_json(physics->rules).dump(2));
    });
}

tbm_status tbm_physics_digest(const tbm_physics* physics, char** out_digest) {
    return guarded([&] {
        need(physics, "physics");
        need(out_digest, "out_digest");
        put(out_digest, tbm::physics_digest(physics->rules));
    });
}

void tbm_physics_free(tbm_physics* physics) { delete physics; }

tbm_status tbm_physics_normal_force(const tbm_physics* physics, double ucs, double p, double* out, int* ood) {
    return force_call(physics, ucs, p, out, ood, &tbm::normal_force);
}

tbm_status tbm_physics_rolling_force(const tbm_physics* physics, double ucs, double p, double* out, int* ood) {
    return force_call(physics, ucs, p, out, ood, &tbm::rolling_force);
}

tbm_status tbm_physics_thrust(const tbm_physics* physics, double ucs, double p, double* out, int* ood) {
    return force_call(physics, ucs, p, out, ood, [](const tbm::PhysicsRules& r, double u, double q) {
        return tbm::cutterhead_thrust(r, r.layout, u, q);
    });
}

tbm_status tbm_physics_torque(const tbm_physics* physics, double ucs, double p, double* out, int* ood) {
    return force_call(physics, ucs, p, out, ood, [](const tbm::PhysicsRules& r, double u, double q) {
        return tbm::cutterhead_torque(r, r.layout, u, q);
    });
}

tbm_status tbm_physics_critical_penetration(const tbm_physics* physics, double ucs, double spacing_mm, double* out) {
    return guarded([&] {
        need(physics, "physics");
        need(out, "out");
        *out = tbm::critical_penetration(physics->rules.cp, ucs, spacing_mm);
    });
}

tbm_status tbm_physics_fit_csv(const char* cutting_csv_path, const tbm_physics* base, tbm_physics** out,
                               char** report_json) {
    return guarded([&] {
        need(out, "out");
        auto in = open_in(cutting_csv_path);
        const auto samples = tbm::read_cutting_csv(in);
        const auto fit = tbm::fit_physics(samples, base ? base->rules : tbm::PhysicsRules::paper_defaults());
        fit.rules.validate();
        auto report = [](const tbm::FitReport& r) {
            return tbm::json{{"samples", r.samples}, {"rmse", r.rmse}, {"max_abs_residual", r.max_abs_residual}, {"r2", r.r2}};
        };
        put(report_json, tbm::json{{"normal", report(fit.normal)},
                                   {"rolling", report(fit.rolling)},
                                   {"cp_boundaries", fit.cp_boundaries}}
                             .dump());
        *out = new tbm_physics{fit.rules};
    });
}

tbm_status tbm_muck_indices_csv(const char* sieve_csv_path, const char* particle_csv_path, char** out_json) {
    return guarded([&] {
        need(out_json, "out_json");
        auto sieve_in = open_in(sieve_csv_path);
        const auto sieve = tbm::read_sieve_csv(sieve_in);
        std::vector<tbm::ParticleDims> particles;
        if (particle_csv_path) {
            auto in = open_in(particle_csv_path);
            particles = tbm::read_particle_csv(in);
        }
        const auto avg = tbm::average_particle_size(sieve);
        tbm::json j = tbm::to_json(tbm::muck_indices(sieve, particles));
        j["d16"] = avg.d16;
        j["d50"] = avg.d50;
        j["d84"] = avg.d84;
        j["clamped"] = avg.clamped;
        put(out_json, j.dump());
    });
}

tbm_status tbm_generate_dataset(const char* config_json, uint64_t seed, const char* out_csv_path) {
    return guarded([&] {
        need(config_json, "config_json");
        need(out_csv_path, "out_csv_path");
        auto config = tbm::gen_config_from_json(tbm::parse_json(config_json, "generator configuration"));
        config.seed = seed;
        std::ostringstream os;
        tbm::write_dataset_csv(os, tbm::generate_dataset(config));
        tbm::write_text_file(out_csv_path, os.str());
    });
}

tbm_status tbm_model_train(const char* dataset_csv_path, const tbm_physics* physics, const char* hp_json,
                           tbm_model** out, char** report_json) {
    return guarded([&] {
        need(physics, "physics");
        need(hp_json, "hp_json");
        need(out, "out");
        auto in = open_in(dataset_csv_path);
        const auto data = tbm::read_dataset_csv(in);
        const auto hp_doc = tbm::parse_json(hp_json, "hyperparameters");
        const auto hp = tbm::hyperparams_from_json(hp_doc, true);
        auto result = tbm::train(data, hp, physics->rules, tbm::split_from_json(hp_doc));
        result.model.physics_digest = tbm::physics_digest(physics->rules);
        put(report_json, tbm::to_json(result.report).dump());
        auto* m = new tbm_model;
        m->medians = result.model.feature_medians;
        m->network = std::move(result.model);
        *out = m;
    });
}

tbm_status tbm_model_load(const char* path, const tbm_physics* physics, tbm_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        const auto doc = tbm::read_json_file(path);
        auto m = std::make_unique<tbm_model>();
        if (doc.is_object() && doc.value("kind", "") == "physics_stub") {
            const auto rules = physics ? physics->rules : tbm::PhysicsRules::paper_defaults();
            m->stub.emplace(rules, doc.value("zero_belt", false));
            m->stub_descriptor = doc;
            m->medians = range_midpoints();
        } else {
            m->network = tbm::model_from_json(doc);
            m->medians = m->network->feature_medians;
        }
        *out = m.release();
    });
}

tbm_status tbm_model_save(const tbm_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        const auto doc = model->network ? tbm::to_json(*model->network) : model->stub_descriptor;
        tbm::write_text_file(path, doc.dump() + "\n");
    });
}

tbm_status tbm_model_digest(const tbm_model* model, char** out_digest) {
    return guarded([&] {
        need(model, "model");
        need(out_digest, "out_digest");
        put(out_digest, model->network ? tbm::model_digest(*model->network) : tbm::digest(model->stub_descriptor.dump()));
    });
}

void tbm_model_free(tbm_model* model) { delete model; }

tbm_status tbm_model_predict(const tbm_model* model, const double features[TBM_FEATURE_COUNT],
                             double targets[TBM_TARGET_COUNT]) {
    return guarded([&] {
        need(model, "model");
        need(features, "features");
        need(targets, "targets");
        tbm::FeatureVector x{};
        std::copy(features, features + TBM_FEATURE_COUNT, x.begin());
        const auto y = model->mapping().predict_batch(std::span<const tbm::FeatureVector>(&x, 1)).front();
        std::copy(y.begin(), y.end(), targets);
    });
}

tbm_status tbm_model_evaluate_csv(const tbm_model* model, const char* dataset_csv_path, char** metrics_json) {
    return guarded([&] {
        need(model, "model");
        need(metrics_json, "metrics_json");
        auto in = open_in(dataset_csv_path);
        const auto data = tbm::read_dataset_csv(in);
        put(metrics_json, tbm::to_json(tbm::evaluate(model->mapping(), data)).dump());
    });
}

tbm_status tbm_optimize(const tbm_model* model, const tbm_physics* physics, const char* request_json,
                        char** result_json, char** region_csv) {
    return guarded([&] {
        need(model, "model");
        need(physics, "physics");
        need(request_json, "request_json");
        need(result_json, "result_json");
        const auto req = tbm::parse_json(request_json, "optimize request");
        tbm::require(req.is_object() && req.contains("context"), tbm::ErrorCode::InvalidInput,
                     "optimize request needs a 'context' object");
        const auto ctx = tbm::context_from_json(req.at("context"));
        const auto limits = req.contains("limits") ? tbm::limits_from_json(req.at("limits")) : tbm::RatedLimits{};
        const auto cost = req.contains("cost") ? tbm::cost_from_json(req.at("cost")) : tbm::CostModel{};
        const auto grid = req.contains("grid") ? tbm::grid_from_json(req.at("grid")) : tbm::GridSpec{};
        const auto result = tbm::optimize(model->mapping(), physics->rules, ctx, limits, cost, grid);
        if (region_csv) {
            std::ostringstream os;
            tbm::write_region_csv(os, result.region);
            put(region_csv, os.str());
        }
        put(result_json, tbm::to_json(result).dump());
    });
}

tbm_status tbm_deduce(const tbm_model* model, const tbm_physics* physics, const char* ranges_json, char** rows_csv,
                      char** stats_json) {
    return guarded([&] {
        need(model, "model");
        need(physics, "physics");
        need(ranges_json, "ranges_json");
        const auto doc = tbm::parse_json(ranges_json, "deduction ranges");
        const auto dgrid = tbm::deduction_grid_from_json(doc);
        const auto limits = doc.contains("limits") ? tbm::limits_from_json(doc.at("limits")) : tbm::RatedLimits{};
        const auto cost = doc.contains("cost") ? tbm::cost_from_json(doc.at("cost")) : tbm::CostModel{};
        const auto grid = doc.contains("grid") ? tbm::grid_from_json(doc.at("grid")) : tbm::GridSpec{};
        const auto study =
            tbm::deduction_study(model->mapping(), physics->rules, limits, cost, grid, dgrid, model->medians);
        if (rows_csv) {
            std::ostringstream os;
            tbm::write_deduction_csv(os, study);
            put(rows_csv, os.str());
        }
        put(stats_json, tbm::to_json(study).dump());
    });
}

tbm_status tbm_compare_sections_csv(const char* sections_csv_path, char** report_json) {
    return guarded([&] {
        need(report_json, "report_json");
        auto in = open_in(sections_csv_path);
        const auto sections = tbm::read_sections_csv(in);
        tbm::json j = tbm::json::array();
        for (const auto& c : tbm::compare_all(sections)) j.push_back(tbm::to_json(c));
        put(report_json, tbm::json{{"comparisons", j}}.dump());
    });
}

tbm_status tbm_server_create(const tbm_model* model, const tbm_physics* physics, const char* host, int port,
                             const char* config_json, tbm_server** out) {
    return guarded([&] {
        need(model, "model");
        need(physics, "physics");
        need(out, "out");
        tbm::require(model->network.has_value(), tbm::ErrorCode::InvalidInput,
                     "the advisor service needs a trained model file");
        tbm::ServiceConfig cfg;
        if (host) cfg.host = host;
        cfg.port = port;
        if (config_json) {
            const auto doc = tbm::parse_json(config_json, "service configuration");
            if (doc.contains("limits")) cfg.limits = tbm::limits_from_json(doc.at("limits"));
            if (doc.contains("cost")) cfg.cost = tbm::cost_from_json(doc.at("cost"));
            if (doc.contains("grid")) cfg.grid = tbm::grid_from_json(doc.at("grid"));
            if (doc.contains("max_request_bytes")) cfg.max_request_bytes = doc.at("max_request_bytes").get<std::size_t>();
        }
        auto server = std::make_unique<tbm_server>();
        server->service = std::make_unique<tbm::AdvisorService>(*model->network, physics->rules, cfg);
        server->service->bind();
        *out = server.release();
    });
}

int tbm_server_port(const tbm_server* server) { return server ? server->service->config().port : -1; }

tbm_status tbm_server_run(tbm_server* server) {
    return guarded([&] {
        need(server, "server");
        server->service->listen();
    });
}

void tbm_server_stop(tbm_server* server) {
    if (server) server->service->stop();
}

void tbm_server_free(tbm_server* server) { delete server; }

}  // extern "C"
