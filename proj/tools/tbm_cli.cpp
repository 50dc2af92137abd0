// tbm: command-line front end over the C API in libtbm.
//
// Exit codes: 0 success, 1 usage/validation error, 2 runtime error.
// Machine-readable output goes to stdout, diagnostics to stderr.

#include "tbm/tbm.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

struct Failure {
    int exit_code;
    std::string message;
};

int exit_for(tbm_status s) {
    switch (s) {
        case TBM_OK: return kOk;
        case TBM_ERR_INVALID_INPUT:
        case TBM_ERR_DOMAIN:
        case TBM_ERR_PARSE: return kValidation;
        default: return kRuntime;
    }
}

void check(tbm_status s) {
    if (s != TBM_OK) throw Failure{exit_for(s), std::string(tbm_status_name(s)) + ": " + tbm_last_error()};
}

// Owns a string returned by the library.
struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { tbm_free_string(p); }
    char** out() { return &p; }
    std::string str() const { return p ? p : ""; }
};

struct PhysicsDel {
    void operator()(tbm_physics* p) const { tbm_physics_free(p); }
};
struct ModelDel {
    void operator()(tbm_model* m) const { tbm_model_free(m); }
};
struct ServerDel {
    void operator()(tbm_server* s) const { tbm_server_free(s); }
};
using PhysicsPtr = std::unique_ptr<tbm_physics, PhysicsDel>;
using ModelPtr = std::unique_ptr<tbm_model, ModelDel>;
using ServerPtr = std::unique_ptr<tbm_server, ServerDel>;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kRuntime, "io: cannot open '" + path + "' for reading"};
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) throw Failure{kRuntime, "io: cannot write '" + path + "'"};
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Failure{kValidation, "parse: " + path + ": " + e.what()};
    }
}

PhysicsPtr load_physics(const std::optional<std::string>& path) {
    tbm_physics* p = nullptr;
    check(path ? tbm_physics_load(path->c_str(), &p) : tbm_physics_default(&p));
    return PhysicsPtr(p);
}

ModelPtr load_model(const std::string& path, const tbm_physics* physics) {
    tbm_model* m = nullptr;
    check(tbm_model_load(path.c_str(), physics, &m));
    return ModelPtr(m);
}

std::string emit(const std::string& doc) { return json::parse(doc).dump(2) + "\n"; }

// ---- subcommands ---------------------------------------------------------

struct FitPhysicsArgs {
    std::string cutting_data, out;
    std::optional<std::string> base;
};

void run_fit_physics(const FitPhysicsArgs& a) {
    auto base = a.base ? load_physics(a.base) : PhysicsPtr{};
    tbm_physics* fitted = nullptr;
    OwnedString report;
    check(tbm_physics_fit_csv(a.cutting_data.c_str(), base.get(), &fitted, report.out()));
    PhysicsPtr owner(fitted);
    OwnedString doc;
    check(tbm_physics_to_json(fitted, doc.out()));
    write_file(a.out, doc.str() + "\n");
    std::cout << emit(report.str());
    std::cerr << "wrote physics rules to " << a.out << "\n";
}

void run_default_physics(const std::string& out) {
    auto physics = load_physics(std::nullopt);
    OwnedString doc;
    check(tbm_physics_to_json(physics.get(), doc.out()));
    write_file(out, doc.str() + "\n");
}

struct GenArgs {
    std::string config, out;
    std::uint64_t seed = 0;
};

void run_gen(const GenArgs& a) {
    const std::string cfg = read_file(a.config);
    check(tbm_generate_dataset(cfg.c_str(), a.seed, a.out.c_str()));
    std::cerr << "wrote dataset to " << a.out << " (seed " << a.seed << ")\n";
}

struct TrainArgs {
    std::string data, physics, hp, out, report;
    std::optional<std::uint64_t> seed;
};

void run_train(const TrainArgs& a) {
    auto physics = load_physics(a.physics);
    json hp = read_json(a.hp);
    if (!hp.is_object()) throw Failure{kValidation, "invalid-input: hyperparameter file must hold a JSON object"};
    if (a.seed) hp["seed"] = *a.seed;
    if (!hp.contains("seed"))
        throw Failure{kValidation, "invalid-input: training needs an explicit seed (in the hp file or --seed)"};
    tbm_model* m = nullptr;
    OwnedString report;
    check(tbm_model_train(a.data.c_str(), physics.get(), hp.dump().c_str(), &m, report.out()));
    ModelPtr model(m);
    check(tbm_model_save(model.get(), a.out.c_str()));
    write_file(a.report, emit(report.str()));
    std::cerr << "wrote model to " << a.out << " and report to " << a.report << "\n";
}

struct EvalArgs {
    std::string model, data;
    std::optional<std::string> physics;
};

void run_eval(const EvalArgs& a) {
    auto physics = load_physics(a.physics);
    auto model = load_model(a.model, physics.get());
    OwnedString metrics;
    check(tbm_model_evaluate_csv(model.get(), a.data.c_str(), metrics.out()));
    std::cout << emit(metrics.str());
}

struct OptimizeArgs {
    std::string model, physics, context, out;
    std::optional<std::string> limits, cost, grid, region_csv;
};

void run_optimize(const OptimizeArgs& a) {
    auto physics = load_physics(a.physics);
    auto model = load_model(a.model, physics.get());
    json req = {{"context", read_json(a.context)}};
    if (a.limits) req["limits"] = read_json(*a.limits);
    if (a.cost) req["cost"] = read_json(*a.cost);
    if (a.grid) req["grid"] = read_json(*a.grid);
    OwnedString result, region;
    check(tbm_optimize(model.get(), physics.get(), req.dump().c_str(), result.out(),
                       a.region_csv ? region.out() : nullptr));
    write_file(a.out, result.str() + "\n");
    if (a.region_csv) write_file(*a.region_csv, region.str());
    const json r = json::parse(result.str());
    std::cerr << "status " << r.at("status").get<std::string>() << ", " << r.at("feasible_count") << " feasible cells";
    if (!r.at("optimum").is_null())
        std::cerr << ", optimum p=" << r["optimum"]["p"] << " rpm=" << r["optimum"]["rpm"];
    std::cerr << "\n";
}

struct DeduceArgs {
    std::string model, physics, ranges, out;
};

void run_deduce(const DeduceArgs& a) {
    auto physics = load_physics(a.physics);
    auto model = load_model(a.model, physics.get());
    const std::string ranges = read_file(a.ranges);
    OwnedString rows, stats;
    check(tbm_deduce(model.get(), physics.get(), ranges.c_str(), rows.out(), stats.out()));
    write_file(a.out, rows.str());
    std::cout << emit(stats.str());
}

void run_compare(const std::string& sections) {
    OwnedString report;
    check(tbm_compare_sections_csv(sections.c_str(), report.out()));
    std::cout << emit(report.str());
}

struct MuckArgs {
    std::string sieve;
    std::optional<std::string> particles;
};

void run_muck(const MuckArgs& a) {
    OwnedString out;
    check(tbm_muck_indices_csv(a.sieve.c_str(), a.particles ? a.particles->c_str() : nullptr, out.out()));
    std::cout << emit(out.str());
}

struct ServeArgs {
    std::string model, physics, addr = "127.0.0.1:8080";
    std::optional<std::string> config;
};

std::pair<std::string, int> split_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0)
        throw Failure{kValidation, "invalid-input: --addr must be HOST:PORT, got '" + addr + "'"};
    try {
        std::size_t used = 0;
        const int port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
        return {addr.substr(0, colon), port};
    } catch (const std::logic_error&) {
        throw Failure{kValidation, "invalid-input: bad port in --addr '" + addr + "'"};
    }
}

void run_serve(const ServeArgs& a) {
    const auto [host, port] = split_addr(a.addr);
    auto physics = load_physics(a.physics);
    auto model = load_model(a.model, physics.get());
    const std::string config = a.config ? read_file(*a.config) : std::string();

    // Block termination signals before any thread exists so only the waiter sees them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    tbm_server* s = nullptr;
    check(tbm_server_create(model.get(), physics.get(), host.c_str(), port, a.config ? config.c_str() : nullptr, &s));
    ServerPtr server(s);
    OwnedString digest;
    check(tbm_model_digest(model.get(), digest.out()));
    std::cerr << "serving " << digest.str() << " on " << host << ":" << tbm_server_port(server.get()) << "\n";

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&sigs, &sig);
        std::cerr << "signal " << sig << ", shutting down\n";
        tbm_server_stop(server.get());
    });
    const tbm_status st = tbm_server_run(server.get());
    // The listener can also exit on its own; wake the waiter so it can be joined.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    check(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TBM operating-parameter decision engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tbm_version());

    FitPhysicsArgs fit;
    auto* c_fit = app.add_subcommand("fit-physics", "Fit force polynomials and the CP rule from cutting data");
    c_fit->add_option("--cutting-data", fit.cutting_data, "CSV ucs_mpa,p_mm,s_mm,fn_kn,fr_kn,fragments")->required();
    c_fit->add_option("--out", fit.out, "Output physics JSON")->required();
    c_fit->add_option("--base", fit.base, "Physics JSON supplying the cutter layout");

    std::string default_out;
    auto* c_def = app.add_subcommand("default-physics", "Write the built-in physics rules");
    c_def->add_option("--out", default_out, "Output physics JSON")->required();

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen", "Generate a synthetic field dataset");
    c_gen->add_option("--config", gen.config, "Generator JSON")->required();
    c_gen->add_option("--seed", gen.seed, "RNG seed")->required();
    c_gen->add_option("--out", gen.out, "Output dataset CSV")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train the physics-constrained mapping");
    c_train->add_option("--data", train.data, "Dataset CSV")->required();
    c_train->add_option("--physics", train.physics, "Physics JSON")->required();
    c_train->add_option("--hp", train.hp, "Hyperparameter JSON")->required();
    c_train->add_option("--out", train.out, "Output model JSON")->required();
    c_train->add_option("--report", train.report, "Output training report JSON")->required();
    c_train->add_option("--seed", train.seed, "Overrides the seed in the hyperparameter file");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Print MAPE and R2 of a model on a dataset");
    c_eval->add_option("--model", ev.model, "Model JSON")->required();
    c_eval->add_option("--data", ev.data, "Dataset CSV")->required();
    c_eval->add_option("--physics", ev.physics, "Physics JSON (used by stub models)");

    OptimizeArgs opt;
    auto* c_opt = app.add_subcommand("optimize", "Pick the least-cost feasible (rpm, p)");
    c_opt->add_option("--model", opt.model, "Model JSON")->required();
    c_opt->add_option("--physics", opt.physics, "Physics JSON")->required();
    c_opt->add_option("--context", opt.context, "Geological context JSON")->required();
    c_opt->add_option("--limits", opt.limits, "Rated limits JSON");
    c_opt->add_option("--cost", opt.cost, "Cost model JSON");
    c_opt->add_option("--grid", opt.grid, "Grid JSON");
    c_opt->add_option("--out", opt.out, "Output decision JSON")->required();
    c_opt->add_option("--region-csv", opt.region_csv, "Also write the per-cell grid as CSV");

    DeduceArgs ded;
    auto* c_ded = app.add_subcommand("deduce", "Run the parameter deduction study");
    c_ded->add_option("--model", ded.model, "Model JSON")->required();
    c_ded->add_option("--physics", ded.physics, "Physics JSON")->required();
    c_ded->add_option("--ranges", ded.ranges, "Deduction ranges JSON")->required();
    c_ded->add_option("--out", ded.out, "Output rows CSV")->required();

    std::string sections;
    auto* c_cmp = app.add_subcommand("compare", "Compare methods over tunnel sections");
    c_cmp->add_option("--sections", sections, "Sections CSV")->required();

    MuckArgs muck;
    auto* c_muck = app.add_subcommand("muck", "Muck size, coarseness and geometry indices");
    c_muck->add_option("--sieve", muck.sieve, "Sieve CSV opening_mm,residue_g with a final pan row")->required();
    c_muck->add_option("--particles", muck.particles, "Particle CSV a_mm,b_mm,c_mm");

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP advisor service");
    c_serve->add_option("--model", serve.model, "Model JSON")->required();
    c_serve->add_option("--physics", serve.physics, "Physics JSON")->required();
    c_serve->add_option("--addr", serve.addr, "HOST:PORT")->capture_default_str();
    c_serve->add_option("--config", serve.config, "Service defaults JSON (limits, cost, grid)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        return kValidation;
    }

    try {
        if (*c_fit) run_fit_physics(fit);
        else if (*c_def) run_default_physics(default_out);
        else if (*c_gen) run_gen(gen);
        else if (*c_train) run_train(train);
        else if (*c_eval) run_eval(ev);
        else if (*c_opt) run_optimize(opt);
        else if (*c_ded) run_deduce(ded);
        else if (*c_cmp) run_compare(sections);
        else if (*c_muck) run_muck(muck);
        else if (*c_serve) run_serve(serve);
        return kOk;
    } catch (const Failure& f) {
        std::cerr << "tbm: " << f.message << "\n";
        return f.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "tbm: " << e.what() << "\n";
        return kRuntime;
    }
}
