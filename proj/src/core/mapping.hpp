#pragma once

#include "dataset.hpp"
#include "physics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tbm {

struct Hyperparams {
    std::size_t h1 = 1024;
    std::size_t h2 = 1024;
    double alpha = 0.001;
    double lambda = 1e-5;
    double mu1 = 0.2;
    double mu2 = 0.1;
    double mu3 = 0.2;
    std::size_t epochs = 2000;
    std::size_t batch_size = 32;
    double momentum = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-dimension min-max scaling onto [-1, 1].
template <std::size_t N>
struct MinMax {
    std::array<double, N> min{};
    std::array<double, N> max{};

    double normalize(std::size_t i, double v) const { return 2.0 * (v - min[i]) / (max[i] - min[i]) - 1.0; }
    double denormalize(std::size_t i, double v) const { return min[i] + (v + 1.0) * 0.5 * (max[i] - min[i]); }
    void validate() const;
};

struct Normalization {
    MinMax<kFeatureCount> features;
    MinMax<kTargetCount> targets;
};

// 9 → h1 → h2 → 4; ReLU on hidden layers, identity output. Weights are (out × in).
struct Network {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    static Network zeros(std::size_t h1, std::size_t h2);
    static Network initialized(std::size_t h1, std::size_t h2, std::uint64_t seed);

    std::size_t h1() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t h2() const { return static_cast<std::size_t>(w2.rows()); }
    double weight_square_sum() const;
    void validate() const;

    // Columns are samples, in normalized space.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

struct Metrics {
    std::array<double, kTargetCount> mape{};
    std::array<double, kTargetCount> r2{};
    double aggregate_mape = 0.0;
};

// Source of (hf, th, tor, pb) predictions for the decision engine.
class Mapping {
public:
    virtual ~Mapping() = default;
    virtual std::vector<TargetVector> predict_batch(std::span<const FeatureVector> inputs) const = 0;
};

class MappingModel final : public Mapping {
public:
    Network net;
    Normalization norm;
    Hyperparams hp;
    std::string physics_digest;
    FeatureVector feature_medians{};
    bool has_metrics = false;
    Metrics metrics;  // held-out metrics from training, when available

    void validate() const;
    TargetVector predict(const FeatureVector& x) const;
    std::vector<TargetVector> predict_batch(std::span<const FeatureVector> inputs) const override;

    Eigen::MatrixXd normalize_features(std::span<const FeatureVector> inputs) const;
};

// Loss inputs for a batch, fully in normalized space. Blended targets and
// weights do not depend on network parameters.
struct PreparedBatch {
    Eigen::MatrixXd x;  // 9 × n
    Eigen::MatrixXd t;  // 4 × n, blended
    Eigen::VectorXd w;  // per-sample weight (mu1 below critical penetration, else 1)
};

PreparedBatch prepare_batch(const Normalization& norm, std::span<const FieldSample> batch,
                            const PhysicsRules& physics, const Hyperparams& hp);

// (1/(k·n))·Σ_i w_i·Σ_k (y_ik − t_ik)² for k outputs and n samples.
double weighted_squared_error(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t, const Eigen::VectorXd& w);

struct LossValue {
    double total = 0.0;
    double data = 0.0;
    double structure = 0.0;
    std::vector<double> sample_weight;
    std::vector<double> sample_error;  // Σ_k (y'−t*)² per sample
};

LossValue loss(const MappingModel& model, std::span<const FieldSample> batch, const PhysicsRules& physics,
               const Hyperparams& hp);
LossValue loss(const Network& net, const PreparedBatch& batch, double lambda);

struct Gradient {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;
};

Gradient loss_gradient(const MappingModel& model, std::span<const FieldSample> batch, const PhysicsRules& physics,
                       const Hyperparams& hp);
Gradient loss_gradient(const Network& net, const PreparedBatch& batch, double lambda);

struct Split {
    std::size_t train_count = 256;
    std::size_t test_count = 50;
};

struct TrainingReport {
    std::vector<double> epoch_loss;
    Metrics metrics;
    bool has_metrics = false;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::vector<std::string> warnings;
};

struct TrainResult {
    MappingModel model;
    TrainingReport report;
};

TrainResult train(const Dataset& data, const Hyperparams& hp, const PhysicsRules& physics, Split split);

Normalization fit_normalization(std::span<const FieldSample> samples, std::vector<std::string>* warnings);

Metrics evaluate(const Mapping& mapping, std::span<const FieldSample> data);

struct SearchAxis {
    std::string name;  // h1, h2, alpha, lambda, mu1, mu2, mu3
    std::vector<double> values;
};

std::vector<SearchAxis> default_search_space();

struct LeaderboardEntry {
    std::string axis;  // "default" for the starting configuration
    Hyperparams hp;
    double validation_mape = 0.0;
    bool trained = false;  // false when the score was reused from an identical configuration
};

struct SearchResult {
    Hyperparams best;
    MappingModel model;
    double best_mape = 0.0;
    std::vector<LeaderboardEntry> leaderboard;
    std::size_t trainings = 0;
};

// Coordinate descent over the axes, starting from `start`, capped at `budget` trainings.
SearchResult hyperparameter_search(const Dataset& data, const std::vector<SearchAxis>& space,
                                   const PhysicsRules& physics, std::size_t budget, const Hyperparams& start,
                                   Split split);

// True when `a` ranks before `b`: lower MAPE, then smaller h1+h2, then smaller lambda.
bool better_candidate(double mape_a, const Hyperparams& a, double mape_b, const Hyperparams& b);

}  // namespace tbm
