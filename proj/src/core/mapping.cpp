#include "mapping.hpp"

#include "error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

namespace tbm {

namespace {

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z) { return (z.array() > 0.0).cast<double>().matrix(); }

struct Activations {
    Eigen::MatrixXd z1, a1, z2, a2, y;
};

Activations forward_all(const Network& net, const Eigen::MatrixXd& x) {
    Activations act;
    act.z1 = (net.w1 * x).colwise() + net.b1;
    act.a1 = relu(act.z1);
    act.z2 = (net.w2 * act.a1).colwise() + net.b2;
    act.a2 = relu(act.z2);
    act.y = (net.w3 * act.a2).colwise() + net.b3;
    return act;
}

void fill_uniform(Eigen::MatrixXd& m, double limit, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill order keeps the draw sequence tied to the file layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<FieldSample> gather(const Dataset& data, std::span<const std::size_t> idx) {
    std::vector<FieldSample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(data[i]);
    return out;
}

}  // namespace

void Hyperparams::validate() const {
    require(h1 >= 1 && h2 >= 1, ErrorCode::InvalidInput, "hidden widths must be >= 1");
    require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::InvalidInput, "learning rate alpha must be > 0");
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::InvalidInput, "lambda must be >= 0");
    for (double mu : {mu1, mu2, mu3})
        require(mu >= 0.0 && mu <= 1.0, ErrorCode::InvalidInput, "constraint weights mu1..mu3 must lie in [0, 1]");
    require(batch_size >= 1, ErrorCode::InvalidInput, "batch_size must be >= 1");
    require(std::isfinite(momentum) && momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidInput,
            "momentum must lie in [0, 1)");
}

template <std::size_t N>
void MinMax<N>::validate() const {
    for (std::size_t i = 0; i < N; ++i)
        require(std::isfinite(min[i]) && std::isfinite(max[i]) && min[i] < max[i], ErrorCode::InvalidInput,
                "normalization requires min < max in every dimension");
}

template struct MinMax<kFeatureCount>;
template struct MinMax<kTargetCount>;

Network Network::zeros(std::size_t h1, std::size_t h2) {
    const auto a = static_cast<Eigen::Index>(h1);
    const auto b = static_cast<Eigen::Index>(h2);
    Network n;
    n.w1 = Eigen::MatrixXd::Zero(a, kFeatureCount);
    n.b1 = Eigen::VectorXd::Zero(a);
    n.w2 = Eigen::MatrixXd::Zero(b, a);
    n.b2 = Eigen::VectorXd::Zero(b);
    n.w3 = Eigen::MatrixXd::Zero(kTargetCount, b);
    n.b3 = Eigen::VectorXd::Zero(kTargetCount);
    return n;
}

Network Network::initialized(std::size_t h1, std::size_t h2, std::uint64_t seed) {
    Network n = zeros(h1, h2);
    std::mt19937_64 rng(seed);
    fill_uniform(n.w1, std::sqrt(6.0 / static_cast<double>(kFeatureCount)), rng);
    fill_uniform(n.w2, std::sqrt(6.0 / static_cast<double>(h1)), rng);
    fill_uniform(n.w3, std::sqrt(3.0 / static_cast<double>(h2)), rng);
    return n;
}

double Network::weight_square_sum() const { return w1.squaredNorm() + w2.squaredNorm() + w3.squaredNorm(); }

void Network::validate() const {
    const auto a = w1.rows();
    const auto b = w2.rows();
    require(a >= 1 && b >= 1, ErrorCode::InvalidInput, "hidden widths must be >= 1");
    require(w1.cols() == static_cast<Eigen::Index>(kFeatureCount) && b1.size() == a && w2.cols() == a &&
                b2.size() == b && w3.rows() == static_cast<Eigen::Index>(kTargetCount) && w3.cols() == b &&
                b3.size() == static_cast<Eigen::Index>(kTargetCount),
            ErrorCode::InvalidInput, "network weight shapes are inconsistent with declared widths");
    const bool finite = w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() && b2.allFinite() &&
                        b3.allFinite();
    require(finite, ErrorCode::InvalidInput, "network weights must be finite");
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd a1 = relu((w1 * x).colwise() + b1);
    const Eigen::MatrixXd a2 = relu((w2 * a1).colwise() + b2);
    return (w3 * a2).colwise() + b3;
}

void MappingModel::validate() const {
    net.validate();
    norm.features.validate();
    norm.targets.validate();
}

Eigen::MatrixXd MappingModel::normalize_features(std::span<const FeatureVector> inputs) const {
    Eigen::MatrixXd x(kFeatureCount, static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const double v = inputs[j][i];
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "feature '" << kFeatureNames[i] << "' is not finite";
                fail(ErrorCode::InvalidInput, os.str());
            }
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = norm.features.normalize(i, v);
        }
    }
    return x;
}

std::vector<TargetVector> MappingModel::predict_batch(std::span<const FeatureVector> inputs) const {
    const Eigen::MatrixXd y = net.forward(normalize_features(inputs));
    std::vector<TargetVector> out(inputs.size());
    for (std::size_t j = 0; j < inputs.size(); ++j)
        for (std::size_t k = 0; k < kTargetCount; ++k)
            out[j][k] = norm.targets.denormalize(k, y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
    return out;
}

TargetVector MappingModel::predict(const FeatureVector& x) const {
    return predict_batch(std::span<const FeatureVector>(&x, 1)).front();
}

PreparedBatch prepare_batch(const Normalization& norm, std::span<const FieldSample> batch,
                            const PhysicsRules& physics, const Hyperparams& hp) {
    require(!batch.empty(), ErrorCode::InvalidInput, "loss batch must be non-empty");
    const auto n = static_cast<Eigen::Index>(batch.size());
    PreparedBatch out;
    out.x.resize(kFeatureCount, n);
    out.t.resize(kTargetCount, n);
    out.w.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& s = batch[static_cast<std::size_t>(j)];
        const auto f = s.features();
        const auto t = s.targets();
        for (std::size_t i = 0; i < kFeatureCount; ++i) out.x(static_cast<Eigen::Index>(i), j) = norm.features.normalize(i, f[i]);
        try {
            // Forces cannot be negative; the polynomials can be when extrapolated.
            const double th_p = std::max(0.0, cutterhead_thrust(physics, physics.layout, s.ucs, s.p).value);
            const double tor_p = std::max(0.0, cutterhead_torque(physics, physics.layout, s.ucs, s.p).value);
            const double p_min = critical_penetration(physics.cp, s.ucs, physics.layout.nominal_spacing_mm);
            out.t(kHf, j) = norm.targets.normalize(kHf, t[kHf]);
            out.t(kPb, j) = norm.targets.normalize(kPb, t[kPb]);
            out.t(kTh, j) = (1.0 - hp.mu2) * norm.targets.normalize(kTh, t[kTh]) +
                            hp.mu2 * norm.targets.normalize(kTh, th_p);
            out.t(kTor, j) = (1.0 - hp.mu3) * norm.targets.normalize(kTor, t[kTor]) +
                             hp.mu3 * norm.targets.normalize(kTor, tor_p);
            out.w(j) = s.p < p_min ? hp.mu1 : 1.0;
        } catch (const Error& e) {
            std::ostringstream os;
            os << "sample " << j << ": " << e.what();
            throw Error(e.code(), os.str());
        }
    }
    return out;
}

double weighted_squared_error(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t, const Eigen::VectorXd& w) {
    const double denom = static_cast<double>(y.rows() * y.cols());
    const Eigen::RowVectorXd per_sample = (y - t).array().square().colwise().sum();
    return per_sample.dot(w) / denom;
}

LossValue loss(const Network& net, const PreparedBatch& batch, double lambda) {
    const Eigen::MatrixXd y = net.forward(batch.x);
    LossValue out;
    out.data = weighted_squared_error(y, batch.t, batch.w);
    out.structure = lambda * net.weight_square_sum();
    out.total = out.data + out.structure;
    const Eigen::RowVectorXd per_sample = (y - batch.t).array().square().colwise().sum();
    out.sample_error.assign(per_sample.data(), per_sample.data() + per_sample.size());
    out.sample_weight.assign(batch.w.data(), batch.w.data() + batch.w.size());
    return out;
}

LossValue loss(const MappingModel& model, std::span<const FieldSample> batch, const PhysicsRules& physics,
               const Hyperparams& hp) {
    return loss(model.net, prepare_batch(model.norm, batch, physics, hp), hp.lambda);
}

Gradient loss_gradient(const Network& net, const PreparedBatch& batch, double lambda) {
    const Activations act = forward_all(net, batch.x);
    const double denom = static_cast<double>(act.y.rows() * act.y.cols());

    const Eigen::MatrixXd dy = (2.0 / denom) * ((act.y - batch.t) * batch.w.asDiagonal());
    Gradient g;
    g.w3 = dy * act.a2.transpose() + 2.0 * lambda * net.w3;
    g.b3 = dy.rowwise().sum();
    const Eigen::MatrixXd dz2 = (net.w3.transpose() * dy).cwiseProduct(relu_mask(act.z2));
    g.w2 = dz2 * act.a1.transpose() + 2.0 * lambda * net.w2;
    g.b2 = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 = (net.w2.transpose() * dz2).cwiseProduct(relu_mask(act.z1));
    g.w1 = dz1 * batch.x.transpose() + 2.0 * lambda * net.w1;
    g.b1 = dz1.rowwise().sum();
    return g;
}

Gradient loss_gradient(const MappingModel& model, std::span<const FieldSample> batch, const PhysicsRules& physics,
                       const Hyperparams& hp) {
    return loss_gradient(model.net, prepare_batch(model.norm, batch, physics, hp), hp.lambda);
}

Normalization fit_normalization(std::span<const FieldSample> samples, std::vector<std::string>* warnings) {
    require(!samples.empty(), ErrorCode::InvalidInput, "normalization needs at least one sample");
    Normalization norm;
    norm.features.min.fill(std::numeric_limits<double>::infinity());
    norm.features.max.fill(-std::numeric_limits<double>::infinity());
    norm.targets.min.fill(std::numeric_limits<double>::infinity());
    norm.targets.max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& s : samples) {
        const auto f = s.features();
        const auto t = s.targets();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            require(std::isfinite(f[i]), ErrorCode::InvalidInput, "training features must be finite");
            norm.features.min[i] = std::min(norm.features.min[i], f[i]);
            norm.features.max[i] = std::max(norm.features.max[i], f[i]);
        }
        for (std::size_t k = 0; k < kTargetCount; ++k) {
            require(std::isfinite(t[k]), ErrorCode::InvalidInput, "training targets must be finite");
            norm.targets.min[k] = std::min(norm.targets.min[k], t[k]);
            norm.targets.max[k] = std::max(norm.targets.max[k], t[k]);
        }
    }
    auto widen = [&](auto& mm, std::size_t i, std::string_view name) {
        if (mm.max[i] > mm.min[i]) return;
        // Constant column: unit scale so the mapping stays defined.
        mm.max[i] = mm.min[i] + 2.0;
        if (warnings) warnings->push_back("'" + std::string(name) + "' is constant across the training split; scale set to 1");
    };
    for (std::size_t i = 0; i < kFeatureCount; ++i) widen(norm.features, i, kFeatureNames[i]);
    for (std::size_t k = 0; k < kTargetCount; ++k) widen(norm.targets, k, kTargetNames[k]);
    return norm;
}

TrainResult train(const Dataset& data, const Hyperparams& hp, const PhysicsRules& physics, Split split) {
    hp.validate();
    physics.validate();
    require(split.train_count >= 1, ErrorCode::InvalidInput, "train_count must be >= 1");
    if (data.size() < split.train_count + split.test_count) {
        std::ostringstream os;
        os << "dataset has " << data.size() << " samples, split needs " << split.train_count + split.test_count;
        fail(ErrorCode::InvalidInput, os.str());
    }
    const auto started = std::chrono::steady_clock::now();

    TrainResult result;
    auto& report = result.report;
    report.seed = hp.seed;

    std::mt19937_64 rng(hp.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    report.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(split.train_count));
    report.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(split.train_count),
                               order.begin() + static_cast<std::ptrdiff_t>(split.train_count + split.test_count));
    const auto train_set = gather(data, report.train_indices);
    const auto test_set = gather(data, report.test_indices);

    MappingModel& model = result.model;
    model.hp = hp;
    model.norm = fit_normalization(train_set, &report.warnings);
    model.net = Network::initialized(hp.h1, hp.h2, rng());
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        std::vector<double> column;
        column.reserve(train_set.size());
        for (const auto& s : train_set) column.push_back(s.features()[i]);
        model.feature_medians[i] = median(std::move(column));
    }

    const PreparedBatch all = prepare_batch(model.norm, train_set, physics, hp);
    const auto n = static_cast<Eigen::Index>(train_set.size());

    Network velocity = Network::zeros(hp.h1, hp.h2);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    PreparedBatch batch;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(perm.begin(), perm.end(), rng);
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += static_cast<Eigen::Index>(hp.batch_size)) {
            const Eigen::Index m = std::min<Eigen::Index>(static_cast<Eigen::Index>(hp.batch_size), n - start);
            batch.x.resize(kFeatureCount, m);
            batch.t.resize(kTargetCount, m);
            batch.w.resize(m);
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::Index src = perm[static_cast<std::size_t>(start + j)];
                batch.x.col(j) = all.x.col(src);
                batch.t.col(j) = all.t.col(src);
                batch.w(j) = all.w(src);
            }
            epoch_loss += loss(model.net, batch, hp.lambda).total * static_cast<double>(m);
            const Gradient g = loss_gradient(model.net, batch, hp.lambda);
            velocity.w1 = hp.momentum * velocity.w1 - hp.alpha * g.w1;
            velocity.w2 = hp.momentum * velocity.w2 - hp.alpha * g.w2;
            velocity.w3 = hp.momentum * velocity.w3 - hp.alpha * g.w3;
            velocity.b1 = hp.momentum * velocity.b1 - hp.alpha * g.b1;
            velocity.b2 = hp.momentum * velocity.b2 - hp.alpha * g.b2;
            velocity.b3 = hp.momentum * velocity.b3 - hp.alpha * g.b3;
            model.net.w1 += velocity.w1;
            model.net.w2 += velocity.w2;
            model.net.w3 += velocity.w3;
            model.net.b1 += velocity.b1;
            model.net.b2 += velocity.b2;
            model.net.b3 += velocity.b3;
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
        if (!std::isfinite(report.epoch_loss.back())) {
            std::ostringstream os;
            os << "training diverged at epoch " << epoch + 1 << " (non-finite loss); lower alpha";
            fail(ErrorCode::Runtime, os.str());
        }
    }

    if (!test_set.empty()) {
        // A zero actual leaves MAPE undefined; the trained model is still usable.
        try {
            report.metrics = evaluate(model, test_set);
            report.has_metrics = true;
            model.metrics = report.metrics;
            model.has_metrics = true;
        } catch (const Error& e) {
            report.warnings.push_back(std::string("held-out metrics unavailable: ") + e.what());
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

Metrics evaluate(const Mapping& mapping, std::span<const FieldSample> data) {
    require(!data.empty(), ErrorCode::InvalidInput, "evaluation dataset must be non-empty");
    std::vector<FeatureVector> inputs;
    inputs.reserve(data.size());
    for (const auto& s : data) inputs.push_back(s.features());
    const auto predicted = mapping.predict_batch(inputs);

    Metrics m;
    const double n = static_cast<double>(data.size());
    for (std::size_t k = 0; k < kTargetCount; ++k) {
        double ape = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double actual = data[i].targets()[k];
            if (actual == 0.0) {
                std::ostringstream os;
                os << "MAPE undefined: actual " << kTargetNames[k] << " is 0 at row " << i;
                fail(ErrorCode::InvalidInput, os.str());
            }
            ape += std::abs(predicted[i][k] - actual) / std::abs(actual);
            mean += actual;
        }
        mean /= n;
        double sse = 0.0, sst = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double actual = data[i].targets()[k];
            sse += (predicted[i][k] - actual) * (predicted[i][k] - actual);
            sst += (actual - mean) * (actual - mean);
        }
        m.mape[k] = 100.0 * ape / n;
        m.r2[k] = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    }
    m.aggregate_mape = std::accumulate(m.mape.begin(), m.mape.end(), 0.0) / static_cast<double>(kTargetCount);
    return m;
}

std::vector<SearchAxis> default_search_space() {
    std::vector<double> mus;
    for (int i = 1; i <= 9; ++i) mus.push_back(i / 10.0);
    return {
        {"h1", {256, 512, 1024}},
        {"h2", {256, 512, 1024}},
        {"alpha", {0.001, 0.002, 0.003, 0.004, 0.005}},
        {"lambda", {1e-6, 1e-5, 1e-4}},
        {"mu1", mus},
        {"mu2", mus},
        {"mu3", mus},
    };
}

bool better_candidate(double mape_a, const Hyperparams& a, double mape_b, const Hyperparams& b) {
    return std::make_tuple(mape_a, a.h1 + a.h2, a.lambda) < std::make_tuple(mape_b, b.h1 + b.h2, b.lambda);
}

namespace {

Hyperparams with_axis(Hyperparams hp, const std::string& axis, double v) {
    if (axis == "h1") hp.h1 = static_cast<std::size_t>(v);
    else if (axis == "h2") hp.h2 = static_cast<std::size_t>(v);
    else if (axis == "alpha") hp.alpha = v;
    else if (axis == "lambda") hp.lambda = v;
    else if (axis == "mu1") hp.mu1 = v;
    else if (axis == "mu2") hp.mu2 = v;
    else if (axis == "mu3") hp.mu3 = v;
    else fail(ErrorCode::InvalidInput, "unknown hyperparameter axis '" + axis + "'");
    return hp;
}

auto key_of(const Hyperparams& hp) {
    return std::make_tuple(hp.h1, hp.h2, hp.alpha, hp.lambda, hp.mu1, hp.mu2, hp.mu3);
}

}  // namespace

SearchResult hyperparameter_search(const Dataset& data, const std::vector<SearchAxis>& space,
                                   const PhysicsRules& physics, std::size_t budget, const Hyperparams& start,
                                   Split split) {
    require(budget >= 1, ErrorCode::InvalidInput, "search budget must be >= 1");
    for (const auto& axis : space) {
        require(!axis.values.empty(), ErrorCode::InvalidInput, "search axis '" + axis.name + "' has no values");
        with_axis(start, axis.name, axis.values.front());
    }

    SearchResult out;
    std::map<decltype(key_of(start)), double> scored;

    auto run = [&](const Hyperparams& hp) {
        auto trained = train(data, hp, physics, split);
        ++out.trainings;
        const double score = trained.model.has_metrics ? trained.report.metrics.aggregate_mape
                                                       : std::numeric_limits<double>::infinity();
        scored[key_of(hp)] = score;
        if (out.trainings == 1 || better_candidate(score, hp, out.best_mape, out.best)) {
            out.best = hp;
            out.best_mape = score;
            out.model = std::move(trained.model);
        }
        return score;
    };

    out.leaderboard.push_back({"default", start, run(start), true});
    for (const auto& axis : space) {
        const Hyperparams incumbent = out.best;
        for (double v : axis.values) {
            const Hyperparams hp = with_axis(incumbent, axis.name, v);
            hp.validate();
            if (auto it = scored.find(key_of(hp)); it != scored.end()) {
                out.leaderboard.push_back({axis.name, hp, it->second, false});
                continue;
            }
            if (out.trainings >= budget) return out;
            out.leaderboard.push_back({axis.name, hp, run(hp), true});
        }
    }
    return out;
}

}  // namespace tbm
