#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "error.hpp"
#include "mapping.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace tbm;

namespace {

Normalization unit_norm() {
    Normalization n;
    const FeatureRanges r;
    const std::array<Range, kFeatureCount> f = {r.p, r.rpm, r.ucs, r.rqd, r.cai, r.d_avg, r.ci, r.peak_acc, r.main_freq};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        n.features.min[i] = f[i].min;
        n.features.max[i] = f[i].max;
    }
    n.targets.min = {100, 0, 0, 300};
    n.targets.max = {1200, 17000, 4500, 900};
    return n;
}

MappingModel model_with(Network net) {
    MappingModel m;
    m.net = std::move(net);
    m.norm = unit_norm();
    return m;
}

Dataset small_data(std::uint64_t seed, std::size_t n = 40, double outliers = 0.0) {
    GenConfig g;
    g.sample_count = n;
    g.seed = seed;
    g.outlier_rate = outliers;
    return generate_dataset(g);
}

Hyperparams tiny_hp(std::uint64_t seed) {
    Hyperparams hp;
    hp.h1 = 6;
    hp.h2 = 5;
    hp.epochs = 20;
    hp.batch_size = 8;
    hp.alpha = 0.01;
    hp.seed = seed;
    return hp;
}

// Constant predictions, for evaluate() checks.
class FixedMapping final : public Mapping {
public:
    explicit FixedMapping(std::vector<TargetVector> out) : out_(std::move(out)) {}
    std::vector<TargetVector> predict_batch(std::span<const FeatureVector> in) const override {
        return {out_.begin(), out_.begin() + static_cast<std::ptrdiff_t>(in.size())};
    }

private:
    std::vector<TargetVector> out_;
};

double& param_ref(Network& n, int block, Eigen::Index i) {
    switch (block) {
        case 0: return n.w1.data()[i];
        case 1: return n.w2.data()[i];
        case 2: return n.w3.data()[i];
        case 3: return n.b1.data()[i];
        case 4: return n.b2.data()[i];
        default: return n.b3.data()[i];
    }
}
double grad_at(const Gradient& g, int block, Eigen::Index i) {
    switch (block) {
        case 0: return g.w1.data()[i];
        case 1: return g.w2.data()[i];
        case 2: return g.w3.data()[i];
        case 3: return g.b1.data()[i];
        case 4: return g.b2.data()[i];
        default: return g.b3.data()[i];
    }
}
Eigen::Index block_size(const Network& n, int block) {
    switch (block) {
        case 0: return n.w1.size();
        case 1: return n.w2.size();
        case 2: return n.w3.size();
        case 3: return n.b1.size();
        case 4: return n.b2.size();
        default: return n.b3.size();
    }
}

}  // namespace

TEST_CASE("zero network predicts the per-target midpoint") {
    const auto m = model_with(Network::zeros(7, 3));
    const auto y = m.predict({10, 5, 80, 40, 3, 15, 380, 2, 113});
    CHECK(y[kHf] == doctest::Approx(650));
    CHECK(y[kTh] == doctest::Approx(8500));
    CHECK(y[kTor] == doctest::Approx(2250));
    CHECK(y[kPb] == doctest::Approx(600));
}

TEST_CASE("hand-rigged 1-wide network") {
    Network n = Network::zeros(1, 1);
    n.w1(0, kUcs) = 2.0;  // h1 = relu(2·x_ucs + 0.5)
    n.b1(0) = 0.5;
    n.w2(0, 0) = 3.0;  // h2 = relu(3·h1 − 1)
    n.b2(0) = -1.0;
    n.w3(kTh, 0) = 0.25;  // y_th = 0.25·h2 − 0.1
    n.b3(kTh) = -0.1;
    const auto m = model_with(n);
    const FeatureRanges r;
    const double ucs = 100.0;
    const double xu = 2.0 * (ucs - r.ucs.min) / (r.ucs.max - r.ucs.min) - 1.0;
    const double h1 = std::max(0.0, 2.0 * xu + 0.5);
    const double h2 = std::max(0.0, 3.0 * h1 - 1.0);
    const double y = 0.25 * h2 - 0.1;
    const double th = 0.0 + (y + 1.0) * 0.5 * 17000.0;
    const auto out = m.predict({10, 5, ucs, 40, 3, 15, 380, 2, 113});
    CHECK(out[kTh] == doctest::Approx(th).epsilon(1e-14));
    CHECK(out[kHf] == doctest::Approx(650));
}

TEST_CASE("predict is deterministic and rejects non-finite input") {
    const auto m = model_with(Network::initialized(16, 8, 3));
    const FeatureVector x = {10, 5, 80, 40, 3, 15, 380, 2, 113};
    CHECK(m.predict(x) == m.predict(x));
    FeatureVector bad = x;
    bad[kCai] = NAN;
    try {
        m.predict(bad);
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidInput);
    }
}

TEST_CASE("outputs finite for extreme finite inputs") {
    const auto m = model_with(Network::initialized(16, 8, 4));
    const auto y = m.predict({1e12, -1e12, 1e9, 0, 0, 0, 0, 0, 0});
    for (double v : y) CHECK(std::isfinite(v));
}

TEST_CASE("normalization round trip") {
    const auto n = unit_norm();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-50, 500);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t i = k % kFeatureCount;
        const double v = u(rng);
        CHECK(std::abs(n.features.denormalize(i, n.features.normalize(i, v)) - v) <= 1e-12 * std::max(1.0, std::abs(v)));
    }
}

TEST_CASE("weighted squared error single-output example") {
    Eigen::MatrixXd y(1, 1), t(1, 1);
    y << 2.0;
    t << 1.0;
    Eigen::VectorXd w(1);
    w << 0.2;
    CHECK(weighted_squared_error(y, t, w) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("below-critical sample weight in the full loss") {
    // p = 1 lies below p_min(UCS = 100) = 4.57, so w = mu1.
    Hyperparams hp;
    hp.mu1 = 0.2;
    hp.mu2 = 0.0;
    hp.mu3 = 0.0;
    hp.lambda = 0.0;
    const auto rules = PhysicsRules::paper_defaults();
    FieldSample s;
    s.p = 1, s.rpm = 5, s.ucs = 100, s.rqd = 40, s.cai = 3, s.d_avg = 15, s.ci = 380, s.peak_acc = 2, s.main_freq = 113;
    s.hf = 650, s.th = 8500, s.tor = 2250, s.pb = 600;  // all normalize to 0
    Network n = Network::zeros(2, 2);
    n.b3(kHf) = 1.0;  // y'_hf − t*_hf = 1
    const auto m = model_with(n);
    const std::vector<FieldSample> batch = {s};
    const auto l = loss(m, batch, rules, hp);
    CHECK(l.sample_weight[0] == 0.2);
    CHECK(l.sample_error[0] == doctest::Approx(1.0));
    CHECK(l.total == doctest::Approx(0.2 * 1.0 / 4.0).epsilon(1e-14));
}

TEST_CASE("equality-constraint blending") {
    // A layout of one cutter and a constant normal force of 6000 kN pins th_p = 6000.
    auto rules = PhysicsRules::paper_defaults();
    rules.normal = ForcePolynomial::from_coeffs({0, 0, 0, 0, 0, 6000});
    rules.layout.radii_m = {1.0};
    Hyperparams hp;
    hp.mu2 = 0.1;
    FieldSample s;
    s.p = 10, s.rpm = 5, s.ucs = 100, s.rqd = 40, s.cai = 3, s.d_avg = 15, s.ci = 380, s.peak_acc = 2, s.main_freq = 113;
    s.hf = 650, s.th = 5000, s.tor = 2250, s.pb = 600;
    const auto norm = unit_norm();
    const std::vector<FieldSample> batch = {s};
    const auto prepared = prepare_batch(norm, batch, rules, hp);
    const double blended = norm.targets.denormalize(kTh, prepared.t(kTh, 0));
    CHECK(blended == doctest::Approx(5100.0).epsilon(1e-12));
    CHECK((5200.0 - blended) * (5200.0 - blended) == doctest::Approx(10000.0).epsilon(1e-9));
}

TEST_CASE("loss reduces to MSE without constraints and regularization") {
    const auto data = small_data(3, 20);
    const auto rules = PhysicsRules::paper_defaults();
    Hyperparams hp;
    hp.mu1 = 0.2;
    hp.mu2 = 0.0;
    hp.mu3 = 0.0;
    hp.lambda = 0.0;
    const auto m = model_with(Network::initialized(8, 8, 1));
    const auto l = loss(m, data, rules, hp);
    double mse = 0.0;
    for (const auto& s : data) {
        const auto y = m.predict(s.features());
        const auto t = s.targets();
        for (std::size_t k = 0; k < kTargetCount; ++k) {
            const double d = m.norm.targets.normalize(k, y[k]) - m.norm.targets.normalize(k, t[k]);
            mse += d * d;
        }
    }
    mse /= 4.0 * static_cast<double>(data.size());
    CHECK(l.total == doctest::Approx(mse).epsilon(1e-10));
    CHECK(l.structure == 0.0);
}

TEST_CASE("mu1 = 1 makes the inequality weighting inert") {
    auto data = small_data(5, 20);
    for (std::size_t i = 0; i < data.size(); i += 2) data[i].p = 1.0;  // below critical
    const auto rules = PhysicsRules::paper_defaults();
    Hyperparams hp;
    hp.mu1 = 1.0;
    const auto m = model_with(Network::initialized(8, 8, 2));
    const auto a = loss(m, data, rules, hp);
    for (double w : a.sample_weight) CHECK(w == 1.0);
    Hyperparams hp2 = hp;
    hp2.mu1 = 0.3;
    const auto b = loss(m, data, rules, hp2);
    CHECK(b.total < a.total);
}

TEST_CASE("loss is regularizer only when predictions equal blended targets") {
    const auto data = small_data(7, 6);
    const auto rules = PhysicsRules::paper_defaults();
    Hyperparams hp;
    hp.lambda = 1e-3;
    auto m = model_with(Network::initialized(4, 3, 5));
    // Output biases absorb the targets when the last layer's weights are zero
    // and all samples share the same blended target.
    m.net.w3.setZero();
    std::vector<FieldSample> batch(3, data[0]);
    const auto prepared = prepare_batch(m.norm, batch, rules, hp);
    m.net.b3 = prepared.t.col(0);
    const auto l = loss(m.net, prepared, hp.lambda);
    CHECK(l.data == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(l.total == doctest::Approx(hp.lambda * m.net.weight_square_sum()).epsilon(1e-14));
    CHECK(l.total >= 0.0);

    const auto g = loss_gradient(m.net, prepared, hp.lambda);
    CHECK((g.w1 - 2.0 * hp.lambda * m.net.w1).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((g.w2 - 2.0 * hp.lambda * m.net.w2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(g.b1.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(g.b3.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic gradient matches central differences on 9-8-8-4 networks") {
    const auto rules = PhysicsRules::paper_defaults();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto data = small_data(100 + seed, 4);
        data[0].p = 1.0;
        data[1].p = 2.0;  // below critical; 2 and 3 stay above
        Hyperparams hp;
        hp.lambda = 1e-3;
        const auto m = model_with(Network::initialized(8, 8, seed));
        const auto prepared = prepare_batch(m.norm, data, rules, hp);
        CHECK(prepared.w(0) == hp.mu1);
        CHECK(prepared.w(3) == 1.0);
        const auto g = loss_gradient(m.net, prepared, hp.lambda);
        const double h = 1e-5;
        double worst = 0.0;
        for (int block = 0; block < 6; ++block) {
            for (Eigen::Index i = 0; i < block_size(m.net, block); ++i) {
                Network plus = m.net, minus = m.net;
                param_ref(plus, block, i) += h;
                param_ref(minus, block, i) -= h;
                const double fd = (loss(plus, prepared, hp.lambda).total - loss(minus, prepared, hp.lambda).total) / (2 * h);
                const double an = grad_at(g, block, i);
                const double rel = std::abs(fd - an) / std::max(1e-6, std::max(std::abs(fd), std::abs(an)));
                worst = std::max(worst, rel);
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("mu1 scales the below-critical gradient contribution") {
    const auto rules = PhysicsRules::paper_defaults();
    auto data = small_data(11, 1);
    data[0].p = 1.0;
    Hyperparams a;
    a.lambda = 0.0;
    a.mu1 = 0.2;
    Hyperparams b = a;
    b.mu1 = 0.6;
    const auto m = model_with(Network::initialized(8, 8, 4));
    const auto ga = loss_gradient(m, data, rules, a);
    const auto gb = loss_gradient(m, data, rules, b);
    CHECK((gb.w1 - 3.0 * ga.w1).cwiseAbs().maxCoeff() <= 1e-12 * ga.w1.cwiseAbs().maxCoeff() + 1e-300);
    CHECK((gb.b3 - 3.0 * ga.b3).cwiseAbs().maxCoeff() <= 1e-12 * ga.b3.cwiseAbs().maxCoeff() + 1e-300);
}

TEST_CASE("training reduces loss and is deterministic") {
    GenConfig g;
    g.seed = 42;
    const auto data = generate_dataset(g);
    Hyperparams hp;
    hp.h1 = hp.h2 = 16;
    hp.epochs = 60;
    hp.alpha = 0.01;
    hp.seed = 42;
    const auto a = train(data, hp, g.physics, Split{});
    REQUIRE(a.report.epoch_loss.size() == 60);
    CHECK(a.report.epoch_loss.back() < a.report.epoch_loss.front());
    const auto b = train(data, hp, g.physics, Split{});
    CHECK(a.report.epoch_loss == b.report.epoch_loss);
    CHECK(a.model.net.w1 == b.model.net.w1);
    CHECK(a.model.net.b3 == b.model.net.b3);

    // Split is a partition.
    std::set<std::size_t> train_idx(a.report.train_indices.begin(), a.report.train_indices.end());
    CHECK(train_idx.size() == 256);
    CHECK(a.report.test_indices.size() == 50);
    for (auto i : a.report.test_indices) CHECK(train_idx.count(i) == 0);
}

TEST_CASE("epochs = 0 returns the initialized model") {
    const auto data = small_data(1, 40);
    Hyperparams hp = tiny_hp(3);
    hp.epochs = 0;
    const auto r = train(data, hp, PhysicsRules::paper_defaults(), Split{30, 10});
    CHECK(r.report.epoch_loss.empty());
    CHECK(r.model.net.b1.isZero());
    // Untrained weights differ from a trained run with the same seed.
    Hyperparams trained = hp;
    trained.epochs = 1;
    CHECK(train(data, trained, PhysicsRules::paper_defaults(), Split{30, 10}).model.net.w1 != r.model.net.w1);
}

TEST_CASE("huge lambda shrinks prediction variance") {
    const auto data = small_data(2, 60);
    const auto rules = PhysicsRules::paper_defaults();
    Hyperparams hp = tiny_hp(8);
    hp.epochs = 40;
    hp.lambda = 0.0;
    const auto free = train(data, hp, rules, Split{50, 10});
    hp.lambda = 1e6;
    hp.alpha = 1e-8;  // keeps the heavily penalized SGD stable
    const auto tight = train(data, hp, rules, Split{50, 10});
    auto variance = [&](const MappingModel& m) {
        double s = 0, s2 = 0;
        for (const auto& x : data) {
            const double v = m.norm.targets.normalize(kTh, m.predict(x.features())[kTh]);
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(data.size());
        return s2 / n - (s / n) * (s / n);
    };
    CHECK(variance(tight.model) < variance(free.model));
    CHECK(tight.model.net.weight_square_sum() < free.model.net.weight_square_sum());
}

TEST_CASE("constant feature in training split warns") {
    auto data = small_data(4, 40);
    for (auto& s : data) s.rqd = 50.0;
    const auto r = train(data, tiny_hp(1), PhysicsRules::paper_defaults(), Split{30, 10});
    REQUIRE_FALSE(r.report.warnings.empty());
    CHECK(r.report.warnings.front().find("rqd") != std::string::npos);
    CHECK(r.model.norm.features.max[kRqd] - r.model.norm.features.min[kRqd] == doctest::Approx(2.0));
}

TEST_CASE("training preconditions") {
    const auto data = small_data(4, 20);
    CHECK_THROWS_AS(train(data, tiny_hp(1), PhysicsRules::paper_defaults(), Split{30, 10}), Error);
    Hyperparams hp = tiny_hp(1);
    hp.alpha = 0.0;
    CHECK_THROWS_AS(train(data, hp, PhysicsRules::paper_defaults(), Split{10, 5}), Error);
    hp = tiny_hp(1);
    hp.mu2 = 1.5;
    CHECK_THROWS_AS(hp.validate(), Error);
    hp = tiny_hp(1);
    hp.h1 = 0;
    CHECK_THROWS_AS(hp.validate(), Error);
}

TEST_CASE("evaluate metrics") {
    const auto data = small_data(9, 10);
    std::vector<TargetVector> perfect;
    for (const auto& s : data) perfect.push_back(s.targets());
    const auto m = evaluate(FixedMapping(perfect), data);
    for (std::size_t k = 0; k < kTargetCount; ++k) {
        CHECK(m.mape[k] == 0.0);
        CHECK(m.r2[k] == 1.0);
    }
    CHECK(m.aggregate_mape == 0.0);

    FieldSample one = data[0];
    one.hf = 100;
    const std::vector<FieldSample> single = {one};
    TargetVector pred = one.targets();
    pred[kHf] = 110;
    CHECK(evaluate(FixedMapping({pred}), single).mape[kHf] == doctest::Approx(10.0).epsilon(1e-14));

    TargetVector mean{};
    for (const auto& s : data)
        for (std::size_t k = 0; k < kTargetCount; ++k) mean[k] += s.targets()[k] / static_cast<double>(data.size());
    const auto c = evaluate(FixedMapping(std::vector<TargetVector>(data.size(), mean)), data);
    for (std::size_t k = 0; k < kTargetCount; ++k) CHECK(std::abs(c.r2[k]) < 1e-12);

    auto zero = data;
    zero[3].tor = 0.0;
    try {
        evaluate(FixedMapping(perfect), zero);
        FAIL("expected MAPE error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("tor") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
    CHECK_THROWS_AS(evaluate(FixedMapping({}), std::vector<FieldSample>{}), Error);
}

TEST_CASE("hyperparameter search") {
    const auto data = small_data(21, 40, 0.15);
    const auto rules = PhysicsRules::paper_defaults();
    const Hyperparams start = tiny_hp(2);

    const auto one = hyperparameter_search(data, default_search_space(), rules, 1, start, Split{30, 10});
    CHECK(one.trainings == 1);
    CHECK(one.leaderboard.size() == 1);
    CHECK(one.best.h1 == start.h1);
    CHECK(one.best.mu1 == start.mu1);
    const auto direct = train(data, start, rules, Split{30, 10});
    CHECK(one.model.net.w1 == direct.model.net.w1);

    std::vector<double> mus;
    for (int i = 1; i <= 9; ++i) mus.push_back(i / 10.0);
    const auto mu = hyperparameter_search(data, {{"mu1", mus}}, rules, 100, start, Split{30, 10});
    std::size_t rows = 0;
    for (const auto& e : mu.leaderboard) rows += e.axis == "mu1";
    CHECK(rows == 9);
    CHECK(mu.trainings == 9);  // default mu1 = 0.2 reuses its cached score
    for (const auto& e : mu.leaderboard) CHECK(e.validation_mape >= mu.best_mape);

    CHECK_THROWS_AS(hyperparameter_search(data, default_search_space(), rules, 0, start, Split{30, 10}), Error);
}

TEST_CASE("search tie rule prefers smaller networks, then smaller lambda") {
    Hyperparams small, big;
    small.h1 = small.h2 = 256;
    big.h1 = big.h2 = 1024;
    CHECK(better_candidate(5.0, small, 5.0, big));
    CHECK_FALSE(better_candidate(5.0, big, 5.0, small));
    CHECK(better_candidate(4.9, big, 5.0, small));
    Hyperparams lo = small, hi = small;
    lo.lambda = 1e-6;
    hi.lambda = 1e-4;
    CHECK(better_candidate(5.0, lo, 5.0, hi));
}
