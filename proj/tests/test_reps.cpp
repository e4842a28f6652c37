#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "oracles.hpp"
#include "tltl/reps.hpp"

using namespace tltl;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v(i++) = x;
    return v;
}

double kl_to_uniform(const Eigen::VectorXd& p) {
    const double n = static_cast<double>(p.size());
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > 0) kl += p(i) * std::log(p(i) * n);
    return kl;
}

// Trivial 1-D integrator environment for rollout tests: s' = s + a*dt.
class IntegratorEnv : public Environment {
  public:
    IntegratorEnv(int horizon, double noise = 0.0) : horizon_(horizon), noise_(noise) {}
    int horizon() const override { return horizon_; }
    int state_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    Eigen::VectorXd reset(std::mt19937_64&) override {
        s_ = Eigen::VectorXd::Zero(1);
        return s_;
    }
    Eigen::VectorXd step(const Eigen::VectorXd& a, std::mt19937_64& rng) override {
        double noise = 0.0;
        if (noise_ > 0) noise = std::normal_distribution<double>(0.0, noise_)(rng);
        s_(0) += (a(0) + noise) * 0.1;
        return s_;
    }

  private:
    int horizon_;
    double noise_;
    Eigen::VectorXd s_;
};

class FinalStateReward : public RewardAdapter {
  public:
    double terminal(const Eigen::MatrixXd& states, const Eigen::MatrixXd&) const override {
        return -std::abs(states(states.rows() - 1, 0) - 1.0);
    }
};

}  // namespace

TEST_CASE("solve_dual: all-equal returns give eta_max and uniform weights") {
    auto r = vec({3.0, 3.0, 3.0});
    const double eta = solve_dual(r, 1.0);
    CHECK(eta == 1e6);
    auto w = compute_weights(r, eta);
    CHECK(w(0) == doctest::Approx(1.0 / 3));
    CHECK(w(1) == doctest::Approx(1.0 / 3));
}

TEST_CASE("solve_dual: loose KL bound concentrates weight on the best sample") {
    auto r = vec({0.0, 1.0});
    const double eta = solve_dual(r, 10.0);
    const double eta_grid = oracle::grid_dual_minimizer(r, 10.0);
    CHECK(dual_value(r, 10.0, eta) <=
          dual_value(r, 10.0, eta_grid) + 0.01 * std::abs(dual_value(r, 10.0, eta_grid)));
    auto w = compute_weights(r, eta);
    CHECK(w(1) > 0.99);
}

TEST_CASE("solve_dual: tight KL bound keeps weights near uniform") {
    auto r = vec({0.0, 1.0});
    const double eta = solve_dual(r, 0.01);
    auto w = compute_weights(r, eta);
    CHECK(kl_to_uniform(w) <= 0.01 + 1e-6);
    CHECK(std::abs(w(0) - 0.5) < 0.1);
}

TEST_CASE("compute_weights: closed-form values") {
    auto w = compute_weights(vec({5.0, 5.0}), 3.7);
    CHECK(w(0) == doctest::Approx(0.5));

    auto w2 = compute_weights(vec({0.0, 1.0}), 1.0);
    CHECK(w2(0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-12));
    CHECK(w2(1) == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));

    // eta -> infinity limit: uniform
    auto w3 = compute_weights(vec({0.0, 1.0, 2.0}), 1e9);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(w3(i) - 1.0 / 3) < 1e-6);
}

TEST_CASE("compute_weights: shift invariance up to rounding of the shifted returns") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> val(-50.0, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd r(5);
        for (int i = 0; i < 5; ++i) r(i) = val(rng);
        auto w1 = compute_weights(r, 2.0);
        auto w2 = compute_weights(r.array() + 123.456, 2.0);
        // (r_i + c) - (max r + c) differs from r_i - max r by one rounding of
        // the addition, so the weights agree to relative machine precision
        for (int i = 0; i < 5; ++i) CHECK(w1(i) == doctest::Approx(w2(i)).epsilon(1e-10));
    }
}

TEST_CASE("property: simplex, KL feasibility, dual convexity on random returns") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 50);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    std::uniform_real_distribution<double> eps_draw(0.05, 5.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = size(rng);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) r(i) = val(rng);
        const double eps = eps_draw(rng);
        const double eta = solve_dual(r, eps);
        auto w = compute_weights(r, eta);

        CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
        // mathematically positive, but exp((R_i - max R)/eta) underflows to
        // zero for far-below-max returns at small eta
        CHECK(w.minCoeff() >= 0.0);
        CHECK(w.maxCoeff() > 0.0);
        CHECK(kl_to_uniform(w) <= eps + 1e-6);

        // local optimality on a log-grid around the solution
        const double g0 = dual_value(r, eps, eta);
        for (double factor : {0.5, 0.8, 1.25, 2.0}) {
            const double eta2 = std::clamp(eta * factor, 1e-6, 1e6);
            CHECK(dual_value(r, eps, eta2) >= g0 - 1e-8);
        }
    }
}

TEST_CASE("update_policy: point-mass weights copy the selected sample") {
    auto policy = LinearGaussianPolicy::initial(3, 2, 2, 0.5);
    EpisodeBatch batch;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 4; ++i) {
        Episode ep;
        ep.states = Eigen::MatrixXd::Zero(4, 2);
        ep.actions = Eigen::MatrixXd::Zero(3, 2);
        ep.feedforwards = Eigen::MatrixXd::NullaryExpr(3, 2, [&](Eigen::Index, Eigen::Index) {
            return g(rng);
        });
        batch.episodes.push_back(ep);
    }
    Eigen::VectorXd w = vec({1.0, 0.0, 0.0, 0.0});
    auto updated = update_policy(policy, batch, w, 1e-3);
    for (int t = 0; t < 3; ++t) {
        CHECK((updated.feedforward[t].transpose() - batch.episodes[0].feedforwards.row(t))
                  .cwiseAbs()
                  .maxCoeff() < 1e-15);
        // zero scatter under a point mass: covariance collapses to the floor
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(updated.covariance[t]);
        CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1e-6).epsilon(1e-9));
        // gain untouched
        CHECK((updated.gain[t] - policy.gain[t]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("update_policy: identical samples floor the covariance, keep the mean") {
    auto policy = LinearGaussianPolicy::initial(2, 1, 1, 0.5);
    policy.feedforward[0] = vec({0.7});
    policy.feedforward[1] = vec({0.7});
    EpisodeBatch batch;
    for (int i = 0; i < 3; ++i) {
        Episode ep;
        ep.states = Eigen::MatrixXd::Zero(3, 1);
        ep.actions = Eigen::MatrixXd::Zero(2, 1);
        ep.feedforwards = Eigen::MatrixXd::Constant(2, 1, 0.7);
        batch.episodes.push_back(ep);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.0 / 3);
    auto updated = update_policy(policy, batch, w, 1e-3);
    CHECK(updated.feedforward[0](0) == doctest::Approx(0.7));
    CHECK(updated.covariance[0](0, 0) == doctest::Approx(1e-6));
}

TEST_CASE("update_policy: hand-computed weighted scatter") {
    // two samples at -1 and +1, uniform weights: mean 0, variance 1
    auto policy = LinearGaussianPolicy::initial(1, 1, 1, 0.5);
    EpisodeBatch batch;
    for (double v : {-1.0, 1.0}) {
        Episode ep;
        ep.states = Eigen::MatrixXd::Zero(2, 1);
        ep.actions = Eigen::MatrixXd::Zero(1, 1);
        ep.feedforwards = Eigen::MatrixXd::Constant(1, 1, v);
        batch.episodes.push_back(ep);
    }
    Eigen::VectorXd w = vec({0.5, 0.5});
    auto updated = update_policy(policy, batch, w, 1e-3);
    CHECK(updated.feedforward[0](0) == doctest::Approx(0.0));
    CHECK(updated.covariance[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("update_policy: weights must lie on the simplex") {
    auto policy = LinearGaussianPolicy::initial(1, 1, 1, 0.5);
    EpisodeBatch batch;
    batch.episodes.resize(2);
    for (auto& ep : batch.episodes) {
        ep.states = Eigen::MatrixXd::Zero(2, 1);
        ep.actions = Eigen::MatrixXd::Zero(1, 1);
        ep.feedforwards = Eigen::MatrixXd::Zero(1, 1);
    }
    CHECK_THROWS(update_policy(policy, batch, vec({0.7, 0.7}), 1e-3));
}

TEST_CASE("sample_episode: determinism and shape") {
    IntegratorEnv env(5, 0.1);
    auto policy = LinearGaussianPolicy::initial(5, 1, 1, 0.3);
    FinalStateReward reward;
    Episode a = sample_episode(policy, env, reward, 1234);
    Episode b = sample_episode(policy, env, reward, 1234);
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.actions - b.actions).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.feedforwards - b.feedforwards).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.terminal_return == b.terminal_return);
    Episode c = sample_episode(policy, env, reward, 1235);
    CHECK((a.feedforwards - c.feedforwards).cwiseAbs().maxCoeff() > 0.0);
    CHECK(a.states.rows() == 6);
    CHECK(a.actions.rows() == 5);
}

TEST_CASE("sample_episode: near-degenerate covariance gives near-deterministic actions") {
    IntegratorEnv env(4);
    auto policy = LinearGaussianPolicy::initial(4, 1, 1, 1e-9);
    for (auto& k : policy.feedforward) k = vec({0.25});
    FinalStateReward reward;
    Episode ep = sample_episode(policy, env, reward, 7);
    for (int t = 0; t < 4; ++t) CHECK(ep.actions(t, 0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("sample_episode: horizon mismatch rejected") {
    IntegratorEnv env(5);
    auto policy = LinearGaussianPolicy::initial(4, 1, 1, 0.3);
    FinalStateReward reward;
    CHECK_THROWS(sample_episode(policy, env, reward, 0));
}

TEST_CASE("update_policy_stepwise: terminal-only step rewards match episodic weights") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    const int T = 3, N = 6;
    auto policy = LinearGaussianPolicy::initial(T, 1, 1, 0.5);
    EpisodeBatch batch;
    for (int i = 0; i < N; ++i) {
        Episode ep;
        ep.states = Eigen::MatrixXd::Zero(T + 1, 1);
        ep.actions = Eigen::MatrixXd::Zero(T, 1);
        ep.feedforwards =
            Eigen::MatrixXd::NullaryExpr(T, 1, [&](Eigen::Index, Eigen::Index) { return g(rng); });
        Eigen::VectorXd r = Eigen::VectorXd::Zero(T);
        r(T - 1) = g(rng);  // all reward at the end
        ep.step_rewards = r;
        ep.terminal_return = r.sum();
        batch.episodes.push_back(ep);
    }
    RepsConfig cfg;
    cfg.samples = N;
    auto stepwise = update_policy_stepwise(policy, batch, cfg);
    const double eta = solve_dual(batch.returns(), cfg.epsilon, cfg.eta_min, cfg.eta_max);
    auto episodic = update_policy(policy, batch, compute_weights(batch.returns(), eta),
                                  cfg.sigma_floor);
    for (int t = 0; t < T; ++t) {
        CHECK(stepwise.feedforward[t](0) == doctest::Approx(episodic.feedforward[t](0)).epsilon(1e-9));
        CHECK(stepwise.covariance[t](0, 0) ==
              doctest::Approx(episodic.covariance[t](0, 0)).epsilon(1e-9));
    }
}

TEST_CASE("update_policy_stepwise: constant rewards give uniform weights (mean preserved)") {
    const int T = 2, N = 4;
    auto policy = LinearGaussianPolicy::initial(T, 1, 1, 0.5);
    EpisodeBatch batch;
    for (int i = 0; i < N; ++i) {
        Episode ep;
        ep.states = Eigen::MatrixXd::Zero(T + 1, 1);
        ep.actions = Eigen::MatrixXd::Zero(T, 1);
        ep.feedforwards = Eigen::MatrixXd::Constant(T, 1, static_cast<double>(i));
        ep.step_rewards = Eigen::VectorXd::Ones(T);
        batch.episodes.push_back(ep);
    }
    RepsConfig cfg;
    cfg.samples = N;
    auto updated = update_policy_stepwise(policy, batch, cfg);
    CHECK(updated.feedforward[0](0) == doctest::Approx(1.5));  // plain average of 0..3
}

TEST_CASE("update_policy_stepwise: missing step rewards raises") {
    auto policy = LinearGaussianPolicy::initial(1, 1, 1, 0.5);
    EpisodeBatch batch;
    batch.episodes.resize(2);
    for (auto& ep : batch.episodes) {
        ep.states = Eigen::MatrixXd::Zero(2, 1);
        ep.actions = Eigen::MatrixXd::Zero(1, 1);
        ep.feedforwards = Eigen::MatrixXd::Zero(1, 1);
    }
    RepsConfig cfg;
    CHECK_THROWS_AS(update_policy_stepwise(policy, batch, cfg), MissingStepRewards);
}

TEST_CASE("covariance stays PD across noisy update cycles") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    auto policy = LinearGaussianPolicy::initial(2, 1, 2, 0.5);
    for (int iter = 0; iter < 20; ++iter) {
        EpisodeBatch batch;
        Eigen::VectorXd returns(4);
        for (int i = 0; i < 4; ++i) {
            Episode ep;
            ep.states = Eigen::MatrixXd::Zero(3, 1);
            ep.actions = Eigen::MatrixXd::Zero(2, 2);
            // rank-deficient scatter on purpose: all samples colinear
            const double v = g(rng);
            ep.feedforwards = Eigen::MatrixXd::Constant(2, 2, v);
            ep.terminal_return = g(rng);
            returns(i) = ep.terminal_return;
            batch.episodes.push_back(ep);
        }
        const double eta = solve_dual(returns, 1.0);
        policy = update_policy(policy, batch, compute_weights(returns, eta), 1e-3);
        for (const auto& sigma : policy.covariance) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
            CHECK(es.eigenvalues().minCoeff() >= 1e-6 * (1 - 1e-9));
        }
    }
}

TEST_CASE("policy checkpoint: exact JSON round trip") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    auto policy = LinearGaussianPolicy::initial(3, 4, 2, 0.5);
    for (int t = 0; t < 3; ++t) {
        policy.gain[t] = Eigen::MatrixXd::NullaryExpr(2, 4, [&](Eigen::Index, Eigen::Index) {
            return g(rng);
        });
        policy.feedforward[t] =
            Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) { return g(rng); });
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(2, 2, [&](Eigen::Index, Eigen::Index) {
            return g(rng);
        });
        policy.covariance[t] = a * a.transpose() + Eigen::MatrixXd::Identity(2, 2);
    }
    const std::string path = "policy_roundtrip_test.json";
    save_policy(policy, path);
    auto back = load_policy(path);
    CHECK(back.horizon == policy.horizon);
    CHECK(back.state_dim == policy.state_dim);
    for (int t = 0; t < 3; ++t) {
        CHECK((back.gain[t] - policy.gain[t]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.feedforward[t] - policy.feedforward[t]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.covariance[t] - policy.covariance[t]).cwiseAbs().maxCoeff() == 0.0);
    }
    std::remove(path.c_str());
}
