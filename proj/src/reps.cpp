#include "tltl/reps.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace tltl {

using json = nlohmann::json;

LinearGaussianPolicy LinearGaussianPolicy::initial(int horizon, int state_dim, int action_dim,
                                                   double sigma0) {
    if (horizon < 1 || state_dim < 1 || action_dim < 1)
        throw std::invalid_argument("LinearGaussianPolicy: dimensions must be positive");
    LinearGaussianPolicy p;
    p.horizon = horizon;
    p.state_dim = state_dim;
    p.action_dim = action_dim;
    p.gain.assign(static_cast<std::size_t>(horizon),
                  Eigen::MatrixXd::Zero(action_dim, state_dim));
    p.feedforward.assign(static_cast<std::size_t>(horizon), Eigen::VectorXd::Zero(action_dim));
    p.covariance.assign(static_cast<std::size_t>(horizon),
                        sigma0 * sigma0 * Eigen::MatrixXd::Identity(action_dim, action_dim));
    return p;
}

Eigen::VectorXd EpisodeBatch::returns() const {
    Eigen::VectorXd r(size());
    for (int i = 0; i < size(); ++i) r(i) = episodes[static_cast<std::size_t>(i)].terminal_return;
    return r;
}

Episode sample_episode(const LinearGaussianPolicy& policy, Environment& env,
                       const RewardAdapter& reward, std::uint64_t seed) {
    if (env.horizon() != policy.horizon)
        throw std::invalid_argument("environment horizon does not match policy horizon");
    const int T = policy.horizon;
    const int sdim = policy.state_dim;
    const int adim = policy.action_dim;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Episode ep;
    ep.states.resize(T + 1, sdim);
    ep.actions.resize(T, adim);
    ep.feedforwards.resize(T, adim);

    Eigen::VectorXd s = env.reset(rng);
    ep.states.row(0) = s.transpose();
    for (int t = 0; t < T; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        // Cholesky sample k_{i,t} ~ N(k_t, Sigma_t); Sigma_t is kept PD by
        // the update's eigenvalue floor.
        Eigen::LLT<Eigen::MatrixXd> llt(policy.covariance[ti]);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("policy covariance not positive definite at step " +
                                     std::to_string(t));
        Eigen::VectorXd z(adim);
        for (int j = 0; j < adim; ++j) z(j) = gauss(rng);
        Eigen::VectorXd k_sample = policy.feedforward[ti] + llt.matrixL() * z;
        Eigen::VectorXd a = policy.gain[ti] * s + k_sample;

        s = env.step(a, rng);
        if (!s.allFinite()) throw NonFiniteState(t + 1);
        ep.feedforwards.row(t) = k_sample.transpose();
        ep.actions.row(t) = a.transpose();
        ep.states.row(t + 1) = s.transpose();
    }
    ep.terminal_return = reward.terminal(ep.states, ep.actions);
    if (reward.has_step_rewards()) ep.step_rewards = reward.step_rewards(ep.states, ep.actions);
    return ep;
}

double dual_value(const Eigen::VectorXd& returns, double epsilon, double eta) {
    const double rmax = returns.maxCoeff();
    const int n = static_cast<int>(returns.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::exp((returns(i) - rmax) / eta);
    return eta * epsilon + rmax + eta * std::log(acc / n);
}

double solve_dual(const Eigen::VectorXd& returns, double epsilon, double eta_min,
                  double eta_max) {
    if (returns.size() < 2) throw std::invalid_argument("solve_dual: need at least 2 returns");
    if (!returns.allFinite()) throw std::invalid_argument("solve_dual: non-finite return");
    if (returns.maxCoeff() - returns.minCoeff() == 0.0) return eta_max;  // weights uniform

    // Golden-section minimization on log(eta); g is convex in eta.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(eta_min), hi = std::log(eta_max);
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = dual_value(returns, epsilon, std::exp(x1));
    double f2 = dual_value(returns, epsilon, std::exp(x2));
    while (hi - lo > 1e-8 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
        if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = dual_value(returns, epsilon, std::exp(x1));
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = dual_value(returns, epsilon, std::exp(x2));
        }
    }
    return std::exp(0.5 * (lo + hi));
}

Eigen::VectorXd compute_weights(const Eigen::VectorXd& returns, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("compute_weights: eta must be > 0");
    const double rmax = returns.maxCoeff();
    Eigen::VectorXd w = ((returns.array() - rmax) / eta).exp();
    return w / w.sum();
}

namespace {

Eigen::MatrixXd floor_covariance(const Eigen::MatrixXd& sigma, double sigma_floor) {
    Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double floor = sigma_floor * sigma_floor;
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_weights(const Eigen::VectorXd& w, int n) {
    if (static_cast<int>(w.size()) != n)
        throw std::invalid_argument("weight vector size does not match batch");
    if (std::abs(w.sum() - 1.0) > 1e-9 || w.minCoeff() < 0.0)
        throw std::invalid_argument("weights must lie on the simplex");
}

void update_step(LinearGaussianPolicy& out, const EpisodeBatch& batch,
                 const Eigen::VectorXd& w, int t, double sigma_floor) {
    const int adim = out.action_dim;
    const auto ti = static_cast<std::size_t>(t);
    Eigen::VectorXd k_new = Eigen::VectorXd::Zero(adim);
    for (int i = 0; i < batch.size(); ++i)
        k_new += w(i) * batch.episodes[static_cast<std::size_t>(i)].feedforwards.row(t).transpose();
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(adim, adim);
    for (int i = 0; i < batch.size(); ++i) {
        Eigen::VectorXd d =
            batch.episodes[static_cast<std::size_t>(i)].feedforwards.row(t).transpose() - k_new;
        scatter += w(i) * d * d.transpose();
    }
    out.feedforward[ti] = k_new;
    out.covariance[ti] = floor_covariance(scatter, sigma_floor);
}

}  // namespace

LinearGaussianPolicy update_policy(const LinearGaussianPolicy& policy, const EpisodeBatch& batch,
                                   const Eigen::VectorXd& weights, double sigma_floor) {
    check_weights(weights, batch.size());
    LinearGaussianPolicy out = policy;
    for (int t = 0; t < policy.horizon; ++t) update_step(out, batch, weights, t, sigma_floor);
    return out;
}

LinearGaussianPolicy update_policy_stepwise(const LinearGaussianPolicy& policy,
                                            const EpisodeBatch& batch, const RepsConfig& cfg) {
    cfg.validate();
    const int N = batch.size();
    const int T = policy.horizon;
    for (const auto& ep : batch.episodes)
        if (!ep.step_rewards) throw MissingStepRewards();

    // Cost-to-go R_{i,t} = sum_{t' >= t} r_{i,t'}, built backwards.
    Eigen::MatrixXd togo(N, T);
    for (int i = 0; i < N; ++i) {
        const auto& r = *batch.episodes[static_cast<std::size_t>(i)].step_rewards;
        double acc = 0.0;
        for (int t = T - 1; t >= 0; --t) {
            acc += r(t);
            togo(i, t) = acc;
        }
    }

    LinearGaussianPolicy out = policy;
    for (int t = 0; t < T; ++t) {
        Eigen::VectorXd rt = togo.col(t);
        double eta = solve_dual(rt, cfg.epsilon, cfg.eta_min, cfg.eta_max);
        Eigen::VectorXd w = compute_weights(rt, eta);
        update_step(out, batch, w, t, cfg.sigma_floor);
    }
    return out;
}

void save_policy(const LinearGaussianPolicy& policy, const std::string& path) {
    json j;
    j["version"] = 1;
    j["horizon"] = policy.horizon;
    j["state_dim"] = policy.state_dim;
    j["action_dim"] = policy.action_dim;
    auto mat_to_json = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    j["gain"] = json::array();
    j["feedforward"] = json::array();
    j["covariance"] = json::array();
    for (int t = 0; t < policy.horizon; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        j["gain"].push_back(mat_to_json(policy.gain[ti]));
        json k = json::array();
        for (Eigen::Index r = 0; r < policy.feedforward[ti].size(); ++r)
            k.push_back(policy.feedforward[ti](r));
        j["feedforward"].push_back(std::move(k));
        j["covariance"].push_back(mat_to_json(policy.covariance[ti]));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write policy checkpoint: " + path);
    out << j.dump(2) << '\n';
}

LinearGaussianPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read policy checkpoint: " + path);
    json j = json::parse(in);
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported policy checkpoint version");
    LinearGaussianPolicy p;
    p.horizon = j.at("horizon").get<int>();
    p.state_dim = j.at("state_dim").get<int>();
    p.action_dim = j.at("action_dim").get<int>();
    auto mat_from_json = [](const json& rows, Eigen::Index nr, Eigen::Index nc) {
        Eigen::MatrixXd m(nr, nc);
        for (Eigen::Index r = 0; r < nr; ++r)
            for (Eigen::Index c = 0; c < nc; ++c)
                m(r, c) = rows.at(static_cast<std::size_t>(r))
                              .at(static_cast<std::size_t>(c))
                              .get<double>();
        return m;
    };
    for (int t = 0; t < p.horizon; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        p.gain.push_back(mat_from_json(j.at("gain").at(ti), p.action_dim, p.state_dim));
        Eigen::VectorXd k(p.action_dim);
        for (int r = 0; r < p.action_dim; ++r)
            k(r) = j.at("feedforward").at(ti).at(static_cast<std::size_t>(r)).get<double>();
        p.feedforward.push_back(std::move(k));
        p.covariance.push_back(
            mat_from_json(j.at("covariance").at(ti), p.action_dim, p.action_dim));
    }
    return p;
}

}  // namespace tltl
