// tltl/reps.hpp — episodic Relative Entropy Policy Search over time-varying
// linear-Gaussian policies, plus a step-based cost-to-go variant.
//
// The policy at step t is N(K_t s_t + k_t, Sigma_t). Exploration enters
// through the feedforward term: each rollout draws k_{i,t} ~ N(k_t, Sigma_t)
// per step, and the realized k_{i,t} (not the raw action) drives the
// weighted maximum-likelihood update
//
//   k'_t     = sum_i p_i k_{i,t}
//   Sigma'_t = sum_i p_i (k_{i,t} - k'_t)(k_{i,t} - k'_t)^T
//
// with sample weights p_i proportional to exp(R_i / eta). eta minimizes the
// dual g(eta) = eta*eps + eta*log sum_i (1/N) exp(R_i/eta), which enforces
// KL(p || uniform) <= eps. The feedback gain K_t is held fixed.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tltl {

struct RepsConfig {
    double epsilon = 1.0;       // KL trust-region bound
    double eta_min = 1e-6;      // lower end of the eta search bracket
    double eta_max = 1e6;       // upper end; also the all-equal-returns answer
    double sigma_floor = 1e-3;  // min std dev per covariance eigen-direction
    double sigma0 = 0.5;        // initial exploration std dev
    int samples = 20;           // rollouts per iteration
    int iterations = 60;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("RepsConfig: epsilon must be > 0");
        if (!(eta_min > 0.0)) throw std::invalid_argument("RepsConfig: eta_min must be > 0");
        if (!(sigma_floor > 0.0)) throw std::invalid_argument("RepsConfig: sigma_floor must be > 0");
        if (samples < 2) throw std::invalid_argument("RepsConfig: samples must be >= 2");
    }
};

struct LinearGaussianPolicy {
    int horizon = 0;
    int state_dim = 0;
    int action_dim = 0;
    std::vector<Eigen::MatrixXd> gain;         // K_t, action_dim x state_dim
    std::vector<Eigen::VectorXd> feedforward;  // k_t, action_dim
    std::vector<Eigen::MatrixXd> covariance;   // Sigma_t, action_dim x action_dim

    // Zero-gain, zero-feedforward policy with isotropic sigma0^2 covariance.
    static LinearGaussianPolicy initial(int horizon, int state_dim, int action_dim,
                                        double sigma0);

    Eigen::VectorXd mean_action(int t, const Eigen::VectorXd& state) const {
        return gain[static_cast<std::size_t>(t)] * state +
               feedforward[static_cast<std::size_t>(t)];
    }
};

// One rollout: T+1 states, T actions, T sampled feedforwards.
struct Episode {
    Eigen::MatrixXd states;        // (T+1) x state_dim
    Eigen::MatrixXd actions;       // T x action_dim
    Eigen::MatrixXd feedforwards;  // T x action_dim, the realized k_{i,t}
    double terminal_return = 0.0;
    std::optional<Eigen::VectorXd> step_rewards;  // length T, stepwise variant only
};

struct EpisodeBatch {
    std::vector<Episode> episodes;
    int size() const { return static_cast<int>(episodes.size()); }
    Eigen::VectorXd returns() const;
};

// Environment contract for rollout collection. Implementations own their
// dynamics; all randomness flows through the rng argument.
class Environment {
  public:
    virtual ~Environment() = default;
    virtual int horizon() const = 0;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Eigen::VectorXd reset(std::mt19937_64& rng) = 0;
    virtual Eigen::VectorXd step(const Eigen::VectorXd& action, std::mt19937_64& rng) = 0;
};

// Maps a finished rollout to returns. terminal() is always available;
// step_rewards() only when has_step_rewards().
class RewardAdapter {
  public:
    virtual ~RewardAdapter() = default;
    virtual double terminal(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const = 0;
    virtual bool has_step_rewards() const { return false; }
    virtual Eigen::VectorXd step_rewards(const Eigen::MatrixXd& states,
                                         const Eigen::MatrixXd& actions) const {
        throw std::logic_error("reward adapter has no per-step rewards");
    }
};

class NonFiniteState : public std::runtime_error {
  public:
    explicit NonFiniteState(int t)
        : std::runtime_error("non-finite state at step " + std::to_string(t)) {}
};

class MissingStepRewards : public std::logic_error {
  public:
    MissingStepRewards()
        : std::logic_error("step-based REPS requires per-step rewards; "
                           "terminal-only rewards cannot drive this variant") {}
};

// Roll out one episode. Deterministic given (policy, env state, seed).
Episode sample_episode(const LinearGaussianPolicy& policy, Environment& env,
                       const RewardAdapter& reward, std::uint64_t seed);

// Dual function value at eta (after max-shift of the returns).
double dual_value(const Eigen::VectorXd& returns, double epsilon, double eta);

// Minimize the dual over eta in [eta_min, eta_max] by golden-section search
// on log(eta). All-equal returns yield eta_max (weights are uniform anyway).
double solve_dual(const Eigen::VectorXd& returns, double epsilon, double eta_min = 1e-6,
                  double eta_max = 1e6);

// p_i = exp((R_i - max R)/eta), normalized to the simplex.
Eigen::VectorXd compute_weights(const Eigen::VectorXd& returns, double eta);

// Episodic weighted-ML update: one weight vector for all steps. Covariances
// are eigenvalue-floored at sigma_floor^2; K_t is unchanged.
LinearGaussianPolicy update_policy(const LinearGaussianPolicy& policy, const EpisodeBatch& batch,
                                   const Eigen::VectorXd& weights, double sigma_floor);

// Step-based variant: per-step dual solve on cost-to-go returns.
LinearGaussianPolicy update_policy_stepwise(const LinearGaussianPolicy& policy,
                                            const EpisodeBatch& batch, const RepsConfig& cfg);

// Versioned JSON checkpoint; round-trips at full floating precision.
void save_policy(const LinearGaussianPolicy& policy, const std::string& path);
LinearGaussianPolicy load_policy(const std::string& path);

}  // namespace tltl
