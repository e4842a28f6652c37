// tltl/semantics.hpp — Boolean and quantitative (robustness) evaluation of
// TLTL formulas over finite trajectories.
//
// A trajectory of n states has n suffixes, indexed by their start state.
// Temporal operators quantify over suffix starts in [i, n-1] INCLUSIVE of
// the final state; this follows the worked-example convention rather than
// the half-open interval notation. Next at the last state is false
// (robustness -rho_max).
//
// Robustness:
//   rho(true)    = rho_max
//   rho(f < c)   = scale * (c - f_i)        rho(f > c) = scale * (f_i - c)
//   rho(!phi)    = -rho(phi)
//   rho(a -> b)  = max(-rho(a), rho(b))
//   rho(a & b)   = min,   rho(a | b) = max
//   rho(X phi)   = rho(phi) at i+1, or -rho_max at the last state
//   rho(G phi)   = min over suffix starts t' in [i, n-1]
//   rho(F phi)   = max over suffix starts
//   rho(a U b)   = max_{t'} min( rho(b)@t', min_{t'' in [i,t')} rho(a)@t'' )
//   rho(a T b)   = max_{t'} min( rho(b)@t', max_{t'' in [i,t')} rho(a)@t'' )
// with empty-range min = +rho_max, empty-range max = -rho_max, and every
// node's value clamped to [-rho_max, +rho_max].
//
// Evaluation builds one table of values per (distinct subformula, suffix
// start), so the worst-case work is O(|f| * n^2) from the nested Until/Then
// ranges. The table lives only for the duration of one call; evaluation is
// pure and safe to run concurrently over distinct trajectories.

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tltl/formula.hpp"

namespace tltl {

struct Trajectory {
    FeatureSchema schema;
    Eigen::MatrixXd states;  // n x schema.dimension(), row per time step
    double dt = 0.05;        // metadata only

    int length() const { return static_cast<int>(states.rows()); }

    void validate() const;
};

struct RobustnessConfig {
    double rho_max = 100.0;
};

class IndexOutOfRange : public std::out_of_range {
  public:
    IndexOutOfRange(int i, int n)
        : std::out_of_range("suffix start " + std::to_string(i) +
                            " out of range for trajectory of length " + std::to_string(n)) {}
};

// Evaluation effort counters, exposed for complexity assertions in tests.
struct EvalStats {
    std::size_t cells = 0;       // (subformula, index) table cells filled
    std::size_t inner_steps = 0; // aggregate loop steps across all cells
};

// Satisfaction of f by the suffix of traj starting at i.
bool eval_bool(const FormulaPtr& f, const Trajectory& traj, int i);

// Robustness degree of f on the suffix starting at i.
double robustness(const FormulaPtr& f, const Trajectory& traj, int i,
                  const RobustnessConfig& cfg = {});

// Robustness at every suffix start, computed in one memoized pass.
std::vector<double> robustness_trace(const FormulaPtr& f, const Trajectory& traj,
                                     const RobustnessConfig& cfg = {},
                                     EvalStats* stats = nullptr);

// Boolean verdict at every suffix start.
std::vector<char> bool_trace(const FormulaPtr& f, const Trajectory& traj,
                             EvalStats* stats = nullptr);

// CSV trace ingestion: header row names the feature channels, one row per
// time step.
Trajectory read_trace_csv(const std::string& path, double dt = 0.05);
void write_trace_csv(const Trajectory& traj, const std::string& path);

}  // namespace tltl
