#include "tltl/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tltl/parser.hpp"

namespace tltl {

void Trajectory::validate() const {
    if (states.rows() < 1) throw std::invalid_argument("Trajectory: needs at least one state");
    if (states.cols() != schema.dimension())
        throw std::invalid_argument("Trajectory: state dimension " +
                                    std::to_string(states.cols()) + " does not match schema (" +
                                    std::to_string(schema.dimension()) + ")");
    if (!(dt > 0.0)) throw std::invalid_argument("Trajectory: dt must be > 0");
    if (!states.allFinite()) throw std::invalid_argument("Trajectory: non-finite state entry");
}

namespace {

// Distinct subformulas in post-order plus a lookup from every node pointer
// in the tree to its representative's table row.
struct NodeIndex {
    std::vector<FormulaPtr> nodes;
    int row_of(const Formula& f) const {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (nodes[k]->equals(f)) return static_cast<int>(k);
        throw std::logic_error("subformula not indexed");
    }
};

double clamp_rho(double v, double rho_max) {
    return std::min(rho_max, std::max(-rho_max, v));
}

void robustness_table(const NodeIndex& idx, const Trajectory& traj, double rho_max,
                      std::vector<std::vector<double>>& table, EvalStats* stats) {
    const int n = traj.length();
    table.assign(idx.nodes.size(), std::vector<double>(n));
    for (std::size_t k = 0; k < idx.nodes.size(); ++k) {
        const Formula& f = *idx.nodes[k];
        auto& row = table[k];
        if (stats) stats->cells += static_cast<std::size_t>(n);
        switch (f.op) {
            case Op::True:
                std::fill(row.begin(), row.end(), rho_max);
                break;
            case Op::Pred: {
                const int col = traj.schema.index_of(f.pred.feature);
                if (col < 0)
                    throw std::invalid_argument("predicate feature '" + f.pred.feature +
                                                "' not in trajectory schema");
                for (int i = 0; i < n; ++i) {
                    const double v = traj.states(i, col);
                    const double margin = (f.pred.cmp == Cmp::Lt) ? f.pred.threshold - v
                                                                  : v - f.pred.threshold;
                    row[i] = clamp_rho(f.pred.scale * margin, rho_max);
                }
                break;
            }
            case Op::Not: {
                const auto& a = table[idx.row_of(*f.lhs)];
                for (int i = 0; i < n; ++i) row[i] = -a[i];
                break;
            }
            case Op::And: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = std::min(a[i], b[i]);
                break;
            }
            case Op::Or: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = std::max(a[i], b[i]);
                break;
            }
            case Op::Implies: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = std::max(-a[i], b[i]);
                break;
            }
            case Op::Next: {
                const auto& a = table[idx.row_of(*f.lhs)];
                for (int i = 0; i < n; ++i) row[i] = (i + 1 < n) ? a[i + 1] : -rho_max;
                break;
            }
            case Op::Always: {
                const auto& a = table[idx.row_of(*f.lhs)];
                double acc = rho_max;
                for (int i = n - 1; i >= 0; --i) {
                    acc = std::min(acc, a[i]);
                    row[i] = acc;
                    if (stats) ++stats->inner_steps;
                }
                break;
            }
            case Op::Eventually: {
                const auto& a = table[idx.row_of(*f.lhs)];
                double acc = -rho_max;
                for (int i = n - 1; i >= 0; --i) {
                    acc = std::max(acc, a[i]);
                    row[i] = acc;
                    if (stats) ++stats->inner_steps;
                }
                break;
            }
            case Op::Until: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) {
                    double best = -rho_max;
                    double run_min = rho_max;  // min of a over [i, t'), empty = +rho_max
                    for (int tp = i; tp < n; ++tp) {
                        best = std::max(best, std::min(b[tp], run_min));
                        run_min = std::min(run_min, a[tp]);
                        if (stats) ++stats->inner_steps;
                    }
                    row[i] = clamp_rho(best, rho_max);
                }
                break;
            }
            case Op::Then: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) {
                    double best = -rho_max;
                    double run_max = -rho_max;  // max of a over [i, t'), empty = -rho_max
                    for (int tp = i; tp < n; ++tp) {
                        best = std::max(best, std::min(b[tp], run_max));
                        run_max = std::max(run_max, a[tp]);
                        if (stats) ++stats->inner_steps;
                    }
                    row[i] = clamp_rho(best, rho_max);
                }
                break;
            }
        }
    }
}

void bool_table(const NodeIndex& idx, const Trajectory& traj,
                std::vector<std::vector<char>>& table, EvalStats* stats) {
    const int n = traj.length();
    table.assign(idx.nodes.size(), std::vector<char>(n));
    for (std::size_t k = 0; k < idx.nodes.size(); ++k) {
        const Formula& f = *idx.nodes[k];
        auto& row = table[k];
        if (stats) stats->cells += static_cast<std::size_t>(n);
        switch (f.op) {
            case Op::True:
                std::fill(row.begin(), row.end(), 1);
                break;
            case Op::Pred: {
                const int col = traj.schema.index_of(f.pred.feature);
                if (col < 0)
                    throw std::invalid_argument("predicate feature '" + f.pred.feature +
                                                "' not in trajectory schema");
                for (int i = 0; i < n; ++i) {
                    const double v = traj.states(i, col);
                    row[i] = (f.pred.cmp == Cmp::Lt) ? (v < f.pred.threshold)
                                                     : (v > f.pred.threshold);
                }
                break;
            }
            case Op::Not: {
                const auto& a = table[idx.row_of(*f.lhs)];
                for (int i = 0; i < n; ++i) row[i] = !a[i];
                break;
            }
            case Op::And: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = a[i] && b[i];
                break;
            }
            case Op::Or: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = a[i] || b[i];
                break;
            }
            case Op::Implies: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) row[i] = !a[i] || b[i];
                break;
            }
            case Op::Next: {
                const auto& a = table[idx.row_of(*f.lhs)];
                for (int i = 0; i < n; ++i) row[i] = (i + 1 < n) && a[i + 1];
                break;
            }
            case Op::Always: {
                const auto& a = table[idx.row_of(*f.lhs)];
                char acc = 1;
                for (int i = n - 1; i >= 0; --i) {
                    acc = acc && a[i];
                    row[i] = acc;
                }
                break;
            }
            case Op::Eventually: {
                const auto& a = table[idx.row_of(*f.lhs)];
                char acc = 0;
                for (int i = n - 1; i >= 0; --i) {
                    acc = acc || a[i];
                    row[i] = acc;
                }
                break;
            }
            case Op::Until: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) {
                    char sat = 0;
                    char prefix_ok = 1;  // a holds at every t'' in [i, t')
                    for (int tp = i; tp < n && !sat; ++tp) {
                        if (b[tp] && prefix_ok) sat = 1;
                        prefix_ok = prefix_ok && a[tp];
                    }
                    row[i] = sat;
                }
                break;
            }
            case Op::Then: {
                const auto& a = table[idx.row_of(*f.lhs)];
                const auto& b = table[idx.row_of(*f.rhs)];
                for (int i = 0; i < n; ++i) {
                    char sat = 0;
                    char seen_a = 0;  // a held at some t'' in [i, t')
                    for (int tp = i; tp < n && !sat; ++tp) {
                        if (b[tp] && seen_a) sat = 1;
                        seen_a = seen_a || a[tp];
                    }
                    row[i] = sat;
                }
                break;
            }
        }
    }
}

void check_index(int i, int n) {
    if (i < 0 || i >= n) throw IndexOutOfRange(i, n);
}

}  // namespace

std::vector<double> robustness_trace(const FormulaPtr& f, const Trajectory& traj,
                                     const RobustnessConfig& cfg, EvalStats* stats) {
    traj.validate();
    if (!(cfg.rho_max > 0.0) || !std::isfinite(cfg.rho_max))
        throw std::invalid_argument("rho_max must be positive and finite");
    NodeIndex idx{subformulas(f)};
    std::vector<std::vector<double>> table;
    robustness_table(idx, traj, cfg.rho_max, table, stats);
    return table.back();
}

std::vector<char> bool_trace(const FormulaPtr& f, const Trajectory& traj, EvalStats* stats) {
    traj.validate();
    NodeIndex idx{subformulas(f)};
    std::vector<std::vector<char>> table;
    bool_table(idx, traj, table, stats);
    return table.back();
}

double robustness(const FormulaPtr& f, const Trajectory& traj, int i,
                  const RobustnessConfig& cfg) {
    check_index(i, traj.length());
    return robustness_trace(f, traj, cfg)[static_cast<std::size_t>(i)];
}

bool eval_bool(const FormulaPtr& f, const Trajectory& traj, int i) {
    check_index(i, traj.length());
    return bool_trace(f, traj)[static_cast<std::size_t>(i)] != 0;
}

Trajectory read_trace_csv(const std::string& path, double dt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front())))
                cell.erase(cell.begin());
            while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
                cell.pop_back();
            out.push_back(cell);
        }
        return out;
    };
    FeatureSchema schema(split(line));
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (static_cast<int>(cells.size()) != schema.dimension())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(schema.dimension()) + " columns, got " +
                                     std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(std::stod(c));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");
    Trajectory traj;
    traj.schema = schema;
    traj.dt = dt;
    traj.states.resize(static_cast<Eigen::Index>(rows.size()), schema.dimension());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < schema.dimension(); ++c)
            traj.states(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    traj.validate();
    return traj;
}

void write_trace_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    for (int c = 0; c < traj.schema.dimension(); ++c) {
        if (c) out << ',';
        out << traj.schema.names[static_cast<std::size_t>(c)];
    }
    out << '\n';
    for (int r = 0; r < traj.length(); ++r) {
        for (int c = 0; c < traj.schema.dimension(); ++c) {
            if (c) out << ',';
            out << format_double(traj.states(r, c));
        }
        out << '\n';
    }
}

}  // namespace tltl
