// tltl/formula.hpp — TLTL abstract syntax tree.
//
// A formula is an immutable tree of operator nodes over predicate atoms.
// Atoms compare a single named trajectory feature against a constant:
//   f < c  or  f > c
// with an optional positive `scale` multiplier applied to the robustness
// margin (used to normalize heterogeneous feature units).
//
// Node kinds:
//   True                  : constant truth
//   Pred                  : feature comparison
//   Not, And, Or, Implies : Boolean connectives
//   Eventually (F), Always (G), Next (X)
//   Until (U), Then (T)   : binary temporal operators
//
// Nodes are shared via shared_ptr<const Formula> and never mutated after
// construction, so formulas can be evaluated concurrently without locks.

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tltl {

// Ordered feature-name table binding predicate identifiers to trajectory
// columns.
struct FeatureSchema {
    std::vector<std::string> names;

    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<std::string> n) : names(std::move(n)) {
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j)
                if (names[i] == names[j])
                    throw std::invalid_argument("FeatureSchema: duplicate feature name '" +
                                                names[i] + "'");
    }

    int dimension() const { return static_cast<int>(names.size()); }

    // Column index of `name`, or -1 if absent.
    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }

    bool contains(const std::string& name) const { return index_of(name) >= 0; }
};

enum class Cmp { Lt, Gt };

struct Predicate {
    std::string name;     // display label; equals `feature` for parsed atoms
    std::string feature;  // trajectory channel the atom reads
    Cmp cmp = Cmp::Lt;
    double threshold = 0.0;
    double scale = 1.0;  // robustness normalization multiplier, > 0

    Predicate() = default;
    Predicate(std::string feat, Cmp c, double thresh, double sc = 1.0)
        : name(feat), feature(std::move(feat)), cmp(c), threshold(thresh), scale(sc) {
        if (!(scale > 0.0)) throw std::invalid_argument("Predicate: scale must be > 0");
    }

    bool operator==(const Predicate& o) const {
        return feature == o.feature && cmp == o.cmp && threshold == o.threshold &&
               scale == o.scale;
    }
};

enum class Op {
    True,
    Pred,
    Not,
    And,
    Or,
    Implies,
    Eventually,
    Always,
    Until,
    Then,
    Next,
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
  public:
    Op op;
    Predicate pred;        // valid iff op == Op::Pred
    FormulaPtr lhs, rhs;   // unary ops use lhs only

    static FormulaPtr make_true() { return make(Op::True, {}, nullptr, nullptr); }
    static FormulaPtr make_pred(Predicate p) {
        return make(Op::Pred, std::move(p), nullptr, nullptr);
    }
    static FormulaPtr make_not(FormulaPtr a) { return make_unary(Op::Not, std::move(a)); }
    static FormulaPtr make_and(FormulaPtr a, FormulaPtr b) {
        return make_binary(Op::And, std::move(a), std::move(b));
    }
    static FormulaPtr make_or(FormulaPtr a, FormulaPtr b) {
        return make_binary(Op::Or, std::move(a), std::move(b));
    }
    static FormulaPtr make_implies(FormulaPtr a, FormulaPtr b) {
        return make_binary(Op::Implies, std::move(a), std::move(b));
    }
    static FormulaPtr make_eventually(FormulaPtr a) {
        return make_unary(Op::Eventually, std::move(a));
    }
    static FormulaPtr make_always(FormulaPtr a) { return make_unary(Op::Always, std::move(a)); }
    static FormulaPtr make_until(FormulaPtr a, FormulaPtr b) {
        return make_binary(Op::Until, std::move(a), std::move(b));
    }
    static FormulaPtr make_then(FormulaPtr a, FormulaPtr b) {
        return make_binary(Op::Then, std::move(a), std::move(b));
    }
    static FormulaPtr make_next(FormulaPtr a) { return make_unary(Op::Next, std::move(a)); }

    bool is_leaf() const { return op == Op::True || op == Op::Pred; }
    bool is_unary() const { return op == Op::Not || op == Op::Eventually ||
                                   op == Op::Always || op == Op::Next; }
    bool is_binary() const { return !is_leaf() && !is_unary(); }

    // Structural equality.
    bool equals(const Formula& o) const;

    // Every feature identifier appearing in predicates resolves in `schema`.
    bool resolves_against(const FeatureSchema& schema) const;

  private:
    Formula(Op o, Predicate p, FormulaPtr a, FormulaPtr b)
        : op(o), pred(std::move(p)), lhs(std::move(a)), rhs(std::move(b)) {}

    static FormulaPtr make(Op o, Predicate p, FormulaPtr a, FormulaPtr b) {
        return FormulaPtr(new Formula(o, std::move(p), std::move(a), std::move(b)));
    }
    static FormulaPtr make_unary(Op o, FormulaPtr a) {
        if (!a) throw std::invalid_argument("Formula: null child");
        return make(o, {}, std::move(a), nullptr);
    }
    static FormulaPtr make_binary(Op o, FormulaPtr a, FormulaPtr b) {
        if (!a || !b) throw std::invalid_argument("Formula: null child");
        return make(o, {}, std::move(a), std::move(b));
    }
};

inline bool operator==(const Formula& a, const Formula& b) { return a.equals(b); }

// Post-order enumeration of the distinct subformulas of `f`: structurally
// identical subtrees appear once, children precede parents, `f` is last.
std::vector<FormulaPtr> subformulas(const FormulaPtr& f);

}  // namespace tltl
