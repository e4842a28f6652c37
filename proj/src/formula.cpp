#include "tltl/formula.hpp"

namespace tltl {

bool Formula::equals(const Formula& o) const {
    if (op != o.op) return false;
    switch (op) {
        case Op::True:
            return true;
        case Op::Pred:
            return pred == o.pred;
        default:
            if (is_unary()) return lhs->equals(*o.lhs);
            return lhs->equals(*o.lhs) && rhs->equals(*o.rhs);
    }
}

bool Formula::resolves_against(const FeatureSchema& schema) const {
    if (op == Op::Pred) return schema.contains(pred.feature);
    if (lhs && !lhs->resolves_against(schema)) return false;
    if (rhs && !rhs->resolves_against(schema)) return false;
    return true;
}

namespace {

void collect(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
    if (f->lhs) collect(f->lhs, out);
    if (f->rhs) collect(f->rhs, out);
    for (const auto& seen : out)
        if (seen->equals(*f)) return;
    out.push_back(f);
}

}  // namespace

std::vector<FormulaPtr> subformulas(const FormulaPtr& f) {
    std::vector<FormulaPtr> out;
    collect(f, out);
    return out;
}

}  // namespace tltl
