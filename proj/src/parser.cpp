#include "tltl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace tltl {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

enum class Tok {
    End, True, Not, And, Or, Implies,
    Eventually, Always, Next, Until, Then,
    LParen, RParen, Lt, Le, Gt, Ge,
    Ident, Number,
};

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;   // ident spelling
    double value = 0.0; // number value
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::End: return "end of input";
        case Tok::True: return "'true'";
        case Tok::Not: return "'!'";
        case Tok::And: return "'&'";
        case Tok::Or: return "'|'";
        case Tok::Implies: return "'->'";
        case Tok::Eventually: return "'F'";
        case Tok::Always: return "'G'";
        case Tok::Next: return "'X'";
        case Tok::Until: return "'U'";
        case Tok::Then: return "'T'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Gt: return "'>'";
        case Tok::Ge: return "'>='";
        case Tok::Ident: return "identifier";
        case Tok::Number: return "number";
    }
    return "?";
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> toks;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        std::size_t start = i;
        switch (c) {
            case '!': toks.push_back({Tok::Not, start, {}}); ++i; continue;
            case '&': toks.push_back({Tok::And, start, {}}); ++i; continue;
            case '|': toks.push_back({Tok::Or, start, {}}); ++i; continue;
            case '(': toks.push_back({Tok::LParen, start, {}}); ++i; continue;
            case ')': toks.push_back({Tok::RParen, start, {}}); ++i; continue;
            case '<':
                if (i + 1 < n && text[i + 1] == '=') { toks.push_back({Tok::Le, start, {}}); i += 2; }
                else { toks.push_back({Tok::Lt, start, {}}); ++i; }
                continue;
            case '>':
                if (i + 1 < n && text[i + 1] == '=') { toks.push_back({Tok::Ge, start, {}}); i += 2; }
                else { toks.push_back({Tok::Gt, start, {}}); ++i; }
                continue;
            case '-':
                if (i + 1 < n && text[i + 1] == '>') { toks.push_back({Tok::Implies, start, {}}); i += 2; continue; }
                break;  // fall through to number
            default: break;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            std::string word = text.substr(i, j - i);
            i = j;
            if (word == "true") toks.push_back({Tok::True, start, {}});
            else if (word == "F") toks.push_back({Tok::Eventually, start, {}});
            else if (word == "G") toks.push_back({Tok::Always, start, {}});
            else if (word == "X") toks.push_back({Tok::Next, start, {}});
            else if (word == "U") toks.push_back({Tok::Until, start, {}});
            else if (word == "T") toks.push_back({Tok::Then, start, {}});
            else toks.push_back({Tok::Ident, start, word});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') {
            const char* begin = text.c_str() + i;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin)
                throw SyntaxError(start, "a token", std::string("'") + c + "'");
            i += static_cast<std::size_t>(end - begin);
            toks.push_back({Tok::Number, start, {}, v});
            continue;
        }
        throw SyntaxError(start, "a token", std::string("'") + c + "'");
    }
    toks.push_back({Tok::End, n, {}});
    return toks;
}

class Parser {
  public:
    Parser(std::vector<Token> toks, const FeatureSchema& schema)
        : toks_(std::move(toks)), schema_(schema) {}

    FormulaPtr run() {
        FormulaPtr f = implies();
        expect(Tok::End);
        return f;
    }

  private:
    const Token& peek() const { return toks_[idx_]; }
    Token take() { return toks_[idx_++]; }

    void expect(Tok kind) {
        if (peek().kind != kind)
            throw SyntaxError(peek().pos, tok_name(kind), tok_name(peek().kind));
        ++idx_;
    }

    FormulaPtr implies() {
        FormulaPtr lhs = untilthen();
        if (peek().kind == Tok::Implies) {
            take();
            return Formula::make_implies(std::move(lhs), implies());
        }
        return lhs;
    }

    FormulaPtr untilthen() {
        FormulaPtr lhs = or_expr();
        if (peek().kind == Tok::Until) {
            take();
            return Formula::make_until(std::move(lhs), untilthen());
        }
        if (peek().kind == Tok::Then) {
            take();
            return Formula::make_then(std::move(lhs), untilthen());
        }
        return lhs;
    }

    FormulaPtr or_expr() {
        FormulaPtr f = and_expr();
        while (peek().kind == Tok::Or) {
            take();
            f = Formula::make_or(std::move(f), and_expr());
        }
        return f;
    }

    FormulaPtr and_expr() {
        FormulaPtr f = unary();
        while (peek().kind == Tok::And) {
            take();
            f = Formula::make_and(std::move(f), unary());
        }
        return f;
    }

    FormulaPtr unary() {
        switch (peek().kind) {
            case Tok::Not: take(); return Formula::make_not(unary());
            case Tok::Eventually: take(); return Formula::make_eventually(unary());
            case Tok::Always: take(); return Formula::make_always(unary());
            case Tok::Next: take(); return Formula::make_next(unary());
            default: return atom();
        }
    }

    FormulaPtr atom() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::True:
                take();
                return Formula::make_true();
            case Tok::LParen: {
                take();
                FormulaPtr f = implies();
                expect(Tok::RParen);
                return f;
            }
            case Tok::Ident: {
                Token ident = take();
                if (!schema_.contains(ident.text))
                    throw UnknownFeature(ident.pos, ident.text);
                Cmp cmp;
                switch (peek().kind) {
                    case Tok::Lt: case Tok::Le: cmp = Cmp::Lt; break;
                    case Tok::Gt: case Tok::Ge: cmp = Cmp::Gt; break;
                    default:
                        throw SyntaxError(peek().pos, "comparator", tok_name(peek().kind));
                }
                take();
                if (peek().kind != Tok::Number)
                    throw SyntaxError(peek().pos, tok_name(Tok::Number), tok_name(peek().kind));
                Token num = take();
                return Formula::make_pred(Predicate(ident.text, cmp, num.value));
            }
            default:
                throw SyntaxError(t.pos, "'true', '(' or identifier", tok_name(t.kind));
        }
    }

    std::vector<Token> toks_;
    const FeatureSchema& schema_;
    std::size_t idx_ = 0;
};

// Binding levels for unparse: a child is parenthesized when its own level
// is below what its context requires.
//   0 implies, 1 until/then, 2 or, 3 and, 4 unary, 5 atom
int level_of(const Formula& f) {
    switch (f.op) {
        case Op::Implies: return 0;
        case Op::Until: case Op::Then: return 1;
        case Op::Or: return 2;
        case Op::And: return 3;
        case Op::Not: case Op::Eventually: case Op::Always: case Op::Next: return 4;
        default: return 5;
    }
}

void render(const Formula& f, int required, std::string& out) {
    const int lvl = level_of(f);
    const bool parens = lvl < required;
    if (parens) out += '(';
    switch (f.op) {
        case Op::True:
            out += "true";
            break;
        case Op::Pred:
            out += f.pred.feature;
            out += (f.pred.cmp == Cmp::Lt) ? " < " : " > ";
            out += format_double(f.pred.threshold);
            break;
        case Op::Not: case Op::Eventually: case Op::Always: case Op::Next: {
            out += (f.op == Op::Not) ? "!" : (f.op == Op::Eventually) ? "F"
                   : (f.op == Op::Always) ? "G" : "X";
            out += ' ';
            // parenthesize predicate operands of unary operators: "F (s < 10)"
            render(*f.lhs, f.lhs->op == Op::Pred ? 6 : 4, out);
            break;
        }
        case Op::And:
            render(*f.lhs, 3, out); out += " & "; render(*f.rhs, 4, out);
            break;
        case Op::Or:
            render(*f.lhs, 2, out); out += " | "; render(*f.rhs, 3, out);
            break;
        case Op::Until:
            render(*f.lhs, 2, out); out += " U "; render(*f.rhs, 1, out);
            break;
        case Op::Then:
            render(*f.lhs, 2, out); out += " T "; render(*f.rhs, 1, out);
            break;
        case Op::Implies:
            render(*f.lhs, 1, out); out += " -> "; render(*f.rhs, 0, out);
            break;
    }
    if (parens) out += ')';
}

}  // namespace

FormulaPtr parse(const std::string& text, const FeatureSchema& schema) {
    return Parser(lex(text), schema).run();
}

std::string unparse(const FormulaPtr& f) {
    std::string out;
    render(*f, 0, out);
    return out;
}

}  // namespace tltl
