#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "structure.hpp"

namespace qslab {

enum class FKind { Atom, NegAtom, Eq, Neq, And, Or, Exists, Forall };

// Immutable first-order formula in negation normal form. Terms are names:
// a bound variable shadows a constant of the same name.
class Formula {
public:
    struct Node {
        FKind kind;
        std::string name;                // relation for atoms, variable for quantifiers
        std::vector<std::string> terms;  // atom arguments or the two sides of =
        std::vector<Formula> parts;      // conjuncts, disjuncts, or the single body
    };

    static Formula atom(std::string rel, std::vector<std::string> args) {
        return make({FKind::Atom, std::move(rel), std::move(args), {}});
    }
    static Formula neg_atom(std::string rel, std::vector<std::string> args) {
        return make({FKind::NegAtom, std::move(rel), std::move(args), {}});
    }
    static Formula eq(std::string a, std::string b) { return make({FKind::Eq, "", {std::move(a), std::move(b)}, {}}); }
    static Formula neq(std::string a, std::string b) { return make({FKind::Neq, "", {std::move(a), std::move(b)}, {}}); }
    static Formula conj(std::vector<Formula> parts) { return make({FKind::And, "", {}, std::move(parts)}); }
    static Formula disj(std::vector<Formula> parts) { return make({FKind::Or, "", {}, std::move(parts)}); }
    static Formula exists(std::string v, Formula body) { return make({FKind::Exists, std::move(v), {}, {std::move(body)}}); }
    static Formula forall(std::string v, Formula body) { return make({FKind::Forall, std::move(v), {}, {std::move(body)}}); }

    FKind kind() const { return n_->kind; }
    const std::string& name() const { return n_->name; }
    const std::vector<std::string>& terms() const { return n_->terms; }
    const std::vector<Formula>& parts() const { return n_->parts; }
    const Formula& body() const { return n_->parts.at(0); }
    bool is_literal() const { return n_->kind <= FKind::Neq; }
    bool is_quantifier() const { return n_->kind == FKind::Exists || n_->kind == FKind::Forall; }

    // Negation of a literal.
    Formula negated_literal() const {
        switch (kind()) {
            case FKind::Atom: return neg_atom(name(), terms());
            case FKind::NegAtom: return atom(name(), terms());
            case FKind::Eq: return neq(terms()[0], terms()[1]);
            case FKind::Neq: return eq(terms()[0], terms()[1]);
            default: throw InvalidArgument("negated_literal on a non-literal");
        }
    }

    std::string str() const {
        std::string s;
        write(s);
        return s;
    }

    friend bool operator==(const Formula& a, const Formula& b) { return a.str() == b.str(); }

private:
    explicit Formula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
    static Formula make(Node n) { return Formula(std::make_shared<const Node>(std::move(n))); }

    void write_atom(std::string& s) const {
        s += '(';
        s += kind() == FKind::Eq || kind() == FKind::Neq ? "=" : name();
        for (const auto& t : terms()) {
            s += ' ';
            s += t;
        }
        s += ')';
    }

    void write(std::string& s) const {
        switch (kind()) {
            case FKind::Atom:
            case FKind::Eq: write_atom(s); break;
            case FKind::NegAtom:
            case FKind::Neq:
                s += "(not ";
                write_atom(s);
                s += ')';
                break;
            case FKind::And:
            case FKind::Or:
                s += kind() == FKind::And ? "(and" : "(or";
                for (const auto& p : parts()) {
                    s += ' ';
                    p.write(s);
                }
                s += ')';
                break;
            case FKind::Exists:
            case FKind::Forall:
                s += kind() == FKind::Exists ? "(exists " : "(forall ";
                s += name();
                s += ' ';
                body().write(s);
                s += ')';
                break;
        }
    }

    std::shared_ptr<const Node> n_;
};

// General syntax accepted by the parser before normalisation.
struct Expr {
    enum class Op { Atom, Eq, Not, And, Or, Implies, Exists, Forall };
    Op op;
    std::string name;
    std::vector<std::string> terms;
    std::vector<Expr> args;
};

inline Formula to_nnf(const Expr& e, bool negate = false) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::Atom: return negate ? Formula::neg_atom(e.name, e.terms) : Formula::atom(e.name, e.terms);
        case Op::Eq: return negate ? Formula::neq(e.terms[0], e.terms[1]) : Formula::eq(e.terms[0], e.terms[1]);
        case Op::Not: return to_nnf(e.args.at(0), !negate);
        case Op::And:
        case Op::Or: {
            std::vector<Formula> parts;
            for (const auto& a : e.args) parts.push_back(to_nnf(a, negate));
            bool conj = (e.op == Op::And) != negate;
            return conj ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
        }
        case Op::Implies: {
            // a -> b is (not a) or b
            std::vector<Formula> parts{to_nnf(e.args.at(0), !negate), to_nnf(e.args.at(1), negate)};
            return negate ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
        }
        case Op::Exists:
        case Op::Forall: {
            bool ex = (e.op == Op::Exists) != negate;
            Formula body = to_nnf(e.args.at(0), negate);
            return ex ? Formula::exists(e.name, body) : Formula::forall(e.name, body);
        }
    }
    throw InvalidArgument("bad expression");
}

inline Expr parse_expr(std::string_view text) {
    std::size_t pos = 0;
    auto skip = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    auto symbol = [&]() -> std::string {
        skip();
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '(' &&
               text[pos] != ')')
            ++pos;
        if (start == pos) throw ParseError("expected a symbol", pos);
        return std::string(text.substr(start, pos - start));
    };
    auto expect = [&](char c) {
        skip();
        if (pos >= text.size() || text[pos] != c) throw ParseError(std::string("expected '") + c + "'", pos);
        ++pos;
    };
    auto peek_close = [&] {
        skip();
        return pos < text.size() && text[pos] == ')';
    };
    std::function<Expr()> expr = [&]() -> Expr {
        skip();
        if (pos < text.size() && text[pos] != '(') {
            std::size_t at = pos;
            std::string s = symbol();
            if (s == "true") return {Expr::Op::And, "", {}, {}};
            if (s == "false") return {Expr::Op::Or, "", {}, {}};
            throw ParseError("unexpected symbol '" + s + "'", at);
        }
        expect('(');
        std::size_t at = pos;
        std::string head = symbol();
        Expr e;
        if (head == "and" || head == "or") {
            e.op = head == "and" ? Expr::Op::And : Expr::Op::Or;
            while (!peek_close()) e.args.push_back(expr());
        } else if (head == "not") {
            e.op = Expr::Op::Not;
            e.args.push_back(expr());
        } else if (head == "implies") {
            e.op = Expr::Op::Implies;
            e.args.push_back(expr());
            e.args.push_back(expr());
        } else if (head == "exists" || head == "forall") {
            e.op = head == "exists" ? Expr::Op::Exists : Expr::Op::Forall;
            e.name = symbol();
            e.args.push_back(expr());
        } else if (head == "=") {
            e.op = Expr::Op::Eq;
            e.terms.push_back(symbol());
            e.terms.push_back(symbol());
        } else {
            e.op = Expr::Op::Atom;
            e.name = head;
            while (!peek_close()) e.terms.push_back(symbol());
            if (e.terms.empty()) throw ParseError("atom without arguments", at);
        }
        expect(')');
        return e;
    };
    Expr e = expr();
    skip();
    if (pos != text.size()) throw ParseError("trailing input", pos);
    return e;
}

inline Formula parse_formula(std::string_view text) { return to_nnf(parse_expr(text)); }

// Names occurring free (variables or constants).
inline std::set<std::string> free_symbols(const Formula& f) {
    std::set<std::string> out;
    std::vector<std::string> bound;
    std::function<void(const Formula&)> go = [&](const Formula& g) {
        if (g.is_literal()) {
            for (const auto& t : g.terms())
                if (std::find(bound.begin(), bound.end(), t) == bound.end()) out.insert(t);
            return;
        }
        if (g.is_quantifier()) bound.push_back(g.name());
        for (const auto& p : g.parts()) go(p);
        if (g.is_quantifier()) bound.pop_back();
    };
    go(f);
    return out;
}

inline std::set<std::string> relation_names(const Formula& f) {
    std::set<std::string> out;
    std::function<void(const Formula&)> go = [&](const Formula& g) {
        if (g.kind() == FKind::Atom || g.kind() == FKind::NegAtom) out.insert(g.name());
        for (const auto& p : g.parts()) go(p);
    };
    go(f);
    return out;
}

using Env = std::map<std::string, int>;

namespace detail {

class Evaluator {
public:
    Evaluator(const Structure& m, const Env& env) : m_(m) {
        for (const auto& [k, v] : env) {
            if (v < 0 || v >= m.size()) throw InvalidArgument("environment value out of range for '" + k + "'");
            stack_.emplace_back(k, v);
        }
    }

    bool eval(const Formula& f) {
        switch (f.kind()) {
            case FKind::Atom:
            case FKind::NegAtom: {
                const Relation& r = m_.relation(f.name());
                if (static_cast<int>(f.terms().size()) != r.arity())
                    throw InvalidArgument("arity mismatch for '" + f.name() + "'");
                buf_.resize(f.terms().size());
                for (std::size_t i = 0; i < f.terms().size(); ++i) buf_[i] = lookup(f.terms()[i]);
                return r.contains(buf_) == (f.kind() == FKind::Atom);
            }
            case FKind::Eq: return lookup(f.terms()[0]) == lookup(f.terms()[1]);
            case FKind::Neq: return lookup(f.terms()[0]) != lookup(f.terms()[1]);
            case FKind::And:
                for (const auto& p : f.parts())
                    if (!eval(p)) return false;
                return true;
            case FKind::Or:
                for (const auto& p : f.parts())
                    if (eval(p)) return true;
                return false;
            case FKind::Exists:
            case FKind::Forall: {
                bool want = f.kind() == FKind::Exists;
                stack_.emplace_back(f.name(), 0);
                bool result = !want;
                for (int e = 0; e < m_.size(); ++e) {
                    stack_.back().second = e;
                    if (eval(f.body()) == want) {
                        result = want;
                        break;
                    }
                }
                stack_.pop_back();
                return result;
            }
        }
        return false;
    }

private:
    int lookup(const std::string& t) const {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
            if (it->first == t) return it->second;
        int c = m_.signature().constant_index(t);
        if (c < 0) throw InvalidArgument("unbound variable '" + t + "'");
        return m_.constant(static_cast<std::size_t>(c));
    }

    const Structure& m_;
    std::vector<std::pair<std::string, int>> stack_;
    Tuple buf_;
};

}  // namespace detail

inline bool eval(const Structure& m, const Formula& f, const Env& env = {}) {
    detail::Evaluator ev(m, env);
    return ev.eval(f);
}

inline LabeledForest qs(const Formula& f) {
    LabeledForest out;
    std::function<void(const Formula&, int)> go = [&](const Formula& g, int parent) {
        if (g.is_literal()) return;
        if (g.is_quantifier()) {
            int id = out.add_node(g.kind() == FKind::Exists ? Quant::Exists : Quant::Forall, parent);
            go(g.body(), id);
            return;
        }
        for (const auto& p : g.parts()) go(p, parent);
    };
    go(f, -1);
    return out;
}

inline int qrank(const Formula& f) { return qs(f).rank(); }

inline bool in_class(const Formula& f, const LabeledForest& s) { return embeds(qs(f), s).has_value(); }

}  // namespace qslab
