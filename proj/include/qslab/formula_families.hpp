#pragma once

#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "formula.hpp"
#include "prefix.hpp"

namespace qslab {

namespace family_detail {

inline std::string var(std::size_t d) { return "x" + std::to_string(d); }

// ψ̃_p(y) for polarity +, ψ̃_{−p}(y) for polarity −.
inline Formula psi_tilde(const Prefix& p, const std::string& y, bool negative) {
    if (p.empty()) return Formula::atom("U", {y});
    Prefix q = p.tail();
    std::string x = var(p.size());
    std::string edge = negative ? "B" : "R";
    Formula pos = psi_tilde(q, x, false);
    Formula neg = psi_tilde(q, x, true);
    if (p[0] == Quant::Exists) return Formula::exists(x, Formula::conj({Formula::atom(edge, {y, x}), pos, neg}));
    return Formula::forall(x, Formula::disj({Formula::neg_atom(edge, {y, x}), pos, neg}));
}

inline Formula E(const std::string& a, const std::string& b) { return Formula::atom("E", {a, b}); }
inline Formula notE(const std::string& a, const std::string& b) { return Formula::neg_atom("E", {a, b}); }

// ψ'_p(x, y) over ⟨E, r⟩ as the inductive clauses define it.
inline Formula psi_prime(const Prefix& p, const std::string& x, const std::string& y, bool negative) {
    if (p.empty()) return Formula::conj({E(x, y), E(y, x)});
    Prefix q = p.tail();
    std::string z = var(p.size());
    Formula arc = negative ? E(z, y) : E(y, z);
    Formula pos = psi_prime(q, y, z, false);
    Formula neg = psi_prime(q, y, z, true);
    if (p[0] == Quant::Exists) return Formula::exists(z, Formula::conj({arc, Formula::neq(z, x), pos, neg}));
    Formula not_arc = negative ? notE(z, y) : notE(y, z);
    return Formula::forall(z, Formula::disj({not_arc, Formula::eq(z, x), pos, neg}));
}

// The four |p| = 2 sentences, written out as displayed.
inline Formula phi_prime_len2(const Prefix& p) {
    const std::string x1 = "x1", x2 = "x2";
    bool outer_ex = p[0] == Quant::Exists;
    bool inner_ex = p[1] == Quant::Exists;
    Formula red_black = Formula::conj({E(x1, x2), E(x1, x1)});
    Formula blue_black = Formula::conj({E(x2, x1), Formula::neg_atom("E", {x1, x1})});
    Formula a = inner_ex ? Formula::exists(x1, Formula::conj({E(x2, x1), E(x1, x2), E(x1, x1)}))
                         : Formula::forall(x1, Formula::disj({notE(x2, x1), red_black}));
    Formula b = inner_ex ? Formula::exists(x1, Formula::conj({E(x1, x2), E(x2, x1), notE(x1, x1)}))
                         : Formula::forall(x1, Formula::disj({notE(x1, x2), blue_black}));
    if (outer_ex) return Formula::exists(x2, Formula::conj({E(x2, x2), a, b}));
    return Formula::forall(x2, Formula::disj({notE(x2, x2), a, b}));
}

// Replaces E r x by E x x and drops x ≠ r (and x = r) literals.
inline Formula substitute_root(const Formula& f) {
    switch (f.kind()) {
        case FKind::Atom:
        case FKind::NegAtom: {
            std::vector<std::string> t = f.terms();
            for (std::size_t i = 0; i < t.size(); ++i)
                if (t[i] == "r") t[i] = t[1 - i];
            return f.kind() == FKind::Atom ? Formula::atom(f.name(), t) : Formula::neg_atom(f.name(), t);
        }
        default: break;
    }
    std::vector<Formula> parts;
    for (const auto& p : f.parts()) {
        bool root_literal = (p.kind() == FKind::Eq || p.kind() == FKind::Neq) &&
                            (p.terms()[0] == "r" || p.terms()[1] == "r");
        if (root_literal) continue;
        parts.push_back(substitute_root(p));
    }
    switch (f.kind()) {
        case FKind::And: return Formula::conj(parts);
        case FKind::Or: return Formula::disj(parts);
        case FKind::Exists: return Formula::exists(f.name(), parts.at(0));
        case FKind::Forall: return Formula::forall(f.name(), parts.at(0));
        default: return f;
    }
}

// ψ_p(y) on the reduced digraph: `father` is the node y hangs from ("" at the top).
inline Formula psi_tau(const Prefix& p, const std::string& father, const std::string& y, bool negative) {
    if (p.empty()) return E(y, y);
    Prefix q = p.tail();
    std::string z = var(p.size());
    bool ex = p[0] == Quant::Exists;
    Formula arc = negative ? E(z, y) : E(y, z);
    Formula not_arc = negative ? notE(z, y) : notE(y, z);
    std::vector<Formula> guard{arc, Formula::neq(z, y)};
    std::vector<Formula> unguard{not_arc, Formula::eq(z, y)};
    if (!father.empty()) {
        guard.push_back(Formula::neq(z, father));
        unguard.push_back(Formula::eq(z, father));
    }
    if (!q.empty()) {
        // inner nodes below the top never carry a self-loop
        guard.push_back(notE(z, z));
        unguard.push_back(E(z, z));
    }
    Formula pos = psi_tau(q, y, z, false);
    Formula neg = psi_tau(q, y, z, true);
    if (ex) {
        guard.push_back(pos);
        guard.push_back(neg);
        return Formula::exists(z, Formula::conj(guard));
    }
    unguard.push_back(pos);
    unguard.push_back(neg);
    return Formula::forall(z, Formula::disj(unguard));
}

}  // namespace family_detail

inline Formula build_phi_tilde(const Prefix& p) {
    if (p.empty()) throw InvalidArgument("φ̃ is undefined for the empty prefix");
    return family_detail::psi_tilde(p, "r", false);
}

inline Formula build_phi_tilde_neg(const Prefix& p) {
    if (p.empty()) throw InvalidArgument("φ̃ is undefined for the empty prefix");
    return family_detail::psi_tilde(p, "r", true);
}

// φ'_p over ⟨E, r⟩; the |p| = 2 cases are the explicit sentences.
inline Formula build_phi_prime(const Prefix& p) {
    if (p.empty()) throw InvalidArgument("φ' is undefined for the empty prefix");
    if (p.size() == 2) return family_detail::phi_prime_len2(p);
    return family_detail::psi_prime(p, "r", "r", false);
}

// φ'_p with the root substitution applied, kept for comparison with build_phi.
inline Formula build_phi_prime_substituted(const Prefix& p) {
    return family_detail::substitute_root(build_phi_prime(p));
}

// Whether reduce_to_tau marks the children of the root for this prefix.
inline bool tau_root_loops(const Prefix& p) { return p.size() >= 2 && p[0] == Quant::Forall; }

namespace family_detail {

inline Formula adj(const std::string& a, const std::string& b) { return Formula::disj({E(a, b), E(b, a)}); }
inline Formula non_adj(const std::string& a, const std::string& b) { return Formula::conj({notE(a, b), notE(b, a)}); }

// ψ_q(x) directly below the top variable x, with clauses that reject the
// leaves sharing x's loop marking. Leaves of the wrong colour otherwise pass
// the top-level test through their father, which the father guard lets them
// treat as a child.
inline Formula psi_tau_top(const Prefix& p, const Prefix& q, const std::string& x, bool negative) {
    Formula plain = psi_tau(q, "", x, negative);
    if (q.size() < 2) return plain;
    Prefix r = q.tail();
    std::string z = var(q.size()), u = var(r.size());
    Formula child_pos = psi_tau(r, x, z, false);
    Formula child_neg = psi_tau(r, x, z, true);
    Formula arc = negative ? E(z, x) : E(x, z);
    Formula not_arc = negative ? notE(z, x) : notE(x, z);
    Formula rev_arc = negative ? E(x, z) : E(z, x);
    auto requant = [](const Formula& q, Formula body) {
        return q.kind() == FKind::Exists ? Formula::exists(q.name(), body) : Formula::forall(q.name(), body);
    };
    if (p[0] == Quant::Exists && q[0] == Quant::Forall && r[0] == Quant::Exists) {
        // x must have an arc of this colour, which a leaf hanging the other way lacks
        Formula has_arc = negative ? Formula::conj({E(u, x), Formula::neq(u, x)})
                                   : Formula::conj({E(x, u), Formula::neq(u, x)});
        auto widen = [&](const Formula& c) {
            return requant(c, Formula::disj({Formula::conj({Formula::neq(z, x), c.body()}),
                                             Formula::conj({Formula::eq(z, x), has_arc})}));
        };
        Formula skip = Formula::conj({Formula::neq(z, x), Formula::disj({not_arc, E(z, z)})});
        return Formula::forall(z, Formula::disj({skip, widen(child_pos), widen(child_neg)}));
    }
    if (p[0] == Quant::Exists && q[0] == Quant::Forall && r[0] == Quant::Forall) {
        // a plain node z away from x that is two plain steps from x is a dead end
        Formula apart = Formula::conj({Formula::neq(z, x), non_adj(x, z), notE(z, z)});
        Formula not_between = Formula::disj({non_adj(x, u), non_adj(u, z), E(u, u)});
        Formula no_exit = Formula::disj({non_adj(z, u), adj(x, u), Formula::eq(u, x), E(u, u)});
        Formula not_apart = Formula::disj({Formula::eq(z, x), adj(x, z), E(z, z)});
        auto widen = [&](const Formula& c, const Formula& alt) {
            return requant(c, Formula::disj({Formula::conj({apart, alt}), Formula::conj({not_apart, c.body()})}));
        };
        Formula skip = Formula::disj({Formula::eq(z, x), E(z, z), Formula::conj({not_arc, rev_arc})});
        return Formula::forall(z, Formula::disj({skip, widen(child_pos, not_between), widen(child_neg, no_exit)}));
    }
    if (p[0] == Quant::Forall && q[0] == Quant::Exists && r[0] == Quant::Forall) {
        // z = x picks out a leaf: no arc of this colour leaves it
        Formula no_arc = Formula::disj({negative ? notE(u, x) : notE(x, u), Formula::eq(u, x)});
        std::vector<Formula> guard{arc, Formula::neq(z, x), notE(z, z)};
        auto widen = [&](const Formula& c) {
            return requant(c, Formula::disj({Formula::conj({Formula::eq(z, x), no_arc}),
                                             Formula::conj({Formula::neq(z, x), c.body()})}));
        };
        return Formula::exists(z, Formula::conj({Formula::disj({Formula::conj(guard), Formula::eq(z, x)}),
                                                 widen(child_pos), widen(child_neg)}));
    }
    if (p[0] == Quant::Forall && q[0] == Quant::Exists && r[0] == Quant::Exists && !negative) {
        // a marked node two steps away that is not itself a leaf shows x is a leaf
        Formula far = Formula::conj({Formula::neq(z, x), E(z, z), non_adj(x, z)});
        Formula near = Formula::disj({Formula::eq(z, x), notE(z, z), adj(x, z)});
        Formula path = Formula::conj({adj(x, u), adj(u, z), Formula::neq(u, x), Formula::neq(u, z)});
        Formula other = Formula::conj({adj(z, u), non_adj(x, u), Formula::neq(u, x), Formula::neq(u, z)});
        std::vector<Formula> guard{arc, Formula::neq(z, x), notE(z, z)};
        auto widen = [&](const Formula& c, const Formula& alt) {
            return requant(c, Formula::disj({Formula::conj({far, alt}), Formula::conj({near, c.body()})}));
        };
        return Formula::exists(z, Formula::conj({Formula::disj({Formula::conj(guard), far}), widen(child_pos, path),
                                                 widen(child_neg, other)}));
    }
    return plain;
}

}  // namespace family_detail

// τ-sentence separating the reduced digraphs. Arc guards exclude the current
// node and its father; U z becomes the self-loop E z z. Children of the removed
// root are recognised by a self-loop for ∀-led prefixes and by its absence
// otherwise.
inline Formula build_phi(const Prefix& p) {
    using namespace family_detail;
    if (p.empty()) throw InvalidArgument("φ is undefined for the empty prefix");
    std::string x = var(p.size());
    if (p.size() == 1) {
        // every element is a former root child; U x becomes E x x
        if (p[0] == Quant::Exists) return Formula::exists(x, Formula::conj({E(x, x), E(x, x)}));
        return Formula::forall(x, Formula::disj({E(x, x), E(x, x)}));
    }
    Prefix q = p.tail();
    Formula pos = psi_tau_top(p, q, x, false);
    Formula neg = psi_tau_top(p, q, x, true);
    if (p[0] == Quant::Exists) return Formula::exists(x, Formula::conj({notE(x, x), pos, neg}));
    return Formula::forall(x, Formula::disj({notE(x, x), pos, neg}));
}

namespace family_detail {

inline Formula xi_tilde(const LabeledTree& t, int v, const std::string& y, bool negative, const std::string& mark) {
    std::string x = var(static_cast<std::size_t>(t.subtree(v).rank()));
    std::string edge = negative ? "B" : "R";
    bool ex = t.label(v) == Quant::Exists;
    std::vector<Formula> parts;
    parts.push_back(ex ? Formula::atom(edge, {y, x}) : Formula::neg_atom(edge, {y, x}));
    // the second of two siblings is marked by an edge from the root
    int p = t.parent(v);
    if (p >= 0 && t.children(p).size() == 2) {
        bool second = t.children(p)[1] == v;
        Formula marked = second ? Formula::atom(mark, {"r", x}) : Formula::neg_atom(mark, {"r", x});
        parts.push_back(ex ? marked : marked.negated_literal());
    }
    const auto& ch = t.children(v);
    if (ch.empty()) {
        // a leaf has one empty child, which shares the label
        parts.push_back(Formula::atom("U", {x}));
        parts.push_back(Formula::atom("U", {x}));
    } else {
        for (int c : ch) parts.push_back(xi_tilde(t, c, x, negative, mark));
        for (int c : ch)
            if (t.label(c) == t.label(v)) parts.push_back(xi_tilde(t, c, x, !negative, mark));
    }
    return ex ? Formula::exists(x, Formula::conj(parts)) : Formula::forall(x, Formula::disj(parts));
}

}  // namespace family_detail

inline Formula build_phi_tree(const LabeledTree& t, bool negative = false) {
    if (t.roots().size() != 1) throw InvalidArgument("build_phi_tree needs a single tree");
    if (!is_irreducible(t)) throw InvalidArgument("build_phi_tree needs an irreducible tree");
    return family_detail::xi_tilde(t, t.roots()[0], "r", negative, negative ? "R" : "B");
}

// Relativises quantifiers away from r and replaces E by its τ⁺ definition,
// matching reduce_to_tau with the same root_loops setting.
inline Formula translate_to_tauplus(const Formula& z, bool root_loops = false) {
    std::function<Formula(const Formula&)> go = [&](const Formula& f) -> Formula {
        switch (f.kind()) {
            case FKind::Atom:
            case FKind::NegAtom: {
                if (f.name() != "E") {
                    if (f.name() == "<=") return f;
                    throw InvalidArgument("translate_to_tauplus expects a τ-formula, found '" + f.name() + "'");
                }
                const std::string& s = f.terms()[0];
                const std::string& t = f.terms()[1];
                std::vector<Formula> loop_marks{Formula::atom("U", {s})};
                if (root_loops) {
                    loop_marks.push_back(Formula::atom("R", {"r", s}));
                    loop_marks.push_back(Formula::atom("B", {"r", s}));
                }
                if (f.kind() == FKind::Atom) {
                    std::vector<Formula> d{Formula::atom("R", {s, t}), Formula::atom("B", {t, s})};
                    for (const auto& mk : loop_marks) d.push_back(Formula::conj({Formula::eq(s, t), mk}));
                    return Formula::disj(d);
                }
                std::vector<Formula> c{Formula::neg_atom("R", {s, t}), Formula::neg_atom("B", {t, s})};
                for (const auto& mk : loop_marks) c.push_back(Formula::disj({Formula::neq(s, t), mk.negated_literal()}));
                return Formula::conj(c);
            }
            case FKind::Eq:
            case FKind::Neq: return f;
            case FKind::And:
            case FKind::Or: {
                std::vector<Formula> parts;
                for (const auto& p : f.parts()) parts.push_back(go(p));
                return f.kind() == FKind::And ? Formula::conj(parts) : Formula::disj(parts);
            }
            case FKind::Exists:
                return Formula::exists(f.name(), Formula::conj({Formula::neq(f.name(), "r"), go(f.body())}));
            case FKind::Forall:
                return Formula::forall(f.name(), Formula::disj({Formula::eq(f.name(), "r"), go(f.body())}));
        }
        return f;
    };
    return go(z);
}

}  // namespace qslab
