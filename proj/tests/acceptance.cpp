// Acceptance run: one PASS/FAIL line per criterion, built from the shipped
// suite defaults plus checks against oracles local to this file.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qslab/constructions.hpp"
#include "qslab/formula_families.hpp"
#include "qslab/suites.hpp"

using namespace qslab;

namespace {

struct Check {
    std::string what;
    bool pass;
    std::string detail;
};

// Direct recursive evaluation with an explicit assignment map.
bool naive_eval(const Structure& s, const Formula& f, std::map<std::string, int>& env) {
    auto val = [&](const std::string& t) {
        auto it = env.find(t);
        return it != env.end() ? it->second : s.constant(t);
    };
    switch (f.kind()) {
        case FKind::Atom:
        case FKind::NegAtom: {
            Tuple t;
            for (const auto& x : f.terms()) t.push_back(val(x));
            return s.holds(f.name(), t) == (f.kind() == FKind::Atom);
        }
        case FKind::Eq: return val(f.terms()[0]) == val(f.terms()[1]);
        case FKind::Neq: return val(f.terms()[0]) != val(f.terms()[1]);
        case FKind::And:
            for (const auto& p : f.parts())
                if (!naive_eval(s, p, env)) return false;
            return true;
        case FKind::Or:
            for (const auto& p : f.parts())
                if (naive_eval(s, p, env)) return true;
            return false;
        case FKind::Exists:
        case FKind::Forall: {
            const bool ex = f.kind() == FKind::Exists;
            auto saved = env.find(f.name()) != env.end() ? std::optional<int>(env[f.name()]) : std::nullopt;
            bool result = !ex;
            for (int x = 0; x < s.size() && result != ex; ++x) {
                env[f.name()] = x;
                result = naive_eval(s, f.body(), env);
            }
            if (saved) env[f.name()] = *saved;
            else env.erase(f.name());
            return result;
        }
    }
    return false;
}

bool naive_eval(const Structure& s, const Formula& f) {
    std::map<std::string, int> env;
    return naive_eval(s, f, env);
}

// Partial isomorphism checked literally over all index pairs and tuples.
bool local_piso(const Structure& a, Tuple abar, const Structure& b, Tuple bbar) {
    for (const auto& c : a.signature().constants) {
        abar.push_back(a.constant(c));
        bbar.push_back(b.constant(c));
    }
    const int n = static_cast<int>(abar.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if ((abar[i] == abar[j]) != (bbar[i] == bbar[j])) return false;
            for (const auto& r : a.signature().relations) {
                if (r.arity == 1 && a.holds(r.name, {abar[i]}) != b.holds(r.name, {bbar[i]})) return false;
                if (r.arity == 2 && a.holds(r.name, {abar[i], abar[j]}) != b.holds(r.name, {bbar[i], bbar[j]}))
                    return false;
            }
        }
    return true;
}

// Memo-free minimax over the forest game rules.
bool local_duplicator_wins(const LabeledForest& s, const std::vector<int>& options, const Structure& a,
                           const Structure& b, Tuple& abar, Tuple& bbar) {
    if (!local_piso(a, abar, b, bbar)) return false;
    for (int v : options) {
        const bool ex = s.label(v) == Quant::Exists;
        for (int x = 0; x < (ex ? a : b).size(); ++x) {
            bool answered = false;
            for (int y = 0; y < (ex ? b : a).size() && !answered; ++y) {
                abar.push_back(ex ? x : y);
                bbar.push_back(ex ? y : x);
                answered = local_duplicator_wins(s, s.children(v), a, b, abar, bbar);
                abar.pop_back();
                bbar.pop_back();
            }
            if (!answered) return false;
        }
    }
    return true;
}

Player local_winner(const LabeledForest& s, const Structure& a, const Structure& b) {
    Tuple abar, bbar;
    return local_duplicator_wins(s, s.roots(), a, b, abar, bbar) ? Player::Duplicator : Player::Spoiler;
}

// Linear-order EF game decided by brute force over both structures.
bool local_ef_orders(int k, int m, int n, std::vector<int>& xs, std::vector<int>& ys) {
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j)
            if ((xs[i] < xs[j]) != (ys[i] < ys[j]) || (xs[i] == xs[j]) != (ys[i] == ys[j])) return false;
    if (k == 0) return true;
    for (int side = 0; side < 2; ++side)
        for (int x = 0; x < (side ? n : m); ++x) {
            bool answered = false;
            for (int y = 0; y < (side ? m : n) && !answered; ++y) {
                xs.push_back(side ? y : x);
                ys.push_back(side ? x : y);
                answered = local_ef_orders(k - 1, m, n, xs, ys);
                xs.pop_back();
                ys.pop_back();
            }
            if (!answered) return false;
        }
    return true;
}

std::set<std::string> path_words(const LabeledForest& s) {
    std::set<std::string> paths, out;
    std::function<void(int, std::string)> go = [&](int v, std::string w) {
        w += to_char(s.label(v));
        if (s.is_leaf(v)) paths.insert(w);
        for (int c : s.children(v)) go(c, w);
    };
    for (int r : s.roots()) go(r, "");
    for (const auto& p : paths)
        for (std::uint32_t mask = 0; mask < (1u << p.size()); ++mask) {
            std::string w;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (mask & (1u << i)) w += p[i];
            out.insert(w);
        }
    return out;
}

std::vector<Check> local_checks(int criterion) {
    std::vector<Check> out;
    switch (criterion) {
        case 1:
            for (const auto& p : all_prefixes_upto(2)) {
                if (p.empty()) continue;
                for (int m : {1, 2}) {
                    Structure a = build_prefix_family(Family::TauPlus, p, m, Side::A);
                    Structure b = build_prefix_family(Family::TauPlus, p, m, Side::B);
                    Formula f = build_phi_tilde(p);
                    bool ok = naive_eval(a, f) && !naive_eval(b, f);
                    out.push_back({"naive evaluation p=" + p.str() + " m=" + std::to_string(m), ok, ""});
                }
            }
            break;
        case 2:
            for (const auto& p : all_prefixes_upto(2)) {
                if (p.empty()) continue;
                Structure a = build_prefix_family(Family::Tau, p, 1, Side::A);
                Structure b = build_prefix_family(Family::Tau, p, 1, Side::B);
                Formula f = build_phi(p);
                out.push_back({"naive evaluation p=" + p.str() + " m=1", naive_eval(a, f) && !naive_eval(b, f), ""});
            }
            break;
        case 3:
            for (const char* w : {"E", "A"}) {
                Prefix p = Prefix::parse(w);
                Structure a = build_prefix_family(Family::TauPlus, p, 1, Side::A);
                Structure b = build_prefix_family(Family::TauPlus, p, 1, Side::B);
                bool dup = local_winner(forest_of(f_p_m(p, 1)), a, b) == Player::Duplicator;
                bool sp = local_winner(qs(build_phi_tilde(p)), a, b) == Player::Spoiler;
                out.push_back({std::string("memo-free minimax p=") + w + " m=1", dup && sp, ""});
            }
            break;
        case 5: {
            // forest2word: read-off of F(P) against subsequences of P itself
            std::mt19937 rng(99);
            auto words = all_prefixes_upto(3);
            bool ok = true;
            for (int i = 0; i < 300 && ok; ++i) {
                PrefixSet P;
                std::set<std::string> closure;
                for (const Prefix& w : words)
                    if (rng() % 3 == 0 && !w.empty()) P.insert(w);
                for (const Prefix& w : P) {
                    std::string ws = w.str();
                    for (std::uint32_t mask = 0; mask < (1u << ws.size()); ++mask) {
                        std::string sub;
                        for (std::size_t k = 0; k < ws.size(); ++k)
                            if (mask & (1u << k)) sub += ws[k];
                        closure.insert(sub);
                    }
                }
                ok = path_words(forest_of(P)) == closure;
            }
            out.push_back({"read-off of F(P) on 300 random sets", ok, ""});
            break;
        }
        case 6: {
            bool ok = true;
            std::string bad;
            for (int k = 1; k <= 3; ++k)
                for (int m = 1; m <= 6; ++m)
                    for (int n = 1; n <= 6; ++n) {
                        std::vector<int> xs, ys;
                        bool dup = local_ef_orders(k, m, n, xs, ys);
                        Player lib = classic_ef(k, linear_order(m), linear_order(n), {10'000'000, false}).winner;
                        if (dup != (lib == Player::Duplicator)) {
                            ok = false;
                            bad = "k=" + std::to_string(k) + " L" + std::to_string(m) + " L" + std::to_string(n);
                        }
                    }
            out.push_back({"brute-force order game, k<=3, sizes 1..6", ok, bad});
            break;
        }
        case 8: {
            LabeledTree t = LabeledTree::parse("(E (A) (E))");
            Structure a = build_refined(t, 1, Side::A), b = build_refined(t, 1, Side::B);
            Formula f = build_phi_tree(t);
            out.push_back({"naive evaluation of the tree sentence at m=1", naive_eval(a, f) && !naive_eval(b, f), ""});
            LabeledForest s1 = LabeledForest::parse("(E (A) (E))"), s2 = LabeledForest::parse("(E (E)) (E (A))");
            out.push_back({"path-word enumeration of the pair", path_words(s1) == path_words(s2), ""});
            break;
        }
        default: break;
    }
    return out;
}

const std::map<int, std::string>& titles() {
    static const std::map<int, std::string> t{
        {1, "separating sentences on the tau+ structures"},
        {2, "separating sentences on the reduced digraphs"},
        {3, "duplicator on F(f^p_m), spoiler on qs(phi~_p)"},
        {4, "digraph desk instance and translation"},
        {5, "forest algebra laws"},
        {6, "linear orders and the minimax oracle"},
        {7, "ordered builds with the scripted duplicator"},
        {8, "refined hierarchy desk instance"},
        {9, "distinguisher synthesis soundness"}};
    return t;
}

// The only failure this build expects: at m = 1 the repaired refined
// structures admit a counting win for S2 (see README).
bool documented_failure(const SuiteRow& r) {
    return r.criterion == 8 && r.claim == "EF-Game-refined" && r.params.value("m", 0) == 1 &&
           r.verdict == "spoiler";
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    std::map<int, std::vector<SuiteRow>> by_criterion;
    std::vector<SuiteRow> supplementary;
    for (const std::string& name : suite_names()) {
        auto t0 = clock::now();
        SuiteReport rep = run_suite(name, {});
        double secs = std::chrono::duration<double>(clock::now() - t0).count();
        std::cout << "suite " << name << ": " << rep.rows.size() << " rows, " << std::fixed << std::setprecision(1)
                  << secs << " s" << std::endl;
        for (const SuiteRow& r : rep.rows) {
            if (r.criterion >= 1 && r.criterion <= 9) by_criterion[r.criterion].push_back(r);
            else supplementary.push_back(r);
        }
    }

    bool unexpected = false;
    for (int c = 1; c <= 9; ++c) {
        const auto& rows = by_criterion[c];
        std::vector<Check> checks = local_checks(c);
        std::vector<std::string> failures;
        bool only_documented = true;
        for (const SuiteRow& r : rows)
            if (!r.pass) {
                failures.push_back(r.claim + " " + r.params.dump() + " -> " + r.verdict +
                                   (r.detail.empty() ? "" : " (" + r.detail + ")"));
                only_documented = only_documented && documented_failure(r);
            }
        for (const Check& k : checks)
            if (!k.pass) {
                failures.push_back("oracle check: " + k.what + (k.detail.empty() ? "" : " (" + k.detail + ")"));
                only_documented = false;
            }
        const bool pass = !rows.empty() && failures.empty();
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c << ": " << titles().at(c) << " [" << rows.size()
                  << " suite rows, " << checks.size() << " oracle checks]" << std::endl;
        for (const std::string& f : failures) std::cout << "    failed: " << f << std::endl;
        if (!pass && only_documented && !rows.empty())
            std::cout << "    documented: at m = 1 the refined pair is separated by a two-round counting sentence "
                         "of FO{S2}; every part of the criterion holds at m = 2 (rows below)"
                      << std::endl;
        if (!pass && !(only_documented && !rows.empty())) unexpected = true;
    }
    for (const SuiteRow& r : supplementary)
        std::cout << "info " << (r.pass ? "ok  " : "FAIL") << " " << r.claim << " " << r.params.dump() << " -> "
                  << r.verdict << std::endl;
    for (const SuiteRow& r : supplementary) unexpected = unexpected || !r.pass;
    return unexpected ? 1 : 0;
}
