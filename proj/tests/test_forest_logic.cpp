#include <functional>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "qslab/constructions.hpp"
#include "qslab/forest.hpp"
#include "qslab/formula.hpp"
#include "qslab/formula_families.hpp"
#include "qslab/prefix.hpp"
#include "qslab/structure.hpp"

using namespace qslab;

namespace {

// Oracles below are deliberately naive: enumeration over deletion masks,
// node maps and paths, independent of the library's algorithms.

bool subsequence_by_masks(const std::string& p, const std::string& q) {
    if (p.size() > q.size()) return false;
    for (std::uint32_t mask = 0; mask < (1u << q.size()); ++mask) {
        std::string kept;
        for (std::size_t i = 0; i < q.size(); ++i)
            if (mask & (1u << i)) kept += q[i];
        if (kept == p) return true;
    }
    return false;
}

std::vector<std::string> words_upto_len(std::size_t n) {
    std::vector<std::string> out{""};
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i].size() < n) {
            out.push_back(out[i] + "E");
            out.push_back(out[i] + "A");
        }
    return out;
}

// Words of the language of v with every star unrolled at most `cap` times.
std::set<std::string> language_upto(const RegexWord& v, std::size_t cap) {
    std::set<std::string> cur{""};
    for (const RegexAtom& a : v) {
        std::set<std::string> next;
        for (const std::string& w : cur) {
            if (a.star)
                for (std::size_t k = 0; k <= cap; ++k) next.insert(w + std::string(k, to_char(a.letter)));
            else
                next.insert(w + to_char(a.letter));
        }
        cur = std::move(next);
    }
    return cur;
}

bool strict_descendant(const LabeledForest& s, int anc, int v) {
    for (int p = s.parent(v); p >= 0; p = s.parent(p))
        if (p == anc) return true;
    return false;
}

// Every map from s1's nodes to s2's nodes, checked against the definition.
bool embeds_by_maps(const LabeledForest& s1, const LabeledForest& s2) {
    const int n1 = static_cast<int>(s1.size()), n2 = static_cast<int>(s2.size());
    if (n1 == 0) return true;
    if (n2 == 0) return false;
    std::vector<int> f(n1, 0);
    while (true) {
        bool ok = true;
        for (int x = 0; x < n1 && ok; ++x) {
            if (s1.label(x) != s2.label(f[x])) ok = false;
            int p = s1.parent(x);
            if (ok && p >= 0 && !strict_descendant(s2, f[p], f[x])) ok = false;
        }
        if (ok) return true;
        int i = 0;
        while (i < n1 && ++f[i] == n2) f[i++] = 0;
        if (i == n1) return false;
    }
}

// Subsequences of root-to-leaf path words.
std::set<std::string> words_by_enumeration(const LabeledForest& s, std::size_t L) {
    std::set<std::string> paths;
    std::function<void(int, std::string)> go = [&](int v, std::string w) {
        w += to_char(s.label(v));
        if (s.is_leaf(v)) paths.insert(w);
        for (int c : s.children(v)) go(c, w);
    };
    for (int r : s.roots()) go(r, "");
    std::set<std::string> out;
    for (const std::string& w : words_upto_len(L))
        for (const std::string& p : paths)
            if (subsequence_by_masks(w, p)) out.insert(w);
    return out;
}

std::set<std::string> as_strings(const PrefixSet& ps) {
    std::set<std::string> out;
    for (const Prefix& p : ps) out.insert(p.str());
    return out;
}

LabeledForest random_forest(std::mt19937& rng, int n) {
    LabeledForest s;
    for (int i = 0; i < n; ++i) {
        int parent = std::uniform_int_distribution<int>(-1, i - 1)(rng);
        s.add_node(rng() % 2 ? Quant::Exists : Quant::Forall, parent);
    }
    return s;
}

}  // namespace

TEST(Prefix, DualExamples) {
    EXPECT_EQ(dual(Prefix::parse("EA")).str(), "AE");
    EXPECT_EQ(dual(Prefix{}).str(), "");
    EXPECT_EQ(dual(Prefix::parse("EEA")).str(), "AAE");
}

TEST(Prefix, SubsequenceMatchesMaskOracle) {
    EXPECT_TRUE(is_subsequence(Prefix::parse("EA"), Prefix::parse("EEA")));
    EXPECT_FALSE(is_subsequence(Prefix::parse("EA"), Prefix::parse("AE")));
    EXPECT_TRUE(is_subsequence(Prefix{}, Prefix::parse("AAA")));
    auto ws = words_upto_len(4);
    for (const auto& p : ws)
        for (const auto& q : ws)
            EXPECT_EQ(is_subsequence(Prefix::parse(p), Prefix::parse(q)), subsequence_by_masks(p, q)) << p << " " << q;
}

TEST(Prefix, ParseRejectsOtherLetters) { EXPECT_THROW(Prefix::parse("EX"), InvalidArgument); }

TEST(RosenF, Examples) {
    EXPECT_EQ(to_string(rosen_f(Prefix::parse("EE"))), "A* E A*");
    EXPECT_EQ(to_string(rosen_f(Prefix::parse("EA"))), "A* E*");
    EXPECT_EQ(to_string(rosen_f(Prefix::parse("AEE"))), "E* A* E A*");
    EXPECT_THROW(rosen_f(Prefix{}), InvalidArgument);
}

TEST(RosenF, GammaMinusAgainstUnrolledLanguage) {
    EXPECT_TRUE(in_gamma_minus(Prefix::parse("AA"), rosen_f(Prefix::parse("EA"))));
    EXPECT_FALSE(in_gamma_minus(Prefix::parse("EA"), rosen_f(Prefix::parse("EA"))));
    EXPECT_TRUE(in_gamma_minus(Prefix::parse("AEA"), rosen_f(Prefix::parse("EE"))));
    for (const auto& p : words_upto_len(3)) {
        if (p.empty()) continue;
        RegexWord v = rosen_f(Prefix::parse(p));
        auto lang = language_upto(v, 4);
        for (const auto& q : words_upto_len(4)) {
            bool oracle = false;
            for (const auto& w : lang) oracle = oracle || subsequence_by_masks(q, w);
            EXPECT_EQ(in_gamma_minus(Prefix::parse(q), v), oracle) << p << " " << q;
        }
    }
}

TEST(RosenF, FpmExamples) {
    EXPECT_EQ(as_strings(f_p_m(Prefix::parse("E"), 1)), (std::set<std::string>{"", "A"}));
    EXPECT_EQ(as_strings(f_p_m(Prefix::parse("EA"), 2)), (std::set<std::string>{"", "E", "A", "EE", "AE", "AA"}));
    EXPECT_EQ(as_strings(f_p_m(Prefix::parse("A"), 0)), (std::set<std::string>{""}));
}

TEST(Forest, ParsePrintRankPerfectBinary) {
    auto t = LabeledForest::parse("(E (A (E)))");
    EXPECT_EQ(t.str(), "(E (A (E)))");
    EXPECT_EQ(t.rank(), 3);
    EXPECT_EQ(LabeledForest{}.rank(), 0);
    EXPECT_EQ(perfect_binary(Quant::Exists, 2).str(), "(E (E) (A))");
    EXPECT_THROW(LabeledForest::parse("(E (A"), ParseError);
}

TEST(Forest, EmbeddingExamples) {
    auto path = LabeledForest::parse("(E (E))");
    auto t = LabeledForest::parse("(E (A) (E))");
    auto e = embeds(path, t);
    ASSERT_TRUE(e);
    EXPECT_EQ(*e, (Embedding{0, 2}));
    EXPECT_FALSE(embeds(t, LabeledForest::parse("(E (E)) (E (A))")));
    auto id = embeds(t, t);
    ASSERT_TRUE(id);
    EXPECT_TRUE(is_embedding(t, t, *id));
}

TEST(Forest, EmbeddingAgreesWithMapOracle) {
    std::mt19937 rng(11);
    for (int i = 0; i < 400; ++i) {
        auto s1 = random_forest(rng, 1 + i % 4), s2 = random_forest(rng, 1 + i % 5);
        auto e = embeds(s1, s2);
        EXPECT_EQ(e.has_value(), embeds_by_maps(s1, s2)) << s1.str() << " into " << s2.str();
        if (e) { EXPECT_TRUE(is_embedding(s1, s2, *e)); }
        if (e) { EXPECT_TRUE(word_subset(s1, s2)); }
    }
}

TEST(Forest, WordsAgainstPathEnumeration) {
    auto t = LabeledForest::parse("(E (A))");
    EXPECT_TRUE(word_in(t, Prefix::parse("EA")));
    EXPECT_EQ(as_strings(words_upto(t, 2)), (std::set<std::string>{"", "E", "A", "EA"}));
    auto s1 = LabeledForest::parse("(E (E)) (E (A))"), s2 = LabeledForest::parse("(E (A) (E))");
    EXPECT_TRUE(word_subset(s1, s2));
    EXPECT_TRUE(word_subset(s2, s1));
    EXPECT_TRUE(words_upto(LabeledForest{}, 3).empty());
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        auto s = random_forest(rng, 1 + i % 6);
        EXPECT_EQ(as_strings(words_upto(s, 4)), words_by_enumeration(s, 4)) << s.str();
    }
}

TEST(Forest, ForestOfExamplesAndReadOff) {
    EXPECT_TRUE(forest_of({}).empty());
    EXPECT_EQ(forest_of({Prefix::parse("EA"), Prefix::parse("AE")}).str(), "(E (A)) (A (E))");
    EXPECT_EQ(forest_of({Prefix{}, Prefix::parse("A")}).str(), "(A)");
    std::mt19937 rng(3);
    auto all = words_upto_len(3);
    for (int i = 0; i < 100; ++i) {
        PrefixSet P;
        std::set<std::string> closure;
        for (const auto& w : all)
            if (rng() % 4 == 0) P.insert(Prefix::parse(w.empty() ? "-" : w));
        bool nonempty = false;
        for (const auto& p : P) nonempty = nonempty || !p.empty();
        if (nonempty)
            for (const auto& w : all)
                for (const auto& p : P)
                    if (subsequence_by_masks(w, p.str())) closure.insert(w);
        EXPECT_EQ(as_strings(words_upto(forest_of(P), 3)), closure);
    }
}

TEST(Forest, IrreducibleAndMinimalSubtree) {
    EXPECT_TRUE(is_irreducible(LabeledForest::parse("(E (A) (E))")));
    EXPECT_FALSE(is_irreducible(LabeledForest::parse("(E (E) (E (A)))")));
    auto s1 = LabeledForest::parse("(E (A) (E))"), s2 = LabeledForest::parse("(E (E)) (E (A))");
    EXPECT_EQ(minimal_nonembeddable_subtree(s1, s2).str(), "(E (A) (E))");
    EXPECT_THROW(minimal_nonembeddable_subtree(s2, s2), InvalidArgument);
}

TEST(Formula, ParsePrintAndNormalForm) {
    Formula f = build_phi_tilde(Prefix::parse("EA"));
    EXPECT_EQ(parse_formula(f.str()), f);
    EXPECT_EQ(parse_formula("(not (exists x (U x)))").str(), "(forall x (not (U x)))");
    EXPECT_EQ(parse_formula("(implies (U x) (U y))").str(), "(or (not (U x)) (U y))");
    EXPECT_THROW(parse_formula("(exists x"), ParseError);
}

TEST(Formula, QuantifierStructure) {
    EXPECT_TRUE(qs(parse_formula("(R r r)")).empty());
    EXPECT_EQ(qs(build_phi_tilde(Prefix::parse("EE"))).str(), "(E (E) (E))");
    for (const auto& w : words_upto_len(4)) {
        if (w.empty()) continue;
        Prefix p = Prefix::parse(w);
        LabeledForest s = qs(build_phi_tilde(p));
        EXPECT_EQ(s.rank(), static_cast<int>(w.size()));
        for (const Prefix& path : maximal_path_words(s)) EXPECT_EQ(path.str(), w);
    }
}

TEST(Formula, PhiTildeBaseCases) {
    EXPECT_EQ(build_phi_tilde(Prefix::parse("E")).str(), "(exists x1 (and (R r x1) (U x1) (U x1)))");
    EXPECT_EQ(build_phi_tilde(Prefix::parse("A")).str(), "(forall x1 (or (not (R r x1)) (U x1) (U x1)))");
}

TEST(Formula, PhiPrimeDisplayAndSubstitution) {
    EXPECT_EQ(build_phi_prime(Prefix::parse("EE")),
              parse_formula("(exists x2 (and (E x2 x2) (exists x1 (and (E x2 x1) (E x1 x2) (E x1 x1)))"
                            " (exists x1 (and (E x1 x2) (E x2 x1) (not (E x1 x1))))))"));
    EXPECT_FALSE(free_symbols(build_phi(Prefix::parse("E"))).count("r"));
    for (const auto& w : words_upto_len(3)) {
        if (w.empty()) continue;
        Prefix p = Prefix::parse(w);
        EXPECT_TRUE(free_symbols(build_phi(p)).empty()) << w;
        EXPECT_EQ(qs(build_phi(p)), qs(build_phi_prime(p))) << w;
        EXPECT_EQ(qs(build_phi(p)), qs(build_phi_tilde(p))) << w;
    }
}

TEST(Formula, TreeSentence) {
    EXPECT_EQ(build_phi_tree(LabeledTree::parse("(E)")), build_phi_tilde(Prefix::parse("E")));
    Formula f = build_phi_tree(LabeledTree::parse("(E (A) (E))"));
    // one outer quantifier; the E-child appears in both colours, the A-child once
    EXPECT_EQ(qs(f).str(), "(E (A) (E) (E))");
    EXPECT_TRUE(in_class(f, LabeledForest::parse("(E (A) (E))")));
}

TEST(Formula, EvalExamples) {
    Structure a = build("tauplus:A:+:p=E:m=1"), b = build("tauplus:B:+:p=E:m=1");
    EXPECT_FALSE(eval(b, parse_formula("(exists x (U x))")));
    EXPECT_TRUE(eval(a, parse_formula("(exists x (and (R r x) (U x)))")));
    EXPECT_TRUE(eval(a, parse_formula("(forall x (= x x))")));
    EXPECT_THROW(eval(a, parse_formula("(exists x (Q x))")), InvalidArgument);
}

TEST(Structure, PartialIsomorphismExamples) {
    Structure a = build("tauplus:A:+:p=E:m=1"), b = build("tauplus:B:+:p=E:m=1");
    EXPECT_TRUE(partial_iso(linear_order(2), {}, linear_order(3), {}));
    int black = -1;
    for (int x = 0; x < a.size(); ++x)
        if (a.holds("U", {x})) black = x;
    ASSERT_GE(black, 0);
    for (int y = 1; y < b.size(); ++y) EXPECT_FALSE(partial_iso(a, {black}, b, {y}));
    EXPECT_TRUE(partial_iso(a, {a.constant("r")}, b, {b.constant("r")}));
}

TEST(Structure, IsomorphismExamples) {
    Structure a = build("tauplus:A:+:p=E:m=1"), b = build("tauplus:B:+:p=E:m=1");
    EXPECT_TRUE(isomorphic(a, a));
    EXPECT_FALSE(isomorphic(a, b));
    Structure ta = reduct(build("tauplus:A:+:p=E:m=2"), tau_plus0_signature());
    Structure tb = reduct(build("tauplus:B:+:p=A:m=2"), tau_plus0_signature());
    EXPECT_TRUE(isomorphic(ta, tb));
}

TEST(Structure, ReductExpandAndJoin) {
    Structure a = build("tauplus:A:+:p=EA:m=1");
    EXPECT_TRUE(isomorphic(reduct(a, a.signature()), a));
    Structure ex = expand_with_tuple(a, {1}, {"c"});
    EXPECT_EQ(ex.constant("c"), 1);
    EXPECT_TRUE(isomorphic(reduct(ex, a.signature()), a));
    Structure one(Signature({{"E", 2}}, {}), 1);
    EXPECT_EQ(join_at(one, 0, one, 0).structure.size(), 1);
    EXPECT_EQ(build_D(Prefix::parse("E"), 1, Side::A, Side::A).structure.size(), 7);
}

TEST(Structure, PointExpansionSizes) {
    Structure host = build("tauplus:A:+:p=E:m=1");
    std::vector<Hooked> ids(host.size(), singleton_hook());
    EXPECT_TRUE(isomorphic(point_expand(host, ids).structure, host));
    Structure chain = linear_order(3);
    std::vector<Hooked> mixed(chain.size(), singleton_hook());
    mixed[1] = {expand_with_tuple(linear_order(4), {0}, {"h"}), "h"};
    PointExpansion pe = point_expand(chain, mixed);
    EXPECT_EQ(pe.structure.size(), 1 + 4 + 1);
    EXPECT_EQ(pe.hook_of[1], pe.offset[1]);
}
