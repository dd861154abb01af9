#pragma once

#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "prefix.hpp"
#include "structure.hpp"

namespace qslab {

inline const std::string kOrder = "<=";

inline Signature tau_plus_signature() { return Signature({{"U", 1}, {"R", 2}, {"B", 2}}, {"r"}); }
inline Signature tau_plus0_signature() { return Signature({{"R", 2}, {"B", 2}}, {"r"}); }
inline Signature tau_signature() { return Signature({{"E", 2}}, {}); }

enum class Side { A, B };
inline char to_char(Side s) { return s == Side::A ? 'A' : 'B'; }

enum class Family { TauPlus, Tau, OrderedTauPlus, OrderedTau, RefinedTauPlus, RefinedTau };

inline const std::vector<std::pair<Family, std::string>>& family_names() {
    static const std::vector<std::pair<Family, std::string>> names{
        {Family::TauPlus, "tauplus"},           {Family::Tau, "tau"},
        {Family::OrderedTauPlus, "ordered_tauplus"}, {Family::OrderedTau, "ordered_tau"},
        {Family::RefinedTauPlus, "refined_tauplus"}, {Family::RefinedTau, "refined_tau"}};
    return names;
}

struct FamilySpec {
    Family family = Family::TauPlus;
    Side side = Side::A;
    bool negative = false;
    Prefix prefix;      // prefix families
    LabeledTree tree;   // refined families
    int m = 1;

    bool refined() const { return family == Family::RefinedTauPlus || family == Family::RefinedTau; }
    bool ordered() const { return family == Family::OrderedTauPlus || family == Family::OrderedTau; }
    bool reduced() const {
        return family == Family::Tau || family == Family::OrderedTau || family == Family::RefinedTau;
    }
    Quant leading() const { return refined() ? tree.label(tree.roots().at(0)) : prefix[0]; }

    // family:side:polarity:seed:m, e.g. tauplus:A:+:p=EA:m=2
    static FamilySpec parse(const std::string& text) {
        std::vector<std::string> f;
        std::string cur;
        int depth = 0;
        for (char c : text) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ':' && depth == 0) {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        f.push_back(cur);
        if (f.size() != 5) throw InvalidArgument("family spec needs five ':'-separated fields: " + text);
        FamilySpec s;
        bool known = false;
        for (const auto& [fam, name] : family_names())
            if (name == f[0]) {
                s.family = fam;
                known = true;
            }
        if (!known) throw InvalidArgument("unknown family '" + f[0] + "'");
        if (f[1] == "A") s.side = Side::A;
        else if (f[1] == "B") s.side = Side::B;
        else throw InvalidArgument("side must be A or B");
        if (f[2] == "+") s.negative = false;
        else if (f[2] == "-") s.negative = true;
        else throw InvalidArgument("polarity must be + or -");
        if (s.refined()) {
            if (f[3].rfind("t=", 0) != 0) throw InvalidArgument("refined families need a seed t=(...)");
            s.tree = LabeledTree::parse(f[3].substr(2));
            if (s.tree.roots().size() != 1) throw InvalidArgument("seed must be a single tree");
            if (!is_irreducible(s.tree)) throw InvalidArgument("seed tree is not irreducible");
        } else {
            if (f[3].rfind("p=", 0) != 0) throw InvalidArgument("prefix families need a seed p=...");
            s.prefix = Prefix::parse(f[3].substr(2));
            if (s.prefix.empty()) throw InvalidArgument("prefix seed must be non-empty");
        }
        if (f[4].rfind("m=", 0) != 0) throw InvalidArgument("last field must be m=<count>");
        s.m = std::stoi(f[4].substr(2));
        if (s.m < 1) throw InvalidArgument("m must be at least 1");
        return s;
    }

    std::string str() const {
        std::string name;
        for (const auto& [fam, n] : family_names())
            if (fam == family) name = n;
        std::string seed = refined() ? "t=" + tree.str() : "p=" + prefix.str();
        return name + ":" + to_char(side) + ":" + (negative ? "-" : "+") + ":" + seed + ":m=" + std::to_string(m);
    }
};

namespace build_detail {

// A τ⁺ structure together with its linear-order sequence (first element first).
struct Built {
    Structure s;
    std::vector<int> seq;
};

inline Structure flip_colours(const Structure& a) {
    Structure out(a.signature(), a.size());
    for (const auto& r : a.signature().relations) {
        std::string target = r.name == "R" ? "B" : r.name == "B" ? "R" : r.name;
        for (const Tuple& t : a.relation(r.name).tuples()) out.add(target, t);
    }
    for (const auto& c : a.signature().constants) out.set_constant(c, a.constant(c));
    if (a.order()) out.set_order(*a.order());
    out.set_provenance(a.provenance());
    return out;
}

inline Built flip_colours(const Built& b) { return {flip_colours(b.s), b.seq}; }

// Root 0 with red edges to leaves 1..n.
inline Built depth_one(const std::vector<bool>& black) {
    const int n = static_cast<int>(black.size());
    Structure s(tau_plus_signature(), n + 1);
    std::vector<ElementInfo> prov(n + 1);
    prov[0] = {"root", -1, "root", "", -1, -1};
    for (int i = 1; i <= n; ++i) {
        s.add("R", {0, i});
        if (black[i - 1]) s.add("U", {i});
        prov[i] = {"leaf " + std::to_string(i), 0, "leaf", black[i - 1] ? "black" : "white", i - 1, -1};
    }
    s.set_constant("r", 0);
    s.set_provenance(std::move(prov));
    std::vector<int> seq(n + 1);
    for (int i = 0; i <= n; ++i) seq[i] = i;
    return {std::move(s), std::move(seq)};
}

inline std::vector<bool> leaf_colours(Quant q, int count, int special_pos) {
    // E side A: one black at the special position; E side B: none black.
    // A side A: all black; A side B: all black but the special position.
    std::vector<bool> v(count, q == Quant::Forall);
    if (special_pos >= 0) v[special_pos] = (q == Quant::Exists);
    return v;
}

inline Built base_tree(Quant q, Side side, int count_with_special, int count_without, int special_pos) {
    bool has_special = (q == Quant::Exists) == (side == Side::A);
    int count = has_special ? count_with_special : count_without;
    return depth_one(leaf_colours(q, count, has_special ? special_pos : -1));
}

// Joins the roots of the parts; the shared root becomes the junction with hook "e".
// Order: junction, then the parts in reverse listing order.
inline Built join_parts(const std::vector<Built>& parts, const std::string& kind) {
    Structure acc = parts.front().s;
    std::vector<std::vector<int>> maps;
    std::vector<int> ident(acc.size());
    for (int i = 0; i < acc.size(); ++i) ident[i] = i;
    maps.push_back(ident);
    for (std::size_t k = 1; k < parts.size(); ++k) {
        Join j = join_at(acc, acc.constant("r"), parts[k].s, parts[k].s.constant("r"));
        acc = std::move(j.structure);
        maps.push_back(std::move(j.b_map));
    }
    int junction = acc.constant("r");
    std::vector<int> seq{junction};
    for (std::size_t k = parts.size(); k-- > 0;)
        for (int e : parts[k].seq)
            if (maps[k][e] != junction) seq.push_back(maps[k][e]);
    Signature sig({{"U", 1}, {"R", 2}, {"B", 2}}, {"e"});
    Structure d(sig, acc.size());
    for (const auto& r : sig.relations)
        for (const Tuple& t : acc.relation(r.name).tuples()) d.add(r.name, t);
    d.set_constant("e", junction);
    auto prov = acc.provenance();
    prov[junction].role = "junction";
    prov[junction].kind = kind;
    prov[junction].label = "junction " + kind;
    d.set_provenance(std::move(prov));
    return {std::move(d), std::move(seq)};
}

// Host tree: root plus one leaf per entry of `kinds`, each expanded by its image.
inline Built expand_host(const std::vector<std::string>& kinds, const std::vector<int>& units,
                         const std::map<std::string, Built>& images) {
    const int n = static_cast<int>(kinds.size());
    Structure host(tau_plus0_signature(), n + 1);
    for (int i = 1; i <= n; ++i) host.add("R", {0, i});
    host.set_constant("r", 0);
    std::vector<ElementInfo> hprov(n + 1);
    hprov[0] = {"root", -1, "root", "", -1, -1};
    for (int i = 1; i <= n; ++i) hprov[i] = {"junction " + kinds[i - 1], 0, "junction", kinds[i - 1], units[i - 1], -1};
    host.set_provenance(hprov);
    std::vector<Hooked> gimel;
    gimel.push_back(singleton_hook());
    for (const auto& k : kinds) gimel.push_back({images.at(k).s, "e"});
    PointExpansion px = point_expand(host, gimel);
    auto prov = px.structure.provenance();
    for (int i = 1; i <= n; ++i) {
        ElementInfo& info = prov[px.hook_of[i]];
        info.role = "junction";
        info.kind = kinds[i - 1];
        info.unit = units[i - 1];
        info.parent = px.hook_of[0];
    }
    prov[px.hook_of[0]] = {"root", -1, "root", "", -1, -1};
    for (int i = 1; i <= n; ++i)
        for (int e = 0; e < gimel[i].structure.size(); ++e) {
            int g = px.offset[i] + e;
            if (g != px.hook_of[i]) prov[g].label = "block " + std::to_string(i) + " / " + prov[g].label;
        }
    px.structure.set_provenance(std::move(prov));
    std::vector<int> seq{px.hook_of[0]};
    for (int i = 1; i <= n; ++i)
        for (int e : images.at(kinds[i - 1]).seq) seq.push_back(px.offset[i] + e);
    return {std::move(px.structure), std::move(seq)};
}

// Leaf layout of a recursive prefix structure: kinds and 2-tuple unit indices.
inline void prefix_layout(Quant q, Side side, int m, bool ordered, std::vector<std::string>& kinds,
                          std::vector<int>& units) {
    bool has_special = (q == Quant::Exists) == (side == Side::A);
    std::string special = q == Quant::Exists ? "AA" : "BB";
    // Unordered: m (AB,BA) pairs, special last. Ordered: 2^m pairs, special in the middle.
    int pairs = ordered ? (1 << m) : m;
    kinds.clear();
    units.clear();
    int unit = 0;
    auto add_pairs = [&](int count) {
        for (int i = 0; i < count; ++i, ++unit) {
            kinds.push_back("AB");
            units.push_back(unit);
            kinds.push_back("BA");
            units.push_back(unit);
        }
    };
    add_pairs(pairs);
    if (has_special) {
        kinds.push_back(special);
        units.push_back(unit++);
        if (ordered) add_pairs(pairs);
    }
}

inline Built build_prefix(const Prefix& p, Side side, int m, bool ordered);

inline Built build_D_impl(const Prefix& q, int m, Side left, Side right, bool ordered) {
    Built x = build_prefix(q, left, m, ordered);
    Built y = flip_colours(build_prefix(q, right, m, ordered));
    std::string kind{to_char(left), to_char(right)};
    return join_parts({x, y}, kind);
}

inline Built build_prefix(const Prefix& p, Side side, int m, bool ordered) {
    if (p.empty()) throw InvalidArgument("prefix must be non-empty");
    Quant q = p[0];
    if (p.size() == 1) {
        if (ordered) {
            int with = (1 << (m + 2)) + 1, without = 1 << (m + 1);
            return base_tree(q, side, with, without, 1 << (m + 1));
        }
        return base_tree(q, side, 2 * m + 1, 2 * m, 2 * m);
    }
    Prefix rest = p.tail();
    std::vector<std::string> kinds;
    std::vector<int> units;
    prefix_layout(q, side, m, ordered, kinds, units);
    std::map<std::string, Built> images;
    for (const auto& k : kinds)
        if (!images.count(k))
            images.emplace(k, build_D_impl(rest, m, k[0] == 'A' ? Side::A : Side::B,
                                           k[1] == 'A' ? Side::A : Side::B, ordered));
    return expand_host(kinds, units, images);
}

// Refined family over an irreducible tree rooted at node v of t.
inline Built build_tree(const LabeledTree& t, int v, Side side, int m) {
    Quant q = t.label(v);
    const auto& ch = t.children(v);
    if (ch.empty()) return base_tree(q, side, m + 1, m, m);
    const int k = static_cast<int>(ch.size());
    // P_i entries: "AA","AB","BA","BB" for a pair, "A"/"B" for a single member.
    if (k > 2) throw InvalidArgument("refined builds support at most two children per node");
    auto member = [&](int i, const std::string& pat) {
        std::vector<Built> parts;
        auto sd = [](char c) { return c == 'A' ? Side::A : Side::B; };
        parts.push_back(build_tree(t, ch[i], sd(pat[0]), m));
        if (pat.size() == 2) parts.push_back(flip_colours(build_tree(t, ch[i], sd(pat[1]), m)));
        // tops of the member remember which child they realise
        for (Built& b : parts) {
            const int root = b.s.constant("r");
            for (ElementInfo& info : b.s.mutable_provenance())
                if (info.parent == root) info.branch = i;
        }
        return parts;
    };
    bool ex = q == Quant::Exists;
    std::string pair_default = ex ? "AA" : "BB";
    std::string single_default = ex ? "A" : "B";
    auto defaults = [&](int i) { return t.label(ch[i]) == q ? pair_default : single_default; };
    auto component = [&](int j, const std::string& pj, const std::string& tag) {
        std::vector<Built> parts;
        for (int i = 0; i < k; ++i) {
            auto ps = member(i, i == j ? pj : defaults(i));
            parts.insert(parts.end(), ps.begin(), ps.end());
        }
        return join_parts(parts, tag);
    };
    std::vector<std::string> k0;
    std::map<std::string, Built> images;
    for (int i = 0; i < k; ++i) {
        std::string idx = std::to_string(i + 1);
        if (t.label(ch[i]) == q) {
            for (std::string pat : {"AB", "BA"}) {
                std::string tag = pat + ":" + idx;
                images.emplace(tag, component(i, pat, tag));
                k0.push_back(tag);
            }
        } else {
            std::string pat = ex ? "B" : "A";
            std::string tag = (ex ? "BB:" : "AA:") + idx;
            images.emplace(tag, component(i, pat, tag));
            k0.push_back(tag);
        }
    }
    std::string special = (ex ? "AA" : "BB") + std::string(":0");
    images.emplace(special, component(-1, "", special));
    bool has_special = ex == (side == Side::A);
    std::vector<std::string> kinds;
    std::vector<int> units;
    for (const auto& tag : k0)
        for (int c = 0; c < m; ++c) {
            kinds.push_back(tag);
            units.push_back(static_cast<int>(units.size()));
        }
    if (has_special) {
        kinds.push_back(special);
        units.push_back(static_cast<int>(units.size()));
    }
    return expand_host(kinds, units, images);
}

inline Structure install_order(const Structure& s, const std::vector<int>& seq) {
    Signature sig = s.signature();
    sig.relations.push_back({kOrder, 2});
    sig.normalize();
    Structure out(sig, s.size());
    for (const auto& r : s.signature().relations)
        for (const Tuple& t : s.relation(r.name).tuples()) out.add(r.name, t);
    for (const auto& c : s.signature().constants) out.set_constant(c, s.constant(c));
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i; j < seq.size(); ++j) out.add(kOrder, {seq[i], seq[j]});
    out.set_order(kOrder);
    out.set_provenance(s.provenance());
    return out;
}

}  // namespace build_detail

// Copy with all edge colours exchanged.
inline Structure flip_colours(const Structure& a) { return build_detail::flip_colours(a); }

// Copy with U complemented on the leaves.
inline Structure flip_black(const Structure& a) {
    if (!a.has_provenance()) throw InvalidArgument("flip_black needs construction provenance");
    Structure out(a.signature(), a.size());
    for (const auto& r : a.signature().relations)
        if (r.name != "U")
            for (const Tuple& t : a.relation(r.name).tuples()) out.add(r.name, t);
    for (int x = 0; x < a.size(); ++x)
        if (a.provenance()[x].role == "leaf" && !a.holds("U", {x})) out.add("U", {x});
    for (const auto& c : a.signature().constants) out.set_constant(c, a.constant(c));
    if (a.order()) out.set_order(*a.order());
    out.set_provenance(a.provenance());
    return out;
}

// Copy with only the edges leaving the root recoloured.
inline Structure flip_root_edges(const Structure& a) {
    int root = a.constant("r");
    Structure out(a.signature(), a.size());
    for (const auto& r : a.signature().relations)
        for (const Tuple& t : a.relation(r.name).tuples()) {
            std::string target = r.name;
            if (t[0] == root && (r.name == "R" || r.name == "B")) target = r.name == "R" ? "B" : "R";
            out.add(target, t);
        }
    for (const auto& c : a.signature().constants) out.set_constant(c, a.constant(c));
    out.set_provenance(a.provenance());
    return out;
}

inline Hooked build_D(const Prefix& q, int m, Side left, Side right) {
    if (q.empty()) throw InvalidArgument("build_D needs a non-empty prefix");
    auto d = build_detail::build_D_impl(q, m, left, right, false);
    return {std::move(d.s), "e"};
}

// Digraph encoding: a red edge f→c becomes E f c, a blue one E c f, the root
// is dropped and black leaves carry a self-loop. With root_loops, children of
// the root carry a self-loop as well (ignored when they are leaves).
inline Structure reduce_to_tau(const Structure& a, bool root_loops) {
    if (!a.has_provenance()) throw InvalidArgument("reduce_to_tau needs construction provenance");
    if (!tau_plus_signature().subset_of(a.signature())) throw InvalidArgument("reduce_to_tau needs a τ⁺ structure");
    const int root = a.constant("r");
    const auto& prov = a.provenance();
    bool depth_one = true;
    for (int x = 0; x < a.size(); ++x)
        if (prov[x].parent == root && prov[x].role != "leaf") depth_one = false;
    auto id = [&](int x) { return x < root ? x : x - 1; };

    Signature sig = tau_signature();
    if (a.order()) {
        sig.relations.push_back({*a.order(), 2});
        sig.normalize();
    }
    Structure out(sig, a.size() - 1);
    for (int x = 0; x < a.size(); ++x) {
        if (x == root) continue;
        int f = prov[x].parent;
        if (f < 0) throw InvalidArgument("element without a father in provenance");
        if (f != root) {
            if (a.holds("R", {f, x})) out.add("E", {id(f), id(x)});
            else if (a.holds("B", {f, x})) out.add("E", {id(x), id(f)});
            else throw InvalidArgument("provenance father not joined by an edge");
        }
        if (a.holds("U", {x}) || (f == root && root_loops && !depth_one)) out.add("E", {id(x), id(x)});
    }
    if (a.order()) {
        for (const Tuple& t : a.relation(*a.order()).tuples())
            if (t[0] != root && t[1] != root) out.add(*a.order(), {id(t[0]), id(t[1])});
        out.set_order(*a.order());
    }
    std::vector<ElementInfo> np;
    for (int x = 0; x < a.size(); ++x) {
        if (x == root) continue;
        ElementInfo info = prov[x];
        info.parent = info.parent == root || info.parent < 0 ? -1 : id(info.parent);
        np.push_back(std::move(info));
    }
    out.set_provenance(std::move(np));
    return out;
}

// Sibling components under one junction share an edge colour, so the
// second child's tops get a blue edge from the root to tell them apart.
// The root has no other blue edges in refined builds.
inline void mark_branches(Structure& s) {
    const int root = s.constant("r");
    for (int x = 0; x < s.size(); ++x)
        if (s.provenance()[x].branch == 1) s.add("B", {root, x});
}

inline Structure build(const FamilySpec& spec) {
    using namespace build_detail;
    Built b = spec.refined() ? build_tree(spec.tree, spec.tree.roots().at(0), spec.side, spec.m)
                             : build_prefix(spec.prefix, spec.side, spec.m, spec.ordered());
    Structure s = std::move(b.s);
    if (spec.refined()) mark_branches(s);
    if (spec.negative) s = build_detail::flip_colours(s);
    if (spec.ordered()) s = install_order(s, b.seq);
    if (spec.reduced()) s = reduce_to_tau(s, spec.leading() == Quant::Forall);
    s.validate();
    return s;
}

inline Structure build(const std::string& spec) { return build(FamilySpec::parse(spec)); }

// Convenience for prefix families.
inline Structure build_prefix_family(Family fam, const std::string& p, int m, Side side, bool negative = false) {
    FamilySpec s;
    s.family = fam;
    s.prefix = Prefix::parse(p);
    s.m = m;
    s.side = side;
    s.negative = negative;
    return build(s);
}

inline Structure build_prefix_family(Family fam, const Prefix& p, int m, Side side, bool negative = false) {
    return build_prefix_family(fam, p.str(), m, side, negative);
}

inline Structure build_refined(const LabeledTree& t, int m, Side side, bool reduced = false) {
    FamilySpec s;
    s.family = reduced ? Family::RefinedTau : Family::RefinedTauPlus;
    s.tree = t;
    s.m = m;
    s.side = side;
    return build(s);
}

// The linear order L_n over the single relation "<=".
inline Structure linear_order(int n) {
    if (n < 1) throw InvalidArgument("linear order needs at least one element");
    Structure s(Signature({{kOrder, 2}}, {}), n);
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) s.add(kOrder, {x, y});
    s.set_order(kOrder);
    return s;
}

// Example specs covering every family, for catalogues.
inline std::vector<std::string> library_specs() {
    return {"tauplus:A:+:p=E:m=1",          "tauplus:B:+:p=E:m=1",          "tauplus:A:+:p=EA:m=2",
            "tauplus:B:+:p=EA:m=2",         "tau:A:+:p=EA:m=2",             "tau:B:+:p=EA:m=2",
            "ordered_tauplus:A:+:p=E:m=1",  "ordered_tauplus:B:+:p=E:m=1",  "ordered_tau:A:+:p=EA:m=1",
            "ordered_tau:B:+:p=EA:m=1",     "refined_tauplus:A:+:t=(E (A) (E)):m=1",
            "refined_tauplus:B:+:t=(E (A) (E)):m=1", "refined_tau:A:+:t=(E (A) (E)):m=1",
            "refined_tau:B:+:t=(E (A) (E)):m=1"};
}

}  // namespace qslab
