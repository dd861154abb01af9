#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "errors.hpp"

namespace qslab {

using Tuple = std::vector<int>;

struct RelationSymbol {
    std::string name;
    int arity;
    friend bool operator==(const RelationSymbol&, const RelationSymbol&) = default;
};

// Relation and constant symbols, kept sorted by name.
struct Signature {
    std::vector<RelationSymbol> relations;
    std::vector<std::string> constants;

    Signature() = default;
    Signature(std::vector<RelationSymbol> rels, std::vector<std::string> consts)
        : relations(std::move(rels)), constants(std::move(consts)) {
        normalize();
    }

    void normalize() {
        std::sort(relations.begin(), relations.end(),
                  [](const RelationSymbol& a, const RelationSymbol& b) { return a.name < b.name; });
        std::sort(constants.begin(), constants.end());
        std::set<std::string> seen;
        for (const auto& r : relations) {
            if (r.arity < 1) throw InvalidArgument("relation '" + r.name + "' must have arity >= 1");
            if (!seen.insert(r.name).second) throw InvalidArgument("duplicate symbol '" + r.name + "'");
        }
        for (const auto& c : constants)
            if (!seen.insert(c).second) throw InvalidArgument("duplicate symbol '" + c + "'");
    }

    int relation_index(const std::string& name) const {
        for (std::size_t i = 0; i < relations.size(); ++i)
            if (relations[i].name == name) return static_cast<int>(i);
        return -1;
    }
    int constant_index(const std::string& name) const {
        for (std::size_t i = 0; i < constants.size(); ++i)
            if (constants[i] == name) return static_cast<int>(i);
        return -1;
    }
    bool has_relation(const std::string& n) const { return relation_index(n) >= 0; }
    bool has_constant(const std::string& n) const { return constant_index(n) >= 0; }

    bool subset_of(const Signature& o) const {
        for (const auto& r : relations) {
            int i = o.relation_index(r.name);
            if (i < 0 || o.relations[i].arity != r.arity) return false;
        }
        for (const auto& c : constants)
            if (!o.has_constant(c)) return false;
        return true;
    }

    friend bool operator==(const Signature&, const Signature&) = default;
};

// Construction metadata for one element. Generators fill it in; generic
// operations only carry it along.
struct ElementInfo {
    std::string label;
    int parent = -1;    // father in the construction tree
    std::string role;   // root, junction, inner, leaf
    std::string kind;   // AA/AB/BA/BB for junctions, black/white for leaves
    int unit = -1;      // block index among same-coloured siblings (ordered builds)
    int branch = -1;    // seed-tree child realised by this element's component (refined builds)
    friend bool operator==(const ElementInfo&, const ElementInfo&) = default;
};

class Relation {
public:
    Relation() = default;
    Relation(int arity, int n) : arity_(arity), n_(n), dense_mode_(arity == 1 || (arity == 2 && n <= kDenseLimit)) {
        if (arity == 1) dense_.assign(static_cast<std::size_t>(n), 0);
        else if (dense_mode_) dense_.assign(static_cast<std::size_t>(n) * n, 0);
        else check_encodable();
    }

    int arity() const { return arity_; }
    // Insertion order, duplicates removed.
    const std::vector<Tuple>& tuples() const { return tuples_; }
    std::size_t count() const { return tuples_.size(); }

    bool contains(const int* t) const {
        if (dense_mode_) return dense_[dense_index(t)] != 0;
        return sparse_.count(encode(t)) != 0;
    }
    bool contains(const Tuple& t) const {
        if (static_cast<int>(t.size()) != arity_) throw InvalidArgument("tuple arity mismatch");
        return contains(t.data());
    }

    void add(const Tuple& t) {
        if (static_cast<int>(t.size()) != arity_) throw InvalidArgument("tuple arity mismatch");
        for (int e : t)
            if (e < 0 || e >= n_) throw InvalidArgument("tuple element out of range");
        if (contains(t)) return;
        if (dense_mode_) dense_[dense_index(t.data())] = 1;
        else sparse_.insert(encode(t.data()));
        tuples_.push_back(t);
    }

private:
    static constexpr int kDenseLimit = 4096;

    std::size_t dense_index(const int* t) const {
        return arity_ == 1 ? static_cast<std::size_t>(t[0])
                           : static_cast<std::size_t>(t[0]) * n_ + static_cast<std::size_t>(t[1]);
    }
    void check_encodable() const {
        long double cap = 1;
        for (int i = 0; i < arity_; ++i) cap *= std::max(n_, 1);
        if (cap > static_cast<long double>(std::numeric_limits<std::uint64_t>::max()))
            throw InvalidArgument("relation too large to index");
    }
    std::uint64_t encode(const int* t) const {
        std::uint64_t k = 0;
        for (int i = 0; i < arity_; ++i) k = k * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(t[i]);
        return k;
    }

    int arity_ = 1;
    int n_ = 0;
    bool dense_mode_ = true;
    std::vector<Tuple> tuples_;
    std::vector<std::uint8_t> dense_;
    std::unordered_set<std::uint64_t> sparse_;
};

class Structure {
public:
    Structure() = default;
    Structure(Signature sig, int size) : sig_(std::move(sig)), size_(size) {
        if (size < 0) throw InvalidArgument("negative universe size");
        sig_.normalize();
        for (const auto& r : sig_.relations) rels_.emplace_back(r.arity, size);
        consts_.assign(sig_.constants.size(), -1);
    }

    const Signature& signature() const { return sig_; }
    int size() const { return size_; }

    const Relation& relation(const std::string& name) const {
        int i = sig_.relation_index(name);
        if (i < 0) throw InvalidArgument("unknown relation '" + name + "'");
        return rels_[i];
    }
    const Relation& relation(std::size_t i) const { return rels_.at(i); }
    bool holds(const std::string& name, const Tuple& t) const { return relation(name).contains(t); }

    void add(const std::string& name, const Tuple& t) {
        int i = sig_.relation_index(name);
        if (i < 0) throw InvalidArgument("unknown relation '" + name + "'");
        rels_[i].add(t);
    }

    int constant(const std::string& name) const {
        int i = sig_.constant_index(name);
        if (i < 0) throw InvalidArgument("unknown constant '" + name + "'");
        return consts_[i];
    }
    int constant(std::size_t i) const { return consts_.at(i); }
    void set_constant(const std::string& name, int e) {
        int i = sig_.constant_index(name);
        if (i < 0) throw InvalidArgument("unknown constant '" + name + "'");
        if (e < 0 || e >= size_) throw InvalidArgument("constant out of range");
        consts_[i] = e;
    }

    // Marks a binary relation as the linear order; reflexive closure is applied.
    void set_order(const std::string& name) {
        const Relation& r = relation(name);
        if (r.arity() != 2) throw InvalidArgument("order relation must be binary");
        for (int x = 0; x < size_; ++x) add(name, {x, x});
        order_ = name;
    }
    const std::optional<std::string>& order() const { return order_; }

    const std::vector<ElementInfo>& provenance() const { return prov_; }
    bool has_provenance() const { return static_cast<int>(prov_.size()) == size_ && size_ > 0; }
    void set_provenance(std::vector<ElementInfo> p) {
        if (!p.empty() && static_cast<int>(p.size()) != size_) throw InvalidArgument("provenance size mismatch");
        prov_ = std::move(p);
    }
    std::vector<ElementInfo>& mutable_provenance() { return prov_; }

    // Throws unless every constant is interpreted and any order is a total order.
    void validate() const {
        for (std::size_t i = 0; i < consts_.size(); ++i)
            if (consts_[i] < 0) throw InvalidArgument("constant '" + sig_.constants[i] + "' uninterpreted");
        if (order_ && !is_total_order(relation(*order_), size_))
            throw InvalidArgument("relation '" + *order_ + "' is not a total order");
    }

    static bool is_total_order(const Relation& r, int n) {
        for (int x = 0; x < n; ++x) {
            if (!r.contains({x, x})) return false;
            for (int y = 0; y < n; ++y) {
                bool xy = r.contains({x, y}), yx = r.contains({y, x});
                if (x != y && xy == yx) return false;  // totality and antisymmetry
                if (!xy) continue;
                for (int z = 0; z < n; ++z)
                    if (r.contains({y, z}) && !r.contains({x, z})) return false;
            }
        }
        return true;
    }

private:
    Signature sig_;
    int size_ = 0;
    std::vector<Relation> rels_;
    std::vector<int> consts_;
    std::optional<std::string> order_;
    std::vector<ElementInfo> prov_;
};

inline void require_same_signature(const Structure& a, const Structure& b) {
    if (!(a.signature() == b.signature())) throw InvalidArgument("structures have different signatures");
}

// Constants followed by the picked tuple.
inline Tuple with_constants(const Structure& s, const Tuple& picks) {
    Tuple t;
    t.reserve(s.signature().constants.size() + picks.size());
    for (std::size_t i = 0; i < s.signature().constants.size(); ++i) t.push_back(s.constant(i));
    t.insert(t.end(), picks.begin(), picks.end());
    return t;
}

namespace detail {

// Calls f(idx) for every index tuple over [0, len) of the given arity that
// uses position `must` at least once (or every tuple when must < 0).
inline void for_index_tuples(int arity, int len, int must, const std::function<void(const Tuple&)>& f) {
    Tuple idx(arity, 0);
    std::function<void(int, bool)> go = [&](int pos, bool used) {
        if (pos == arity) {
            if (must < 0 || used) f(idx);
            return;
        }
        for (int i = 0; i < len; ++i) {
            idx[pos] = i;
            go(pos + 1, used || i == must);
        }
    };
    go(0, false);
}

// Checks the facts that involve position `must` (all facts when must < 0).
inline bool consistent_at(const Structure& a, const Tuple& ta, const Structure& b, const Tuple& tb, int must) {
    const int len = static_cast<int>(ta.size());
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < len; ++j) {
            if (must >= 0 && i != must && j != must) continue;
            if ((ta[i] == ta[j]) != (tb[i] == tb[j])) return false;
        }
    const auto& rels = a.signature().relations;
    for (std::size_t r = 0; r < rels.size(); ++r) {
        const Relation& ra = a.relation(r);
        const Relation& rb = b.relation(r);
        bool ok = true;
        Tuple xa(rels[r].arity), xb(rels[r].arity);
        for_index_tuples(rels[r].arity, len, must, [&](const Tuple& idx) {
            if (!ok) return;
            for (int k = 0; k < rels[r].arity; ++k) {
                xa[k] = ta[idx[k]];
                xb[k] = tb[idx[k]];
            }
            if (ra.contains(xa) != rb.contains(xb)) ok = false;
        });
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

inline bool partial_iso(const Structure& a, const Tuple& abar, const Structure& b, const Tuple& bbar) {
    require_same_signature(a, b);
    if (abar.size() != bbar.size()) throw InvalidArgument("tuple lengths differ");
    return detail::consistent_at(a, with_constants(a, abar), b, with_constants(b, bbar), -1);
}

// Assuming the prefixes without the last pair already agree, checks the last pair.
inline bool extends_partial_iso(const Structure& a, const Tuple& ta, const Structure& b, const Tuple& tb) {
    if (ta.empty()) return true;
    return detail::consistent_at(a, ta, b, tb, static_cast<int>(ta.size()) - 1);
}

namespace detail {

// Colour refinement over all relations; returns a colour per element.
inline std::vector<std::uint64_t> refine_colours(const Structure& s) {
    const int n = s.size();
    std::vector<std::uint64_t> col(n, 1469598103934665603ULL);
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    for (std::size_t c = 0; c < s.signature().constants.size(); ++c) {
        int e = s.constant(c);
        col[e] = mix(col[e], 1000 + c);
    }
    const auto& rels = s.signature().relations;
    for (int round = 0; round < n + 1; ++round) {
        std::vector<std::vector<std::uint64_t>> bag(n);
        for (std::size_t r = 0; r < rels.size(); ++r)
            for (const Tuple& t : s.relation(r).tuples()) {
                std::uint64_t h = mix(r + 7, 0);
                for (int e : t) h = mix(h, col[e]);
                for (std::size_t k = 0; k < t.size(); ++k) {
                    std::uint64_t pos = 0;
                    for (std::size_t j = 0; j < t.size(); ++j) pos = mix(pos, t[j] == t[k] ? 1 : 2);
                    bag[t[k]].push_back(mix(mix(h, k), pos));
                }
            }
        std::vector<std::uint64_t> next(n);
        for (int e = 0; e < n; ++e) {
            std::sort(bag[e].begin(), bag[e].end());
            std::uint64_t h = col[e];
            for (std::uint64_t v : bag[e]) h = mix(h, v);
            next[e] = h;
        }
        std::set<std::uint64_t> before(col.begin(), col.end()), after(next.begin(), next.end());
        col = std::move(next);
        if (after.size() == before.size()) break;
    }
    return col;
}

}  // namespace detail

inline bool isomorphic(const Structure& a, const Structure& b, int bound = 1024) {
    require_same_signature(a, b);
    if (a.size() > bound || b.size() > bound) throw InvalidArgument("structure exceeds isomorphism size bound");
    if (a.size() != b.size()) return false;
    const auto& rels = a.signature().relations;
    for (std::size_t r = 0; r < rels.size(); ++r)
        if (a.relation(r).count() != b.relation(r).count()) return false;
    // Refinement is deterministic, so equal colours mean equal local views.
    auto ca = detail::refine_colours(a);
    auto cb = detail::refine_colours(b);
    {
        auto sa = ca, sb = cb;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return false;
    }
    const int n = a.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::map<std::uint64_t, int> freq;
    for (auto c : ca) ++freq[c];
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return freq[ca[x]] < freq[ca[y]]; });

    Tuple ta, tb;
    std::vector<char> used(n, 0);
    Tuple ka = with_constants(a, {}), kb = with_constants(b, {});
    // constants first so their alignment is enforced
    ta = ka;
    tb = kb;
    if (!detail::consistent_at(a, ta, b, tb, -1)) return false;
    for (std::size_t i = 0; i < ka.size(); ++i) {
        if (ca[ka[i]] != cb[kb[i]]) return false;
    }
    // constant elements are already placed; skip them in the order
    std::vector<char> is_const(n, 0);
    for (std::size_t i = 0; i < ka.size(); ++i) {
        is_const[ka[i]] = 1;
        used[kb[i]] = 1;
    }
    order.erase(std::remove_if(order.begin(), order.end(), [&](int x) { return is_const[x]; }), order.end());
    const int free_count = static_cast<int>(order.size());
    std::function<bool(int)> run = [&](int k) -> bool {
        if (k == free_count) return true;
        int x = order[k];
        ta.push_back(x);
        for (int y = 0; y < n; ++y) {
            if (used[y] || cb[y] != ca[x]) continue;
            tb.push_back(y);
            if (detail::consistent_at(a, ta, b, tb, static_cast<int>(ta.size()) - 1)) {
                used[y] = 1;
                if (run(k + 1)) return true;
                used[y] = 0;
            }
            tb.pop_back();
        }
        ta.pop_back();
        return false;
    };
    return run(0);
}

inline Structure reduct(const Structure& a, const Signature& sub) {
    if (!sub.subset_of(a.signature())) throw InvalidArgument("reduct signature is not a subset");
    Structure out(sub, a.size());
    for (const auto& r : out.signature().relations)
        for (const Tuple& t : a.relation(r.name).tuples()) out.add(r.name, t);
    for (const auto& c : out.signature().constants) out.set_constant(c, a.constant(c));
    if (a.order() && sub.has_relation(*a.order())) out.set_order(*a.order());
    out.set_provenance(a.provenance());
    return out;
}

inline Structure expand_with_tuple(const Structure& a, const Tuple& abar, const std::vector<std::string>& names) {
    if (abar.size() != names.size()) throw InvalidArgument("tuple and name list differ in length");
    Signature sig = a.signature();
    for (const auto& n : names) {
        if (sig.has_constant(n) || sig.has_relation(n)) throw InvalidArgument("constant name '" + n + "' not fresh");
        sig.constants.push_back(n);
    }
    Structure out(sig, a.size());
    for (const auto& r : a.signature().relations)
        for (const Tuple& t : a.relation(r.name).tuples()) out.add(r.name, t);
    for (const auto& c : a.signature().constants) out.set_constant(c, a.constant(c));
    for (std::size_t i = 0; i < names.size(); ++i) out.set_constant(names[i], abar[i]);
    if (a.order()) out.set_order(*a.order());
    out.set_provenance(a.provenance());
    return out;
}

// A structure together with the name of its hook constant.
struct Hooked {
    Structure structure;
    std::string hook;
};

struct PointExpansion {
    Structure structure;
    std::vector<int> hook_of;  // host element -> element of the result
    std::vector<int> offset;   // host element -> first element of its block
};

inline PointExpansion point_expand(const Structure& host, const std::vector<Hooked>& gimel) {
    if (static_cast<int>(gimel.size()) != host.size()) throw InvalidArgument("one image per host element required");
    std::vector<RelationSymbol> rels = host.signature().relations;
    std::vector<std::string> consts = host.signature().constants;
    std::set<std::string> const_names(consts.begin(), consts.end());
    std::map<std::string, int> arity;
    for (const auto& r : rels) arity[r.name] = r.arity;

    std::vector<int> offset(gimel.size());
    int total = 0;
    for (std::size_t i = 0; i < gimel.size(); ++i) {
        const Structure& g = gimel[i].structure;
        if (!g.signature().has_constant(gimel[i].hook))
            throw InvalidArgument("image of host element " + std::to_string(i) + " lacks hook '" + gimel[i].hook + "'");
        offset[i] = total;
        total += g.size();
        for (const auto& r : g.signature().relations) {
            auto it = arity.find(r.name);
            if (it == arity.end()) {
                arity[r.name] = r.arity;
                rels.push_back(r);
            } else if (it->second != r.arity) {
                throw InvalidArgument("relation '" + r.name + "' used with two arities");
            }
        }
        for (const auto& c : g.signature().constants) {
            if (c == gimel[i].hook) continue;
            if (!const_names.insert(c).second) throw InvalidArgument("constant clash on '" + c + "'");
            consts.push_back(c);
        }
    }
    for (const auto& [name, ar] : arity)
        if (const_names.count(name)) throw InvalidArgument("symbol '" + name + "' is both constant and relation");

    Structure out(Signature(rels, consts), total);
    std::vector<int> hook_of(gimel.size());
    std::vector<ElementInfo> prov(total);
    bool any_prov = host.has_provenance();
    for (std::size_t i = 0; i < gimel.size(); ++i) {
        const Structure& g = gimel[i].structure;
        int off = offset[i];
        hook_of[i] = off + g.constant(gimel[i].hook);
        for (const auto& r : g.signature().relations)
            for (const Tuple& t : g.relation(r.name).tuples()) {
                Tuple u = t;
                for (int& e : u) e += off;
                out.add(r.name, u);
            }
        for (const auto& c : g.signature().constants)
            if (c != gimel[i].hook) out.set_constant(c, off + g.constant(c));
        if (g.has_provenance()) {
            any_prov = true;
            for (int e = 0; e < g.size(); ++e) {
                ElementInfo info = g.provenance()[e];
                if (info.parent >= 0) info.parent += off;
                prov[off + e] = std::move(info);
            }
        }
    }
    for (const auto& r : host.signature().relations)
        for (const Tuple& t : host.relation(r.name).tuples()) {
            Tuple u;
            for (int e : t) u.push_back(hook_of[e]);
            out.add(r.name, u);
        }
    for (const auto& c : host.signature().constants) out.set_constant(c, hook_of[host.constant(c)]);
    if (host.has_provenance()) {
        // Images without metadata inherit the host's; otherwise only the father is lifted.
        for (int x = 0; x < host.size(); ++x) {
            ElementInfo hi = host.provenance()[x];
            if (hi.parent >= 0) hi.parent = hook_of[hi.parent];
            ElementInfo& info = prov[hook_of[x]];
            if (!gimel[x].structure.has_provenance()) info = std::move(hi);
            else info.parent = hi.parent;
        }
    }
    if (any_prov) out.set_provenance(std::move(prov));
    return {std::move(out), std::move(hook_of), std::move(offset)};
}

struct Join {
    Structure structure;
    std::vector<int> b_map;  // element of b -> element of the result
};

// a and b glued at x ~ y; a keeps its identifiers, b follows.
inline Join join_at(const Structure& a, int x, const Structure& b, int y) {
    require_same_signature(a, b);
    if (x < 0 || x >= a.size() || y < 0 || y >= b.size()) throw InvalidArgument("join point out of range");
    std::vector<int> bmap(b.size());
    int next = a.size();
    for (int e = 0; e < b.size(); ++e) bmap[e] = e == y ? x : next++;
    Structure out(a.signature(), a.size() + b.size() - 1);
    for (const auto& r : a.signature().relations) {
        for (const Tuple& t : a.relation(r.name).tuples()) out.add(r.name, t);
        for (const Tuple& t : b.relation(r.name).tuples()) {
            Tuple u;
            for (int e : t) u.push_back(bmap[e]);
            out.add(r.name, u);
        }
    }
    for (const auto& c : a.signature().constants) {
        int ca = a.constant(c), cb = bmap[b.constant(c)];
        if (ca != cb) throw InvalidArgument("constant clash on '" + c + "' at join");
        out.set_constant(c, ca);
    }
    if (a.has_provenance() || b.has_provenance()) {
        std::vector<ElementInfo> prov(out.size());
        if (a.has_provenance())
            for (int e = 0; e < a.size(); ++e) prov[e] = a.provenance()[e];
        if (b.has_provenance())
            for (int e = 0; e < b.size(); ++e) {
                if (e == y) continue;
                ElementInfo info = b.provenance()[e];
                if (info.parent >= 0) info.parent = bmap[info.parent];
                prov[bmap[e]] = std::move(info);
            }
        out.set_provenance(std::move(prov));
    }
    return {std::move(out), std::move(bmap)};
}

// One-element structure whose only symbol is its hook constant.
inline Hooked singleton_hook(const std::string& hook = "c_I") {
    Structure s(Signature({}, {hook}), 1);
    s.set_constant(hook, 0);
    return {std::move(s), hook};
}

}  // namespace qslab
