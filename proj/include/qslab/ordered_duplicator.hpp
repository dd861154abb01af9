#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "game.hpp"
#include "structure.hpp"

namespace qslab {

namespace ordered_detail {

// Construction tree of an ordered build: children sorted by the linear order.
struct Layout {
    const Structure* s = nullptr;
    int root = -1;
    std::vector<int> pos;  // rank in the linear order
    std::vector<char> edge;  // colour of the edge from the father, 0 at the root
    std::vector<std::vector<int>> children;

    explicit Layout(const Structure& st) : s(&st) {
        if (!st.order()) throw InvalidArgument("scripted duplicator needs an ordered structure");
        if (!st.has_provenance()) throw InvalidArgument("scripted duplicator needs construction provenance");
        const int n = st.size();
        pos.assign(n, 0);
        for (const Tuple& t : st.relation(*st.order()).tuples())
            if (t[0] != t[1]) ++pos[t[1]];
        edge.assign(n, 0);
        children.assign(n, {});
        const auto& prov = st.provenance();
        for (int x = 0; x < n; ++x) {
            int p = prov[x].parent;
            if (p < 0) {
                if (root >= 0) throw InvalidArgument("provenance has more than one root");
                root = x;
                continue;
            }
            children[p].push_back(x);
            edge[x] = st.holds("R", {p, x}) ? 'R' : 'B';
        }
        if (root < 0) throw InvalidArgument("provenance has no root");
        for (auto& c : children) std::sort(c.begin(), c.end(), [&](int a, int b) { return pos[a] < pos[b]; });
    }

    std::vector<int> chain(int x) const {
        std::vector<int> c;
        for (int y = x; y >= 0; y = s->provenance()[y].parent) c.push_back(y);
        std::reverse(c.begin(), c.end());
        return c;
    }

    const ElementInfo& info(int x) const { return s->provenance()[x]; }

    // Siblings of c under the same father along the same edge colour, grouped
    // into consecutive units. Returns the units and the unit index of c.
    std::vector<std::vector<int>> units(int father, char colour) const {
        std::vector<std::vector<int>> out;
        int last = -2;
        for (int c : children[father]) {
            if (edge[c] != colour) continue;
            int u = info(c).unit;
            if (out.empty() || u < 0 || u != last) out.push_back({});
            out.back().push_back(c);
            last = u;
        }
        return out;
    }
};

// Lower is better; -1 means the two nodes can never correspond. `next` is the
// colour of the edge the pick descends through below this node, 0 if none:
// a junction standing in for another must agree on that side.
inline int kind_cost(const ElementInfo& x, const ElementInfo& y, char next) {
    if (x.role != y.role) return -1;
    if (x.kind == y.kind) return 0;
    if (x.role != "junction") return -1;
    bool first = x.kind[0] == y.kind[0], second = x.kind[1] == y.kind[1];
    if (next == 'R') return first ? 1 : 3;
    if (next == 'B') return second ? 1 : 3;
    return first ? 1 : second ? 2 : 3;
}

inline int unit_of(const std::vector<std::vector<int>>& us, int x) {
    for (std::size_t i = 0; i < us.size(); ++i)
        if (std::find(us[i].begin(), us[i].end(), x) != us[i].end()) return static_cast<int>(i);
    return -1;
}

}  // namespace ordered_detail

// Duplicator for ordered builds: matches construction trees level by level,
// places each new unit by interval halving against the already matched
// siblings, and mimics labels inside matched components.
class OrderedDuplicator {
public:
    OrderedDuplicator(const Structure& a, const Structure& b) : la_(a), lb_(b) { require_same_signature(a, b); }

    // Reply to a spoiler pick in a (in_a) or b with `rounds` rounds left, this one included.
    int reply(bool in_a, const Tuple& abar, const Tuple& bbar, int pick, int rounds) const {
        const ordered_detail::Layout& X = in_a ? la_ : lb_;
        const ordered_detail::Layout& Y = in_a ? lb_ : la_;
        const Tuple& xs = in_a ? abar : bbar;
        const Tuple& ys = in_a ? bbar : abar;
        std::map<int, int> fwd, back;
        fwd[X.root] = Y.root;
        back[Y.root] = X.root;
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            auto cx = X.chain(xs[i]), cy = Y.chain(ys[i]);
            for (std::size_t l = 0; l < cx.size() && l < cy.size(); ++l)
                if (!fwd.count(cx[l]) && !back.count(cy[l])) {
                    fwd[cx[l]] = cy[l];
                    back[cy[l]] = cx[l];
                }
        }
        auto cx = X.chain(pick);
        std::size_t l = 1;
        while (l < cx.size() && fwd.count(cx[l])) ++l;
        int yprev = fwd.at(cx[l - 1]);
        for (; l < cx.size(); ++l) {
            char next = l + 1 < cx.size() ? X.edge[cx[l + 1]] : 0;
            int y = place(X, Y, cx[l - 1], yprev, cx[l], next, fwd, back, std::max(rounds, 1));
            fwd[cx[l]] = y;
            back[y] = cx[l];
            yprev = y;
        }
        return fwd.at(pick);
    }

private:
    static int place(const ordered_detail::Layout& X, const ordered_detail::Layout& Y, int fx, int fy, int c,
                     char next, const std::map<int, int>& fwd, const std::map<int, int>& back, int rounds) {
        using namespace ordered_detail;
        char colour = X.edge[c];
        auto ux = X.units(fx, colour);
        auto uy = Y.units(fy, colour);
        const int nx = static_cast<int>(ux.size()), ny = static_cast<int>(uy.size());
        const int uc = unit_of(ux, c);
        // nearest matched siblings before and after c, with their images
        int lx = -1, ly = -1, rx = nx, ry = ny, lpos = -1, rpos = Y.s->size();
        int lbest = -1, rbest = X.s->size();
        for (int i = 0; i < nx; ++i)
            for (int s : ux[i]) {
                auto it = fwd.find(s);
                if (it == fwd.end()) continue;
                int j = unit_of(uy, it->second);
                if (j < 0) continue;
                if (X.pos[s] < X.pos[c] && X.pos[s] > lbest) {
                    lbest = X.pos[s];
                    lx = i, ly = j, lpos = Y.pos[it->second];
                } else if (X.pos[s] > X.pos[c] && X.pos[s] < rbest) {
                    rbest = X.pos[s];
                    rx = i, ry = j, rpos = Y.pos[it->second];
                }
            }
        const int half = 1 << (rounds - 1);
        const int d1 = uc - lx, d2 = rx - uc;
        int target;
        if (rx - lx == ry - ly) target = ly + d1;
        else if (d1 < half) target = ly + d1;
        else if (d2 < half) target = ry - d2;
        else target = ly + (ry - ly) / 2;
        auto best_in = [&](int j) -> std::pair<int, int> {
            int best = -1, cost = 1 << 20;
            for (int y : uy[j]) {
                if (back.count(y) || Y.pos[y] <= lpos || Y.pos[y] >= rpos) continue;
                int k = kind_cost(X.info(c), Y.info(y), next);
                if (k >= 0 && k < cost) best = y, cost = k;
            }
            return {best, cost};
        };
        // nearest unit to the target that respects the order, exact kinds first
        for (int want = 0; want <= 3; ++want)
            for (int d = 0; d < ny; ++d)
                for (int j : {target - d, target + d}) {
                    if (j < 0 || j >= ny) continue;
                    auto [y, cost] = best_in(j);
                    if (y >= 0 && cost <= want) return y;
                }
        // no order-consistent choice: any compatible unmatched sibling
        for (int y : Y.children[fy])
            if (!back.count(y) && Y.edge[y] == colour && kind_cost(X.info(c), Y.info(y), next) >= 0) return y;
        for (int y : Y.children[fy])
            if (!back.count(y)) return y;
        return fy;
    }

    ordered_detail::Layout la_, lb_;
};

namespace ordered_detail {

inline std::vector<int> remaining_rounds(const LabeledForest& s) {
    std::vector<int> h(static_cast<std::size_t>(s.size()), 1);
    std::function<int(int)> go = [&](int v) {
        int best = 0;
        for (int w : s.children(v)) best = std::max(best, go(w));
        return h[v] = best + 1;
    };
    for (int r : s.roots()) go(r);
    return h;
}

}  // namespace ordered_detail

// Tabulates the scripted duplicator over every spoiler line of G_s(a, b).
inline DuplicatorCertificate scripted_ordered_duplicator(const LabeledForest& s, const Structure& a,
                                                         const Structure& b, std::size_t budget = 10'000'000) {
    OrderedDuplicator dup(a, b);
    auto rounds = ordered_detail::remaining_rounds(s);
    DuplicatorCertificate cert;
    std::function<void(int, Tuple&, Tuple&)> go = [&](int v, Tuple& abar, Tuple& bbar) {
        const bool ex = s.label(v) == Quant::Exists;
        for (int c = 0; c < (ex ? a : b).size(); ++c) {
            int d = dup.reply(ex, abar, bbar, c, rounds[v]);
            cert.table[{v, abar, bbar, c}] = d;
            if (cert.table.size() > budget) throw BudgetExceeded(budget);
            abar.push_back(ex ? c : d);
            bbar.push_back(ex ? d : c);
            if (partial_iso(a, abar, b, bbar))
                for (int w : s.children(v)) go(w, abar, bbar);
            abar.pop_back();
            bbar.pop_back();
        }
    };
    for (int r : s.roots()) {
        Tuple abar, bbar;
        go(r, abar, bbar);
    }
    return cert;
}

struct OrderedReplay {
    bool won = true;            // every line keeps a partial isomorphism
    bool order_preserved = true;  // a_i <= a_j iff b_i <= b_j on every line
    std::size_t positions = 0;
    std::optional<std::pair<Tuple, Tuple>> counterexample;
};

// Replays a duplicator table against all spoiler lines, checking the partial
// isomorphism and, separately, that the picks are order-isomorphic.
inline OrderedReplay replay_ordered_duplicator(const LabeledForest& s, const Structure& a, const Structure& b,
                                               const DuplicatorCertificate& cert) {
    if (!a.order() || !b.order()) throw InvalidArgument("ordered replay needs ordered structures");
    const Relation& oa = a.relation(*a.order());
    const Relation& ob = b.relation(*b.order());
    OrderedReplay out;
    auto fail = [&](const Tuple& abar, const Tuple& bbar) {
        if (!out.counterexample) out.counterexample = std::make_pair(abar, bbar);
    };
    std::function<void(int, Tuple&, Tuple&)> go = [&](int v, Tuple& abar, Tuple& bbar) {
        const bool ex = s.label(v) == Quant::Exists;
        for (int c = 0; c < (ex ? a : b).size(); ++c) {
            auto d = cert.reply(v, abar, bbar, c);
            ++out.positions;
            if (!d) {
                out.won = false;
                fail(abar, bbar);
                continue;
            }
            abar.push_back(ex ? c : *d);
            bbar.push_back(ex ? *d : c);
            const std::size_t k = abar.size() - 1;
            for (std::size_t i = 0; i <= k; ++i)
                if (oa.contains({abar[i], abar[k]}) != ob.contains({bbar[i], bbar[k]}) ||
                    oa.contains({abar[k], abar[i]}) != ob.contains({bbar[k], bbar[i]})) {
                    out.order_preserved = false;
                    fail(abar, bbar);
                }
            if (!partial_iso(a, abar, b, bbar)) {
                out.won = false;
                fail(abar, bbar);
            } else {
                for (int w : s.children(v)) go(w, abar, bbar);
            }
            abar.pop_back();
            bbar.pop_back();
        }
    };
    if (!partial_iso(a, {}, b, {})) out.won = false;
    for (int r : s.roots()) {
        Tuple abar, bbar;
        go(r, abar, bbar);
    }
    return out;
}

}  // namespace qslab
