#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "formula.hpp"
#include "structure.hpp"

namespace qslab {

enum class Player { Spoiler, Duplicator };

inline std::string to_string(Player p) { return p == Player::Spoiler ? "spoiler" : "duplicator"; }

inline std::uint64_t position_hash(int token, const Tuple& abar, const Tuple& bbar) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::int64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(token);
    mix(static_cast<std::int64_t>(abar.size()));
    for (int x : abar) mix(x);
    for (int x : bbar) mix(x);
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

// Spoiler move tree. Node k is a round at `token` where the spoiler picks
// `pick` (in a for an ∃-node, in b otherwise). Replies not listed in
// `branches` violate the partial isomorphism immediately.
struct SpoilerCertificate {
    struct Branch {
        int reply;
        int child;  // token node chosen next
        int next;   // index into nodes
    };
    struct Node {
        int token;
        int pick;
        std::vector<Branch> branches;
    };
    int tree = -1;  // root of the chosen tree; -1 when round 0 already fails
    std::vector<Node> nodes;
};

// Duplicator response table keyed by (token, abar, bbar, spoiler pick).
struct DuplicatorCertificate {
    struct Key {
        int token;
        Tuple abar, bbar;
        int pick;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, int> table;

    std::optional<int> reply(int token, const Tuple& abar, const Tuple& bbar, int pick) const {
        auto it = table.find({token, abar, bbar, pick});
        if (it == table.end()) return std::nullopt;
        return it->second;
    }
};

struct GameOutcome {
    Player winner = Player::Duplicator;
    std::size_t positions = 0;
    std::optional<SpoilerCertificate> spoiler;
    std::optional<DuplicatorCertificate> duplicator;
};

struct SolveOptions {
    std::size_t budget = 10'000'000;  // evaluated positions
    bool certificate = true;
};

namespace detail {

// All index tuples over [0, len) of the given arity that use index len - 1.
inline const std::vector<Tuple>& index_tuples_with_last(int arity, int len) {
    static std::map<std::pair<int, int>, std::vector<Tuple>> cache;
    auto key = std::make_pair(arity, len);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<Tuple> out;
    for_index_tuples(arity, len, len - 1, [&](const Tuple& t) { out.push_back(t); });
    return cache.emplace(key, std::move(out)).first->second;
}

// Colour refinement with a fixed number of rounds, comparable across structures.
inline std::vector<std::uint64_t> shallow_colours(const Structure& s, int rounds) {
    const int n = s.size();
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    std::vector<std::uint64_t> col(static_cast<std::size_t>(n), 1);
    const auto& sig = s.signature();
    for (std::size_t c = 0; c < sig.constants.size(); ++c) {
        int e = s.constant(c);
        if (e >= 0) col[e] = mix(col[e], 1000 + c);
    }
    for (std::size_t r = 0; r < sig.relations.size(); ++r)
        if (sig.relations[r].arity == 1)
            for (const auto& t : s.relation(r).tuples()) col[t[0]] = mix(col[t[0]], 2000 + r);
    for (int round = 0; round < rounds; ++round) {
        std::vector<std::vector<std::uint64_t>> seen(static_cast<std::size_t>(n));
        for (std::size_t r = 0; r < sig.relations.size(); ++r) {
            if (sig.relations[r].arity != 2) continue;
            for (const auto& t : s.relation(r).tuples()) {
                if (t[0] == t[1]) {
                    seen[t[0]].push_back(mix(3000 + r, 7));
                    continue;
                }
                seen[t[0]].push_back(mix(mix(4000 + r, 1), col[t[1]]));
                seen[t[1]].push_back(mix(mix(4000 + r, 2), col[t[0]]));
            }
        }
        std::vector<std::uint64_t> next(col.size());
        for (int v = 0; v < n; ++v) {
            std::sort(seen[v].begin(), seen[v].end());
            std::uint64_t h = col[v];
            for (auto x : seen[v]) h = mix(h, x);
            next[v] = h;
        }
        col = std::move(next);
    }
    return col;
}

}  // namespace detail

class Solver {
public:
    Solver(const LabeledForest& s, const Structure& a, const Structure& b, SolveOptions opt = {})
        : s_(s), a_(a), b_(b), opt_(opt) {
        require_same_signature(a, b);
        if (s.empty()) return;
        auto ca = detail::shallow_colours(a, 3);
        auto cb = detail::shallow_colours(b, 3);
        // duplicator preference: similar colour first, then similar provenance
        auto build = [&](const Structure& from, const std::vector<std::uint64_t>& cf, const Structure& to,
                         const std::vector<std::uint64_t>& ct) {
            std::vector<std::vector<int>> pref(static_cast<std::size_t>(from.size()));
            for (int c = 0; c < from.size(); ++c) {
                std::vector<std::pair<int, int>> scored;
                for (int d = 0; d < to.size(); ++d) {
                    int score = (cf[c] == ct[d]) ? 0 : 4;
                    if (from.has_provenance() && to.has_provenance()) {
                        const auto& pc = from.provenance()[c];
                        const auto& pd = to.provenance()[d];
                        if (pc.role != pd.role) score += 2;
                        if (pc.kind != pd.kind) score += 1;
                    }
                    scored.emplace_back(score, d);
                }
                std::stable_sort(scored.begin(), scored.end(),
                                 [](const auto& x, const auto& y) { return x.first < y.first; });
                for (auto& [sc, d] : scored) pref[c].push_back(d);
            }
            return pref;
        };
        pref_ab_ = build(a, ca, b, cb);
        pref_ba_ = build(b, cb, a, ca);
    }

    GameOutcome solve(const Tuple& abar = {}, const Tuple& bbar = {}) {
        if (abar.size() != bbar.size()) throw InvalidArgument("initial tuples differ in length");
        for (int x : abar)
            if (x < 0 || x >= a_.size()) throw InvalidArgument("initial tuple element out of range");
        for (int x : bbar)
            if (x < 0 || x >= b_.size()) throw InvalidArgument("initial tuple element out of range");
        abar0_ = abar;
        bbar0_ = bbar;
        GameOutcome out;
        ta_ = with_constants(a_, abar);
        tb_ = with_constants(b_, bbar);
        base_ = static_cast<int>(ta_.size()) - static_cast<int>(abar.size());
        bool spoiler = !detail::consistent_at(a_, ta_, b_, tb_, -1);
        int tree = -1;
        if (!spoiler)
            for (int r : s_.roots())
                if (round_wins(r)) {
                    spoiler = true;
                    tree = r;
                    break;
                }
        out.winner = spoiler ? Player::Spoiler : Player::Duplicator;
        out.positions = evaluated_;
        if (opt_.certificate) {
            if (spoiler) {
                SpoilerCertificate cert;
                cert.tree = tree;
                if (tree >= 0) build_spoiler(tree, cert);
                out.spoiler = std::move(cert);
            } else {
                DuplicatorCertificate cert;
                for (int r : s_.roots()) build_duplicator(r, cert);
                out.duplicator = std::move(cert);
            }
        }
        return out;
    }

    // Sentence (or formula in the initial tuple) true in a and false in b.
    Formula synthesize(const Tuple& abar = {}, const Tuple& bbar = {}) {
        GameOutcome o = solve(abar, bbar);
        if (o.winner != Player::Spoiler) throw InvalidArgument("the duplicator wins; no distinguishing formula exists");
        ta_ = with_constants(a_, abar);
        tb_ = with_constants(b_, bbar);
        if (!detail::consistent_at(a_, ta_, b_, tb_, -1)) return violated_literal_full();
        return synth(o.spoiler->tree);
    }

    std::size_t positions() const { return evaluated_; }

private:
    using Key = std::vector<int>;
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = 1469598103934665603ULL;
            for (int x : k) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
            return h;
        }
    };

    const Structure& side_of(int v) const { return s_.label(v) == Quant::Exists ? a_ : b_; }

    // Atomic type of candidate c appended to tuple t in m.
    static std::string ext_type(const Structure& m, Tuple& t, int c) {
        std::string out;
        const int len = static_cast<int>(t.size()) + 1;
        for (int x : t) out.push_back(x == c ? '1' : '0');
        t.push_back(c);
        const auto& rels = m.signature().relations;
        int buf[8];
        for (std::size_t r = 0; r < rels.size(); ++r) {
            const Relation& rel = m.relation(r);
            const int ar = rels[r].arity;
            if (ar > 8) throw InvalidArgument("relation arity above 8 unsupported by the solver");
            for (const auto& idx : detail::index_tuples_with_last(ar, len)) {
                for (int k = 0; k < ar; ++k) buf[k] = t[idx[k]];
                out.push_back(rel.contains(buf) ? '1' : '0');
            }
        }
        t.pop_back();
        return out;
    }

    Key key(int v) const {
        Key k;
        k.reserve(1 + ta_.size() + tb_.size());
        k.push_back(v);
        k.insert(k.end(), ta_.begin() + base_, ta_.end());
        k.insert(k.end(), tb_.begin() + base_, tb_.end());
        return k;
    }

    struct Round {
        bool exists;                 // spoiler picks in a
        std::vector<int> picks;      // spoiler candidates, fewest replies first
        std::vector<int> pick_type;  // type id per candidate, -1 when unmatched
        std::vector<int> reply_type; // type id per reply element
        std::vector<int> group_size; // replies per type id
    };

    Round prepare(int v) {
        Round rd;
        rd.exists = s_.label(v) == Quant::Exists;
        const Structure& sm = rd.exists ? a_ : b_;
        const Structure& om = rd.exists ? b_ : a_;
        Tuple& ts = rd.exists ? ta_ : tb_;
        Tuple& to = rd.exists ? tb_ : ta_;
        std::unordered_map<std::string, int> ids;
        rd.reply_type.resize(static_cast<std::size_t>(om.size()));
        for (int d = 0; d < om.size(); ++d) {
            auto [it, fresh] = ids.emplace(ext_type(om, to, d), static_cast<int>(ids.size()));
            if (fresh) rd.group_size.push_back(0);
            rd.reply_type[d] = it->second;
            ++rd.group_size[it->second];
        }
        rd.pick_type.resize(static_cast<std::size_t>(sm.size()));
        std::vector<std::pair<int, int>> order;
        for (int c = 0; c < sm.size(); ++c) {
            auto it = ids.find(ext_type(sm, ts, c));
            rd.pick_type[c] = it == ids.end() ? -1 : it->second;
            order.emplace_back(it == ids.end() ? 0 : rd.group_size[it->second], c);
        }
        std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto& [n, c] : order) rd.picks.push_back(c);
        return rd;
    }

    std::vector<int> ordered_replies(const Round& rd, int c) const {
        std::vector<int> out;
        const int t = rd.pick_type[c];
        if (t < 0) return out;
        for (int d : rd.exists ? pref_ab_[c] : pref_ba_[c])
            if (rd.reply_type[d] == t) out.push_back(d);
        return out;
    }

    void push(bool exists, int c, int d) {
        ta_.push_back(exists ? c : d);
        tb_.push_back(exists ? d : c);
    }
    void pop() {
        ta_.pop_back();
        tb_.pop_back();
    }

    // Does the spoiler win the continuation after this round's picks?
    bool child_wins(int v) {
        for (int w : s_.children(v))
            if (round_wins(w)) return true;
        return false;
    }

    // Spoiler wins when the round at v is about to be played.
    bool round_wins(int v) {
        Key k = key(v);
        auto it = memo_.find(k);
        if (it != memo_.end()) return it->second >= 0;
        if (++evaluated_ > opt_.budget) throw BudgetExceeded(opt_.budget);
        Round rd = prepare(v);
        int winner_pick = -1;
        const bool leaf = s_.is_leaf(v);
        for (int c : rd.picks) {
            if (rd.pick_type[c] < 0) {
                winner_pick = c;
                break;
            }
            if (leaf) continue;
            bool all_lose = true;
            for (int d : ordered_replies(rd, c)) {
                push(rd.exists, c, d);
                bool w = child_wins(v);
                pop();
                if (!w) {
                    all_lose = false;
                    break;
                }
            }
            if (all_lose) {
                winner_pick = c;
                break;
            }
        }
        memo_.emplace(std::move(k), winner_pick);
        return winner_pick >= 0;
    }

    int winning_pick(int v) {
        round_wins(v);
        return memo_.at(key(v));
    }

    void build_spoiler(int v, SpoilerCertificate& cert) {
        int c = winning_pick(v);
        std::size_t idx = cert.nodes.size();
        cert.nodes.push_back({v, c, {}});
        Round rd = prepare(v);
        for (int d : ordered_replies(rd, c)) {
            push(rd.exists, c, d);
            int child = -1;
            for (int w : s_.children(v))
                if (round_wins(w)) {
                    child = w;
                    break;
                }
            int next = static_cast<int>(cert.nodes.size());
            build_spoiler(child, cert);
            cert.nodes[idx].branches.push_back({d, child, next});
            pop();
        }
    }

    void build_duplicator(int v, DuplicatorCertificate& cert) {
        Round rd = prepare(v);
        Tuple abar(ta_.begin() + base_, ta_.end()), bbar(tb_.begin() + base_, tb_.end());
        for (int c = 0; c < (rd.exists ? a_ : b_).size(); ++c) {
            DuplicatorCertificate::Key ck{v, abar, bbar, c};
            if (cert.table.count(ck)) continue;
            for (int d : ordered_replies(rd, c)) {
                push(rd.exists, c, d);
                bool w = child_wins(v);
                if (!w) {
                    cert.table.emplace(ck, d);
                    for (int u : s_.children(v)) build_duplicator(u, cert);
                    pop();
                    break;
                }
                pop();
            }
        }
    }

    std::string term(int i) const {
        if (i < base_) return a_.signature().constants[static_cast<std::size_t>(i)];
        return "x" + std::to_string(i - base_ + 1);
    }

    // A fact involving the last position on which the tuples disagree,
    // oriented to hold in a.
    Formula violated_literal(int must) const {
        const int len = static_cast<int>(ta_.size());
        for (int i = 0; i < len; ++i)
            for (int j = 0; j < len; ++j) {
                if (must >= 0 && i != must && j != must) continue;
                bool ea = ta_[i] == ta_[j], eb = tb_[i] == tb_[j];
                if (ea != eb) return ea ? Formula::eq(term(i), term(j)) : Formula::neq(term(i), term(j));
            }
        const auto& rels = a_.signature().relations;
        for (std::size_t r = 0; r < rels.size(); ++r) {
            Tuple xa(rels[r].arity), xb(rels[r].arity);
            std::optional<Formula> found;
            detail::for_index_tuples(rels[r].arity, len, must, [&](const Tuple& idx) {
                if (found) return;
                for (int k = 0; k < rels[r].arity; ++k) {
                    xa[k] = ta_[idx[k]];
                    xb[k] = tb_[idx[k]];
                }
                bool ha = a_.relation(r).contains(xa), hb = b_.relation(r).contains(xb);
                if (ha == hb) return;
                std::vector<std::string> args;
                for (int k : idx) args.push_back(term(k));
                found = ha ? Formula::atom(rels[r].name, args) : Formula::neg_atom(rels[r].name, args);
            });
            if (found) return *found;
        }
        throw InvalidArgument("tuples agree; no violated literal");
    }

    Formula violated_literal_full() const { return violated_literal(-1); }

    static void add_unique(std::vector<Formula>& parts, std::set<std::string>& seen, Formula f) {
        if (seen.insert(f.str()).second) parts.push_back(std::move(f));
    }

    Formula synth(int v) {
        int c = winning_pick(v);
        Round rd = prepare(v);
        const std::string var = "x" + std::to_string(ta_.size() - static_cast<std::size_t>(base_) + 1);
        const int last = static_cast<int>(ta_.size());
        std::vector<Formula> parts;
        std::set<std::string> seen;
        const Structure& om = rd.exists ? b_ : a_;
        for (int d = 0; d < om.size(); ++d) {
            push(rd.exists, c, d);
            if (!detail::consistent_at(a_, ta_, b_, tb_, last)) {
                add_unique(parts, seen, violated_literal(last));
            } else {
                int child = -1;
                for (int w : s_.children(v))
                    if (round_wins(w)) {
                        child = w;
                        break;
                    }
                add_unique(parts, seen, synth(child));
            }
            pop();
        }
        if (rd.exists) return Formula::exists(var, parts.size() == 1 ? parts[0] : Formula::conj(parts));
        return Formula::forall(var, parts.size() == 1 ? parts[0] : Formula::disj(parts));
    }

    const LabeledForest& s_;
    const Structure& a_;
    const Structure& b_;
    SolveOptions opt_;
    Tuple abar0_, bbar0_;
    Tuple ta_, tb_;
    int base_ = 0;
    std::size_t evaluated_ = 0;
    std::unordered_map<Key, int, KeyHash> memo_;
    std::vector<std::vector<int>> pref_ab_, pref_ba_;
};

inline GameOutcome solve(const LabeledForest& s, const Structure& a, const Structure& b, const Tuple& abar = {},
                         const Tuple& bbar = {}, SolveOptions opt = {}) {
    Solver solver(s, a, b, opt);
    return solver.solve(abar, bbar);
}

// Standard n-round game: the forest of the two perfect binary trees.
inline LabeledForest classic_forest(int n) {
    if (n < 1) throw InvalidArgument("classic_ef needs n >= 1");
    return forest_union({perfect_binary(Quant::Exists, n), perfect_binary(Quant::Forall, n)});
}

inline GameOutcome classic_ef(int n, const Structure& a, const Structure& b, SolveOptions opt = {}) {
    return solve(classic_forest(n), a, b, {}, {}, opt);
}

inline Formula synthesize_distinguisher(const LabeledForest& s, const Structure& a, const Structure& b,
                                        SolveOptions opt = {}) {
    Solver solver(s, a, b, opt);
    return solver.synthesize();
}

// Replays a spoiler certificate against every duplicator reply.
inline bool replay_spoiler(const LabeledForest& s, const Structure& a, const Structure& b,
                           const SpoilerCertificate& cert, const Tuple& abar0 = {}, const Tuple& bbar0 = {}) {
    if (!partial_iso(a, abar0, b, bbar0)) return true;
    if (cert.tree < 0) return false;
    const auto& roots = s.roots();
    if (std::find(roots.begin(), roots.end(), cert.tree) == roots.end()) return false;
    std::function<bool(int, Tuple&, Tuple&)> check = [&](int k, Tuple& abar, Tuple& bbar) -> bool {
        if (k < 0 || k >= static_cast<int>(cert.nodes.size())) return false;
        const auto& node = cert.nodes[k];
        const bool ex = s.label(node.token) == Quant::Exists;
        const Structure& other = ex ? b : a;
        if (node.pick < 0 || node.pick >= (ex ? a : b).size()) return false;
        for (int d = 0; d < other.size(); ++d) {
            abar.push_back(ex ? node.pick : d);
            bbar.push_back(ex ? d : node.pick);
            bool ok = true;
            if (partial_iso(a, abar, b, bbar)) {
                auto it = std::find_if(node.branches.begin(), node.branches.end(),
                                       [&](const auto& br) { return br.reply == d; });
                if (it == node.branches.end() || s.parent(it->child) != node.token ||
                    cert.nodes.at(static_cast<std::size_t>(it->next)).token != it->child)
                    ok = false;
                else
                    ok = check(it->next, abar, bbar);
            }
            abar.pop_back();
            bbar.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    Tuple abar = abar0, bbar = bbar0;
    if (cert.nodes.empty() || cert.nodes[0].token != cert.tree) return false;
    return check(0, abar, bbar);
}

// Replays a duplicator certificate against every spoiler line.
inline bool replay_duplicator(const LabeledForest& s, const Structure& a, const Structure& b,
                              const DuplicatorCertificate& cert, const Tuple& abar0 = {}, const Tuple& bbar0 = {}) {
    if (!partial_iso(a, abar0, b, bbar0)) return false;
    std::function<bool(int, Tuple&, Tuple&)> check = [&](int v, Tuple& abar, Tuple& bbar) -> bool {
        const bool ex = s.label(v) == Quant::Exists;
        for (int c = 0; c < (ex ? a : b).size(); ++c) {
            auto d = cert.reply(v, abar, bbar, c);
            if (!d) return false;
            abar.push_back(ex ? c : *d);
            bbar.push_back(ex ? *d : c);
            bool ok = partial_iso(a, abar, b, bbar);
            for (int w : s.children(v)) {
                if (!ok) break;
                ok = check(w, abar, bbar);
            }
            abar.pop_back();
            bbar.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    for (int r : s.roots()) {
        Tuple abar = abar0, bbar = bbar0;
        if (!check(r, abar, bbar)) return false;
    }
    return true;
}

}  // namespace qslab
