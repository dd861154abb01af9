#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "prefix.hpp"

namespace qslab {

// Ordered forest with nodes labelled E or A. Node ids are dense and
// every child has a larger id than its parent when built through add_node.
class LabeledForest {
public:
    struct Node {
        Quant label;
        int parent = -1;
        std::vector<int> children;
    };

    int add_node(Quant label, int parent = -1) {
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back({label, parent, {}});
        if (parent < 0) roots_.push_back(id);
        else nodes_.at(parent).children.push_back(id);
        return id;
    }

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    const std::vector<int>& roots() const { return roots_; }
    const Node& node(int v) const { return nodes_.at(v); }
    Quant label(int v) const { return nodes_.at(v).label; }
    const std::vector<int>& children(int v) const { return nodes_.at(v).children; }
    int parent(int v) const { return nodes_.at(v).parent; }
    bool is_leaf(int v) const { return nodes_.at(v).children.empty(); }

    // Copy of the subtree hanging at v as a one-tree forest.
    LabeledForest subtree(int v) const {
        LabeledForest out;
        out.graft(*this, v, -1);
        return out;
    }

    std::vector<LabeledForest> trees() const {
        std::vector<LabeledForest> out;
        for (int r : roots_) out.push_back(subtree(r));
        return out;
    }

    // Appends a copy of the subtree of `src` at v below `parent` (or as a root).
    int graft(const LabeledForest& src, int v, int parent) {
        int id = add_node(src.label(v), parent);
        for (int c : src.children(v)) graft(src, c, id);
        return id;
    }

    void append(const LabeledForest& other) {
        for (int r : other.roots()) graft(other, r, -1);
    }

    int height() const {
        int h = -1;
        std::function<void(int, int)> go = [&](int v, int d) {
            h = std::max(h, d);
            for (int c : children(v)) go(c, d + 1);
        };
        for (int r : roots_) go(r, 0);
        return h;
    }

    int rank() const { return empty() ? 0 : height() + 1; }

    std::vector<int> preorder() const {
        std::vector<int> out;
        std::function<void(int)> go = [&](int v) {
            out.push_back(v);
            for (int c : children(v)) go(c);
        };
        for (int r : roots_) go(r);
        return out;
    }

    std::string tree_str(int v) const {
        std::string s = "(";
        s += to_char(label(v));
        for (int c : children(v)) {
            s += ' ';
            s += tree_str(c);
        }
        s += ')';
        return s;
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < roots_.size(); ++i) {
            if (i) s += ' ';
            s += tree_str(roots_[i]);
        }
        return s;
    }

    static LabeledForest parse(std::string_view text) {
        LabeledForest f;
        std::size_t pos = 0;
        auto skip = [&] {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        };
        std::function<void(int)> tree = [&](int parent) {
            skip();
            if (pos >= text.size() || text[pos] != '(') throw ParseError("expected '('", pos);
            ++pos;
            skip();
            if (pos >= text.size() || (text[pos] != 'E' && text[pos] != 'A'))
                throw ParseError("expected label E or A", pos);
            int id = f.add_node(quant_from_char(text[pos]), parent);
            ++pos;
            for (;;) {
                skip();
                if (pos >= text.size()) throw ParseError("unterminated tree", pos);
                if (text[pos] == ')') {
                    ++pos;
                    return;
                }
                tree(id);
            }
        };
        for (;;) {
            skip();
            if (pos >= text.size()) break;
            tree(-1);
        }
        return f;
    }

    friend bool operator==(const LabeledForest& a, const LabeledForest& b) { return a.str() == b.str(); }

private:
    std::vector<Node> nodes_;
    std::vector<int> roots_;
};

using LabeledTree = LabeledForest;

inline LabeledForest forest_union(const std::vector<LabeledForest>& parts) {
    LabeledForest out;
    for (const LabeledForest& f : parts) out.append(f);
    return out;
}

// Perfect binary tree of height n-1 whose inner nodes have an E child then an A child.
inline LabeledTree perfect_binary(Quant label, int n) {
    if (n < 1) throw InvalidArgument("perfect_binary needs n >= 1");
    LabeledTree t;
    std::function<void(Quant, int, int)> go = [&](Quant l, int parent, int depth) {
        int id = t.add_node(l, parent);
        if (depth + 1 < n) {
            go(Quant::Exists, id, depth + 1);
            go(Quant::Forall, id, depth + 1);
        }
    };
    go(label, -1, 0);
    return t;
}

// Single path reading p.
inline LabeledTree path_tree(const Prefix& p) {
    LabeledTree t;
    int parent = -1;
    for (Quant q : p.letters()) parent = t.add_node(q, parent);
    return t;
}

// Node map from s1 into s2; image[v] for each node v of s1.
using Embedding = std::vector<int>;

namespace detail {

inline bool is_strict_descendant(const LabeledForest& s, int anc, int v) {
    for (int u = s.parent(v); u >= 0; u = s.parent(u))
        if (u == anc) return true;
    return false;
}

}  // namespace detail

// Label-preserving map sending arcs to non-trivial downward paths; leftmost witness.
inline std::optional<Embedding> embeds(const LabeledForest& s1, const LabeledForest& s2) {
    const int n1 = static_cast<int>(s1.size());
    const int n2 = static_cast<int>(s2.size());
    std::vector<int> order2 = s2.preorder();
    // descendants in preorder for each node of s2
    std::vector<std::vector<int>> desc(n2);
    for (int v : order2)
        for (int u = s2.parent(v); u >= 0; u = s2.parent(u)) desc[u].push_back(v);

    std::vector<signed char> memo(static_cast<std::size_t>(n1) * std::max(n2, 1), -1);
    std::function<bool(int, int)> can = [&](int x, int v) -> bool {
        signed char& m = memo[static_cast<std::size_t>(x) * n2 + v];
        if (m >= 0) return m;
        bool ok = s1.label(x) == s2.label(v);
        for (int c : s1.children(x)) {
            if (!ok) break;
            ok = std::any_of(desc[v].begin(), desc[v].end(), [&](int w) { return can(c, w); });
        }
        m = ok;
        return ok;
    };

    Embedding img(n1, -1);
    std::function<void(int, int)> assign = [&](int x, int v) {
        img[x] = v;
        for (int c : s1.children(x))
            for (int w : desc[v])
                if (can(c, w)) {
                    assign(c, w);
                    break;
                }
    };
    for (int r : s1.roots()) {
        bool found = false;
        for (int v : order2)
            if (can(r, v)) {
                assign(r, v);
                found = true;
                break;
            }
        if (!found) return std::nullopt;
    }
    return img;
}

inline bool is_embedding(const LabeledForest& s1, const LabeledForest& s2, const Embedding& e) {
    if (e.size() != s1.size()) return false;
    for (std::size_t x = 0; x < s1.size(); ++x) {
        int v = e[x];
        if (v < 0 || v >= static_cast<int>(s2.size())) return false;
        if (s1.label(static_cast<int>(x)) != s2.label(v)) return false;
        int p = s1.parent(static_cast<int>(x));
        if (p >= 0 && !detail::is_strict_descendant(s2, e[p], v)) return false;
    }
    return true;
}

// p is a subsequence of the word read along some downward path.
inline bool word_in(const LabeledForest& s, const Prefix& p) {
    if (s.empty()) return false;
    if (p.empty()) return true;
    std::vector<std::size_t> matched(s.size(), 0);
    for (int v : s.preorder()) {
        std::size_t before = s.parent(v) >= 0 ? matched[s.parent(v)] : 0;
        matched[v] = before + (before < p.size() && s.label(v) == p[before] ? 1 : 0);
        if (matched[v] == p.size()) return true;
    }
    return false;
}

inline PrefixSet words_upto(const LabeledForest& s, std::size_t L) {
    PrefixSet out;
    for (Prefix& p : all_prefixes_upto(L))
        if (word_in(s, p)) out.insert(std::move(p));
    return out;
}

// Words read along root-to-leaf paths.
inline std::vector<Prefix> maximal_path_words(const LabeledForest& s) {
    std::vector<Prefix> out;
    std::vector<Quant> cur;
    std::function<void(int)> go = [&](int v) {
        cur.push_back(s.label(v));
        if (s.is_leaf(v)) out.emplace_back(cur);
        for (int c : s.children(v)) go(c);
        cur.pop_back();
    };
    for (int r : s.roots()) go(r);
    return out;
}

inline bool word_subset(const LabeledForest& s1, const LabeledForest& s2) {
    if (s1.empty()) return true;
    if (s2.empty()) return false;
    for (const Prefix& w : maximal_path_words(s1))
        if (!word_in(s2, w)) return false;
    return true;
}

// At most two trees: the E-initial words first, then the A-initial ones.
inline LabeledForest forest_of(const PrefixSet& P) {
    LabeledForest out;
    std::function<void(const PrefixSet&, int)> build = [&](const PrefixSet& ps, int parent) {
        for (Quant q : {Quant::Exists, Quant::Forall}) {
            PrefixSet tails;
            bool any = false;
            for (const Prefix& w : ps)
                if (!w.empty() && w[0] == q) {
                    any = true;
                    if (w.size() > 1) tails.insert(w.tail());
                }
            if (!any) continue;
            int id = out.add_node(q, parent);
            build(tails, id);
        }
    };
    build(P, -1);
    return out;
}

// No two sibling subtrees embed into one another, at any node.
inline bool is_irreducible(const LabeledTree& t) {
    for (std::size_t v = 0; v < t.size(); ++v) {
        const auto& ch = t.children(static_cast<int>(v));
        for (std::size_t i = 0; i < ch.size(); ++i)
            for (std::size_t j = 0; j < ch.size(); ++j)
                if (i != j && embeds(t.subtree(ch[i]), t.subtree(ch[j]))) return false;
    }
    return true;
}

// Smallest piece of s1 (a node plus a parent-closed set of its descendants)
// that does not embed into s2; ties go to the leftmost root, then the
// lexicographically first node set in preorder.
inline LabeledTree minimal_nonembeddable_subtree(const LabeledForest& s1, const LabeledForest& s2,
                                                 std::size_t max_nodes = 24) {
    if (embeds(s1, s2)) throw InvalidArgument("s1 embeds into s2; no non-embeddable subtree exists");
    if (s1.size() > max_nodes) throw InvalidArgument("forest too large for subtree enumeration");

    std::vector<int> order = s1.preorder();
    std::optional<LabeledTree> best;
    std::size_t best_size = 0;

    auto materialize = [&](int root, const std::vector<char>& keep) {
        LabeledTree t;
        std::function<void(int, int)> go = [&](int v, int parent) {
            int id = t.add_node(s1.label(v), parent);
            for (int c : s1.children(v))
                if (keep[c]) go(c, id);
        };
        go(root, -1);
        return t;
    };

    for (int root : order) {
        std::vector<int> desc;
        for (int v : order)
            if (detail::is_strict_descendant(s1, root, v)) desc.push_back(v);
        std::vector<char> keep(s1.size(), 0);
        keep[root] = 1;
        // enumerate parent-closed subsets of desc in preorder, smallest count first
        for (std::size_t k = 0; k <= desc.size(); ++k) {
            if (best && k + 1 >= best_size) break;
            std::function<bool(std::size_t, std::size_t)> choose = [&](std::size_t idx, std::size_t left) -> bool {
                if (left == 0) {
                    LabeledTree t = materialize(root, keep);
                    if (!embeds(t, s2)) {
                        best = std::move(t);
                        best_size = k + 1;
                        return true;
                    }
                    return false;
                }
                for (std::size_t i = idx; i + left <= desc.size(); ++i) {
                    int v = desc[i];
                    if (!keep[s1.parent(v)]) continue;
                    keep[v] = 1;
                    bool done = choose(i + 1, left - 1);
                    keep[v] = 0;
                    if (done) return true;
                }
                return false;
            };
            if (choose(0, k)) break;
        }
    }
    return *best;
}

}  // namespace qslab
