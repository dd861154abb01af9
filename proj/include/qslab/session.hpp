#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "forest.hpp"
#include "formula.hpp"
#include "game.hpp"
#include "structure.hpp"

namespace qslab {

// First literal on which the picked tuples (with constants) disagree,
// oriented to hold in a; none while they form a partial isomorphism.
inline std::optional<Formula> violated_literal(const Structure& a, const Tuple& abar, const Structure& b,
                                               const Tuple& bbar) {
    Tuple ta = with_constants(a, abar), tb = with_constants(b, bbar);
    const auto& consts = a.signature().constants;
    const int base = static_cast<int>(consts.size());
    auto term = [&](int i) { return i < base ? consts[static_cast<std::size_t>(i)] : "x" + std::to_string(i - base + 1); };
    const int len = static_cast<int>(ta.size());
    for (int i = 0; i < len; ++i)
        for (int j = i + 1; j < len; ++j)
            if ((ta[i] == ta[j]) != (tb[i] == tb[j]))
                return ta[i] == ta[j] ? Formula::eq(term(i), term(j)) : Formula::neq(term(i), term(j));
    const auto& rels = a.signature().relations;
    for (std::size_t r = 0; r < rels.size(); ++r) {
        std::optional<Formula> found;
        Tuple xa(rels[r].arity), xb(rels[r].arity);
        detail::for_index_tuples(rels[r].arity, len, -1, [&](const Tuple& idx) {
            if (found) return;
            for (int k = 0; k < rels[r].arity; ++k) {
                xa[k] = ta[idx[k]];
                xb[k] = tb[idx[k]];
            }
            bool ha = a.relation(r).contains(xa), hb = b.relation(r).contains(xb);
            if (ha == hb) return;
            std::vector<std::string> args;
            for (int k : idx) args.push_back(term(k));
            found = ha ? Formula::atom(rels[r].name, args) : Formula::neg_atom(rels[r].name, args);
        });
        if (found) return found;
    }
    return std::nullopt;
}

// Copies of the given subtrees, cut below `depth` levels (all levels if depth < 0).
inline LabeledForest sub_forest(const LabeledForest& s, const std::vector<int>& roots, int depth = -1) {
    LabeledForest out;
    std::function<void(int, int, int)> go = [&](int v, int parent, int d) {
        int id = out.add_node(s.label(v), parent);
        if (depth >= 0 && d + 1 >= depth) return;
        for (int c : s.children(v)) go(c, id, d + 1);
    };
    for (int r : roots) go(r, -1, 0);
    return out;
}

enum class Phase { ChooseTree, SpoilerPick, DuplicatorPick, ChooseChild, Over };

inline std::string to_string(Phase p) {
    switch (p) {
        case Phase::ChooseTree: return "choose_tree";
        case Phase::SpoilerPick: return "spoiler_pick";
        case Phase::DuplicatorPick: return "duplicator_pick";
        case Phase::ChooseChild: return "choose_child";
        case Phase::Over: return "over";
    }
    return "";
}

// A move: a forest node for tree/child choices, an element for picks.
struct Move {
    Phase phase;
    int value;
    friend bool operator==(const Move&, const Move&) = default;
};

struct SessionState {
    Phase phase = Phase::ChooseTree;
    int token = -1;         // current forest node, -1 before a tree is chosen
    Tuple abar, bbar;
    int pending = -1;       // spoiler's pick awaiting a reply
    std::optional<Player> winner;
    std::optional<Formula> failure;  // violated literal when the spoiler has won
};

// Step-wise play of G_s(a, b) with undo and branching.
class Session {
public:
    Session(LabeledForest s, Structure a, Structure b, std::optional<Player> human = std::nullopt,
            SolveOptions opt = {})
        : s_(std::move(s)), a_(std::move(a)), b_(std::move(b)), human_(human), opt_(opt) {
        require_same_signature(a_, b_);
        opt_.certificate = true;
        SessionState st;
        st.failure = violated_literal(a_, {}, b_, {});
        if (st.failure) finish(st, Player::Spoiler);
        else if (s_.empty()) finish(st, Player::Duplicator);
        history_.push_back(std::move(st));
    }

    const LabeledForest& forest() const { return s_; }
    const Structure& a() const { return a_; }
    const Structure& b() const { return b_; }
    std::optional<Player> human() const { return human_; }
    const SessionState& state() const { return history_.back(); }
    const std::vector<SessionState>& history() const { return history_; }
    const std::vector<Move>& moves_made() const { return moves_; }

    Player to_move() const {
        return state().phase == Phase::DuplicatorPick ? Player::Duplicator : Player::Spoiler;
    }
    bool over() const { return state().phase == Phase::Over; }

    // The structure the current pick is made in.
    bool picks_in_a() const {
        const SessionState& st = state();
        bool ex = st.token >= 0 && s_.label(st.token) == Quant::Exists;
        return st.phase == Phase::SpoilerPick ? ex : !ex;
    }

    std::vector<Move> legal_moves() const {
        const SessionState& st = state();
        std::vector<Move> out;
        switch (st.phase) {
            case Phase::ChooseTree:
                for (int r : s_.roots()) out.push_back({st.phase, r});
                break;
            case Phase::ChooseChild:
                for (int c : s_.children(st.token)) out.push_back({st.phase, c});
                break;
            case Phase::SpoilerPick:
            case Phase::DuplicatorPick: {
                int n = picks_in_a() ? a_.size() : b_.size();
                for (int e = 0; e < n; ++e) out.push_back({st.phase, e});
                break;
            }
            case Phase::Over: break;
        }
        return out;
    }

    void apply(const Move& mv) {
        SessionState st = state();
        if (st.phase == Phase::Over) throw IllegalMove("the game is over");
        if (mv.phase != st.phase) throw IllegalMove("expected a " + to_string(st.phase) + " move");
        switch (st.phase) {
            case Phase::ChooseTree: {
                const auto& roots = s_.roots();
                if (std::find(roots.begin(), roots.end(), mv.value) == roots.end())
                    throw IllegalMove("node " + std::to_string(mv.value) + " is not a root of the forest");
                st.token = mv.value;
                st.phase = Phase::SpoilerPick;
                break;
            }
            case Phase::ChooseChild: {
                const auto& ch = s_.children(st.token);
                if (std::find(ch.begin(), ch.end(), mv.value) == ch.end())
                    throw IllegalMove("node " + std::to_string(mv.value) + " is not a child of the token");
                st.token = mv.value;
                st.phase = Phase::SpoilerPick;
                break;
            }
            case Phase::SpoilerPick: {
                check_element(mv.value);
                st.pending = mv.value;
                st.phase = Phase::DuplicatorPick;
                break;
            }
            case Phase::DuplicatorPick: {
                check_element(mv.value);
                bool ex = s_.label(st.token) == Quant::Exists;
                st.abar.push_back(ex ? st.pending : mv.value);
                st.bbar.push_back(ex ? mv.value : st.pending);
                st.pending = -1;
                st.failure = violated_literal(a_, st.abar, b_, st.bbar);
                if (st.failure) finish(st, Player::Spoiler);
                else if (s_.is_leaf(st.token)) finish(st, Player::Duplicator);
                else st.phase = Phase::ChooseChild;
                break;
            }
            case Phase::Over: break;
        }
        history_.push_back(std::move(st));
        moves_.push_back(mv);
    }

    // Winning move for the side to move when one exists; otherwise the move
    // that resists longest, ties broken by the smallest value.
    Move engine_move() const {
        const SessionState& st = state();
        switch (st.phase) {
            case Phase::ChooseTree:
            case Phase::ChooseChild: {
                std::vector<int> options = st.phase == Phase::ChooseTree ? s_.roots() : s_.children(st.token);
                LabeledForest sub = sub_forest(s_, options);
                GameOutcome o = solve(sub, a_, b_, st.abar, st.bbar, opt_);
                int pick = options.at(0);
                if (o.winner == Player::Spoiler && o.spoiler->tree >= 0) {
                    const auto& roots = sub.roots();
                    auto at = std::find(roots.begin(), roots.end(), o.spoiler->tree) - roots.begin();
                    pick = options.at(static_cast<std::size_t>(at));
                }
                return {st.phase, pick};
            }
            case Phase::SpoilerPick: {
                LabeledForest sub = sub_forest(s_, {st.token});
                GameOutcome o = solve(sub, a_, b_, st.abar, st.bbar, opt_);
                if (o.winner == Player::Spoiler && !o.spoiler->nodes.empty()) return {st.phase, o.spoiler->nodes[0].pick};
                return {st.phase, 0};
            }
            case Phase::DuplicatorPick: {
                bool ex = s_.label(st.token) == Quant::Exists;
                int n = ex ? b_.size() : a_.size();
                int best = 0, best_score = -1;
                for (int d = 0; d < n; ++d) {
                    int score = resistance(st, ex, d);
                    if (score > best_score) best = d, best_score = score;
                    if (score == kWinning) break;
                }
                return {st.phase, best};
            }
            case Phase::Over: break;
        }
        throw IllegalMove("the game is over");
    }

    void undo() {
        if (history_.size() <= 1) throw IllegalMove("nothing to undo");
        history_.pop_back();
        moves_.pop_back();
    }

    // Independent copy of this session at its current (or an earlier) step.
    Session branch(std::optional<std::size_t> step = std::nullopt) const {
        Session out = *this;
        std::size_t keep = step ? *step + 1 : history_.size();
        if (keep == 0 || keep > history_.size()) throw InvalidArgument("no such step to branch from");
        out.history_.resize(keep);
        out.moves_.resize(keep - 1);
        return out;
    }

private:
    static constexpr int kWinning = 1 << 20;

    void check_element(int e) const {
        int n = picks_in_a() ? a_.size() : b_.size();
        if (e < 0 || e >= n)
            throw IllegalMove("element " + std::to_string(e) + " is outside " + (picks_in_a() ? "a" : "b"));
    }

    static void finish(SessionState& st, Player w) {
        st.phase = Phase::Over;
        st.winner = w;
    }

    // Rounds the duplicator survives after replying d; kWinning if she wins.
    int resistance(const SessionState& st, bool ex, int d) const {
        Tuple abar = st.abar, bbar = st.bbar;
        abar.push_back(ex ? st.pending : d);
        bbar.push_back(ex ? d : st.pending);
        if (!partial_iso(a_, abar, b_, bbar)) return 0;
        const auto& ch = s_.children(st.token);
        if (ch.empty()) return kWinning;
        const int height = sub_forest(s_, ch).rank();
        for (int depth = 1; depth <= height; ++depth) {
            GameOutcome o = solve(sub_forest(s_, ch, depth), a_, b_, abar, bbar, {opt_.budget, false});
            if (o.winner == Player::Spoiler) return depth;
        }
        return kWinning;
    }

    LabeledForest s_;
    Structure a_, b_;
    std::optional<Player> human_;
    SolveOptions opt_;
    std::vector<SessionState> history_;
    std::vector<Move> moves_;
};

// Sessions by id; each mutation runs under the store lock.
class SessionStore {
public:
    std::string create(Session s) {
        std::lock_guard<std::mutex> lock(mu_);
        std::string id = "s" + std::to_string(++next_);
        sessions_.emplace(id, std::make_shared<Session>(std::move(s)));
        return id;
    }

    template <class F>
    auto with(const std::string& id, F&& f) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw std::out_of_range("unknown session '" + id + "'");
        return f(*it->second);
    }

    std::string branch(const std::string& id, std::optional<std::size_t> step) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw std::out_of_range("unknown session '" + id + "'");
        std::string nid = "s" + std::to_string(++next_);
        sessions_.emplace(nid, std::make_shared<Session>(it->second->branch(step)));
        return nid;
    }

private:
    std::mutex mu_;
    std::size_t next_ = 0;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace qslab
