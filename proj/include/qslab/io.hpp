#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "forest.hpp"
#include "formula.hpp"
#include "game.hpp"
#include "session.hpp"
#include "structure.hpp"

namespace qslab {

using json = nlohmann::json;

// Structure JSON: signature, size, relations, constants, optional order name,
// optional per-element provenance.
inline json to_json(const Structure& s) {
    const Signature& sig = s.signature();
    json out;
    json rels = json::array();
    for (const auto& r : sig.relations) rels.push_back({r.name, r.arity});
    out["signature"] = {{"relations", rels}, {"constants", sig.constants}};
    out["size"] = s.size();
    json rv = json::object();
    for (std::size_t i = 0; i < sig.relations.size(); ++i) {
        json ts = json::array();
        for (const Tuple& t : s.relation(i).tuples()) ts.push_back(t);
        rv[sig.relations[i].name] = ts;
    }
    out["relations"] = rv;
    json cv = json::object();
    for (std::size_t i = 0; i < sig.constants.size(); ++i) cv[sig.constants[i]] = s.constant(i);
    out["constants"] = cv;
    if (s.order()) out["order"] = *s.order();
    if (s.has_provenance()) {
        json prov = json::array();
        for (const ElementInfo& e : s.provenance())
            prov.push_back({{"label", e.label}, {"parent", e.parent}, {"role", e.role}, {"kind", e.kind}, {"unit", e.unit}, {"branch", e.branch}});
        out["provenance"] = prov;
    }
    return out;
}

inline Structure structure_from_json(const json& j) {
    try {
        std::vector<RelationSymbol> rels;
        for (const auto& r : j.at("signature").at("relations")) rels.push_back({r.at(0).get<std::string>(), r.at(1).get<int>()});
        std::vector<std::string> consts;
        if (j.at("signature").contains("constants")) consts = j.at("signature").at("constants").get<std::vector<std::string>>();
        Structure s(Signature(std::move(rels), std::move(consts)), j.at("size").get<int>());
        if (j.contains("relations"))
            for (const auto& [name, ts] : j.at("relations").items()) {
                const int arity = s.relation(name).arity();
                for (const auto& t : ts) {
                    Tuple tup = t.get<Tuple>();
                    if (static_cast<int>(tup.size()) != arity)
                        throw InvalidArgument("tuple of wrong arity in relation '" + name + "'");
                    for (int x : tup)
                        if (x < 0 || x >= s.size()) throw InvalidArgument("element out of range in '" + name + "'");
                    s.add(name, tup);
                }
            }
        if (j.contains("constants"))
            for (const auto& [name, v] : j.at("constants").items()) s.set_constant(name, v.get<int>());
        if (j.contains("order") && !j.at("order").is_null()) s.set_order(j.at("order").get<std::string>());
        if (j.contains("provenance")) {
            std::vector<ElementInfo> prov;
            for (const auto& e : j.at("provenance"))
                prov.push_back({e.value("label", ""), e.value("parent", -1), e.value("role", ""), e.value("kind", ""),
                                e.value("unit", -1), e.value("branch", -1)});
            s.set_provenance(std::move(prov));
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed structure JSON: ") + e.what());
    }
}

inline json to_json(const SpoilerCertificate& c, const LabeledForest& s, const Tuple& abar0 = {},
                    const Tuple& bbar0 = {}) {
    std::vector<std::string> hashes(c.nodes.size());
    std::function<void(int, Tuple&, Tuple&)> walk = [&](int k, Tuple& abar, Tuple& bbar) {
        const auto& n = c.nodes.at(static_cast<std::size_t>(k));
        hashes[k] = hash_hex(position_hash(n.token, abar, bbar));
        const bool ex = s.label(n.token) == Quant::Exists;
        for (const auto& br : n.branches) {
            abar.push_back(ex ? n.pick : br.reply);
            bbar.push_back(ex ? br.reply : n.pick);
            walk(br.next, abar, bbar);
            abar.pop_back();
            bbar.pop_back();
        }
    };
    if (!c.nodes.empty()) {
        Tuple abar = abar0, bbar = bbar0;
        walk(0, abar, bbar);
    }
    json nodes = json::array();
    for (std::size_t k = 0; k < c.nodes.size(); ++k) {
        const auto& n = c.nodes[k];
        json brs = json::array();
        for (const auto& br : n.branches) brs.push_back({{"reply", br.reply}, {"child", br.child}, {"next", br.next}});
        nodes.push_back({{"token", n.token}, {"pick", n.pick}, {"position_hash", hashes[k]}, {"branches", brs}});
    }
    return {{"kind", "spoiler_move_tree"}, {"tree", c.tree}, {"nodes", nodes}};
}

inline json to_json(const DuplicatorCertificate& c) {
    json rows = json::array();
    for (const auto& [k, reply] : c.table)
        rows.push_back({{"token", k.token},
                        {"abar", k.abar},
                        {"bbar", k.bbar},
                        {"pick", k.pick},
                        {"reply", reply},
                        {"position_hash", hash_hex(position_hash(k.token, k.abar, k.bbar))}});
    return {{"kind", "duplicator_response_table"}, {"entries", rows.size()}, {"table", rows}};
}

inline SpoilerCertificate spoiler_certificate_from_json(const json& j) {
    SpoilerCertificate c;
    c.tree = j.at("tree").get<int>();
    for (const auto& n : j.at("nodes")) {
        SpoilerCertificate::Node node{n.at("token").get<int>(), n.at("pick").get<int>(), {}};
        for (const auto& br : n.at("branches"))
            node.branches.push_back({br.at("reply").get<int>(), br.at("child").get<int>(), br.at("next").get<int>()});
        c.nodes.push_back(std::move(node));
    }
    return c;
}

inline DuplicatorCertificate duplicator_certificate_from_json(const json& j) {
    DuplicatorCertificate c;
    for (const auto& r : j.at("table"))
        c.table[{r.at("token").get<int>(), r.at("abar").get<Tuple>(), r.at("bbar").get<Tuple>(), r.at("pick").get<int>()}] =
            r.at("reply").get<int>();
    return c;
}

// Outcome summary; certificates are attached when present and `with_certificate`.
inline json to_json(const GameOutcome& o, const LabeledForest& s, bool with_certificate = true) {
    json out = {{"winner", to_string(o.winner)}, {"positions", o.positions}};
    if (with_certificate && o.spoiler) out["certificate"] = to_json(*o.spoiler, s);
    if (with_certificate && o.duplicator) out["certificate"] = to_json(*o.duplicator);
    return out;
}

inline json to_json(const Move& m) { return {{"phase", to_string(m.phase)}, {"value", m.value}}; }

inline Phase phase_from_string(const std::string& s) {
    for (Phase p : {Phase::ChooseTree, Phase::SpoilerPick, Phase::DuplicatorPick, Phase::ChooseChild, Phase::Over})
        if (to_string(p) == s) return p;
    throw InvalidArgument("unknown phase '" + s + "'");
}

inline Move move_from_json(const json& j) {
    try {
        return {phase_from_string(j.at("phase").get<std::string>()), j.at("value").get<int>()};
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed move: ") + e.what());
    }
}

// Snapshot of a session for rendering; `structures` adds both boards.
inline json to_json(const Session& s, const std::string& id, bool structures = false) {
    const SessionState& st = s.state();
    json out = {{"id", id},
                {"forest", s.forest().str()},
                {"phase", to_string(st.phase)},
                {"to_move", st.phase == Phase::Over ? json(nullptr) : json(to_string(s.to_move()))},
                {"token", st.token},
                {"abar", st.abar},
                {"bbar", st.bbar},
                {"pending", st.pending},
                {"winner", st.winner ? json(to_string(*st.winner)) : json(nullptr)},
                {"violated_literal", st.failure ? json(st.failure->str()) : json(nullptr)},
                {"step", s.history().size() - 1},
                {"human", s.human() ? json(to_string(*s.human())) : json(nullptr)}};
    if (st.phase == Phase::SpoilerPick || st.phase == Phase::DuplicatorPick)
        out["pick_in"] = s.picks_in_a() ? "a" : "b";
    json moves = json::array();
    for (const Move& m : s.legal_moves()) moves.push_back(to_json(m));
    out["legal_moves"] = moves;
    json made = json::array();
    for (const Move& m : s.moves_made()) made.push_back(to_json(m));
    out["history"] = made;
    if (structures) {
        out["a"] = to_json(s.a());
        out["b"] = to_json(s.b());
    }
    return out;
}

}  // namespace qslab
