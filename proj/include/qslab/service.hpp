#pragma once

#include <functional>
#include <optional>
#include <string>

#include <httplib.h>

#include "constructions.hpp"
#include "errors.hpp"
#include "forest.hpp"
#include "formula.hpp"
#include "game.hpp"
#include "io.hpp"
#include "session.hpp"

namespace qslab {

// A structure given as a family spec string or as Structure JSON.
inline Structure structure_arg(const json& j) {
    if (j.is_string()) return build(j.get<std::string>());
    if (j.is_object()) return structure_from_json(j);
    throw InvalidArgument("a structure is a family spec string or Structure JSON");
}

inline LabeledForest forest_arg(const json& j) {
    if (!j.is_string()) throw InvalidArgument("a forest is an s-expression string");
    return LabeledForest::parse(j.get<std::string>());
}

inline SolveOptions options_arg(const json& j) {
    SolveOptions o;
    if (j.contains("budget")) o.budget = j.at("budget").get<std::size_t>();
    if (j.contains("certificate")) o.certificate = j.at("certificate").get<bool>();
    return o;
}

inline json library_json() {
    json fams = json::array();
    for (const auto& [fam, name] : family_names()) {
        json examples = json::array();
        for (const std::string& spec : library_specs())
            if (FamilySpec::parse(spec).family == fam) examples.push_back(spec);
        fams.push_back({{"name", name}, {"examples", examples}});
    }
    return {{"families", fams}, {"spec_format", "family:side:polarity:seed:m"}};
}

// JSON-over-HTTP front end: stateless endpoints plus the session store.
class Service {
public:
    void mount(httplib::Server& srv) {
        post(srv, "/solve", [](const json& in, const httplib::Request&) -> Reply {
            LabeledForest s = forest_arg(in.at("forest"));
            Structure a = structure_arg(in.at("a")), b = structure_arg(in.at("b"));
            SolveOptions opt = options_arg(in);
            return {200, to_json(solve(s, a, b, {}, {}, opt), s, opt.certificate)};
        });
        post(srv, "/embed", [](const json& in, const httplib::Request&) -> Reply {
            LabeledForest s1 = forest_arg(in.at("s1")), s2 = forest_arg(in.at("s2"));
            auto e = embeds(s1, s2);
            return {200, {{"embeds", e.has_value()}, {"witness", e ? json(*e) : json(nullptr)}}};
        });
        post(srv, "/distinguish", [](const json& in, const httplib::Request&) -> Reply {
            LabeledForest s = forest_arg(in.at("forest"));
            Structure a = structure_arg(in.at("a")), b = structure_arg(in.at("b"));
            SolveOptions opt = options_arg(in);
            GameOutcome o = solve(s, a, b, {}, {}, {opt.budget, false});
            json out = {{"winner", to_string(o.winner)}, {"formula", nullptr}};
            if (o.winner == Player::Spoiler) {
                Formula f = synthesize_distinguisher(s, a, b, {opt.budget, true});
                out["formula"] = f.str();
                out["qs"] = qs(f).str();
                out["in_class"] = in_class(f, s);
            }
            return {200, out};
        });
        srv.Get("/library", [](const httplib::Request&, httplib::Response& res) { send(res, 200, library_json()); });
        post(srv, "/sessions", [this](const json& in, const httplib::Request&) -> Reply {
            LabeledForest s = forest_arg(in.at("forest"));
            Structure a = structure_arg(in.at("a")), b = structure_arg(in.at("b"));
            std::optional<Player> human;
            if (in.contains("human") && !in.at("human").is_null()) {
                std::string h = in.at("human").get<std::string>();
                if (h == "spoiler") human = Player::Spoiler;
                else if (h == "duplicator") human = Player::Duplicator;
                else throw InvalidArgument("human must be spoiler or duplicator");
            }
            SolveOptions opt = options_arg(in);
            std::string id = store_.create(Session(std::move(s), std::move(a), std::move(b), human, opt));
            return {201, store_.with(id, [&](Session& se) { return to_json(se, id, true); })};
        });
        srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&]() -> Reply {
                std::string id = req.matches[1];
                return {200, store_.with(id, [&](Session& se) { return to_json(se, id, true); })};
            });
        });
        post(srv, R"(/sessions/([^/]+)/move)", [this](const json& in, const httplib::Request& req) -> Reply {
            std::string id = req.matches[1];
            return {200, store_.with(id, [&](Session& se) {
                        Move mv = in.contains("phase") ? move_from_json(in)
                                                       : Move{se.state().phase, in.at("value").get<int>()};
                        se.apply(mv);
                        return to_json(se, id);
                    })};
        });
        post(srv, R"(/sessions/([^/]+)/engine-move)", [this](const json&, const httplib::Request& req) -> Reply {
            std::string id = req.matches[1];
            return {200, store_.with(id, [&](Session& se) {
                        Move mv = se.engine_move();
                        se.apply(mv);
                        json out = to_json(se, id);
                        out["move"] = to_json(mv);
                        return out;
                    })};
        });
        post(srv, R"(/sessions/([^/]+)/undo)", [this](const json&, const httplib::Request& req) -> Reply {
            std::string id = req.matches[1];
            return {200, store_.with(id, [&](Session& se) {
                        se.undo();
                        return to_json(se, id);
                    })};
        });
        post(srv, R"(/sessions/([^/]+)/branch)", [this](const json& in, const httplib::Request& req) -> Reply {
            std::optional<std::size_t> step;
            if (in.contains("step") && !in.at("step").is_null()) step = in.at("step").get<std::size_t>();
            std::string nid = store_.branch(req.matches[1], step);
            return {201, store_.with(nid, [&](Session& se) { return to_json(se, nid, true); })};
        });
    }

private:
    struct Reply {
        int status;
        json body;
    };
    using Handler = std::function<Reply(const json&, const httplib::Request&)>;

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void guarded(httplib::Response& res, const std::function<Reply()>& f) {
        try {
            Reply r = f();
            send(res, r.status, r.body);
        } catch (const json::exception& e) {
            send(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
        } catch (const std::invalid_argument& e) {
            send(res, 400, {{"error", e.what()}});
        } catch (const ParseError& e) {
            send(res, 400, {{"error", e.what()}});
        } catch (const std::out_of_range& e) {
            send(res, 404, {{"error", e.what()}});
        } catch (const IllegalMove& e) {
            send(res, 409, {{"error", e.what()}});
        } catch (const BudgetExceeded& e) {
            send(res, 422, {{"error", e.what()}, {"budget", e.budget()}});
        } catch (const std::exception& e) {
            send(res, 500, {{"error", e.what()}});
        }
    }

    static void post(httplib::Server& srv, const std::string& pattern, Handler h) {
        srv.Post(pattern, [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&]() -> Reply {
                json in = req.body.empty() ? json::object() : json::parse(req.body);
                if (!in.is_object()) throw InvalidArgument("request body must be a JSON object");
                return h(in, req);
            });
        });
    }

    SessionStore store_;
};

}  // namespace qslab
