#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "qslab/service.hpp"

using namespace qslab;

namespace {

class Http : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        server_ = std::make_unique<httplib::Server>();
        service_ = std::make_unique<Service>();
        service_->mount(*server_);
        port_ = server_->bind_to_any_port("127.0.0.1");
        thread_ = std::thread([] { server_->listen_after_bind(); });
        server_->wait_until_ready();
    }
    static void TearDownTestSuite() {
        server_->stop();
        thread_.join();
        server_.reset();
        service_.reset();
    }

    static std::pair<int, json> post(const std::string& path, const json& body) {
        return post_raw(path, body.dump());
    }
    static std::pair<int, json> post_raw(const std::string& path, const std::string& body) {
        httplib::Client cli("127.0.0.1", port_);
        auto res = cli.Post(path, body, "application/json");
        if (!res) return {0, json()};
        return {res->status, json::parse(res->body)};
    }
    static std::pair<int, json> get(const std::string& path) {
        httplib::Client cli("127.0.0.1", port_);
        auto res = cli.Get(path);
        if (!res) return {0, json()};
        return {res->status, json::parse(res->body)};
    }

    static inline std::unique_ptr<httplib::Server> server_;
    static inline std::unique_ptr<Service> service_;
    static inline std::thread thread_;
    static inline int port_ = 0;
};

struct CliRun {
    int code;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    std::string cmd = std::string(QSLAB_CLI) + " " + args + " 2>/dev/null";
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe.get())) out.append(buf, n);
    int status = pclose(pipe.release());
    return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_F(Http, LibraryListsAllFamilies) {
    auto [status, body] = get("/library");
    EXPECT_EQ(status, 200);
    std::set<std::string> names;
    for (const auto& f : body.at("families")) names.insert(f.at("name").get<std::string>());
    EXPECT_EQ(names, (std::set<std::string>{"tauplus", "tau", "ordered_tauplus", "ordered_tau", "refined_tauplus",
                                             "refined_tau"}));
}

TEST_F(Http, SolveOrderedBuilds) {
    std::string f = forest_of(f_p_m(Prefix::parse("EA"), 1)).str();
    auto [status, body] = post("/solve", {{"forest", f},
                                          {"a", "ordered_tauplus:A:+:p=EA:m=1"},
                                          {"b", "ordered_tauplus:B:+:p=EA:m=1"},
                                          {"certificate", false}});
    EXPECT_EQ(status, 200);
    EXPECT_EQ(body.at("winner"), "duplicator");
    EXPECT_FALSE(body.contains("certificate"));
}

TEST_F(Http, SolveReturnsReplayableCertificate) {
    Structure a = build("tauplus:A:+:p=E:m=1"), b = build("tauplus:B:+:p=E:m=1");
    auto [status, body] = post("/solve", {{"forest", "(E)"}, {"a", to_json(a)}, {"b", to_json(b)}});
    ASSERT_EQ(status, 200);
    EXPECT_EQ(body.at("winner"), "spoiler");
    auto cert = spoiler_certificate_from_json(body.at("certificate"));
    EXPECT_TRUE(replay_spoiler(LabeledForest::parse("(E)"), a, b, cert));
}

TEST_F(Http, EmbedAndDistinguish) {
    auto [s1, e1] = post("/embed", {{"s1", "(E (E))"}, {"s2", "(E (A) (E))"}});
    EXPECT_EQ(s1, 200);
    EXPECT_TRUE(e1.at("embeds").get<bool>());
    auto [s2, e2] = post("/embed", {{"s1", "(E (A) (E))"}, {"s2", "(E (E)) (E (A))"}});
    EXPECT_EQ(s2, 200);
    EXPECT_FALSE(e2.at("embeds").get<bool>());
    auto [s3, d] = post("/distinguish",
                        {{"forest", "(E)"}, {"a", "tauplus:A:+:p=E:m=1"}, {"b", "tauplus:B:+:p=E:m=1"}});
    EXPECT_EQ(s3, 200);
    Formula f = parse_formula(d.at("formula").get<std::string>());
    EXPECT_TRUE(eval(build("tauplus:A:+:p=E:m=1"), f));
    EXPECT_FALSE(eval(build("tauplus:B:+:p=E:m=1"), f));
    EXPECT_TRUE(d.at("in_class").get<bool>());
}

TEST_F(Http, ErrorStatuses) {
    EXPECT_EQ(post_raw("/solve", "{not json").first, 400);
    EXPECT_EQ(post("/solve", {{"forest", "(E"}, {"a", "tauplus:A:+:p=E:m=1"}, {"b", "tauplus:B:+:p=E:m=1"}}).first, 400);
    EXPECT_EQ(post("/solve", {{"forest", "(E)"}, {"a", "tauplus:A:+:p=E:m=0"}, {"b", "tauplus:B:+:p=E:m=1"}}).first,
              400);
    EXPECT_EQ(post("/solve", {{"forest", "(E)"}, {"a", "tauplus:A:+:p=E:m=1"}}).first, 400);
    EXPECT_EQ(get("/sessions/nosuch").first, 404);
    EXPECT_EQ(post("/sessions/nosuch/undo", json::object()).first, 404);
    auto [status, body] = post("/solve", {{"forest", "(E (E) (E))"},
                                          {"a", "tauplus:A:+:p=EE:m=1"},
                                          {"b", "tauplus:B:+:p=EE:m=1"},
                                          {"budget", 3}});
    EXPECT_EQ(status, 422);
    EXPECT_EQ(body.at("budget"), 3);
}

TEST_F(Http, SessionFlow) {
    auto [status, s] = post("/sessions", {{"forest", "(E)"},
                                          {"a", "tauplus:A:+:p=E:m=1"},
                                          {"b", "tauplus:B:+:p=E:m=1"},
                                          {"human", "spoiler"}});
    ASSERT_EQ(status, 201);
    const std::string id = s.at("id");
    EXPECT_EQ(s.at("phase"), "choose_tree");
    EXPECT_EQ(s.at("legal_moves"), json::parse(R"([{"phase":"choose_tree","value":0}])"));
    EXPECT_TRUE(s.contains("a"));
    EXPECT_EQ(post("/sessions/" + id + "/move", {{"phase", "spoiler_pick"}, {"value", 0}}).first, 409);
    auto [m1, after_tree] = post("/sessions/" + id + "/move", {{"value", 0}});
    EXPECT_EQ(m1, 200);
    EXPECT_EQ(after_tree.at("phase"), "spoiler_pick");
    EXPECT_EQ(after_tree.at("pick_in"), "a");
    Structure a = build("tauplus:A:+:p=E:m=1");
    int black = 0;
    while (!a.holds("U", {black})) ++black;
    auto [m2, picked] = post("/sessions/" + id + "/move", {{"phase", "spoiler_pick"}, {"value", black}});
    EXPECT_EQ(m2, 200);
    EXPECT_EQ(picked.at("to_move"), "duplicator");
    auto [m3, reply] = post("/sessions/" + id + "/engine-move", json::object());
    EXPECT_EQ(m3, 200);
    EXPECT_EQ(reply.at("phase"), "over");
    EXPECT_EQ(reply.at("winner"), "spoiler");
    EXPECT_FALSE(reply.at("violated_literal").get<std::string>().empty());
    auto [u, undone] = post("/sessions/" + id + "/undo", json::object());
    EXPECT_EQ(u, 200);
    EXPECT_EQ(undone.at("phase"), "duplicator_pick");
    EXPECT_EQ(undone.at("pending"), black);
    auto [b, branched] = post("/sessions/" + id + "/branch", {{"step", 1}});
    EXPECT_EQ(b, 201);
    EXPECT_NE(branched.at("id"), id);
    EXPECT_EQ(branched.at("phase"), "spoiler_pick");
    auto [g, again] = get("/sessions/" + id);
    EXPECT_EQ(g, 200);
    EXPECT_EQ(again.at("phase"), "duplicator_pick");
}

TEST(Cli, RosenAndForestOf) {
    CliRun r = run_cli("rosen-f EE");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "A* E A*\n");
    r = run_cli("forest-of EA AE");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "(E (A)) (A (E))\n");
}

TEST(Cli, EmbedIdenticalFiles) {
    auto dir = std::filesystem::temp_directory_path() / "qslab_cli_test";
    std::filesystem::create_directories(dir);
    for (const char* name : {"a.sexp", "b.sexp"}) std::ofstream(dir / name) << "(E (A) (E))\n";
    CliRun r = run_cli("embed --s1 " + (dir / "a.sexp").string() + " --s2 " + (dir / "b.sexp").string());
    EXPECT_EQ(r.code, 0);
    json out = json::parse(r.out);
    EXPECT_EQ(out.at("witness"), json::parse("[0,1,2]"));
    EXPECT_EQ(run_cli("embed --s1 \"(E (A) (E))\" --s2 \"(E (E)) (E (A))\"").code, 1);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("verify --suite nosuch").code, 2);
    EXPECT_EQ(run_cli("rosen-f EX").code, 2);
    EXPECT_EQ(run_cli("build-structure tauplus:A:+:p=E:m=0").code, 2);
    EXPECT_EQ(run_cli("solve --forest \"(E (E) (E))\" --a tauplus:A:+:p=EE:m=1 --b tauplus:B:+:p=EE:m=1 --budget 3")
                  .code,
              3);
    EXPECT_EQ(run_cli("distinguish --forest \"(A)\" --a tauplus:A:+:p=E:m=1 --b tauplus:B:+:p=E:m=1").code, 1);
}

TEST(Cli, VerifySmallGrid) {
    CliRun r = run_cli("verify --suite tauplus --max-prefix-len 2 --m 1");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("claim1"), std::string::npos);
    EXPECT_NE(r.out.find("EF-Game"), std::string::npos);
    r = run_cli("verify --suite classic --max-prefix-len 2 --m 4 --json");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out).at("suite"), "classic");
}

TEST(Cli, BuildEvalSolve) {
    CliRun s = run_cli("build-structure tauplus:A:+:p=EA:m=1");
    EXPECT_EQ(s.code, 0);
    EXPECT_EQ(structure_from_json(json::parse(s.out)).size(), build("tauplus:A:+:p=EA:m=1").size());
    CliRun f = run_cli("build-formula phi-tilde EA");
    EXPECT_EQ(f.code, 0);
    std::string formula = f.out.substr(0, f.out.find('\n'));
    EXPECT_EQ(run_cli("eval --structure tauplus:A:+:p=EA:m=1 --formula \"" + formula + "\"").out, "true\n");
    EXPECT_EQ(run_cli("eval --structure tauplus:B:+:p=EA:m=1 --formula \"" + formula + "\"").out, "false\n");
    CliRun o = run_cli("solve --forest \"(E (A) (A))\" --a tauplus:A:+:p=EA:m=1 --b tauplus:B:+:p=EA:m=1");
    EXPECT_EQ(o.code, 0);
    EXPECT_EQ(json::parse(o.out).at("winner"), "spoiler");
}
