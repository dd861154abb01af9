#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qslab/constructions.hpp"
#include "qslab/formula_families.hpp"
#include "qslab/io.hpp"
#include "qslab/service.hpp"
#include "qslab/suites.hpp"

using namespace qslab;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kBudget = 3;

// A file's contents when `arg` names a file, the argument itself otherwise.
std::string text_arg(const std::string& arg) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(arg, ec)) return arg;
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LabeledForest forest_text(const std::string& arg) { return LabeledForest::parse(text_arg(arg)); }

// Structure JSON from a file or inline, or a family spec.
Structure structure_text(const std::string& arg) {
    std::string t = text_arg(arg);
    auto first = t.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && t[first] == '{') return structure_from_json(json::parse(t));
    return build(t);
}

Formula build_formula(const std::string& kind, const std::string& seed) {
    if (kind == "phi-tree") return build_phi_tree(LabeledTree::parse(seed));
    if (kind == "phi-tree-neg") return build_phi_tree(LabeledTree::parse(seed), true);
    Prefix p = Prefix::parse(seed);
    if (p.empty()) throw InvalidArgument("prefix seed must be non-empty");
    if (kind == "phi-tilde") return build_phi_tilde(p);
    if (kind == "phi-tilde-neg") return build_phi_tilde_neg(p);
    if (kind == "phi") return build_phi(p);
    if (kind == "phi-prime") return build_phi_prime(p);
    if (kind == "phi-prime-substituted") return build_phi_prime_substituted(p);
    throw InvalidArgument("unknown formula kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qslab: quantifier-structure games on finite structures"};
    app.require_subcommand(1);

    std::string s1, s2, forest, a, b, spec, formula, kind, seed, suite, host = "127.0.0.1";
    std::vector<std::string> words;
    std::size_t budget = 10'000'000, max_len = 0;
    int port = 8080, m = 0, max_prefix_len = 0;
    bool no_certificate = false, as_json = false, qs_too = false;

    auto* embed = app.add_subcommand("embed", "find an embedding of one forest into another");
    embed->add_option("--s1", s1, "forest (s-expression or file)")->required();
    embed->add_option("--s2", s2, "forest (s-expression or file)")->required();

    auto* words_cmd = app.add_subcommand("words", "path words of a forest");
    words_cmd->add_option("forest", forest, "forest (s-expression or file)")->required();
    words_cmd->add_option("--max-len", max_len, "list every word up to this length instead of maximal paths");

    auto* forest_of_cmd = app.add_subcommand("forest-of", "forest whose path words are the given prefixes");
    forest_of_cmd->add_option("words", words, "prefixes over E/A, '-' for the empty word")->required();

    auto* rosen = app.add_subcommand("rosen-f", "the regular word f(p)");
    rosen->add_option("prefix", seed, "prefix over E/A")->required();

    auto* build_cmd = app.add_subcommand("build-structure", "build a structure from a family spec");
    build_cmd->add_option("spec", spec, "family:side:polarity:seed:m, e.g. tauplus:A:+:p=EA:m=2")->required();

    auto* formula_cmd = app.add_subcommand("build-formula", "build a separating sentence");
    formula_cmd->add_option("kind", kind, "phi-tilde, phi-tilde-neg, phi, phi-prime, phi-prime-substituted, phi-tree, phi-tree-neg")
        ->required();
    formula_cmd->add_option("seed", seed, "prefix or tree")->required();
    formula_cmd->add_flag("--qs", qs_too, "also print the quantifier structure");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a sentence in a structure");
    eval_cmd->add_option("--structure", a, "Structure JSON, file, or family spec")->required();
    eval_cmd->add_option("--formula", formula, "sentence (s-expression or file)")->required();

    auto* solve_cmd = app.add_subcommand("solve", "decide the game on a forest");
    auto* dist_cmd = app.add_subcommand("distinguish", "synthesize a distinguishing sentence");
    for (auto* c : {solve_cmd, dist_cmd}) {
        c->add_option("--forest", forest, "game forest (s-expression or file)")->required();
        c->add_option("--a", a, "Structure JSON, file, or family spec")->required();
        c->add_option("--b", b, "Structure JSON, file, or family spec")->required();
        c->add_option("--budget", budget, "maximum evaluated positions");
    }
    solve_cmd->add_flag("--no-certificate", no_certificate, "omit the winning certificate");

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("--suite", suite, "suite name")->required()->check(CLI::IsMember(suite_names()));
    verify->add_option("--max-prefix-len", max_prefix_len, "grid bound on prefix or word length");
    verify->add_option("--m", m, "grid bound on m");
    verify->add_option("--budget", budget, "maximum evaluated positions per game");
    verify->add_flag("--json", as_json, "print the report as JSON");

    auto* serve = app.add_subcommand("serve", "serve the HTTP API");
    serve->add_option("--port", port, "port");
    serve->add_option("--host", host, "bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*embed) {
            LabeledForest f1 = forest_text(s1), f2 = forest_text(s2);
            auto e = embeds(f1, f2);
            json out = {{"embeds", e.has_value()}, {"witness", e ? json(*e) : json(nullptr)}};
            std::cout << out.dump() << "\n";
            return e ? kOk : kFail;
        }
        if (*words_cmd) {
            LabeledForest f = forest_text(forest);
            if (max_len > 0)
                for (const Prefix& w : words_upto(f, max_len)) std::cout << (w.empty() ? "-" : w.str()) << "\n";
            else
                for (const Prefix& w : maximal_path_words(f)) std::cout << w.str() << "\n";
            return kOk;
        }
        if (*forest_of_cmd) {
            PrefixSet P;
            for (const std::string& w : words) P.insert(Prefix::parse(w));
            std::cout << forest_of(P).str() << "\n";
            return kOk;
        }
        if (*rosen) {
            std::cout << to_string(rosen_f(Prefix::parse(seed))) << "\n";
            return kOk;
        }
        if (*build_cmd) {
            std::cout << to_json(build(spec)).dump() << "\n";
            return kOk;
        }
        if (*formula_cmd) {
            Formula f = build_formula(kind, seed);
            std::cout << f.str() << "\n";
            if (qs_too) std::cout << qs(f).str() << "\n";
            return kOk;
        }
        if (*eval_cmd) {
            bool v = eval(structure_text(a), parse_formula(text_arg(formula)));
            std::cout << (v ? "true" : "false") << "\n";
            return kOk;
        }
        if (*solve_cmd) {
            LabeledForest s = forest_text(forest);
            GameOutcome o = solve(s, structure_text(a), structure_text(b), {}, {}, {budget, !no_certificate});
            std::cout << to_json(o, s, !no_certificate).dump() << "\n";
            return kOk;
        }
        if (*dist_cmd) {
            LabeledForest s = forest_text(forest);
            Structure sa = structure_text(a), sb = structure_text(b);
            GameOutcome o = solve(s, sa, sb, {}, {}, {budget, false});
            if (o.winner == Player::Duplicator) {
                std::cout << "duplicator wins: no sentence of FO{S} separates the structures\n";
                return kFail;
            }
            Formula f = synthesize_distinguisher(s, sa, sb, {budget, true});
            std::cout << f.str() << "\n";
            return kOk;
        }
        if (*verify) {
            SuiteParams sp;
            if (max_prefix_len > 0) sp.max_prefix_len = max_prefix_len;
            if (m > 0) sp.m = m;
            sp.budget = budget;
            SuiteReport rep = run_suite(suite, sp);
            std::cout << (as_json ? rep.to_json().dump(2) : rep.table()) << "\n";
            if (rep.passed()) return kOk;
            return rep.budget_exceeded() ? kBudget : kFail;
        }
        if (*serve) {
            httplib::Server srv;
            Service service;
            service.mount(srv);
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!srv.listen(host, port)) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return kFail;
            }
            return kOk;
        }
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBudget;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kUsage;
}
