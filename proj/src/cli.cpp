#include "mautil/cli.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "mautil/decompose.hpp"
#include "mautil/expectation.hpp"
#include "mautil/graph.hpp"
#include "mautil/independence.hpp"
#include "mautil/io.hpp"

namespace mautil {

namespace {

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
}

struct GlobalOptions {
    ToleranceConfig tol;
    bool force = false;
    std::string reference_text;
};

/// First value of each domain, overridden by any --reference bindings.
Assignment make_reference(const VariableSpace& space, const std::string& text) {
    Assignment ref = default_reference(space);
    if (!trim(text).empty()) {
        const Assignment given = parse_bindings(text, space);
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (given.bound(i)) {
                ref.set(space, i, given.value(i));
            }
        }
    }
    return ref;
}

UtilityTable dense_of(const LoadedUtility& lu, bool force) {
    if (lu.dense) {
        return *lu.dense;
    }
    return to_dense(*lu.factored, force);
}

/// Factored files are used as-is; dense utilities get decomposed over the
/// maximal cliques of their independence map first.
AdditiveDecomposition decomposition_of(const LoadedUtility& lu, const GlobalOptions& g) {
    if (lu.factored) {
        return *lu.factored;
    }
    const Assignment ref = make_reference(lu.space, g.reference_text);
    const UndirectedGraph map = build_perfect_map(*lu.dense, g.tol);
    return decompose_over_cliques(*lu.dense, map, &ref, g.tol).decomposition;
}

Scope single_scope(const std::string& text, const VariableSpace& space, const char* flag) {
    const auto scopes = parse_scope_expression(text, space);
    if (scopes.size() != 1) {
        throw ModelError(std::string(flag) + " expects a single scope, not a '|' partition");
    }
    return scopes[0];
}

json scope_names(const VariableSpace& space, const Scope& sc) {
    json arr = json::array();
    for (const std::string& n : sc.names(space)) {
        arr.push_back(n);
    }
    return arr;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_graph(const GlobalOptions& g, const std::string& path, const std::string& format) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const UndirectedGraph map = build_perfect_map(u, g.tol);
    if (format == "json") {
        json j = graph_to_json(map);
        j["epsilon"] = g.tol.epsilon;
        emit(j);
    } else {
        std::cout << graph_to_dot(map);
    }
    return kExitSuccess;
}

int cmd_cliques(const GlobalOptions& g, const std::string& path) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const UndirectedGraph map = build_perfect_map(u, g.tol);
    json j;
    json arr = json::array();
    for (const Scope& c : maximal_cliques(map)) {
        arr.push_back(scope_names(u.space(), c));
    }
    j["cliques"] = std::move(arr);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_decompose(const GlobalOptions& g, const std::string& path, const std::string& out_path) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const VariableSpace& space = u.space();
    const Assignment ref = make_reference(space, g.reference_text);
    const UndirectedGraph map = build_perfect_map(u, g.tol);
    const DecompositionReport rep = decompose_over_cliques(u, map, &ref, g.tol);
    const json file = factored_to_json(rep.decomposition);

    json report;
    report["max_residual"] = rep.max_residual;
    report["epsilon"] = g.tol.epsilon;
    json cliques = json::array();
    for (const Factor& f : rep.decomposition.factors()) {
        cliques.push_back(scope_names(space, f.scope()));
    }
    report["cliques"] = std::move(cliques);
    json assigned = json::array();
    for (const auto& [term, clique] : rep.clique_assignment) {
        json e;
        e["term"] = scope_names(space, term);
        e["factor"] = scope_names(space, clique);
        assigned.push_back(std::move(e));
    }
    report["assignments"] = std::move(assigned);
    json refj;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const Variable& v = space.variable(i);
        refj[v.name] = v.domain[ref.value(i)];
    }
    report["reference"] = std::move(refj);

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) {
            throw ModelError("cannot write '" + out_path + "'");
        }
        out << file.dump(2) << "\n";
        emit(report);
    } else {
        emit(file);
        std::cerr << report.dump(2) << "\n";
    }
    return kExitSuccess;
}

int cmd_check_cai(const GlobalOptions& g, const std::string& path, const std::string& x_text,
                  const std::string& z_text, const std::string& y_text) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const VariableSpace& space = u.space();
    const Scope x = single_scope(x_text, space, "--x");
    const Scope y = single_scope(y_text, space, "--y");
    const Scope z = trim(z_text).empty()
                        ? scope_difference(full_scope(space), scope_union(x, y))
                        : single_scope(z_text, space, "--z");
    const bool holds = test_cai(u, CaiQuery{x, z, y}, g.tol);
    json j;
    j["holds"] = holds;
    j["x"] = scope_names(space, x);
    j["z"] = scope_names(space, z);
    j["y"] = scope_names(space, y);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_check_ui(const GlobalOptions& g, const std::string& path, const std::string& x_text) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const Scope x = single_scope(x_text, u.space(), "--x");
    const bool holds = test_utility_independence(u, x, g.tol).independent;
    json j;
    j["holds"] = holds;
    j["x"] = scope_names(u.space(), x);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_check_ai(const GlobalOptions& g, const std::string& path,
                 const std::string& partition_text) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const auto parts = parse_scope_expression(partition_text, u.space());
    const bool holds = test_additive_partition(u, parts, g.tol);
    json j;
    j["holds"] = holds;
    json pj = json::array();
    for (const Scope& p : parts) {
        pj.push_back(scope_names(u.space(), p));
    }
    j["partition"] = std::move(pj);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_check_gai(const GlobalOptions& g, const std::string& path,
                  const std::string& scopes_text) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    const UtilityTable u = dense_of(lu, g.force);
    const auto scopes = parse_scope_expression(scopes_text, u.space());
    const bool holds = test_gai(u, scopes, g.tol);
    json j;
    j["holds"] = holds;
    json sj = json::array();
    for (const Scope& s : scopes) {
        sj.push_back(scope_names(u.space(), s));
    }
    j["scopes"] = std::move(sj);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_eu(const GlobalOptions& g, const std::string& upath, const std::string& ppath,
           const std::string& evidence_text, const std::string& method) {
    const LoadedUtility lu = load_utility_file(upath, g.force);
    const json pj = load_json_file(ppath);
    const Assignment evidence = parse_bindings(evidence_text, lu.space);

    json out;
    out["method"] = method;
    if (looks_like_bayes_net(pj)) {
        const BayesNet bn = parse_bayes_net(pj);
        if (!(bn.space() == lu.space)) {
            throw ModelError("utility and network declare different variable spaces");
        }
        std::optional<double> brute;
        std::optional<double> factored;
        std::optional<UtilityTable> dense;
        if (method == "brute" || method == "both") {
            dense = dense_of(lu, g.force);
            brute = eu_brute(*dense, bn, evidence, g.force);
        }
        if (method == "factored" || method == "both") {
            factored = eu_factored(decomposition_of(lu, g), bn, evidence);
        }
        if (method == "both") {
            const double tolerance = scaled_tolerance(*dense, g.tol);
            const double diff = std::abs(*brute - *factored);
            const bool agree = diff <= tolerance;
            out["brute"] = *brute;
            out["factored"] = *factored;
            out["difference"] = diff;
            out["tolerance"] = tolerance;
            out["agree"] = agree;
            out["epsilon"] = g.tol.epsilon;
            emit(out);
            return agree ? kExitSuccess : kExitDisagreement;
        }
        out["value"] = method == "brute" ? *brute : *factored;
    } else if (looks_like_distribution(pj)) {
        if (method != "brute") {
            throw ModelError("an explicit distribution supports only --method brute");
        }
        const ExplicitDistribution p = parse_distribution(pj, lu.space, g.force);
        const UtilityTable dense = dense_of(lu, g.force);
        out["value"] = eu_brute(dense, p, evidence);
    } else {
        throw ModelError("'" + ppath +
                         "' is neither a network file ('cpts') nor a distribution file ('probs')");
    }
    out["epsilon"] = g.tol.epsilon;
    emit(out);
    return kExitSuccess;
}

int cmd_choose(const GlobalOptions& g, const std::string& upath, const std::string& bpath,
               const std::string& apath) {
    const LoadedUtility lu = load_utility_file(upath, g.force);
    const BayesNet bn = parse_bayes_net(load_json_file(bpath));
    if (!(bn.space() == lu.space)) {
        throw ModelError("utility and network declare different variable spaces");
    }
    const ActionSet actions = parse_actions(load_json_file(apath), lu.space);
    const AdditiveDecomposition dec = decomposition_of(lu, g);
    const ActionChoice choice = choose_action(dec, bn, actions);
    json j;
    j["chosen"] = choice.label;
    json eus;
    for (const auto& [label, value] : choice.expected_utilities) {
        eus[label] = value;
    }
    j["expected_utility"] = std::move(eus);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

int cmd_axioms(const GlobalOptions& g, const std::string& path) {
    const LoadedUtility lu = load_utility_file(path, g.force);
    if (lu.space.size() > kGraphoidVariableLimit) {
        throw GuardError("graphoid audit supports at most " +
                         std::to_string(kGraphoidVariableLimit) + " variables, got " +
                         std::to_string(lu.space.size()));
    }
    const UtilityTable u = dense_of(lu, g.force);
    const GraphoidReport rep = check_graphoid_axioms(u, g.tol);
    json j = graphoid_report_to_json(rep);
    j["epsilon"] = g.tol.epsilon;
    emit(j);
    return kExitSuccess;
}

}  // namespace

std::vector<Scope> parse_scope_expression(const std::string& text, const VariableSpace& space) {
    std::vector<Scope> out;
    for (const std::string& block : split(text, '|')) {
        std::vector<std::string> names;
        for (const std::string& token : split(block, ',')) {
            const std::string name = trim(token);
            if (name.empty()) {
                throw ModelError("empty scope group in '" + text + "'");
            }
            names.push_back(name);
        }
        out.push_back(Scope::from_names(space, names));
    }
    return out;
}

Assignment parse_bindings(const std::string& text, const VariableSpace& space) {
    Assignment a(space);
    if (trim(text).empty()) {
        return a;
    }
    for (const std::string& item : split(text, ',')) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            throw ModelError("binding '" + trim(item) + "' must look like var=value");
        }
        const std::string name = trim(item.substr(0, eq));
        const std::string label = trim(item.substr(eq + 1));
        if (name.empty() || label.empty()) {
            throw ModelError("binding '" + trim(item) + "' must look like var=value");
        }
        const std::size_t idx = space.index_of(name);
        if (a.bound(idx)) {
            throw ModelError("variable '" + name + "' is bound twice");
        }
        a.set(space, idx, space.value_index(idx, label));
    }
    return a;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Independence analysis for discrete multi-attribute utility functions"};
    app.require_subcommand(1);

    double epsilon = ToleranceConfig{}.epsilon;
    bool force = false;
    std::string reference_text;
    app.add_option("--epsilon", epsilon, "Comparison tolerance, scaled by 1 + max |u|")
        ->capture_default_str();
    app.add_flag("--force", force, "Lift the dense state-count guard");
    app.add_option("--reference", reference_text,
                   "Reference state var=value,... for decompositions "
                   "(default: the first value of every domain)");

    std::string graph_path;
    std::string graph_format = "dot";
    CLI::App* graph_cmd = app.add_subcommand("graph", "Print the CA-independence map");
    graph_cmd->add_option("utility", graph_path, "Utility model file")->required();
    graph_cmd->add_option("--format", graph_format, "dot or json")
        ->check(CLI::IsMember({"dot", "json"}))
        ->capture_default_str();

    std::string cliques_path;
    CLI::App* cliques_cmd =
        app.add_subcommand("cliques", "List the maximal cliques of the independence map");
    cliques_cmd->add_option("utility", cliques_path, "Utility model file")->required();

    std::string dec_path;
    std::string dec_out;
    CLI::App* dec_cmd = app.add_subcommand(
        "decompose", "Factor the utility over the maximal cliques of its independence map");
    dec_cmd->add_option("utility", dec_path, "Utility model file")->required();
    dec_cmd->add_option("-o,--output", dec_out,
                        "Write the factored utility to this file; the residual report then "
                        "goes to stdout instead of stderr");

    CLI::App* check_cmd = app.add_subcommand("check", "Decide an independence property");
    check_cmd->require_subcommand(1);

    std::string cai_path, cai_x, cai_z, cai_y;
    CLI::App* cai_cmd =
        check_cmd->add_subcommand("cai", "Conditional additive independence CAI(X, Z, Y)");
    cai_cmd->add_option("utility", cai_path, "Utility model file")->required();
    cai_cmd->add_option("--x", cai_x, "First scope, e.g. \"a,b\"")->required();
    cai_cmd->add_option("--z", cai_z, "Conditioning scope (default: all remaining variables)");
    cai_cmd->add_option("--y", cai_y, "Second scope")->required();

    std::string ui_path, ui_x;
    CLI::App* ui_cmd = check_cmd->add_subcommand("ui", "Utility independence of a scope");
    ui_cmd->add_option("utility", ui_path, "Utility model file")->required();
    ui_cmd->add_option("--x", ui_x, "Scope to test")->required();

    std::string ai_path, ai_partition;
    CLI::App* ai_cmd =
        check_cmd->add_subcommand("ai", "Additive independence of a partition of the variables");
    ai_cmd->add_option("utility", ai_path, "Utility model file")->required();
    ai_cmd->add_option("--partition", ai_partition, "Partition, e.g. \"a|b,c\"")->required();

    std::string gai_path, gai_scopes;
    CLI::App* gai_cmd = check_cmd->add_subcommand(
        "gai", "Generalized additive independence over possibly overlapping scopes");
    gai_cmd->add_option("utility", gai_path, "Utility model file")->required();
    gai_cmd->add_option("--scopes", gai_scopes, "Scope list, e.g. \"a,b|b,c\"")->required();

    std::string eu_upath, eu_ppath, eu_evidence;
    std::string eu_method = "factored";
    CLI::App* eu_cmd =
        app.add_subcommand("eu", "Conditional expected utility against a probability model");
    eu_cmd->add_option("utility", eu_upath, "Utility model file")->required();
    eu_cmd->add_option("model", eu_ppath, "Bayesian network or explicit distribution file")
        ->required();
    eu_cmd->add_option("--evidence", eu_evidence, "Conditioning evidence var=value,...");
    eu_cmd->add_option("--method", eu_method, "brute, factored, or both")
        ->check(CLI::IsMember({"brute", "factored", "both"}))
        ->capture_default_str();

    std::string ch_upath, ch_bpath, ch_apath;
    CLI::App* choose_cmd =
        app.add_subcommand("choose", "Pick the action that maximizes expected utility");
    choose_cmd->add_option("utility", ch_upath, "Utility model file")->required();
    choose_cmd->add_option("network", ch_bpath, "Bayesian network file")->required();
    choose_cmd->add_option("actions", ch_apath, "Action set file")->required();

    std::string ax_path;
    CLI::App* axioms_cmd =
        app.add_subcommand("axioms", "Audit the graphoid conditions on a small utility");
    axioms_cmd->add_option("utility", ax_path, "Utility model file")->required();

    for (CLI::App* sub : {graph_cmd, cliques_cmd, dec_cmd, check_cmd, cai_cmd, ui_cmd, ai_cmd,
                          gai_cmd, eu_cmd, choose_cmd, axioms_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitSuccess : kExitInputError;
    }

    try {
        GlobalOptions g;
        g.tol = ToleranceConfig(epsilon);
        g.force = force;
        g.reference_text = reference_text;
        if (graph_cmd->parsed()) {
            return cmd_graph(g, graph_path, graph_format);
        }
        if (cliques_cmd->parsed()) {
            return cmd_cliques(g, cliques_path);
        }
        if (dec_cmd->parsed()) {
            return cmd_decompose(g, dec_path, dec_out);
        }
        if (check_cmd->parsed()) {
            if (cai_cmd->parsed()) {
                return cmd_check_cai(g, cai_path, cai_x, cai_z, cai_y);
            }
            if (ui_cmd->parsed()) {
                return cmd_check_ui(g, ui_path, ui_x);
            }
            if (ai_cmd->parsed()) {
                return cmd_check_ai(g, ai_path, ai_partition);
            }
            if (gai_cmd->parsed()) {
                return cmd_check_gai(g, gai_path, gai_scopes);
            }
        }
        if (eu_cmd->parsed()) {
            return cmd_eu(g, eu_upath, eu_ppath, eu_evidence, eu_method);
        }
        if (choose_cmd->parsed()) {
            return cmd_choose(g, ch_upath, ch_bpath, ch_apath);
        }
        if (axioms_cmd->parsed()) {
            return cmd_axioms(g, ax_path);
        }
    } catch (const GuardError& e) {
        std::cerr << "guard: " << e.what() << "\n";
        return kExitGuard;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace mautil
