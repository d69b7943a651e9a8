#include "mautil/io.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace mautil {

namespace {

const json& field(const json& j, const char* key, const char* ctx) {
    if (!j.is_object()) {
        throw ModelError(std::string(ctx) + " must be a JSON object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ModelError(std::string(ctx) + " is missing the '" + key + "' field");
    }
    return *it;
}

void no_extras(const json& j, std::initializer_list<const char*> keys, const char* ctx) {
    if (!j.is_object()) {
        throw ModelError(std::string(ctx) + " must be a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ModelError(std::string(ctx) + " has an unknown field '" + it.key() + "'");
        }
    }
}

std::string as_string(const json& j, const char* ctx) {
    if (!j.is_string()) {
        throw ModelError(std::string(ctx) + " must be a string");
    }
    return j.get<std::string>();
}

std::vector<std::string> string_array(const json& j, const char* ctx) {
    if (!j.is_array()) {
        throw ModelError(std::string(ctx) + " must be an array of strings");
    }
    std::vector<std::string> out;
    out.reserve(j.size());
    for (const json& e : j) {
        out.push_back(as_string(e, ctx));
    }
    return out;
}

std::vector<double> number_array(const json& j, const char* ctx) {
    if (!j.is_array()) {
        throw ModelError(std::string(ctx) + " must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const json& e : j) {
        if (!e.is_number()) {
            throw ModelError(std::string(ctx) + " must contain only numbers");
        }
        out.push_back(e.get<double>());
    }
    return out;
}

VariableSpace parse_space(const json& vars) {
    if (!vars.is_array()) {
        throw ModelError("'variables' must be an array");
    }
    std::vector<Variable> out;
    out.reserve(vars.size());
    for (const json& v : vars) {
        no_extras(v, {"name", "domain"}, "variable entry");
        Variable var;
        var.name = as_string(field(v, "name", "variable entry"), "variable name");
        var.domain = string_array(field(v, "domain", "variable entry"), "variable domain");
        out.push_back(std::move(var));
    }
    return VariableSpace(std::move(out));
}

/// Resolves a list of names against the space, rejecting repeats.
std::vector<std::size_t> resolve_axes(const VariableSpace& space,
                                      const std::vector<std::string>& names, const char* ctx) {
    std::vector<std::size_t> axes;
    axes.reserve(names.size());
    std::vector<char> seen(space.size(), 0);
    for (const std::string& n : names) {
        const std::size_t idx = space.index_of(n);
        if (seen[idx]) {
            throw ModelError(std::string(ctx) + " lists '" + n + "' more than once");
        }
        seen[idx] = 1;
        axes.push_back(idx);
    }
    return axes;
}

/// Rearranges a flat table laid out row-major over `axes` (last fastest) into
/// row-major order over the same axes sorted ascending.
std::vector<double> canonicalize_layout(const VariableSpace& space,
                                        const std::vector<std::size_t>& axes,
                                        std::vector<double> in) {
    if (std::is_sorted(axes.begin(), axes.end())) {
        return in;
    }
    std::vector<std::size_t> sorted_axes = axes;
    std::sort(sorted_axes.begin(), sorted_axes.end());
    std::vector<std::uint64_t> canonical_stride(sorted_axes.size(), 1);
    for (std::size_t k = sorted_axes.size(); k-- > 1;) {
        canonical_stride[k - 1] = canonical_stride[k] * space.domain_size(sorted_axes[k]);
    }
    std::vector<std::uint64_t> stride_of(axes.size());
    for (std::size_t k = 0; k < axes.size(); ++k) {
        const std::size_t pos =
            static_cast<std::size_t>(std::lower_bound(sorted_axes.begin(), sorted_axes.end(),
                                                      axes[k]) -
                                     sorted_axes.begin());
        stride_of[k] = canonical_stride[pos];
    }
    std::vector<double> out(in.size());
    std::vector<std::size_t> digits(axes.size(), 0);
    for (std::uint64_t cell = 0; cell < in.size(); ++cell) {
        std::uint64_t target = 0;
        for (std::size_t k = 0; k < axes.size(); ++k) {
            target += digits[k] * stride_of[k];
        }
        out[target] = in[cell];
        for (std::size_t k = axes.size(); k-- > 0;) {
            if (++digits[k] < space.domain_size(axes[k])) {
                break;
            }
            digits[k] = 0;
        }
    }
    return out;
}

json variables_to_json(const VariableSpace& space) {
    json arr = json::array();
    for (const Variable& v : space.variables()) {
        json e;
        e["name"] = v.name;
        e["domain"] = v.domain;
        arr.push_back(std::move(e));
    }
    return arr;
}

json names_to_json(const VariableSpace& space, const Scope& sc) {
    json arr = json::array();
    for (const std::string& n : sc.names(space)) {
        arr.push_back(n);
    }
    return arr;
}

}  // namespace

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ModelError("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("invalid JSON in '" + path + "': " + e.what());
    }
}

LoadedUtility parse_utility(const json& j, bool allow_large) {
    no_extras(j, {"variables", "utility"}, "utility file");
    VariableSpace space = parse_space(field(j, "variables", "utility file"));
    const json& u = field(j, "utility", "utility file");
    const std::string type = as_string(field(u, "type", "utility section"), "utility type");
    if (type == "dense") {
        no_extras(u, {"type", "order", "values"}, "dense utility section");
        const auto names = string_array(field(u, "order", "dense utility section"), "'order'");
        if (names.size() != space.size()) {
            throw ModelError("'order' must list every variable exactly once");
        }
        const auto axes = resolve_axes(space, names, "'order'");
        auto values = number_array(field(u, "values", "dense utility section"), "'values'");
        if (values.size() != space.state_count()) {
            throw ModelError("dense 'values' must hold one entry per joint state (expected " +
                             std::to_string(space.state_count()) + ", got " +
                             std::to_string(values.size()) + ")");
        }
        values = canonicalize_layout(space, axes, std::move(values));
        UtilityTable table(space, std::move(values), allow_large);
        LoadedUtility out{std::move(space), std::move(table), std::nullopt};
        return out;
    }
    if (type == "factored") {
        no_extras(u, {"type", "factors"}, "factored utility section");
        const json& fs = field(u, "factors", "factored utility section");
        if (!fs.is_array()) {
            throw ModelError("'factors' must be an array");
        }
        std::vector<Factor> factors;
        factors.reserve(fs.size());
        for (const json& fj : fs) {
            no_extras(fj, {"scope", "values"}, "factor entry");
            const auto names = string_array(field(fj, "scope", "factor entry"), "factor scope");
            const auto axes = resolve_axes(space, names, "factor scope");
            auto values = number_array(field(fj, "values", "factor entry"), "factor values");
            std::uint64_t expect = 1;
            for (const std::size_t a : axes) {
                expect *= space.domain_size(a);
            }
            if (values.size() != expect) {
                throw ModelError("factor value table has the wrong length (expected " +
                                 std::to_string(expect) + ", got " +
                                 std::to_string(values.size()) + ")");
            }
            values = canonicalize_layout(space, axes, std::move(values));
            factors.emplace_back(space, Scope::from_indices(space, axes), std::move(values));
        }
        AdditiveDecomposition dec(space, std::move(factors));
        LoadedUtility out{std::move(space), std::nullopt, std::move(dec)};
        return out;
    }
    throw ModelError("utility type must be 'dense' or 'factored', not '" + type + "'");
}

LoadedUtility load_utility_file(const std::string& path, bool allow_large) {
    return parse_utility(load_json_file(path), allow_large);
}

BayesNet parse_bayes_net(const json& j) {
    no_extras(j, {"variables", "cpts"}, "network file");
    VariableSpace space = parse_space(field(j, "variables", "network file"));
    const json& cpts = field(j, "cpts", "network file");
    if (!cpts.is_array()) {
        throw ModelError("'cpts' must be an array");
    }
    std::vector<BayesNode> nodes(space.size());
    std::vector<char> have(space.size(), 0);
    for (const json& cj : cpts) {
        no_extras(cj, {"child", "parents", "table"}, "cpt entry");
        const std::string child_name = as_string(field(cj, "child", "cpt entry"), "cpt child");
        const std::size_t child = space.index_of(child_name);
        if (have[child]) {
            throw ModelError("duplicate conditional table for '" + child_name + "'");
        }
        have[child] = 1;
        const auto pnames = string_array(field(cj, "parents", "cpt entry"), "cpt parents");
        const auto axes = resolve_axes(space, pnames, "cpt parents");
        Scope parents = Scope::from_indices(space, axes);
        if (parents.contains(child)) {
            throw ModelError("'" + child_name + "' cannot be its own parent");
        }
        auto table = number_array(field(cj, "table", "cpt entry"), "cpt table");
        std::uint64_t expect = space.domain_size(child);
        for (const std::size_t a : axes) {
            expect *= space.domain_size(a);
        }
        if (table.size() != expect) {
            throw ModelError("conditional table for '" + child_name +
                             "' has the wrong length (expected " + std::to_string(expect) +
                             ", got " + std::to_string(table.size()) + ")");
        }
        // The 'parents' list declares a set; the table layout is pinned to
        // canonical parent order with the child values innermost.
        nodes[child] = BayesNode{std::move(parents), std::move(table)};
    }
    for (std::size_t v = 0; v < space.size(); ++v) {
        if (!have[v]) {
            throw ModelError("missing conditional table for '" + space.variable(v).name + "'");
        }
    }
    return BayesNet(std::move(space), std::move(nodes));
}

BayesNet load_bayes_net_file(const std::string& path) {
    return parse_bayes_net(load_json_file(path));
}

bool looks_like_bayes_net(const json& j) {
    return j.is_object() && j.contains("cpts");
}

bool looks_like_distribution(const json& j) {
    return j.is_object() && j.contains("probs");
}

ExplicitDistribution parse_distribution(const json& j, const VariableSpace& space,
                                        bool allow_large) {
    no_extras(j, {"order", "probs"}, "distribution file");
    const auto names = string_array(field(j, "order", "distribution file"), "'order'");
    if (names.size() != space.size()) {
        throw ModelError("distribution 'order' must list every variable exactly once");
    }
    const auto axes = resolve_axes(space, names, "'order'");
    auto probs = number_array(field(j, "probs", "distribution file"), "'probs'");
    if (probs.size() != space.state_count()) {
        throw ModelError("'probs' must hold one entry per joint state (expected " +
                         std::to_string(space.state_count()) + ", got " +
                         std::to_string(probs.size()) + ")");
    }
    probs = canonicalize_layout(space, axes, std::move(probs));
    return ExplicitDistribution(space, std::move(probs), allow_large);
}

ActionSet parse_actions(const json& j, const VariableSpace& space) {
    no_extras(j, {"actions"}, "action file");
    const json& arr = field(j, "actions", "action file");
    if (!arr.is_array() || arr.empty()) {
        throw ModelError("'actions' must be a nonempty array");
    }
    ActionSet out;
    out.actions.reserve(arr.size());
    for (const json& aj : arr) {
        no_extras(aj, {"label", "evidence"}, "action entry");
        Action act;
        act.label = as_string(field(aj, "label", "action entry"), "action label");
        for (const Action& prev : out.actions) {
            if (prev.label == act.label) {
                throw ModelError("duplicate action label '" + act.label + "'");
            }
        }
        const json& ev = field(aj, "evidence", "action entry");
        if (!ev.is_object()) {
            throw ModelError("action evidence must be an object mapping variables to values");
        }
        act.evidence = Assignment(space);
        for (auto it = ev.begin(); it != ev.end(); ++it) {
            const std::size_t idx = space.index_of(it.key());
            if (act.evidence.bound(idx)) {
                throw ModelError("action '" + act.label + "' sets '" + it.key() + "' twice");
            }
            act.evidence.set_label(space, it.key(), as_string(it.value(), "evidence value"));
        }
        out.actions.push_back(std::move(act));
    }
    return out;
}

json dense_to_json(const UtilityTable& u) {
    json j;
    j["variables"] = variables_to_json(u.space());
    json section;
    section["type"] = "dense";
    json order = json::array();
    for (const Variable& v : u.space().variables()) {
        order.push_back(v.name);
    }
    section["order"] = std::move(order);
    section["values"] = u.values();
    j["utility"] = std::move(section);
    return j;
}

json factored_to_json(const AdditiveDecomposition& d) {
    json j;
    j["variables"] = variables_to_json(d.space());
    json section;
    section["type"] = "factored";
    json factors = json::array();
    for (const Factor& f : d.factors()) {
        json fj;
        fj["scope"] = names_to_json(d.space(), f.scope());
        fj["values"] = f.values();
        factors.push_back(std::move(fj));
    }
    section["factors"] = std::move(factors);
    j["utility"] = std::move(section);
    return j;
}

json graph_to_json(const UndirectedGraph& g) {
    json j;
    json vars = json::array();
    for (const Variable& v : g.space().variables()) {
        vars.push_back(v.name);
    }
    j["variables"] = std::move(vars);
    json edges = json::array();
    for (const auto& [a, b] : g.edges()) {
        json e = json::array();
        e.push_back(g.space().variable(a).name);
        e.push_back(g.space().variable(b).name);
        edges.push_back(std::move(e));
    }
    j["edges"] = std::move(edges);
    return j;
}

std::string graph_to_dot(const UndirectedGraph& g) {
    std::string out = "graph U {\n";
    for (const Variable& v : g.space().variables()) {
        out += "  \"" + v.name + "\";\n";
    }
    for (const auto& [a, b] : g.edges()) {
        out += "  \"" + g.space().variable(a).name + "\" -- \"" + g.space().variable(b).name +
               "\";\n";
    }
    out += "}\n";
    return out;
}

json graphoid_report_to_json(const GraphoidReport& r) {
    json j;
    j["all_hold"] = r.all_hold();
    json conds = json::array();
    for (const GraphoidConditionStats& c : r.conditions) {
        json cj;
        cj["condition"] = c.name;
        cj["checked"] = c.checked;
        cj["violated"] = c.violated;
        conds.push_back(std::move(cj));
    }
    j["conditions"] = std::move(conds);
    json viols = json::array();
    for (const GraphoidViolation& v : r.violations) {
        json vj;
        vj["condition"] = v.condition;
        vj["x"] = v.x;
        vj["z"] = v.z;
        vj["y"] = v.y;
        vj["w"] = v.w;
        viols.push_back(std::move(vj));
    }
    j["violations"] = std::move(viols);
    return j;
}

}  // namespace mautil
