#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mautil/model.hpp"

namespace mautil {

/// The conditional-additive-independence map of a utility function: vertices
/// are the variables, and an edge means the endpoints are not additively
/// separable given everything else.
class UndirectedGraph {
public:
    explicit UndirectedGraph(VariableSpace space);

    const VariableSpace& space() const { return space_; }
    std::size_t vertex_count() const { return space_.size(); }

    void add_edge(std::size_t a, std::size_t b);
    void add_edge(std::string_view a, std::string_view b);
    bool has_edge(std::size_t a, std::size_t b) const;
    std::size_t edge_count() const;
    /// Edges as index pairs (a < b), sorted.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    std::vector<std::size_t> neighbors(std::size_t v) const;

private:
    VariableSpace space_;
    std::vector<std::vector<bool>> adj_;
};

/// Exhaustive graphoid checking is limited to this many variables; the
/// enumeration multiplies triple counts by the 2^|R| partition search.
inline constexpr std::size_t kGraphoidVariableLimit = 5;

struct GraphoidConditionStats {
    std::string name;
    std::uint64_t checked = 0;
    std::uint64_t violated = 0;
};

/// One failing instance of a condition; scopes rendered as comma-joined
/// variable names, `w` empty for conditions that take no fourth set.
struct GraphoidViolation {
    std::string condition;
    std::string x, z, y, w;
};

struct GraphoidReport {
    std::vector<GraphoidConditionStats> conditions;
    std::vector<GraphoidViolation> violations;

    bool all_hold() const {
        for (const auto& c : conditions)
            if (c.violated != 0) return false;
        return true;
    }
};

/// Graph with edge {a,b} iff a and b are not conditionally additively
/// independent given all remaining variables. Vertex separation in the
/// result then coincides with CAI for every partition of the variables.
UndirectedGraph build_perfect_map(const UtilityTable& u, const ToleranceConfig& tol = {});

/// True iff every path from x to y passes through z (reachability with z
/// removed). Scopes must be pairwise disjoint.
bool separates(const UndirectedGraph& g, const Scope& x, const Scope& z, const Scope& y);

/// All maximal cliques, each in canonical member order, the list sorted
/// lexicographically. Isolated vertices appear as singleton cliques.
std::vector<Scope> maximal_cliques(const UndirectedGraph& g);

/// Exhaustively verifies the five closure conditions of the CAI relation
/// (symmetry, decomposition, intersection, strong union, transitivity) over
/// all disjoint scope triples, using the extended CAI test. A correct
/// implementation reports zero violations for every utility.
GraphoidReport check_graphoid_axioms(const UtilityTable& u, const ToleranceConfig& tol = {});

}  // namespace mautil
