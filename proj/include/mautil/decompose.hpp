#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mautil/graph.hpp"
#include "mautil/model.hpp"

namespace mautil {

/// Computing interaction terms for every subset of the variables is refused
/// above this many variables; restricted queries have no extra limit.
inline constexpr std::size_t kInteractionVariableLimit = 20;

/// One inclusion-exclusion component of a utility table relative to a
/// reference state: I_S(x) = sum over T subseteq S of (-1)^|S-T| u(x_T, ref).
/// The table vanishes wherever any coordinate sits at its reference value,
/// and the terms over all subsets sum back to u exactly.
struct InteractionTerm {
    Factor table;
    Assignment reference;

    const Scope& scope() const { return table.scope(); }
};

/// All interaction terms whose table is nonzero beyond the scaled tolerance,
/// plus always the empty-scope constant term, sorted by scope. With
/// `restrict_to`, only scopes contained in some listed scope are computed;
/// without it every subset of the variables is considered (guarded).
/// A null reference means the first value of every domain.
std::vector<InteractionTerm> interaction_terms(const UtilityTable& u,
                                               const Assignment* reference = nullptr,
                                               const std::vector<Scope>* restrict_to = nullptr,
                                               const ToleranceConfig& tol = {});

/// Max-norm gap between u and its reconstruction from the interaction terms
/// restricted to subsets of the given scopes. Zero (up to rounding) iff u
/// has an additive decomposition over the scopes.
double interaction_residual(const UtilityTable& u, const std::vector<Scope>& scopes,
                            const Assignment* reference = nullptr);

struct DecompositionReport {
    AdditiveDecomposition decomposition;
    double max_residual = 0.0;
    /// Interaction scope -> scope of the factor that absorbed it.
    std::vector<std::pair<Scope, Scope>> clique_assignment;
};

/// Additive decomposition of u with one factor per maximal clique of g.
/// Every interaction term is folded into the lexicographically first clique
/// containing its scope (the constant into the first clique). Throws
/// ModelError if the residual exceeds tolerance, which means g is not a
/// valid independence map for u.
DecompositionReport decompose_over_cliques(const UtilityTable& u, const UndirectedGraph& g,
                                           const Assignment* reference = nullptr,
                                           const ToleranceConfig& tol = {});

/// A decomposition none of whose factor scopes contains any `avoid` scope,
/// or nullopt when none exists. Exists iff no nonzero interaction scope
/// contains an avoid scope; the factors are the nonzero interaction terms
/// merged into their maximal scopes.
std::optional<AdditiveDecomposition> decompose_avoiding(const UtilityTable& u,
                                                        const std::vector<Scope>& avoid,
                                                        const Assignment* reference = nullptr,
                                                        const ToleranceConfig& tol = {});

/// Max over all states of |u - d| for a decomposition on the same space.
double residual(const UtilityTable& u, const AdditiveDecomposition& d);

}  // namespace mautil
