#pragma once

#include <optional>

#include "mautil/model.hpp"

namespace mautil {

/// Functional-form witness for utility independence of X:
/// u(x, y) = f(y) + g(y) * h(x) with g strictly positive.
struct UIWitness {
    Factor h;  // over X
    Factor f;  // over V - X
    Factor g;  // over V - X, min entry > epsilon
};

struct UiResult {
    bool independent = false;
    std::optional<UIWitness> witness;
};

/// Query CAI(X, Z, Y): X and Y additively independent given the
/// conditioning set Z. Scopes must be pairwise disjoint.
struct CaiQuery {
    Scope x, z, y;
};

/// Restriction of u to X with the remaining variables fixed:
/// t(xi) = u(xi, fix). `fix` must bind exactly V - X.
Factor conditional_utility(const UtilityTable& u, const Scope& x, const Assignment& fix);

/// Decides whether X is utility independent of V - X, i.e. whether u has the
/// form f(V-X) + g(V-X) * h(X) with g > 0. Requires {} != X != V. A constant
/// utility counts as independent; a mix of constant and non-constant
/// conditionals does not (g would have to vanish somewhere).
UiResult test_utility_independence(const UtilityTable& u, const Scope& x,
                                   const ToleranceConfig& tol = {},
                                   const Assignment* reference = nullptr);

/// Decides CAI(X, Z, Y) for a partition X, Z, Y of V via the equivalent
/// functional form u = f(X, Z) + g(Z, Y). The reference construction
/// f(xi,zeta) = u(xi, y0, zeta), g(y,zeta) = u(x0, y, zeta) - u(x0, y0, zeta)
/// succeeds whenever any valid split exists, so the test is exact.
bool test_cai(const UtilityTable& u, const CaiQuery& q, const ToleranceConfig& tol = {},
              const Assignment* reference = nullptr);

/// CAI extended to triples whose union need not cover V: with
/// R = V - X - Y - Z, holds iff some partition R = R1 u R2 satisfies
/// CAI(X u R1, Z, Y u R2). All 2^|R| partitions are tried. Diagnostic only.
bool test_cai_extended(const UtilityTable& u, const Scope& x, const Scope& z, const Scope& y,
                       const ToleranceConfig& tol = {}, const Assignment* reference = nullptr);

/// Additive independence of a partition of V: u decomposes as a sum of
/// per-part factors. Decided via the interaction-term criterion.
bool test_additive_partition(const UtilityTable& u, const std::vector<Scope>& parts,
                             const ToleranceConfig& tol = {});

/// Generalized additive independence over possibly overlapping scopes whose
/// union is V: u has an additive decomposition over them.
bool test_gai(const UtilityTable& u, const std::vector<Scope>& scopes,
              const ToleranceConfig& tol = {});

}  // namespace mautil
