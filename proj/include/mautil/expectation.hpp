#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mautil/model.hpp"

namespace mautil {

/// CPT rows and explicit distributions must sum to one within this bound.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Conditional distribution of one variable given its parents. The table is
/// row-major over parent assignments (canonical variable order, last parent
/// fastest) with the child value innermost.
struct BayesNode {
    Scope parents;
    std::vector<double> cpt;
};

/// Factored joint distribution: one conditional probability table per
/// variable, with an acyclic parent relation.
class BayesNet {
public:
    BayesNet(VariableSpace space, std::vector<BayesNode> nodes);

    const VariableSpace& space() const { return space_; }
    const BayesNode& node(std::size_t v) const { return nodes_[v]; }
    /// The node's scope in the joint: parents plus the child itself.
    Scope family(std::size_t v) const;
    /// The CPT as a factor over the family, in canonical layout.
    const Factor& family_factor(std::size_t v) const { return factors_[v]; }

private:
    VariableSpace space_;
    std::vector<BayesNode> nodes_;
    std::vector<Factor> factors_;
};

/// Dense joint distribution over the full state space.
class ExplicitDistribution {
public:
    ExplicitDistribution(VariableSpace space, std::vector<double> probs, bool allow_large = false);

    const VariableSpace& space() const { return space_; }
    const std::vector<double>& probs() const { return probs_; }

private:
    VariableSpace space_;
    std::vector<double> probs_;
};

/// A candidate decision, modeled as evidence the world is conditioned on.
struct Action {
    std::string label;
    Assignment evidence;
};

struct ActionSet {
    std::vector<Action> actions;
};

struct ScopeContainment {
    Scope scope;
    bool contained = false;
};

/// For each utility-factor scope, whether some node family of the network
/// covers it; uncovered scopes still compute correctly but cost extra
/// elimination work.
struct ContainmentReport {
    std::vector<ScopeContainment> entries;
    std::size_t uncovered = 0;
};

struct ActionChoice {
    std::string label;
    std::vector<std::pair<std::string, double>> expected_utilities;
};

/// Probability of a full state: the product of one CPT entry per variable.
double joint_probability(const BayesNet& bn, const Assignment& a);

/// Normalized marginal over `target` given the evidence, computed by
/// variable elimination with min-fill ordering (ties broken by variable
/// index). Target and evidence variables must not overlap. Throws
/// ModelError when the evidence has probability zero.
Factor marginal(const BayesNet& bn, const Scope& target, const Assignment& evidence);

/// Conditional expected utility by full state enumeration.
double eu_brute(const UtilityTable& u, const ExplicitDistribution& p, const Assignment& evidence);
double eu_brute(const UtilityTable& u, const BayesNet& bn, const Assignment& evidence,
                bool allow_large = false);

/// Conditional expected utility as the sum of per-factor expectations, each
/// against the marginal over its scope. Equals eu_brute whenever the brute
/// sum is feasible.
double eu_factored(const AdditiveDecomposition& d, const BayesNet& bn, const Assignment& evidence);

ContainmentReport containment_report(const AdditiveDecomposition& d, const BayesNet& bn);

/// Evaluates every action's conditional expected utility and returns the
/// maximizer; ties go to the earliest declaration.
ActionChoice choose_action(const AdditiveDecomposition& d, const BayesNet& bn,
                           const ActionSet& actions);

/// Junction-tree style factorization of p onto the given clique family:
/// q = p(C1) * prod p(Ci) / p(Si) with Si the intersection of Ci with its
/// predecessors. The cliques must cover every variable and be ordered to
/// satisfy the running-intersection property. The result has exactly p's
/// marginal on every clique while generally differing elsewhere.
ExplicitDistribution clique_marginal_projection(const ExplicitDistribution& p,
                                                const std::vector<Scope>& cliques);

}  // namespace mautil
