#include "mautil/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mautil {

namespace {

// Position/stride pairs projecting cells of a wider scope onto a factor over
// a contained scope.
struct SubIndex {
    std::vector<std::pair<std::size_t, std::uint64_t>> pos;

    static SubIndex make(const Scope& wide, const Factor& narrow) {
        SubIndex s;
        const auto& wm = wide.members();
        const auto& nm = narrow.scope().members();
        s.pos.reserve(nm.size());
        for (std::size_t k = 0; k < nm.size(); ++k) {
            const auto it = std::lower_bound(wm.begin(), wm.end(), nm[k]);
            s.pos.emplace_back(static_cast<std::size_t>(it - wm.begin()), narrow.strides()[k]);
        }
        return s;
    }

    std::uint64_t operator()(const std::vector<std::size_t>& wide_vals) const {
        std::uint64_t t = 0;
        for (const auto& [p, st] : pos) t += wide_vals[p] * st;
        return t;
    }
};

Factor ones(const VariableSpace& space, const Scope& sc) {
    Factor f = Factor::zeros(space, sc);
    std::fill(f.mutable_values().begin(), f.mutable_values().end(), 1.0);
    return f;
}

Factor factor_product(const VariableSpace& space, const Factor& a, const Factor& b) {
    const Scope sc = scope_union(a.scope(), b.scope());
    Factor out = Factor::zeros(space, sc);
    const SubIndex ia = SubIndex::make(sc, a), ib = SubIndex::make(sc, b);
    auto& vals = out.mutable_values();
    for_each_scope_state(space, sc, [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        vals[t] = a.values()[ia(v)] * b.values()[ib(v)];
    });
    return out;
}

Factor factor_sum_out(const VariableSpace& space, const Factor& f, std::size_t var) {
    const Scope sc = scope_difference(f.scope(), Scope::from_sorted({var}));
    Factor out = Factor::zeros(space, sc);
    const SubIndex sub = SubIndex::make(f.scope(), out);
    auto& vals = out.mutable_values();
    for_each_scope_state(space, f.scope(), [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        vals[sub(v)] += f.values()[t];
    });
    return out;
}

// Fix the evidence-bound variables inside f, dropping them from its scope.
Factor factor_reduce(const VariableSpace& space, const Factor& f, const Assignment& evidence) {
    if (evidence.variable_count() == 0) return f;
    std::vector<std::size_t> keep;
    std::uint64_t base = 0;
    std::vector<std::pair<std::size_t, std::uint64_t>> pos;  // kept cell position, f stride
    const auto& fm = f.scope().members();
    for (std::size_t k = 0; k < fm.size(); ++k) {
        if (evidence.bound(fm[k])) {
            base += evidence.value(fm[k]) * f.strides()[k];
        } else {
            pos.emplace_back(keep.size(), f.strides()[k]);
            keep.push_back(fm[k]);
        }
    }
    if (keep.size() == fm.size()) return f;
    Factor out = Factor::zeros(space, Scope::from_sorted(std::move(keep)));
    auto& vals = out.mutable_values();
    for_each_scope_state(space, out.scope(), [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        std::uint64_t fi = base;
        for (const auto& [p, st] : pos) fi += v[p] * st;
        vals[t] = f.values()[fi];
    });
    return out;
}

double joint_at(const BayesNet& bn, const std::vector<std::size_t>& state) {
    double p = 1.0;
    for (std::size_t v = 0; v < bn.space().size(); ++v) {
        const Factor& f = bn.family_factor(v);
        p *= f.values()[f.index_of_state(state)];
    }
    return p;
}

void check_evidence_shape(const VariableSpace& space, const Assignment& evidence) {
    if (evidence.variable_count() != 0 && evidence.variable_count() != space.size())
        throw ModelError("evidence belongs to a different space");
}

}  // namespace

BayesNet::BayesNet(VariableSpace space, std::vector<BayesNode> nodes)
    : space_(std::move(space)), nodes_(std::move(nodes)) {
    if (nodes_.size() != space_.size())
        throw ModelError("need exactly one conditional table per variable");

    // Acyclicity of the parent relation.
    std::vector<std::vector<std::size_t>> children(space_.size());
    std::vector<std::size_t> indeg(space_.size(), 0);
    for (std::size_t v = 0; v < space_.size(); ++v) {
        const Scope& par = nodes_[v].parents;
        if (!par.empty() && par.members().back() >= space_.size())
            throw ModelError("parent index out of range");
        if (par.contains(v))
            throw ModelError("variable '" + space_.variable(v).name + "' cannot be its own parent");
        for (std::size_t p : par.members()) {
            children[p].push_back(v);
            ++indeg[v];
        }
    }
    std::vector<std::size_t> queue;
    for (std::size_t v = 0; v < space_.size(); ++v)
        if (indeg[v] == 0) queue.push_back(v);
    std::size_t seen = 0;
    while (!queue.empty()) {
        const std::size_t v = queue.back();
        queue.pop_back();
        ++seen;
        for (std::size_t c : children[v])
            if (--indeg[c] == 0) queue.push_back(c);
    }
    if (seen != space_.size()) throw ModelError("parent relation contains a cycle");

    factors_.reserve(space_.size());
    for (std::size_t v = 0; v < space_.size(); ++v) {
        const Scope& par = nodes_[v].parents;
        const std::size_t d = space_.domain_size(v);
        std::uint64_t rows = 1;
        for (std::size_t p : par.members()) rows *= space_.domain_size(p);
        const auto& cpt = nodes_[v].cpt;
        if (cpt.size() != rows * d)
            throw ModelError("conditional table for '" + space_.variable(v).name +
                             "' has the wrong length");
        for (double e : cpt)
            if (!std::isfinite(e) || e < 0.0 || e > 1.0)
                throw ModelError("conditional probabilities must lie in [0,1]");
        for (std::uint64_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += cpt[r * d + c];
            if (std::abs(s - 1.0) > kProbabilityTolerance)
                throw ModelError("a row of the conditional table for '" +
                                 space_.variable(v).name + "' does not sum to 1");
        }

        // Rearrange the (parents x child) table into a canonical factor over
        // the family scope.
        const auto& pm = par.members();
        std::vector<std::uint64_t> pstride(pm.size(), 1);
        std::uint64_t acc = d;  // child varies fastest
        for (std::size_t k = pm.size(); k-- > 0;) {
            pstride[k] = acc;
            acc *= space_.domain_size(pm[k]);
        }
        const Scope fam = scope_union(par, Scope::from_sorted({v}));
        const auto& fm = fam.members();
        std::vector<std::uint64_t> cellstride(fm.size(), 0);
        for (std::size_t k = 0; k < fm.size(); ++k) {
            if (fm[k] == v) {
                cellstride[k] = 1;
            } else {
                const std::size_t pk = static_cast<std::size_t>(
                    std::lower_bound(pm.begin(), pm.end(), fm[k]) - pm.begin());
                cellstride[k] = pstride[pk];
            }
        }
        Factor f = Factor::zeros(space_, fam);
        auto& vals = f.mutable_values();
        for_each_scope_state(space_, fam, [&](const std::vector<std::size_t>& cv, std::uint64_t t) {
            std::uint64_t ci = 0;
            for (std::size_t k = 0; k < fm.size(); ++k) ci += cv[k] * cellstride[k];
            vals[t] = cpt[ci];
        });
        factors_.push_back(std::move(f));
    }
}

Scope BayesNet::family(std::size_t v) const {
    if (v >= space_.size()) throw ModelError("variable index out of range");
    return scope_union(nodes_[v].parents, Scope::from_sorted({v}));
}

ExplicitDistribution::ExplicitDistribution(VariableSpace space, std::vector<double> probs,
                                           bool allow_large)
    : space_(std::move(space)), probs_(std::move(probs)) {
    if (!allow_large && space_.state_count() > kDenseStateLimit)
        throw GuardError("distribution over " + std::to_string(space_.state_count()) +
                         " states exceeds the dense-table limit; pass the force flag to try anyway");
    if (probs_.size() != space_.state_count())
        throw ModelError("probability table length does not match the state count");
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0)
            throw ModelError("probabilities must be finite and nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance)
        throw ModelError("probabilities must sum to 1");
}

double joint_probability(const BayesNet& bn, const Assignment& a) {
    return joint_at(bn, to_state(bn.space(), a));
}

Factor marginal(const BayesNet& bn, const Scope& target, const Assignment& evidence) {
    const VariableSpace& space = bn.space();
    check_evidence_shape(space, evidence);
    const bool has_ev = evidence.variable_count() != 0;
    if (!target.empty() && target.members().back() >= space.size())
        throw ModelError("target variable out of range");
    for (std::size_t m : target.members())
        if (has_ev && evidence.bound(m))
            throw ModelError("target variable '" + space.variable(m).name +
                             "' is fixed by the evidence");

    std::vector<Factor> factors;
    factors.reserve(space.size());
    for (std::size_t v = 0; v < space.size(); ++v)
        factors.push_back(factor_reduce(space, bn.family_factor(v), evidence));

    std::vector<std::size_t> elim;
    for (std::size_t v = 0; v < space.size(); ++v)
        if (!target.contains(v) && !(has_ev && evidence.bound(v))) elim.push_back(v);

    while (!elim.empty()) {
        // Min-fill choice of the next variable; ties go to the smallest index.
        auto adjacent = [&](std::size_t a, std::size_t b) {
            for (const Factor& f : factors)
                if (f.scope().contains(a) && f.scope().contains(b)) return true;
            return false;
        };
        std::size_t best = elim[0];
        std::int64_t best_fill = -1;
        for (std::size_t v : elim) {
            std::vector<std::size_t> nb;
            for (const Factor& f : factors)
                if (f.scope().contains(v))
                    for (std::size_t m : f.scope().members())
                        if (m != v && std::find(nb.begin(), nb.end(), m) == nb.end())
                            nb.push_back(m);
            std::int64_t fill = 0;
            for (std::size_t i = 0; i < nb.size(); ++i)
                for (std::size_t j = i + 1; j < nb.size(); ++j)
                    if (!adjacent(nb[i], nb[j])) ++fill;
            if (best_fill < 0 || fill < best_fill) {
                best_fill = fill;
                best = v;
            }
        }

        std::vector<Factor> rest;
        rest.reserve(factors.size());
        Factor prod = ones(space, Scope{});
        for (Factor& f : factors) {
            if (f.scope().contains(best))
                prod = factor_product(space, prod, f);
            else
                rest.push_back(std::move(f));
        }
        rest.push_back(factor_sum_out(space, prod, best));
        factors = std::move(rest);
        elim.erase(std::remove(elim.begin(), elim.end(), best), elim.end());
    }

    Factor result = ones(space, target);
    for (const Factor& f : factors) result = factor_product(space, result, f);

    double sum = 0.0;
    for (double v : result.values()) sum += v;
    if (!(sum > 0.0)) throw ModelError("evidence has probability zero");
    for (double& v : result.mutable_values()) v /= sum;
    return result;
}

double eu_brute(const UtilityTable& u, const ExplicitDistribution& p, const Assignment& evidence) {
    if (u.space() != p.space())
        throw ModelError("utility and distribution use different spaces");
    const VariableSpace& space = u.space();
    check_evidence_shape(space, evidence);
    const bool has_ev = evidence.variable_count() != 0;

    const Scope bound = has_ev ? bound_scope(space, evidence) : Scope{};
    const Scope free = scope_difference(full_scope(space), bound);
    std::vector<std::size_t> base(space.size(), 0);
    for (std::size_t m : bound.members()) base[m] = evidence.value(m);

    double mass = 0.0, acc = 0.0;
    for_each_scope_state(space, free, [&](const std::vector<std::size_t>& v, std::uint64_t) {
        const std::uint64_t s = embed_state(space, free, v, base);
        mass += p.probs()[s];
        acc += p.probs()[s] * u.values()[s];
    });
    if (!(mass > 0.0)) throw ModelError("evidence has probability zero");
    return acc / mass;
}

double eu_brute(const UtilityTable& u, const BayesNet& bn, const Assignment& evidence,
                bool allow_large) {
    if (u.space() != bn.space())
        throw ModelError("utility and network use different spaces");
    const VariableSpace& space = u.space();
    check_evidence_shape(space, evidence);
    if (!allow_large && space.state_count() > kDenseStateLimit)
        throw GuardError("brute-force expectation over " + std::to_string(space.state_count()) +
                         " states exceeds the dense-table limit; pass the force flag to try anyway");
    const bool has_ev = evidence.variable_count() != 0;

    const Scope bound = has_ev ? bound_scope(space, evidence) : Scope{};
    const Scope free = scope_difference(full_scope(space), bound);
    std::vector<std::size_t> state(space.size(), 0);
    for (std::size_t m : bound.members()) state[m] = evidence.value(m);
    const auto& fm = free.members();

    double mass = 0.0, acc = 0.0;
    for_each_scope_state(space, free, [&](const std::vector<std::size_t>& v, std::uint64_t) {
        for (std::size_t k = 0; k < fm.size(); ++k) state[fm[k]] = v[k];
        const double p = joint_at(bn, state);
        mass += p;
        acc += p * u.values()[state_index(space, state)];
    });
    if (!(mass > 0.0)) throw ModelError("evidence has probability zero");
    return acc / mass;
}

double eu_factored(const AdditiveDecomposition& d, const BayesNet& bn,
                   const Assignment& evidence) {
    if (d.space() != bn.space())
        throw ModelError("utility and network use different spaces");
    const VariableSpace& space = d.space();
    check_evidence_shape(space, evidence);
    const bool has_ev = evidence.variable_count() != 0;

    double total = 0.0;
    for (const Factor& f : d.factors()) {
        // Marginalize only over the factor variables the evidence leaves
        // free; fixed ones are read straight from the evidence.
        const auto& fm = f.scope().members();
        std::vector<std::size_t> freev;
        std::uint64_t base = 0;
        std::vector<std::pair<std::size_t, std::uint64_t>> pos;
        for (std::size_t k = 0; k < fm.size(); ++k) {
            if (has_ev && evidence.bound(fm[k])) {
                base += evidence.value(fm[k]) * f.strides()[k];
            } else {
                pos.emplace_back(freev.size(), f.strides()[k]);
                freev.push_back(fm[k]);
            }
        }
        const Scope free = Scope::from_sorted(std::move(freev));
        const Factor marg = marginal(bn, free, evidence);
        double acc = 0.0;
        for_each_scope_state(space, free, [&](const std::vector<std::size_t>& v, std::uint64_t t) {
            std::uint64_t fi = base;
            for (const auto& [p, st] : pos) fi += v[p] * st;
            acc += marg.values()[t] * f.values()[fi];
        });
        total += acc;
    }
    return total;
}

ContainmentReport containment_report(const AdditiveDecomposition& d, const BayesNet& bn) {
    if (d.space() != bn.space())
        throw ModelError("utility and network use different spaces");
    ContainmentReport r;
    for (const Factor& f : d.factors()) {
        bool contained = false;
        for (std::size_t v = 0; v < bn.space().size() && !contained; ++v)
            contained = f.scope().subset_of(bn.family(v));
        r.entries.push_back({f.scope(), contained});
        if (!contained) ++r.uncovered;
    }
    return r;
}

ActionChoice choose_action(const AdditiveDecomposition& d, const BayesNet& bn,
                           const ActionSet& actions) {
    if (actions.actions.empty()) throw ModelError("need at least one action");
    ActionChoice out;
    std::size_t best = 0;
    for (std::size_t i = 0; i < actions.actions.size(); ++i) {
        const double eu = eu_factored(d, bn, actions.actions[i].evidence);
        out.expected_utilities.emplace_back(actions.actions[i].label, eu);
        if (eu > out.expected_utilities[best].second) best = i;
    }
    out.label = out.expected_utilities[best].first;
    return out;
}

ExplicitDistribution clique_marginal_projection(const ExplicitDistribution& p,
                                                const std::vector<Scope>& cliques) {
    const VariableSpace& space = p.space();
    if (cliques.empty()) throw ModelError("need at least one clique");
    Scope covered;
    for (const Scope& c : cliques) {
        if (c.empty()) throw ModelError("cliques must be nonempty");
        if (c.members().back() >= space.size())
            throw ModelError("clique variable out of range");
        covered = scope_union(covered, c);
    }
    if (covered.size() != space.size())
        throw ModelError("cliques must cover every variable");

    // Separators, validating the running-intersection property as we go.
    std::vector<Scope> seps(cliques.size());
    Scope before = cliques[0];
    for (std::size_t i = 1; i < cliques.size(); ++i) {
        const Scope s = scope_intersection(cliques[i], before);
        bool housed = false;
        for (std::size_t j = 0; j < i && !housed; ++j) housed = s.subset_of(cliques[j]);
        if (!housed)
            throw ModelError("clique ordering violates the running-intersection property at "
                             "position " + std::to_string(i));
        seps[i] = s;
        before = scope_union(before, cliques[i]);
    }

    auto marginal_of = [&](const Scope& sc) {
        Factor m = Factor::zeros(space, sc);
        const StateProjector proj(space, sc);
        auto& vals = m.mutable_values();
        for (std::uint64_t s = 0; s < space.state_count(); ++s) vals[proj(s)] += p.probs()[s];
        return m;
    };

    std::vector<Factor> cm, sm;
    std::vector<StateProjector> cproj, sproj;
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        cm.push_back(marginal_of(cliques[i]));
        cproj.emplace_back(space, cliques[i]);
        sm.push_back(i == 0 ? ones(space, Scope{}) : marginal_of(seps[i]));
        sproj.emplace_back(space, i == 0 ? Scope{} : seps[i]);
    }

    std::vector<double> q(space.state_count(), 0.0);
    for (std::uint64_t s = 0; s < space.state_count(); ++s) {
        double val = 1.0;
        for (std::size_t i = 0; i < cliques.size(); ++i) {
            const double den = sm[i].values()[sproj[i](s)];
            if (den <= 0.0) {  // 0/0 counts as 0
                val = 0.0;
                break;
            }
            val *= cm[i].values()[cproj[i](s)] / den;
        }
        q[s] = val;
    }
    return ExplicitDistribution(space, std::move(q), true);
}

}  // namespace mautil
