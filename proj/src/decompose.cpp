#include "mautil/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace mautil {

namespace {

std::vector<std::size_t> reference_state(const VariableSpace& space, const Assignment* reference) {
    if (reference == nullptr) return std::vector<std::size_t>(space.size(), 0);
    return to_state(space, *reference);
}

std::uint64_t mask_of(const Scope& s) {
    std::uint64_t m = 0;
    for (std::size_t v : s.members()) m |= std::uint64_t{1} << v;
    return m;
}

Scope scope_of_mask(std::uint64_t mask) {
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < 64 && (mask >> v) != 0; ++v)
        if ((mask >> v) & 1) members.push_back(v);
    return Scope::from_sorted(std::move(members));
}

// One axis sweep per variable turns a copy of u into every interaction
// component at once: afterwards entry s holds I_S(s) for S = the set of
// variables where s sits off the reference.
std::vector<double> mobius_table(const UtilityTable& u, const std::vector<std::size_t>& ref) {
    std::vector<double> buf = u.values();
    const VariableSpace& space = u.space();
    const std::uint64_t total = space.state_count();
    for (std::size_t v = 0; v < space.size(); ++v) {
        const std::uint64_t st = space.stride(v);
        const std::uint64_t d = space.domain_size(v);
        const std::uint64_t rv = ref[v];
        for (std::uint64_t block = 0; block < total; block += st * d) {
            for (std::uint64_t off = 0; off < st; ++off) {
                const double at_ref = buf[block + off + rv * st];
                for (std::uint64_t k = 0; k < d; ++k)
                    if (k != rv) buf[block + off + k * st] -= at_ref;
            }
        }
    }
    return buf;
}

// Visit every state index together with the bitmask of variables whose value
// differs from the reference.
template <typename Fn>
void for_each_offmask(const VariableSpace& space, const std::vector<std::size_t>& ref, Fn&& fn) {
    const std::size_t n = space.size();
    std::vector<std::size_t> state(n, 0);
    std::uint64_t mask = 0;
    for (std::size_t v = 0; v < n; ++v)
        if (ref[v] != 0) mask |= std::uint64_t{1} << v;
    const std::uint64_t total = space.state_count();
    for (std::uint64_t s = 0;;) {
        fn(s, mask);
        if (++s == total) return;
        std::size_t k = n;
        for (;;) {
            --k;
            const std::uint64_t bit = std::uint64_t{1} << k;
            ++state[k];
            if (state[k] < space.domain_size(k)) {
                if (state[k] == ref[k])
                    mask &= ~bit;
                else
                    mask |= bit;
                break;
            }
            state[k] = 0;
            if (ref[k] == 0)
                mask &= ~bit;
            else
                mask |= bit;
        }
    }
}

// The interaction-term table for one scope, read out of the transformed
// table; entries on reference slices are identically zero.
Factor term_factor(const VariableSpace& space, const Scope& scope,
                   const std::vector<double>& mob, const std::vector<std::size_t>& ref) {
    Factor f = Factor::zeros(space, scope);
    auto& vals = f.mutable_values();
    const auto& m = scope.members();
    for_each_scope_state(space, scope, [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        for (std::size_t k = 0; k < m.size(); ++k)
            if (v[k] == ref[m[k]]) return;
        vals[t] = mob[embed_state(space, scope, v, ref)];
    });
    return f;
}

// big += small, where small's scope is contained in big's.
void add_embedded(const VariableSpace& space, Factor& big, const Factor& small) {
    const auto& bm = big.scope().members();
    const auto& sm = small.scope().members();
    std::vector<std::pair<std::size_t, std::uint64_t>> pos;  // big cell position, small stride
    pos.reserve(sm.size());
    for (std::size_t k = 0; k < sm.size(); ++k) {
        const auto it = std::lower_bound(bm.begin(), bm.end(), sm[k]);
        pos.emplace_back(static_cast<std::size_t>(it - bm.begin()), small.strides()[k]);
    }
    auto& out = big.mutable_values();
    for_each_scope_state(space, big.scope(), [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        std::uint64_t si = 0;
        for (const auto& [p, st] : pos) si += v[p] * st;
        out[t] += small.values()[si];
    });
}

double max_gap(const UtilityTable& u, const std::vector<Factor>& factors) {
    const VariableSpace& space = u.space();
    std::vector<StateProjector> proj;
    proj.reserve(factors.size());
    for (const Factor& f : factors) proj.emplace_back(space, f.scope());
    double worst = 0.0;
    for (std::uint64_t s = 0; s < space.state_count(); ++s) {
        double rec = 0.0;
        for (std::size_t k = 0; k < factors.size(); ++k) rec += factors[k].values()[proj[k](s)];
        worst = std::max(worst, std::abs(u.values()[s] - rec));
    }
    return worst;
}

}  // namespace

std::vector<InteractionTerm> interaction_terms(const UtilityTable& u, const Assignment* reference,
                                               const std::vector<Scope>* restrict_to,
                                               const ToleranceConfig& tol) {
    const VariableSpace& space = u.space();
    if (restrict_to == nullptr && space.size() > kInteractionVariableLimit)
        throw GuardError("unrestricted interaction terms support at most " +
                         std::to_string(kInteractionVariableLimit) + " variables");
    const std::vector<std::size_t> ref = reference_state(space, reference);
    const std::vector<double> mob = mobius_table(u, ref);
    const double tolerance = scaled_tolerance(u, tol);

    std::vector<std::uint64_t> family;
    if (restrict_to != nullptr) {
        family.reserve(restrict_to->size());
        for (const Scope& s : *restrict_to) family.push_back(mask_of(s));
    }
    auto in_family = [&](std::uint64_t m) {
        if (restrict_to == nullptr) return true;
        for (std::uint64_t f : family)
            if ((m & ~f) == 0) return true;
        return false;
    };

    // Peak magnitude per component scope, skipping scopes outside the family.
    std::unordered_map<std::uint64_t, char> admit;
    std::unordered_map<std::uint64_t, double> peak;
    for_each_offmask(space, ref, [&](std::uint64_t s, std::uint64_t m) {
        auto [it, fresh] = admit.try_emplace(m, 0);
        if (fresh) it->second = in_family(m) ? 1 : 0;
        if (it->second == 0) return;
        double& p = peak[m];
        p = std::max(p, std::abs(mob[s]));
    });

    std::vector<std::pair<Scope, std::uint64_t>> picked;
    for (const auto& [m, p] : peak)
        if (m != 0 && p > tolerance) picked.emplace_back(scope_of_mask(m), m);
    std::sort(picked.begin(), picked.end());

    const Assignment ref_assignment = Assignment::full_state(space, ref);
    std::vector<InteractionTerm> terms;
    terms.reserve(picked.size() + 1);
    terms.push_back({term_factor(space, Scope{}, mob, ref), ref_assignment});
    for (const auto& [sc, m] : picked)
        terms.push_back({term_factor(space, sc, mob, ref), ref_assignment});
    return terms;
}

double interaction_residual(const UtilityTable& u, const std::vector<Scope>& scopes,
                            const Assignment* reference) {
    const VariableSpace& space = u.space();
    const std::vector<std::size_t> ref = reference_state(space, reference);
    const std::vector<double> mob = mobius_table(u, ref);

    std::vector<std::uint64_t> family;
    family.reserve(scopes.size());
    for (const Scope& s : scopes) family.push_back(mask_of(s));

    // Every component scope inside the family, with no magnitude filter, so
    // the reconstruction below is exact up to rounding.
    std::unordered_map<std::uint64_t, char> admit;
    std::vector<std::uint64_t> picked;
    for_each_offmask(space, ref, [&](std::uint64_t, std::uint64_t m) {
        auto [it, fresh] = admit.try_emplace(m, 0);
        if (!fresh) return;
        for (std::uint64_t f : family) {
            if ((m & ~f) == 0) {
                it->second = 1;
                picked.push_back(m);
                return;
            }
        }
    });
    std::sort(picked.begin(), picked.end());

    std::vector<Factor> factors;
    factors.reserve(picked.size());
    for (std::uint64_t m : picked) factors.push_back(term_factor(space, scope_of_mask(m), mob, ref));
    return max_gap(u, factors);
}

DecompositionReport decompose_over_cliques(const UtilityTable& u, const UndirectedGraph& g,
                                           const Assignment* reference,
                                           const ToleranceConfig& tol) {
    if (g.space() != u.space()) throw ModelError("graph and utility use different spaces");
    const VariableSpace& space = u.space();
    const std::vector<Scope> cliques = maximal_cliques(g);
    const std::vector<InteractionTerm> terms = interaction_terms(u, reference, &cliques, tol);

    std::vector<Factor> factors;
    factors.reserve(cliques.size());
    for (const Scope& c : cliques) factors.push_back(Factor::zeros(space, c));

    // The restricted computation guarantees every term fits some clique.
    std::vector<std::pair<Scope, Scope>> assignment;
    assignment.reserve(terms.size());
    for (const InteractionTerm& t : terms) {
        for (std::size_t i = 0; i < cliques.size(); ++i) {
            if (t.scope().subset_of(cliques[i])) {
                add_embedded(space, factors[i], t.table);
                assignment.emplace_back(t.scope(), cliques[i]);
                break;
            }
        }
    }

    const double worst = max_gap(u, factors);
    if (worst > scaled_tolerance(u, tol))
        throw ModelError("the graph is not a valid independence map for this utility (residual " +
                         std::to_string(worst) + ")");
    return {AdditiveDecomposition(space, std::move(factors)), worst, std::move(assignment)};
}

std::optional<AdditiveDecomposition> decompose_avoiding(const UtilityTable& u,
                                                        const std::vector<Scope>& avoid,
                                                        const Assignment* reference,
                                                        const ToleranceConfig& tol) {
    for (const Scope& a : avoid)
        if (a.empty()) throw ModelError("avoid scopes must be nonempty");
    const VariableSpace& space = u.space();
    const std::vector<InteractionTerm> terms = interaction_terms(u, reference, nullptr, tol);

    // terms[0] is the constant; the rest carry the nonzero scopes.
    for (std::size_t i = 1; i < terms.size(); ++i)
        for (const Scope& a : avoid)
            if (a.subset_of(terms[i].scope())) return std::nullopt;

    // Merge nested scopes into their maximal elements so no factor scope is
    // contained in another; a superset of a clean scope is still clean.
    std::vector<Scope> maximal;
    for (std::size_t i = 1; i < terms.size(); ++i) {
        const Scope& s = terms[i].scope();
        bool dominated = false;
        for (std::size_t j = 1; j < terms.size() && !dominated; ++j)
            dominated = i != j && s != terms[j].scope() && s.subset_of(terms[j].scope());
        if (!dominated) maximal.push_back(s);
    }
    std::sort(maximal.begin(), maximal.end());

    if (maximal.empty()) {
        std::vector<Factor> single;
        single.push_back(terms[0].table);
        return AdditiveDecomposition(space, std::move(single));
    }

    std::vector<Factor> factors;
    factors.reserve(maximal.size());
    for (const Scope& m : maximal) factors.push_back(Factor::zeros(space, m));
    for (const InteractionTerm& t : terms) {
        for (std::size_t i = 0; i < maximal.size(); ++i) {
            if (t.scope().subset_of(maximal[i])) {
                add_embedded(space, factors[i], t.table);
                break;
            }
        }
    }
    return AdditiveDecomposition(space, std::move(factors));
}

double residual(const UtilityTable& u, const AdditiveDecomposition& d) {
    if (u.space() != d.space()) throw ModelError("utility and decomposition use different spaces");
    return max_gap(u, d.factors());
}

}  // namespace mautil
