#include "mautil/independence.hpp"

#include <algorithm>
#include <cmath>

#include "mautil/decompose.hpp"

namespace mautil {

namespace {

std::vector<std::size_t> reference_state(const VariableSpace& space, const Assignment* reference) {
    if (reference == nullptr) return std::vector<std::size_t>(space.size(), 0);
    if (reference->variable_count() != space.size() || !reference->is_full())
        throw ModelError("reference must be a full assignment over the space");
    std::vector<std::size_t> state(space.size());
    for (std::size_t i = 0; i < state.size(); ++i) state[i] = reference->value(i);
    return state;
}

// Table over `scope` obtained by evaluating u with the other variables held
// at `base`.
Factor slice(const UtilityTable& u, const Scope& scope, const std::vector<std::size_t>& base) {
    std::uint64_t size = 1;
    for (std::size_t m : scope.members()) size *= u.space().domain_size(m);
    std::vector<double> vals(size);
    for_each_scope_state(u.space(), scope, [&](const std::vector<std::size_t>& v, std::uint64_t t) {
        vals[t] = u.values()[embed_state(u.space(), scope, v, base)];
    });
    return Factor(u.space(), scope, std::move(vals));
}

}  // namespace

Factor conditional_utility(const UtilityTable& u, const Scope& x, const Assignment& fix) {
    const VariableSpace& space = u.space();
    if (fix.variable_count() != space.size() && !(fix.variable_count() == 0 && x.size() == space.size()))
        throw ModelError("fixed assignment belongs to a different space");
    for (std::size_t i = 0; i < space.size(); ++i) {
        const bool in_x = x.contains(i);
        const bool is_bound = fix.variable_count() == space.size() && fix.bound(i);
        if (in_x && is_bound)
            throw ModelError("fixed assignment overlaps the target scope at '" +
                             space.variable(i).name + "'");
        if (!in_x && !is_bound)
            throw ModelError("fixed assignment leaves '" + space.variable(i).name + "' unbound");
    }
    std::vector<std::size_t> base(space.size(), 0);
    for (std::size_t i = 0; i < space.size(); ++i)
        if (!x.contains(i)) base[i] = fix.value(i);
    return slice(u, x, base);
}

UiResult test_utility_independence(const UtilityTable& u, const Scope& x,
                                   const ToleranceConfig& tol, const Assignment* reference) {
    const VariableSpace& space = u.space();
    if (x.empty() || x.size() == space.size())
        throw ModelError("utility independence needs a nonempty proper subset of the variables");
    const Scope rest = scope_difference(full_scope(space), x);
    const double tolerance = scaled_tolerance(u, tol);
    const std::vector<std::size_t> ref = reference_state(space, reference);

    const Factor h = slice(u, x, ref);
    const auto hv = h.values();
    std::size_t i_max = 0, i_min = 0;
    for (std::size_t i = 1; i < hv.size(); ++i) {
        if (hv[i] > hv[i_max]) i_max = i;
        if (hv[i] < hv[i_min]) i_min = i;
    }
    const double span = hv[i_max] - hv[i_min];

    std::uint64_t rest_size = 1;
    for (std::size_t m : rest.members()) rest_size *= space.domain_size(m);
    std::vector<double> fv(rest_size), gv(rest_size);

    if (span <= tolerance) {
        // Reference conditional is flat: independence holds only under total
        // indifference, since g must stay strictly positive.
        bool all_flat = true;
        for_each_scope_state(space, rest, [&](const std::vector<std::size_t>& rv, std::uint64_t t) {
            std::vector<std::size_t> base(space.size(), 0);
            const auto& rm = rest.members();
            for (std::size_t k = 0; k < rm.size(); ++k) base[rm[k]] = rv[k];
            const Factor cond = slice(u, x, base);
            double lo = cond.values()[0], hi = cond.values()[0];
            for (double v : cond.values()) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > tolerance) all_flat = false;
            fv[t] = cond.values()[0];
            gv[t] = 1.0;
        });
        if (!all_flat) return {false, std::nullopt};
        UIWitness w{Factor::zeros(space, x), Factor(space, rest, std::move(fv)),
                    Factor(space, rest, std::move(gv))};
        return {true, std::move(w)};
    }

    // Solve g and f per context from the two extreme states of h, then check
    // the identity everywhere. g is uniquely determined, so failure is final.
    const StateProjector to_x(space, x);
    const StateProjector to_rest(space, rest);
    std::vector<std::size_t> x_state_max(x.size()), x_state_min(x.size());
    {
        std::uint64_t t_max = i_max, t_min = i_min;
        const auto& xm = x.members();
        for (std::size_t k = 0; k < xm.size(); ++k) {
            const std::uint64_t stride = h.strides()[k];
            x_state_max[k] = static_cast<std::size_t>((t_max / stride) % h.dims()[k]);
            x_state_min[k] = static_cast<std::size_t>((t_min / stride) % h.dims()[k]);
        }
    }
    for_each_scope_state(space, rest, [&](const std::vector<std::size_t>& rv, std::uint64_t t) {
        std::vector<std::size_t> base(space.size(), 0);
        const auto& rm = rest.members();
        for (std::size_t k = 0; k < rm.size(); ++k) base[rm[k]] = rv[k];
        const double u1 = u.values()[embed_state(space, x, x_state_max, base)];
        const double u2 = u.values()[embed_state(space, x, x_state_min, base)];
        gv[t] = (u1 - u2) / span;
        fv[t] = u1 - gv[t] * hv[i_max];
    });
    for (std::uint64_t s = 0; s < space.state_count(); ++s) {
        const std::uint64_t tx = to_x(s), tr = to_rest(s);
        if (gv[tr] <= tol.epsilon) return {false, std::nullopt};
        if (std::abs(u.values()[s] - (fv[tr] + gv[tr] * hv[tx])) > tolerance)
            return {false, std::nullopt};
    }
    UIWitness w{h, Factor(space, rest, std::move(fv)), Factor(space, rest, std::move(gv))};
    return {true, std::move(w)};
}

bool test_cai(const UtilityTable& u, const CaiQuery& q, const ToleranceConfig& tol,
              const Assignment* reference) {
    const VariableSpace& space = u.space();
    if (!q.x.disjoint_with(q.z) || !q.x.disjoint_with(q.y) || !q.z.disjoint_with(q.y))
        throw ModelError("CAI query scopes must be pairwise disjoint");
    if (scope_union(scope_union(q.x, q.z), q.y).size() != space.size())
        throw ModelError("CAI query scopes must partition the variables");

    const std::vector<std::size_t> ref = reference_state(space, reference);
    const double tolerance = scaled_tolerance(u, tol);
    const Scope xz = scope_union(q.x, q.z);
    const Scope zy = scope_union(q.z, q.y);

    // f-candidate: u with Y at its reference; g-candidate: u with X at its
    // reference, minus the overlap so the two sum back to u when CAI holds.
    const Factor fc = slice(u, xz, ref);
    Factor gc = slice(u, zy, ref);
    {
        const Factor at_ref = slice(u, q.z, ref);
        const StateProjector zy_to_z(space, q.z);
        // project each (y,z) cell onto its z slice of the reference table
        auto& g = gc.mutable_values();
        for_each_scope_state(space, zy, [&](const std::vector<std::size_t>& v, std::uint64_t t) {
            const std::uint64_t s = embed_state(space, zy, v, ref);
            g[t] -= at_ref.values()[zy_to_z(s)];
        });
    }

    const StateProjector to_xz(space, xz);
    const StateProjector to_zy(space, zy);
    for (std::uint64_t s = 0; s < space.state_count(); ++s) {
        const double rec = fc.values()[to_xz(s)] + gc.values()[to_zy(s)];
        if (std::abs(u.values()[s] - rec) > tolerance) return false;
    }
    return true;
}

bool test_cai_extended(const UtilityTable& u, const Scope& x, const Scope& z, const Scope& y,
                       const ToleranceConfig& tol, const Assignment* reference) {
    const VariableSpace& space = u.space();
    if (!x.disjoint_with(z) || !x.disjoint_with(y) || !z.disjoint_with(y))
        throw ModelError("scopes must be pairwise disjoint");
    const Scope rscope =
        scope_difference(full_scope(space), scope_union(scope_union(x, z), y));
    const auto& r = rscope.members();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << r.size()); ++mask) {
        std::vector<std::size_t> r1, r2;
        for (std::size_t k = 0; k < r.size(); ++k)
            ((mask >> k) & 1 ? r1 : r2).push_back(r[k]);
        CaiQuery q{scope_union(x, Scope::from_sorted(std::move(r1))), z,
                   scope_union(y, Scope::from_sorted(std::move(r2)))};
        if (test_cai(u, q, tol, reference)) return true;
    }
    return false;
}

bool test_additive_partition(const UtilityTable& u, const std::vector<Scope>& parts,
                             const ToleranceConfig& tol) {
    const VariableSpace& space = u.space();
    std::vector<bool> seen(space.size(), false);
    for (const Scope& p : parts) {
        if (p.empty()) throw ModelError("partition parts must be nonempty");
        for (std::size_t m : p.members()) {
            if (seen[m])
                throw ModelError("partition parts overlap at '" + space.variable(m).name + "'");
            seen[m] = true;
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ModelError("partition parts must cover every variable");
    return test_gai(u, parts, tol);
}

bool test_gai(const UtilityTable& u, const std::vector<Scope>& scopes,
              const ToleranceConfig& tol) {
    const VariableSpace& space = u.space();
    Scope covered;
    for (const Scope& s : scopes) {
        if (s.empty()) throw ModelError("scopes must be nonempty");
        covered = scope_union(covered, s);
    }
    if (covered.size() != space.size())
        throw ModelError("scopes must cover every variable");
    // u decomposes over the scopes iff no interaction term sticks out of
    // them, i.e. the terms restricted to the scopes already reconstruct u.
    return interaction_residual(u, scopes) <= scaled_tolerance(u, tol);
}

}  // namespace mautil
