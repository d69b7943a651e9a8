#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mautil/decompose.hpp"
#include "mautil/graph.hpp"
#include "mautil/independence.hpp"
#include "mautil/model.hpp"
#include "testutil.hpp"

using namespace mautil;
using namespace testutil;

namespace {

// u = x*y + y*z on binary {0,1} domains (values equal the value indices).
UtilityTable chain_utility(const VariableSpace& sp) {
    std::vector<double> v(8);
    for (std::uint64_t s = 0; s < 8; ++s) {
        const auto st = state_decode(sp, s);
        v[s] = static_cast<double>(st[0] * st[1] + st[1] * st[2]);
    }
    return UtilityTable(sp, std::move(v));
}

// u = x*y*z: a single irreducible three-way interaction.
UtilityTable product_utility(const VariableSpace& sp) {
    std::vector<double> v(8);
    for (std::uint64_t s = 0; s < 8; ++s) {
        const auto st = state_decode(sp, s);
        v[s] = static_cast<double>(st[0] * st[1] * st[2]);
    }
    return UtilityTable(sp, std::move(v));
}

// Dense table rebuilt by summing the term tables over the full space.
std::vector<double> reconstruct(const VariableSpace& sp, const std::vector<InteractionTerm>& terms) {
    std::vector<double> out(sp.state_count(), 0.0);
    for (const InteractionTerm& t : terms) {
        const StateProjector proj(sp, t.scope());
        for (std::uint64_t s = 0; s < out.size(); ++s) {
            out[s] += t.table.values()[proj(s)];
        }
    }
    return out;
}

std::vector<Scope> term_scopes(const std::vector<InteractionTerm>& terms) {
    std::vector<Scope> out;
    out.reserve(terms.size());
    for (const InteractionTerm& t : terms) {
        out.push_back(t.scope());
    }
    return out;
}

std::vector<Scope> factor_scopes(const AdditiveDecomposition& d) {
    std::vector<Scope> out;
    out.reserve(d.factors().size());
    for (const Factor& f : d.factors()) {
        out.push_back(f.scope());
    }
    return out;
}

double max_eval_gap(const UtilityTable& u, const AdditiveDecomposition& d) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < u.space().state_count(); ++s) {
        const Assignment a = Assignment::full_state(u.space(), state_decode(u.space(), s));
        worst = std::max(worst, std::abs(evaluate_dense(u, a) - evaluate_decomposition(d, a)));
    }
    return worst;
}

// Every (X,Z,Y) partition of the variables with X and Y nonempty, encoded
// as bucket labels 0=X, 1=Z, 2=Y.
template <typename Fn>
void for_each_partition(const VariableSpace& sp, Fn&& fn) {
    const std::size_t n = sp.size();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        total *= 3;
    }
    for (std::uint64_t code = 0; code < total; ++code) {
        std::vector<std::size_t> xs, zs, ys;
        std::uint64_t rem = code;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t b = rem % 3;
            rem /= 3;
            (b == 0 ? xs : b == 1 ? zs : ys).push_back(i);
        }
        if (xs.empty() || ys.empty()) {
            continue;
        }
        fn(Scope::from_indices(sp, xs), Scope::from_indices(sp, zs), Scope::from_indices(sp, ys));
    }
}

// All cross pairs {x_i, y_j}: the scopes a decomposition must avoid for X
// and Y to be additively separated given the rest.
std::vector<Scope> cross_pairs(const VariableSpace& sp, const Scope& x, const Scope& y) {
    std::vector<Scope> pairs;
    for (const std::size_t a : x.members()) {
        for (const std::size_t b : y.members()) {
            pairs.push_back(Scope::from_indices(sp, {a, b}));
        }
    }
    return pairs;
}

}  // namespace

TEST_CASE("interaction terms of a two-variable table match hand computation") {
    const VariableSpace sp = binary_space(2);
    const UtilityTable u(sp, {5, 2, 1, 0});
    const auto terms = interaction_terms(u);

    // Components relative to the all-first reference: constant u(0,0)=5,
    // then u(1,0)-u(0,0)=-4 on v0, u(0,1)-u(0,0)=-3 on v1, and the mixed
    // second difference 0-1-2+5=2 on {v0,v1}.
    REQUIRE(terms.size() == 4);
    CHECK(terms[0].scope() == Scope{});
    CHECK(terms[0].table.values() == std::vector<double>{5});
    CHECK(terms[1].scope() == scope_of(sp, {0}));
    CHECK(terms[1].table.values() == std::vector<double>{0, -4});
    CHECK(terms[2].scope() == scope_of(sp, {0, 1}));
    CHECK(terms[2].table.values() == std::vector<double>{0, 0, 0, 2});
    CHECK(terms[3].scope() == scope_of(sp, {1}));
    CHECK(terms[3].table.values() == std::vector<double>{0, -3});

    for (const InteractionTerm& t : terms) {
        CHECK(to_state(sp, t.reference) == std::vector<std::size_t>{0, 0});
    }

    const auto rebuilt = reconstruct(sp, terms);
    for (std::uint64_t s = 0; s < 4; ++s) {
        CHECK(rebuilt[s] == doctest::Approx(u[s]).epsilon(1e-12));
    }
}

TEST_CASE("interaction terms keep only the scopes a utility actually couples") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable u = chain_utility(sp);
    const auto terms = interaction_terms(u);

    // x*y + y*z has no singleton effects off the reference and no three-way
    // component; only the two planted pair interactions survive.
    const std::vector<Scope> want = {Scope{}, scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
    CHECK(term_scopes(terms) == want);
    CHECK(terms[0].table.values() == std::vector<double>{0});
    CHECK(terms[1].table.values() == std::vector<double>{0, 0, 0, 1});
    CHECK(terms[2].table.values() == std::vector<double>{0, 0, 0, 1});
}

TEST_CASE("a flat utility reduces to a lone constant term") {
    const VariableSpace sp = binary_space(3);

    const UtilityTable zero(sp, std::vector<double>(8, 0.0));
    const auto zero_terms = interaction_terms(zero);
    REQUIRE(zero_terms.size() == 1);
    CHECK(zero_terms[0].scope() == Scope{});
    CHECK(zero_terms[0].table.values() == std::vector<double>{0});

    const UtilityTable seven(sp, std::vector<double>(8, 7.0));
    const auto seven_terms = interaction_terms(seven);
    REQUIRE(seven_terms.size() == 1);
    CHECK(seven_terms[0].table.values() == std::vector<double>{7});
}

TEST_CASE("interaction terms vanish on reference slices and rebuild the table") {
    std::mt19937_64 rng(1313);
    const VariableSpace sp = space_with_domains({2, 3, 2, 2});

    for (int trial = 0; trial < 20; ++trial) {
        const UtilityTable u = random_utility(rng, sp);

        // Alternate between the default reference and a random full state.
        std::optional<Assignment> ref;
        std::vector<std::size_t> ref_state(sp.size(), 0);
        if (trial % 2 == 1) {
            for (std::size_t v = 0; v < sp.size(); ++v) {
                ref_state[v] = rng() % sp.domain_size(v);
            }
            ref = Assignment::full_state(sp, ref_state);
        }
        const auto terms = interaction_terms(u, ref ? &*ref : nullptr);

        CHECK(std::is_sorted(terms.begin(), terms.end(),
                             [](const InteractionTerm& a, const InteractionTerm& b) {
                                 return a.scope() < b.scope();
                             }));
        CHECK(terms[0].scope() == Scope{});

        for (const InteractionTerm& t : terms) {
            const auto& m = t.scope().members();
            for_each_scope_state(sp, t.scope(), [&](const std::vector<std::size_t>& v,
                                                    std::uint64_t idx) {
                for (std::size_t k = 0; k < m.size(); ++k) {
                    if (v[k] == ref_state[m[k]]) {
                        CHECK(t.table.values()[idx] == 0.0);
                        return;
                    }
                }
            });
        }

        const double tol = 1e-9 * (1.0 + u.max_abs());
        const auto rebuilt = reconstruct(sp, terms);
        for (std::uint64_t s = 0; s < sp.state_count(); ++s) {
            CHECK(std::abs(rebuilt[s] - u[s]) <= tol);
        }
    }
}

TEST_CASE("restricting interaction terms filters scopes without touching the rest") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable u = chain_utility(sp);

    const std::vector<Scope> family = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
    const auto full = interaction_terms(u);
    const auto restricted = interaction_terms(u, nullptr, &family);
    CHECK(term_scopes(restricted) == term_scopes(full));

    const std::vector<Scope> narrow = {scope_of(sp, {0, 1})};
    const auto partial = interaction_terms(u, nullptr, &narrow);
    const std::vector<Scope> want = {Scope{}, scope_of(sp, {0, 1})};
    CHECK(term_scopes(partial) == want);

    // The partial sum agrees with u exactly on the slice where the excluded
    // variable sits at its reference value, and misses elsewhere.
    const auto rebuilt = reconstruct(sp, partial);
    double on_slice = 0.0, off_slice = 0.0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        const auto st = state_decode(sp, s);
        const double gap = std::abs(rebuilt[s] - u[s]);
        (st[2] == 0 ? on_slice : off_slice) = std::max(st[2] == 0 ? on_slice : off_slice, gap);
    }
    CHECK(on_slice <= 1e-12);
    CHECK(off_slice > 0.5);
}

TEST_CASE("restricted interaction scopes always land inside the family") {
    std::mt19937_64 rng(1414);
    const VariableSpace sp = binary_space(4);
    const std::vector<Scope> family = {scope_of(sp, {0}), scope_of(sp, {1, 3})};

    for (int trial = 0; trial < 10; ++trial) {
        const UtilityTable u = random_utility(rng, sp);
        const auto terms = interaction_terms(u, nullptr, &family);
        for (const InteractionTerm& t : terms) {
            bool inside = false;
            for (const Scope& f : family) {
                inside = inside || t.scope().subset_of(f);
            }
            CHECK(inside);
        }
    }
}

TEST_CASE("unrestricted interaction terms refuse very wide spaces") {
    const VariableSpace wide = binary_space(21);
    const UtilityTable u(wide, std::vector<double>(wide.state_count(), 0.0));
    CHECK_THROWS_AS((void)interaction_terms(u), GuardError);

    // A restricted query has no extra limit beyond the dense table itself.
    const std::vector<Scope> family = {scope_of(wide, {0, 1})};
    const auto terms = interaction_terms(u, nullptr, &family);
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].scope() == Scope{});

    // The limit is inclusive: exactly that many variables still works.
    const VariableSpace at_limit = binary_space(20);
    const UtilityTable v(at_limit, std::vector<double>(at_limit.state_count(), 0.0));
    CHECK(interaction_terms(v).size() == 1);
}

TEST_CASE("interaction residual is zero exactly on decomposable scope families") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable chain = chain_utility(sp);
    const std::vector<Scope> pairs01_12 = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
    CHECK(interaction_residual(chain, pairs01_12) <= 1e-12);

    const UtilityTable prod = product_utility(sp);
    CHECK(interaction_residual(prod, pairs01_12) > 0.1);
    CHECK(interaction_residual(prod, {full_scope(sp)}) <= 1e-12);
}

TEST_CASE("interaction residual agrees with a least-squares oracle") {
    std::mt19937_64 rng(1515);
    const VariableSpace sp = binary_space(4);
    int decomposable = 0, entangled = 0;

    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Scope> family;
        const int shape = trial % 3;
        if (shape == 0) {
            family = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2}), scope_of(sp, {2, 3})};
        } else if (shape == 1) {
            family = {scope_of(sp, {0, 1, 2}), scope_of(sp, {2, 3})};
        } else {
            family = {scope_of(sp, {0}), scope_of(sp, {1, 2}), scope_of(sp, {3})};
        }
        const UtilityTable u = (trial % 2 == 0) ? planted_decomposable(rng, sp, family)
                                                : random_utility(rng, sp);

        const bool lib = interaction_residual(u, family) <= 1e-9 * (1.0 + u.max_abs());
        CHECK(lib == oracle_decomposable(u, family));
        (lib ? decomposable : entangled) += 1;
    }
    CHECK(decomposable >= 10);
    CHECK(entangled >= 10);
}

TEST_CASE("decomposing a chain over its cliques splits it in two") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable u = chain_utility(sp);
    UndirectedGraph g(sp);
    g.add_edge(0, 1);
    g.add_edge(1, 2);

    const DecompositionReport report = decompose_over_cliques(u, g);
    const std::vector<Scope> want = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
    CHECK(factor_scopes(report.decomposition) == want);
    CHECK(report.max_residual <= 1e-12);
    CHECK(residual(u, report.decomposition) <= 1e-12);
    CHECK(max_eval_gap(u, report.decomposition) <= 1e-12);

    // Each interaction scope is folded into the first clique containing it,
    // the constant into the first clique outright.
    REQUIRE(report.clique_assignment.size() == 3);
    CHECK(report.clique_assignment[0].first == Scope{});
    CHECK(report.clique_assignment[0].second == scope_of(sp, {0, 1}));
    CHECK(report.clique_assignment[1].first == scope_of(sp, {0, 1}));
    CHECK(report.clique_assignment[1].second == scope_of(sp, {0, 1}));
    CHECK(report.clique_assignment[2].first == scope_of(sp, {1, 2}));
    CHECK(report.clique_assignment[2].second == scope_of(sp, {1, 2}));
}

TEST_CASE("a single clique absorbs the whole table") {
    const VariableSpace sp = binary_space(2);
    const UtilityTable u(sp, {5, 2, 1, 0});
    UndirectedGraph g(sp);
    g.add_edge(0, 1);

    const DecompositionReport report = decompose_over_cliques(u, g);
    REQUIRE(report.decomposition.factors().size() == 1);
    CHECK(report.decomposition.factors()[0].scope() == scope_of(sp, {0, 1}));
    const auto& vals = report.decomposition.factors()[0].values();
    for (std::uint64_t s = 0; s < 4; ++s) {
        CHECK(vals[s] == doctest::Approx(u[s]).epsilon(1e-12));
    }
    for (const auto& [from, to] : report.clique_assignment) {
        CHECK(to == scope_of(sp, {0, 1}));
    }
}

TEST_CASE("an edgeless graph decomposes a flat utility into padded singletons") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable u(sp, std::vector<double>(8, 2.5));
    const UndirectedGraph g(sp);

    const DecompositionReport report = decompose_over_cliques(u, g);
    const std::vector<Scope> want = {scope_of(sp, {0}), scope_of(sp, {1}), scope_of(sp, {2})};
    CHECK(factor_scopes(report.decomposition) == want);
    CHECK(report.decomposition.factors()[0].values() == std::vector<double>{2.5, 2.5});
    CHECK(report.decomposition.factors()[1].values() == std::vector<double>{0, 0});
    CHECK(report.decomposition.factors()[2].values() == std::vector<double>{0, 0});
    CHECK(max_eval_gap(u, report.decomposition) <= 1e-12);
}

TEST_CASE("decomposing over an invalid independence map is refused") {
    const VariableSpace sp = binary_space(3);

    UndirectedGraph chain_graph(sp);
    chain_graph.add_edge(0, 1);
    chain_graph.add_edge(1, 2);
    CHECK_THROWS_AS((void)decompose_over_cliques(product_utility(sp), chain_graph), ModelError);

    const UndirectedGraph empty(sp);
    CHECK_THROWS_AS((void)decompose_over_cliques(chain_utility(sp), empty), ModelError);

    const UndirectedGraph other(binary_space(2));
    CHECK_THROWS_AS((void)decompose_over_cliques(chain_utility(sp), other), ModelError);
}

TEST_CASE("decomposition over the perfect map is exact on random utilities") {
    std::mt19937_64 rng(1616);

    for (int trial = 0; trial < 20; ++trial) {
        const VariableSpace sp = binary_space(3 + trial % 2);
        std::vector<Scope> family;
        if (trial % 2 == 0) {
            family = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
        } else {
            family = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2}), scope_of(sp, {2, 3})};
        }
        const UtilityTable u = (trial % 3 == 0) ? random_utility(rng, sp)
                                                : planted_decomposable(rng, sp, family);

        const UndirectedGraph g = build_perfect_map(u);
        std::optional<Assignment> ref;
        if (trial % 4 == 3) {
            std::vector<std::size_t> st(sp.size());
            for (std::size_t v = 0; v < sp.size(); ++v) {
                st[v] = rng() % sp.domain_size(v);
            }
            ref = Assignment::full_state(sp, st);
        }
        const DecompositionReport report = decompose_over_cliques(u, g, ref ? &*ref : nullptr);

        const double tol = 1e-9 * (1.0 + u.max_abs());
        CHECK(factor_scopes(report.decomposition) == maximal_cliques(g));
        CHECK(report.max_residual <= tol);
        CHECK(residual(u, report.decomposition) <= tol);
    }
}

TEST_CASE("decompose avoiding separates a chain but not its own links") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable u = chain_utility(sp);

    const auto split = decompose_avoiding(u, {scope_of(sp, {0, 2})});
    REQUIRE(split.has_value());
    const std::vector<Scope> want = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2})};
    CHECK(factor_scopes(*split) == want);
    CHECK(residual(u, *split) <= 1e-12);

    CHECK_FALSE(decompose_avoiding(u, {scope_of(sp, {0, 1})}).has_value());
    CHECK_FALSE(decompose_avoiding(u, {scope_of(sp, {1, 2})}).has_value());

    // Nothing to avoid always succeeds and reproduces the table.
    const auto free = decompose_avoiding(u, {});
    REQUIRE(free.has_value());
    CHECK(residual(u, *free) <= 1e-12);
}

TEST_CASE("decompose avoiding degenerates gracefully and validates its arguments") {
    const VariableSpace sp = binary_space(3);
    const UtilityTable flat(sp, std::vector<double>(8, 4.0));

    const auto d = decompose_avoiding(flat, {scope_of(sp, {0, 1})});
    REQUIRE(d.has_value());
    REQUIRE(d->factors().size() == 1);
    CHECK(d->factors()[0].scope() == Scope{});
    CHECK(d->factors()[0].values() == std::vector<double>{4});

    CHECK_THROWS_AS((void)decompose_avoiding(flat, {Scope{}}), ModelError);

    // A scope buried inside a wider nonzero interaction cannot be avoided.
    CHECK_FALSE(decompose_avoiding(product_utility(sp), {scope_of(sp, {0, 2})}).has_value());
}

TEST_CASE("factor scopes from decompose avoiding are maximal and clean") {
    std::mt19937_64 rng(1717);
    const VariableSpace sp = binary_space(4);

    for (int trial = 0; trial < 15; ++trial) {
        const std::vector<Scope> family = {scope_of(sp, {0, 1, 2}), scope_of(sp, {2, 3})};
        const UtilityTable u = (trial % 3 == 2) ? random_utility(rng, sp)
                                                : planted_decomposable(rng, sp, family);
        const Scope forbidden = scope_of(sp, {0, 3});
        const auto d = decompose_avoiding(u, {forbidden});
        if (!d.has_value()) {
            continue;
        }

        const auto scopes = factor_scopes(*d);
        for (std::size_t i = 0; i < scopes.size(); ++i) {
            CHECK_FALSE(forbidden.subset_of(scopes[i]));
            for (std::size_t j = 0; j < scopes.size(); ++j) {
                if (i != j) {
                    CHECK_FALSE(scopes[i].subset_of(scopes[j]));
                }
            }
        }
        CHECK(residual(u, *d) <= 1e-9 * (1.0 + u.max_abs()));
    }
}

TEST_CASE("decompose avoiding decides the same question as the conditional test") {
    std::mt19937_64 rng(1818);
    const VariableSpace sp = binary_space(4);
    int holds = 0, fails = 0;

    for (int trial = 0; trial < 16; ++trial) {
        std::vector<Scope> family;
        const int shape = trial % 4;
        if (shape == 0) {
            family = {scope_of(sp, {0, 1}), scope_of(sp, {1, 2}), scope_of(sp, {2, 3})};
        } else if (shape == 1) {
            family = {scope_of(sp, {0, 1, 2}), scope_of(sp, {3})};
        } else if (shape == 2) {
            family = {scope_of(sp, {0, 2}), scope_of(sp, {1, 3})};
        }
        const UtilityTable u = family.empty() ? random_utility(rng, sp)
                                              : planted_decomposable(rng, sp, family);

        for_each_partition(sp, [&](const Scope& x, const Scope& z, const Scope& y) {
            const bool cai = test_cai(u, {x, z, y});
            const auto d = decompose_avoiding(u, cross_pairs(sp, x, y));
            CHECK(cai == d.has_value());
            (cai ? holds : fails) += 1;
            if (d.has_value()) {
                CHECK(residual(u, *d) <= 1e-9 * (1.0 + u.max_abs()));
                for (const Factor& f : d->factors()) {
                    const bool touches_both = !scope_intersection(f.scope(), x).empty() &&
                                              !scope_intersection(f.scope(), y).empty();
                    CHECK_FALSE(touches_both);
                }
            }
        });
    }
    CHECK(holds >= 50);
    CHECK(fails >= 50);
}

TEST_CASE("scopes avoidable separately are avoidable together") {
    std::mt19937_64 rng(1919);
    const VariableSpace sp = binary_space(4);
    int joint_checks = 0;

    for (int trial = 0; trial < 60; ++trial) {
        const std::vector<Scope> family = {random_scope(rng, sp, 2), random_scope(rng, sp, 2),
                                           random_scope(rng, sp, 2)};
        const UtilityTable u = (trial % 4 == 0) ? random_utility(rng, sp)
                                                : planted_decomposable(rng, sp, family);
        const Scope s1 = random_scope(rng, sp, 2);
        const Scope s2 = random_scope(rng, sp, 2);

        const bool a1 = decompose_avoiding(u, {s1}).has_value();
        const bool a2 = decompose_avoiding(u, {s2}).has_value();
        if (!a1 || !a2) {
            continue;
        }
        const auto joint = decompose_avoiding(u, {s1, s2});
        REQUIRE(joint.has_value());
        for (const Factor& f : joint->factors()) {
            CHECK_FALSE(s1.subset_of(f.scope()));
            CHECK_FALSE(s2.subset_of(f.scope()));
        }
        CHECK(residual(u, *joint) <= 1e-9 * (1.0 + u.max_abs()));
        ++joint_checks;
    }
    CHECK(joint_checks >= 10);
}

TEST_CASE("residual measures the worst-case gap of a decomposition") {
    const VariableSpace sp = binary_space(2);
    const UtilityTable u(sp, {5, 2, 1, 0});

    const AdditiveDecomposition exact(sp, {Factor(sp, scope_of(sp, {0, 1}), {5, 2, 1, 0})});
    CHECK(residual(u, exact) == 0.0);

    const AdditiveDecomposition zero(sp, {Factor(sp, scope_of(sp, {0, 1}), {0, 0, 0, 0})});
    CHECK(residual(u, zero) == 5.0);

    const VariableSpace other = binary_space(3);
    const AdditiveDecomposition foreign(other, {Factor(other, scope_of(other, {0}), {1, 2})});
    CHECK_THROWS_AS((void)residual(u, foreign), ModelError);
}
