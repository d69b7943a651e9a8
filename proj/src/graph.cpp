#include "mautil/graph.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>

#include "mautil/independence.hpp"

namespace mautil {

UndirectedGraph::UndirectedGraph(VariableSpace space)
    : space_(std::move(space)),
      adj_(space_.size(), std::vector<bool>(space_.size(), false)) {}

void UndirectedGraph::add_edge(std::size_t a, std::size_t b) {
    if (a >= space_.size() || b >= space_.size())
        throw ModelError("edge endpoint out of range");
    if (a == b) throw ModelError("self-loops are not allowed");
    adj_[a][b] = adj_[b][a] = true;
}

void UndirectedGraph::add_edge(std::string_view a, std::string_view b) {
    add_edge(space_.index_of(a), space_.index_of(b));
}

bool UndirectedGraph::has_edge(std::size_t a, std::size_t b) const {
    if (a >= space_.size() || b >= space_.size())
        throw ModelError("edge endpoint out of range");
    return adj_[a][b];
}

std::size_t UndirectedGraph::edge_count() const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < adj_.size(); ++a)
        for (std::size_t b = a + 1; b < adj_.size(); ++b)
            if (adj_[a][b]) ++n;
    return n;
}

std::vector<std::pair<std::size_t, std::size_t>> UndirectedGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < adj_.size(); ++a)
        for (std::size_t b = a + 1; b < adj_.size(); ++b)
            if (adj_[a][b]) out.emplace_back(a, b);
    return out;
}

std::vector<std::size_t> UndirectedGraph::neighbors(std::size_t v) const {
    if (v >= space_.size()) throw ModelError("vertex out of range");
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < adj_.size(); ++b)
        if (adj_[v][b]) out.push_back(b);
    return out;
}

UndirectedGraph build_perfect_map(const UtilityTable& u, const ToleranceConfig& tol) {
    const VariableSpace& space = u.space();
    UndirectedGraph g(space);
    const Scope all = full_scope(space);
    for (std::size_t a = 0; a < space.size(); ++a) {
        for (std::size_t b = a + 1; b < space.size(); ++b) {
            const Scope sa = Scope::from_sorted({a});
            const Scope sb = Scope::from_sorted({b});
            const Scope rest = scope_difference(scope_difference(all, sa), sb);
            if (!test_cai(u, CaiQuery{sa, rest, sb}, tol)) g.add_edge(a, b);
        }
    }
    return g;
}

bool separates(const UndirectedGraph& g, const Scope& x, const Scope& z, const Scope& y) {
    if (!x.disjoint_with(z) || !x.disjoint_with(y) || !z.disjoint_with(y))
        throw ModelError("scopes must be pairwise disjoint");
    const std::size_t n = g.vertex_count();
    for (const Scope* s : {&x, &z, &y})
        if (!s->empty() && s->members().back() >= n)
            throw ModelError("scope variable out of range for the graph");

    std::vector<char> blocked(n, 0), seen(n, 0);
    for (std::size_t m : z.members()) blocked[m] = 1;
    std::vector<std::size_t> stack;
    for (std::size_t m : x.members()) {
        seen[m] = 1;
        stack.push_back(m);
    }
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (y.contains(v)) return false;
        for (std::size_t b = 0; b < n; ++b) {
            if (g.has_edge(v, b) && !seen[b] && !blocked[b]) {
                seen[b] = 1;
                stack.push_back(b);
            }
        }
    }
    return true;
}

namespace {

Scope scope_of_mask(std::uint64_t mask) {
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < 64 && (mask >> v) != 0; ++v)
        if ((mask >> v) & 1) members.push_back(v);
    return Scope::from_sorted(std::move(members));
}

// Pivoting Bron-Kerbosch over vertex bitmasks; candidates are visited in
// ascending vertex order, so runs are deterministic.
void bron_kerbosch(std::uint64_t r, std::uint64_t p, std::uint64_t x,
                   const std::vector<std::uint64_t>& nbr, std::vector<Scope>& out) {
    if (p == 0 && x == 0) {
        out.push_back(scope_of_mask(r));
        return;
    }
    std::size_t pivot = 0;
    int best = -1;
    for (std::uint64_t rest = p | x; rest != 0; rest &= rest - 1) {
        const std::size_t v = static_cast<std::size_t>(std::countr_zero(rest));
        const int deg = std::popcount(p & nbr[v]);
        if (deg > best) {
            best = deg;
            pivot = v;
        }
    }
    for (std::uint64_t cand = p & ~nbr[pivot]; cand != 0; cand &= cand - 1) {
        const std::size_t v = static_cast<std::size_t>(std::countr_zero(cand));
        const std::uint64_t bit = std::uint64_t{1} << v;
        bron_kerbosch(r | bit, p & nbr[v], x & nbr[v], nbr, out);
        p &= ~bit;
        x |= bit;
    }
}

}  // namespace

std::vector<Scope> maximal_cliques(const UndirectedGraph& g) {
    const std::size_t n = g.vertex_count();
    std::vector<std::uint64_t> nbr(n, 0);
    for (const auto& [a, b] : g.edges()) {
        nbr[a] |= std::uint64_t{1} << b;
        nbr[b] |= std::uint64_t{1} << a;
    }
    std::vector<Scope> out;
    const std::uint64_t all = (n == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    bron_kerbosch(0, all, 0, nbr, out);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Memoized extended-CAI oracle over scope bitmasks.
class ExtCai {
public:
    ExtCai(const UtilityTable& u, const ToleranceConfig& tol) : u_(u), tol_(tol) {}

    bool operator()(std::uint64_t xm, std::uint64_t zm, std::uint64_t ym) {
        const std::uint64_t n = u_.space().size();
        const std::uint64_t key = xm | (zm << n) | (ym << (2 * n));
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const bool holds =
            test_cai_extended(u_, scope_of_mask(xm), scope_of_mask(zm), scope_of_mask(ym), tol_);
        memo_.emplace(key, holds);
        return holds;
    }

private:
    const UtilityTable& u_;
    ToleranceConfig tol_;
    std::unordered_map<std::uint64_t, bool> memo_;
};

std::string mask_names(const VariableSpace& space, std::uint64_t mask) {
    std::string out;
    for (std::size_t v = 0; v < space.size(); ++v) {
        if (!((mask >> v) & 1)) continue;
        if (!out.empty()) out += ",";
        out += space.variable(v).name;
    }
    return out;
}

// Enumerate every assignment of the n variables into `buckets` groups and
// hand the per-group masks to fn.
template <typename Fn>
void for_each_bucketing(std::size_t n, std::size_t buckets, Fn&& fn) {
    std::vector<std::size_t> label(n, 0);
    std::vector<std::uint64_t> mask(buckets, 0);
    for (;;) {
        std::fill(mask.begin(), mask.end(), 0);
        for (std::size_t v = 0; v < n; ++v) mask[label[v]] |= std::uint64_t{1} << v;
        fn(static_cast<const std::vector<std::uint64_t>&>(mask));
        std::size_t k = n;
        while (k > 0) {
            --k;
            if (++label[k] < buckets) break;
            label[k] = 0;
            if (k == 0) return;
        }
        if (n == 0) return;
    }
}

}  // namespace

GraphoidReport check_graphoid_axioms(const UtilityTable& u, const ToleranceConfig& tol) {
    const VariableSpace& space = u.space();
    const std::size_t n = space.size();
    if (n > kGraphoidVariableLimit)
        throw GuardError("graphoid check supports at most " +
                         std::to_string(kGraphoidVariableLimit) + " variables");

    ExtCai cai(u, tol);
    GraphoidReport report;
    report.conditions = {{"symmetry", 0, 0},
                         {"decomposition", 0, 0},
                         {"intersection", 0, 0},
                         {"strong_union", 0, 0},
                         {"transitivity", 0, 0}};
    GraphoidConditionStats& sym = report.conditions[0];
    GraphoidConditionStats& dec = report.conditions[1];
    GraphoidConditionStats& inter = report.conditions[2];
    GraphoidConditionStats& strong = report.conditions[3];
    GraphoidConditionStats& trans = report.conditions[4];

    auto record = [&](GraphoidConditionStats& c, std::uint64_t xm, std::uint64_t zm,
                      std::uint64_t ym, std::uint64_t wm, bool violated) {
        ++c.checked;
        if (violated) {
            ++c.violated;
            report.violations.push_back({c.name, mask_names(space, xm), mask_names(space, zm),
                                         mask_names(space, ym), mask_names(space, wm)});
        }
    };

    // CAI(X,Z,Y) => CAI(Y,Z,X)
    for_each_bucketing(n, 4, [&](const std::vector<std::uint64_t>& m) {
        const std::uint64_t xm = m[0], zm = m[1], ym = m[2];
        if (xm == 0 || ym == 0) return;
        record(sym, xm, zm, ym, 0, cai(xm, zm, ym) && !cai(ym, zm, xm));
    });
    for_each_bucketing(n, 5, [&](const std::vector<std::uint64_t>& m) {
        const std::uint64_t xm = m[0], zm = m[1], ym = m[2], wm = m[3];
        if (xm == 0 || ym == 0 || wm == 0) return;
        // CAI(X,Z,Y u W) => CAI(X,Z,Y) and CAI(X,Z,W)
        record(dec, xm, zm, ym, wm,
               cai(xm, zm, ym | wm) && !(cai(xm, zm, ym) && cai(xm, zm, wm)));
        // CAI(X,Z u W,Y) and CAI(X,Z u Y,W) => CAI(X,Z,Y u W)
        record(inter, xm, zm, ym, wm,
               cai(xm, zm | wm, ym) && cai(xm, zm | ym, wm) && !cai(xm, zm, ym | wm));
        // CAI(X,Z,Y) => CAI(Y,Z u W,X)
        record(strong, xm, zm, ym, wm, cai(xm, zm, ym) && !cai(ym, zm | wm, xm));
    });
    // CAI(X,Z,Y) => CAI(X,Z,w) or CAI(w,Z,Y) for every outside variable w
    for_each_bucketing(n, 4, [&](const std::vector<std::uint64_t>& m) {
        const std::uint64_t xm = m[0], zm = m[1], ym = m[2];
        if (xm == 0 || ym == 0) return;
        for (std::uint64_t rest = m[3]; rest != 0; rest &= rest - 1) {
            const std::uint64_t wm = rest & ~(rest - 1);
            record(trans, xm, zm, ym, wm,
                   cai(xm, zm, ym) && !(cai(xm, zm, wm) || cai(wm, zm, ym)));
        }
    });
    return report;
}

}  // namespace mautil
