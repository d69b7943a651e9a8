#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mautil {

/// Invalid model data or arguments (bad files, scope mismatches, impossible
/// evidence). Maps to CLI exit code 2.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// A feasibility guard tripped (state space too large for an exhaustive
/// operation). Maps to CLI exit code 3.
class GuardError : public std::runtime_error {
public:
    explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense tables over more states than this are refused unless forced.
inline constexpr std::uint64_t kDenseStateLimit = std::uint64_t{1} << 26;

/// Comparison tolerance. Equality tests between utilities use the scaled
/// threshold epsilon * (1 + max|u|) so verdicts are invariant under magnitude.
struct ToleranceConfig {
    double epsilon = 1e-9;

    ToleranceConfig() = default;
    explicit ToleranceConfig(double eps) : epsilon(eps) {
        if (!(eps >= 0.0))
            throw ModelError("tolerance epsilon must be nonnegative");
    }
};

/// A named variable with a finite ordered domain of value labels.
struct Variable {
    std::string name;
    std::vector<std::string> domain;
};

/// Ordered set of variables; the product of the domains is the state space.
/// States are indexed row-major in variable order, last variable fastest.
class VariableSpace {
public:
    explicit VariableSpace(std::vector<Variable> variables);

    std::size_t size() const { return vars_.size(); }
    std::uint64_t state_count() const { return state_count_; }
    const Variable& variable(std::size_t i) const { return vars_[i]; }
    const std::vector<Variable>& variables() const { return vars_; }
    std::size_t domain_size(std::size_t i) const { return vars_[i].domain.size(); }
    std::uint64_t stride(std::size_t i) const { return strides_[i]; }

    /// Position of a variable by name; throws ModelError if absent.
    std::size_t index_of(std::string_view name) const;
    std::optional<std::size_t> find(std::string_view name) const;
    /// Value index of a label within variable i's domain; throws if absent.
    std::size_t value_index(std::size_t i, std::string_view label) const;

    bool operator==(const VariableSpace& other) const { return vars_ == other.vars_; }
    bool operator!=(const VariableSpace& other) const { return !(*this == other); }

private:
    std::vector<Variable> vars_;
    std::vector<std::uint64_t> strides_;
    std::uint64_t state_count_ = 1;
    std::map<std::string, std::size_t, std::less<>> index_;
};

bool operator==(const Variable& a, const Variable& b);

/// Subset of a space's variables, held in canonical (space) order.
class Scope {
public:
    Scope() = default;

    static Scope from_indices(const VariableSpace& space, std::vector<std::size_t> members);
    static Scope from_names(const VariableSpace& space, const std::vector<std::string>& names);
    /// For members known to be sorted, unique and in range (set operations).
    static Scope from_sorted(std::vector<std::size_t> members);

    const std::vector<std::size_t>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    bool contains(std::size_t var) const;
    bool subset_of(const Scope& other) const;
    bool disjoint_with(const Scope& other) const;
    std::vector<std::string> names(const VariableSpace& space) const;

    bool operator==(const Scope& other) const { return members_ == other.members_; }
    bool operator!=(const Scope& other) const { return members_ != other.members_; }
    /// Lexicographic on member index sequences; used for canonical listings.
    bool operator<(const Scope& other) const { return members_ < other.members_; }

private:
    std::vector<std::size_t> members_;
};

Scope scope_union(const Scope& a, const Scope& b);
Scope scope_intersection(const Scope& a, const Scope& b);
Scope scope_difference(const Scope& a, const Scope& b);
Scope full_scope(const VariableSpace& space);

/// Partial or full binding of variables to value indices.
class Assignment {
public:
    Assignment() = default;
    explicit Assignment(const VariableSpace& space);

    /// Full assignment from one value index per variable, in space order.
    static Assignment full_state(const VariableSpace& space, const std::vector<std::size_t>& values);

    std::size_t variable_count() const { return values_.size(); }
    bool bound(std::size_t var) const;
    std::size_t value(std::size_t var) const;
    void set(const VariableSpace& space, std::size_t var, std::size_t value);
    void set_label(const VariableSpace& space, std::string_view name, std::string_view label);
    std::size_t bound_count() const;
    bool is_full() const;

private:
    std::vector<std::int64_t> values_;  // -1 = unbound
};

Scope bound_scope(const VariableSpace& space, const Assignment& a);

/// All variables bound to the first value of their domain.
Assignment default_reference(const VariableSpace& space);

/// Value-index vector of a full assignment, in space order.
std::vector<std::size_t> to_state(const VariableSpace& space, const Assignment& a);

/// Row-major state index of a full assignment; bijective with states.
std::uint64_t state_index(const VariableSpace& space, const Assignment& a);
std::uint64_t state_index(const VariableSpace& space, const std::vector<std::size_t>& state);
std::vector<std::size_t> state_decode(const VariableSpace& space, std::uint64_t index);

/// Dense real table over a scope's product sub-space, row-major in canonical
/// scope order (last member fastest). Used for utility factors, conditional
/// utilities, interaction terms, and probability marginals alike.
class Factor {
public:
    Factor(const VariableSpace& space, Scope scope, std::vector<double> values);
    static Factor zeros(const VariableSpace& space, Scope scope);

    const Scope& scope() const { return scope_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }
    std::uint64_t size() const { return values_.size(); }
    double at(std::uint64_t i) const { return values_[i]; }
    const std::vector<std::uint64_t>& dims() const { return dims_; }
    const std::vector<std::uint64_t>& strides() const { return strides_; }

    /// Table index for a full state given as one value per space variable.
    std::uint64_t index_of_state(const std::vector<std::size_t>& state) const;
    double max_abs() const;

private:
    Scope scope_;
    std::vector<std::uint64_t> dims_;
    std::vector<std::uint64_t> strides_;
    std::vector<double> values_;
};

/// Maps full row-major state indices to a factor's table indices.
class StateProjector {
public:
    StateProjector(const VariableSpace& space, const Scope& scope);

    std::uint64_t operator()(std::uint64_t state) const {
        std::uint64_t t = 0;
        for (std::size_t k = 0; k < dim_.size(); ++k)
            t += ((state / space_stride_[k]) % dim_[k]) * factor_stride_[k];
        return t;
    }

private:
    std::vector<std::uint64_t> space_stride_, dim_, factor_stride_;
};

/// Dense utility function u(V) over the full state space.
class UtilityTable {
public:
    UtilityTable(VariableSpace space, std::vector<double> values, bool allow_large = false);

    const VariableSpace& space() const { return space_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::uint64_t i) const { return values_[i]; }
    double max_abs() const { return max_abs_; }

private:
    VariableSpace space_;
    std::vector<double> values_;
    double max_abs_ = 0.0;
};

inline double scaled_tolerance(const UtilityTable& u, const ToleranceConfig& tol) {
    return tol.epsilon * (1.0 + u.max_abs());
}

/// Sum of factors, u = sum_i f_i(Z_i). Scopes may overlap but no factor
/// scope may be contained in another.
class AdditiveDecomposition {
public:
    AdditiveDecomposition(VariableSpace space, std::vector<Factor> factors);

    const VariableSpace& space() const { return space_; }
    const std::vector<Factor>& factors() const { return factors_; }

private:
    VariableSpace space_;
    std::vector<Factor> factors_;
};

double evaluate_dense(const UtilityTable& u, const Assignment& a);
double evaluate_decomposition(const AdditiveDecomposition& d, const Assignment& a);

/// Positive affine rescaling a*u + b; preserves the preference order, so all
/// independence verdicts are invariant under it. Requires a > 0.
UtilityTable affine_transform(const UtilityTable& u, double a, double b);

/// Expand a decomposition to a dense table (subject to the state guard).
UtilityTable to_dense(const AdditiveDecomposition& d, bool allow_large = false);

/// Enumerate all value tuples over a scope in canonical row-major order.
/// fn(values, table_index) with values holding one value per scope member.
template <typename Fn>
void for_each_scope_state(const VariableSpace& space, const Scope& scope, Fn&& fn) {
    const auto& m = scope.members();
    std::vector<std::size_t> vals(m.size(), 0);
    std::uint64_t index = 0;
    for (;;) {
        fn(static_cast<const std::vector<std::size_t>&>(vals), index);
        std::size_t k = m.size();
        while (k > 0) {
            --k;
            if (++vals[k] < space.domain_size(m[k])) break;
            vals[k] = 0;
            if (k == 0) return;
        }
        if (m.empty()) return;
        ++index;
    }
}

/// Full state index obtained by overriding `base` with `values` on `scope`.
std::uint64_t embed_state(const VariableSpace& space, const Scope& scope,
                          const std::vector<std::size_t>& values,
                          const std::vector<std::size_t>& base);

}  // namespace mautil
