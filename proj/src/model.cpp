#include "mautil/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mautil {

namespace {

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    // Names appear in scope/evidence expressions on the command line, so the
    // separator characters used there are not allowed.
    return s.find_first_of(",|= \t\r\n") == std::string::npos;
}

}  // namespace

bool operator==(const Variable& a, const Variable& b) {
    return a.name == b.name && a.domain == b.domain;
}

VariableSpace::VariableSpace(std::vector<Variable> variables) : vars_(std::move(variables)) {
    if (vars_.empty()) throw ModelError("variable space must contain at least one variable");
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        const Variable& v = vars_[i];
        if (!valid_identifier(v.name))
            throw ModelError("invalid variable name '" + v.name + "'");
        if (!index_.emplace(v.name, i).second)
            throw ModelError("duplicate variable name '" + v.name + "'");
        if (v.domain.size() < 2)
            throw ModelError("variable '" + v.name + "' needs a domain of at least 2 values");
        std::vector<std::string> labels = v.domain;
        std::sort(labels.begin(), labels.end());
        if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
            throw ModelError("duplicate value label in domain of '" + v.name + "'");
        for (const std::string& label : v.domain)
            if (label.empty()) throw ModelError("empty value label in domain of '" + v.name + "'");
    }
    strides_.assign(vars_.size(), 1);
    for (std::size_t i = vars_.size(); i-- > 0;) {
        if (i + 1 < vars_.size()) strides_[i] = strides_[i + 1] * vars_[i + 1].domain.size();
        const std::uint64_t d = vars_[i].domain.size();
        if (state_count_ > std::numeric_limits<std::uint64_t>::max() / 2 / d)
            throw ModelError("state space too large to index");
        state_count_ *= d;
    }
}

std::size_t VariableSpace::index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw ModelError("unknown variable '" + std::string(name) + "'");
    return it->second;
}

std::optional<std::size_t> VariableSpace::find(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t VariableSpace::value_index(std::size_t i, std::string_view label) const {
    const auto& domain = vars_[i].domain;
    for (std::size_t k = 0; k < domain.size(); ++k)
        if (domain[k] == label) return k;
    throw ModelError("unknown value '" + std::string(label) + "' for variable '" +
                     vars_[i].name + "'");
}

Scope Scope::from_indices(const VariableSpace& space, std::vector<std::size_t> members) {
    for (std::size_t m : members)
        if (m >= space.size()) throw ModelError("scope member index out of range");
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end())
        throw ModelError("duplicate variable in scope");
    Scope s;
    s.members_ = std::move(members);
    return s;
}

Scope Scope::from_names(const VariableSpace& space, const std::vector<std::string>& names) {
    std::vector<std::size_t> members;
    members.reserve(names.size());
    for (const std::string& n : names) members.push_back(space.index_of(n));
    // from_indices reports duplicates, which covers repeated names too
    return from_indices(space, std::move(members));
}

Scope Scope::from_sorted(std::vector<std::size_t> members) {
    Scope s;
    s.members_ = std::move(members);
    return s;
}

bool Scope::contains(std::size_t var) const {
    return std::binary_search(members_.begin(), members_.end(), var);
}

bool Scope::subset_of(const Scope& other) const {
    return std::includes(other.members_.begin(), other.members_.end(),
                         members_.begin(), members_.end());
}

bool Scope::disjoint_with(const Scope& other) const {
    std::size_t i = 0, j = 0;
    while (i < members_.size() && j < other.members_.size()) {
        if (members_[i] == other.members_[j]) return false;
        if (members_[i] < other.members_[j]) ++i; else ++j;
    }
    return true;
}

std::vector<std::string> Scope::names(const VariableSpace& space) const {
    std::vector<std::string> out;
    out.reserve(members_.size());
    for (std::size_t m : members_) out.push_back(space.variable(m).name);
    return out;
}

Scope scope_union(const Scope& a, const Scope& b) {
    std::vector<std::size_t> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.members().begin(), a.members().end(),
                   b.members().begin(), b.members().end(), std::back_inserter(out));
    return Scope::from_sorted(std::move(out));
}

Scope scope_intersection(const Scope& a, const Scope& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.members().begin(), a.members().end(),
                          b.members().begin(), b.members().end(), std::back_inserter(out));
    return Scope::from_sorted(std::move(out));
}

Scope scope_difference(const Scope& a, const Scope& b) {
    std::vector<std::size_t> out;
    std::set_difference(a.members().begin(), a.members().end(),
                        b.members().begin(), b.members().end(), std::back_inserter(out));
    return Scope::from_sorted(std::move(out));
}

Scope full_scope(const VariableSpace& space) {
    std::vector<std::size_t> all(space.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return Scope::from_sorted(std::move(all));
}

Assignment::Assignment(const VariableSpace& space) : values_(space.size(), -1) {}

Assignment Assignment::full_state(const VariableSpace& space, const std::vector<std::size_t>& values) {
    if (values.size() != space.size())
        throw ModelError("full assignment needs one value per variable");
    Assignment a(space);
    for (std::size_t i = 0; i < values.size(); ++i) a.set(space, i, values[i]);
    return a;
}

bool Assignment::bound(std::size_t var) const {
    if (var >= values_.size()) throw ModelError("variable index out of range");
    return values_[var] >= 0;
}

std::size_t Assignment::value(std::size_t var) const {
    if (var >= values_.size()) throw ModelError("variable index out of range");
    if (values_[var] < 0) throw ModelError("variable is unbound");
    return static_cast<std::size_t>(values_[var]);
}

void Assignment::set(const VariableSpace& space, std::size_t var, std::size_t value) {
    if (values_.size() != space.size()) values_.assign(space.size(), -1);
    if (var >= space.size()) throw ModelError("variable index out of range");
    if (value >= space.domain_size(var))
        throw ModelError("value index out of range for variable '" + space.variable(var).name + "'");
    values_[var] = static_cast<std::int64_t>(value);
}

void Assignment::set_label(const VariableSpace& space, std::string_view name, std::string_view label) {
    const std::size_t var = space.index_of(name);
    set(space, var, space.value_index(var, label));
}

std::size_t Assignment::bound_count() const {
    std::size_t n = 0;
    for (std::int64_t v : values_) n += (v >= 0);
    return n;
}

bool Assignment::is_full() const {
    if (values_.empty()) return false;
    for (std::int64_t v : values_)
        if (v < 0) return false;
    return true;
}

Scope bound_scope(const VariableSpace& space, const Assignment& a) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (a.bound(i)) members.push_back(i);
    return Scope::from_sorted(std::move(members));
}

Assignment default_reference(const VariableSpace& space) {
    Assignment a(space);
    for (std::size_t i = 0; i < space.size(); ++i) a.set(space, i, 0);
    return a;
}

std::vector<std::size_t> to_state(const VariableSpace& space, const Assignment& a) {
    if (a.variable_count() != space.size() || !a.is_full())
        throw ModelError("assignment must bind every variable of the space");
    std::vector<std::size_t> state(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) state[i] = a.value(i);
    return state;
}

std::uint64_t state_index(const VariableSpace& space, const Assignment& a) {
    if (a.variable_count() != space.size())
        throw ModelError("assignment belongs to a different space");
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (!a.bound(i))
            throw ModelError("variable '" + space.variable(i).name + "' is unbound");
        idx += a.value(i) * space.stride(i);
    }
    return idx;
}

std::uint64_t state_index(const VariableSpace& space, const std::vector<std::size_t>& state) {
    if (state.size() != space.size())
        throw ModelError("state needs one value per variable");
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (state[i] >= space.domain_size(i)) throw ModelError("value index out of range");
        idx += state[i] * space.stride(i);
    }
    return idx;
}

std::vector<std::size_t> state_decode(const VariableSpace& space, std::uint64_t index) {
    if (index >= space.state_count()) throw ModelError("state index out of range");
    std::vector<std::size_t> state(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        state[i] = static_cast<std::size_t>((index / space.stride(i)) % space.domain_size(i));
    return state;
}

Factor::Factor(const VariableSpace& space, Scope scope, std::vector<double> values)
    : scope_(std::move(scope)), values_(std::move(values)) {
    const auto& m = scope_.members();
    dims_.resize(m.size());
    strides_.assign(m.size(), 1);
    std::uint64_t size = 1;
    for (std::size_t k = m.size(); k-- > 0;) {
        if (m[k] >= space.size()) throw ModelError("factor scope member out of range");
        dims_[k] = space.domain_size(m[k]);
        if (k + 1 < m.size()) strides_[k] = strides_[k + 1] * dims_[k + 1];
        size *= dims_[k];
    }
    if (values_.size() != size)
        throw ModelError("factor table has wrong length: expected " + std::to_string(size) +
                         ", got " + std::to_string(values_.size()));
    for (double v : values_)
        if (!std::isfinite(v)) throw ModelError("factor table entries must be finite");
}

Factor Factor::zeros(const VariableSpace& space, Scope scope) {
    std::uint64_t size = 1;
    for (std::size_t m : scope.members()) size *= space.domain_size(m);
    return Factor(space, std::move(scope), std::vector<double>(size, 0.0));
}

std::uint64_t Factor::index_of_state(const std::vector<std::size_t>& state) const {
    std::uint64_t t = 0;
    const auto& m = scope_.members();
    for (std::size_t k = 0; k < m.size(); ++k) t += state[m[k]] * strides_[k];
    return t;
}

double Factor::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

StateProjector::StateProjector(const VariableSpace& space, const Scope& scope) {
    const auto& m = scope.members();
    space_stride_.resize(m.size());
    dim_.resize(m.size());
    factor_stride_.assign(m.size(), 1);
    for (std::size_t k = m.size(); k-- > 0;) {
        space_stride_[k] = space.stride(m[k]);
        dim_[k] = space.domain_size(m[k]);
        if (k + 1 < m.size()) factor_stride_[k] = factor_stride_[k + 1] * dim_[k + 1];
    }
}

UtilityTable::UtilityTable(VariableSpace space, std::vector<double> values, bool allow_large)
    : space_(std::move(space)), values_(std::move(values)) {
    if (space_.state_count() > kDenseStateLimit && !allow_large)
        throw GuardError("dense table over " + std::to_string(space_.state_count()) +
                         " states exceeds the guard (" + std::to_string(kDenseStateLimit) +
                         "); pass the force flag to override");
    if (values_.size() != space_.state_count())
        throw ModelError("utility table has wrong length: expected " +
                         std::to_string(space_.state_count()) + ", got " +
                         std::to_string(values_.size()));
    for (double v : values_) {
        if (!std::isfinite(v)) throw ModelError("utility values must be finite");
        max_abs_ = std::max(max_abs_, std::abs(v));
    }
}

AdditiveDecomposition::AdditiveDecomposition(VariableSpace space, std::vector<Factor> factors)
    : space_(std::move(space)), factors_(std::move(factors)) {
    for (const Factor& f : factors_) {
        const auto& m = f.scope().members();
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k] >= space_.size()) throw ModelError("factor scope member out of range");
            if (f.dims()[k] != space_.domain_size(m[k]))
                throw ModelError("factor table shape does not match the space's domains");
        }
    }
    for (std::size_t i = 0; i < factors_.size(); ++i)
        for (std::size_t j = 0; j < factors_.size(); ++j)
            if (i != j && factors_[i].scope().subset_of(factors_[j].scope()))
                throw ModelError("factor scopes must not be contained in one another");
}

double evaluate_dense(const UtilityTable& u, const Assignment& a) {
    return u.values()[state_index(u.space(), a)];
}

double evaluate_decomposition(const AdditiveDecomposition& d, const Assignment& a) {
    if (a.variable_count() != d.space().size() || !a.is_full())
        throw ModelError("decomposition evaluation needs a full assignment");
    std::vector<std::size_t> state(d.space().size());
    for (std::size_t i = 0; i < state.size(); ++i) state[i] = a.value(i);
    double sum = 0.0;
    for (const Factor& f : d.factors()) sum += f.values()[f.index_of_state(state)];
    return sum;
}

UtilityTable affine_transform(const UtilityTable& u, double a, double b) {
    if (!(a > 0.0)) throw ModelError("affine scale must be positive");
    if (!std::isfinite(a) || !std::isfinite(b)) throw ModelError("affine parameters must be finite");
    std::vector<double> out(u.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * u.values()[i] + b;
    return UtilityTable(u.space(), std::move(out), /*allow_large=*/true);
}

UtilityTable to_dense(const AdditiveDecomposition& d, bool allow_large) {
    const VariableSpace& space = d.space();
    if (space.state_count() > kDenseStateLimit && !allow_large)
        throw GuardError("dense expansion over " + std::to_string(space.state_count()) +
                         " states exceeds the guard; pass the force flag to override");
    std::vector<StateProjector> proj;
    proj.reserve(d.factors().size());
    for (const Factor& f : d.factors()) proj.emplace_back(space, f.scope());
    std::vector<double> out(space.state_count(), 0.0);
    for (std::uint64_t s = 0; s < out.size(); ++s) {
        double sum = 0.0;
        for (std::size_t k = 0; k < proj.size(); ++k) sum += d.factors()[k].values()[proj[k](s)];
        out[s] = sum;
    }
    return UtilityTable(space, std::move(out), allow_large);
}

std::uint64_t embed_state(const VariableSpace& space, const Scope& scope,
                          const std::vector<std::size_t>& values,
                          const std::vector<std::size_t>& base) {
    std::uint64_t idx = 0;
    const auto& m = scope.members();
    std::size_t k = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        std::size_t v = base[i];
        if (k < m.size() && m[k] == i) v = values[k++];
        idx += v * space.stride(i);
    }
    return idx;
}

}  // namespace mautil
