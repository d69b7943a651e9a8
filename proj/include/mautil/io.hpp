#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "mautil/expectation.hpp"
#include "mautil/graph.hpp"
#include "mautil/model.hpp"

namespace mautil {

using json = nlohmann::ordered_json;

/// A parsed utility model file: the variable space plus either a dense table
/// or a factored decomposition.
struct LoadedUtility {
    VariableSpace space;
    std::optional<UtilityTable> dense;
    std::optional<AdditiveDecomposition> factored;

    bool is_dense() const { return dense.has_value(); }
};

/// Reads and parses a JSON document; any failure is a ModelError.
json load_json_file(const std::string& path);

/// Parsers reject unknown fields, duplicate names, and wrong-length tables.
/// Flat value arrays are laid out row-major over their listed axis sequence
/// (last listed fastest) and are rearranged into canonical variable order.
LoadedUtility parse_utility(const json& j, bool allow_large = false);
LoadedUtility load_utility_file(const std::string& path, bool allow_large = false);

BayesNet parse_bayes_net(const json& j);
BayesNet load_bayes_net_file(const std::string& path);

/// Distinguishes the two probability-file schemas by their fields.
bool looks_like_bayes_net(const json& j);
bool looks_like_distribution(const json& j);

/// Distribution and action files carry no domain declarations and parse
/// against the utility's space.
ExplicitDistribution parse_distribution(const json& j, const VariableSpace& space,
                                        bool allow_large = false);
ActionSet parse_actions(const json& j, const VariableSpace& space);

json dense_to_json(const UtilityTable& u);
json factored_to_json(const AdditiveDecomposition& d);
json graph_to_json(const UndirectedGraph& g);
std::string graph_to_dot(const UndirectedGraph& g);
json graphoid_report_to_json(const GraphoidReport& r);

}  // namespace mautil
