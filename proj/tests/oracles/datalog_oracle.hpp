#pragma once

#include <vector>

#include "dualgraph/datalog.hpp"
#include "dualgraph/skg.hpp"

namespace dualgraph::oracle {

// Naive least fixpoint: every round re-fires every rule against the whole
// graph until a round adds nothing.
Graph naive_fixpoint(const Graph& graph, const std::vector<datalog::Rule>& rules);

}  // namespace dualgraph::oracle
