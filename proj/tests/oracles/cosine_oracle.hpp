#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dualgraph::oracle {

struct RankedKey {
    std::string key;
    long double score = 0;
};

long double cosine_ld(const std::vector<float>& a, const std::vector<float>& b);

// Scores every entry, sorts by score descending then key, keeps k.
std::vector<RankedKey> brute_force_rank(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                                        const std::vector<float>& query, std::size_t k);

}  // namespace dualgraph::oracle
