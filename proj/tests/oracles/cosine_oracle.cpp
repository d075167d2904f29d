#include "cosine_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace dualgraph::oracle {

long double cosine_ld(const std::vector<float>& a, const std::vector<float>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RankedKey> brute_force_rank(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                                        const std::vector<float>& query, std::size_t k) {
    std::vector<RankedKey> all;
    for (const auto& [key, vec] : entries) all.push_back({key, cosine_ld(vec, query)});
    std::sort(all.begin(), all.end(), [](const RankedKey& x, const RankedKey& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.key < y.key;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

}  // namespace dualgraph::oracle
