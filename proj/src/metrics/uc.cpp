#include <algorithm>

#include "cdb/metrics/metrics.hpp"

namespace cdb::metrics {

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::vector<int> sa(a), sb(b);
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<int> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(inter));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double compute_uc(const FactorLatentMap& map) {
    const std::size_t n = map.factor_names.size();
    if (n < 2) throw MetricError("unconfoundedness needs at least two factors");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            total += jaccard(map.entries.at(map.factor_names[i]),
                             map.entries.at(map.factor_names[j]));
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return 1.0 - total / pairs;
}

}  // namespace cdb::metrics
