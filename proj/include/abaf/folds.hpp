#pragma once

#include <cstdint>
#include <vector>

namespace abaf {

/// k disjoint folds of subject indices, stratified by label.
struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> folds;  // each sorted ascending

    /// All indices outside fold `i`, ascending.
    std::vector<std::size_t> complement(std::size_t i) const;
};

/// Each class is shuffled with its own seeded stream and dealt round robin;
/// dealing continues across classes so fold sizes differ by at most one.
FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

/// Indices of a class-balanced subset: every class is reduced to the
/// minority count, uniformly at random. Returned ascending.
std::vector<std::size_t> downsample_balance(const std::vector<int>& labels, std::uint64_t seed);

struct TrainValSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Stratified holdout of `fraction` of `pool` (indices into `labels`).
/// Each class keeps at least one training and one validation subject.
TrainValSplit stratified_holdout(const std::vector<std::size_t>& pool, const std::vector<int>& labels,
                                 double fraction, std::uint64_t seed);

}  // namespace abaf
