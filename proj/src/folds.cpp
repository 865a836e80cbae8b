#include "abaf/folds.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "abaf/error.hpp"
#include "abaf/rng.hpp"

namespace abaf {

namespace {

std::map<int, std::vector<std::size_t>> by_class(const std::vector<int>& labels) {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
}

}  // namespace

std::vector<std::size_t> FoldPlan::complement(std::size_t i) const {
    require(i < folds.size(), ErrorCode::OutOfRange, "fold index out of range", "fold");
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < folds.size(); ++j)
        if (j != i) out.insert(out.end(), folds[j].begin(), folds[j].end());
    std::sort(out.begin(), out.end());
    return out;
}

FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
    require(k >= 2, ErrorCode::InvalidArgument, "k must be >= 2", "folds");
    require(!labels.empty(), ErrorCode::EmptyInput, "no subjects", "labels");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.folds.resize(k);
    std::size_t next = 0;
    for (auto& [label, members] : by_class(labels)) {
        require(members.size() >= k, ErrorCode::DegenerateData,
                "class " + std::to_string(label) + " has fewer than k=" + std::to_string(k) + " subjects", "labels");
        Rng rng = Rng::named(seed, "kfold/class" + std::to_string(label));
        rng.shuffle(members);
        for (std::size_t i : members) {
            plan.folds[next].push_back(i);
            next = (next + 1) % k;
        }
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

std::vector<std::size_t> downsample_balance(const std::vector<int>& labels, std::uint64_t seed) {
    const auto classes = by_class(labels);
    require(classes.size() >= 2, ErrorCode::DegenerateData, "balancing needs at least two classes", "labels");
    std::size_t minority = labels.size();
    for (const auto& [label, members] : classes) minority = std::min(minority, members.size());
    std::vector<std::size_t> out;
    for (auto [label, members] : classes) {
        Rng rng = Rng::named(seed, "balance/class" + std::to_string(label));
        rng.shuffle(members);
        out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(minority));
    }
    std::sort(out.begin(), out.end());
    return out;
}

TrainValSplit stratified_holdout(const std::vector<std::size_t>& pool, const std::vector<int>& labels,
                                 double fraction, std::uint64_t seed) {
    require(fraction > 0.0 && fraction < 1.0, ErrorCode::InvalidArgument, "fraction must be in (0,1)",
            "val_fraction");
    std::map<int, std::vector<std::size_t>> classes;
    for (std::size_t i : pool) {
        require(i < labels.size(), ErrorCode::OutOfRange, "pool index out of range", "pool");
        classes[labels[i]].push_back(i);
    }
    TrainValSplit split;
    for (auto& [label, members] : classes) {
        require(members.size() >= 2, ErrorCode::DegenerateData,
                "class " + std::to_string(label) + " needs two subjects for a validation split", "labels");
        Rng rng = Rng::named(seed, "holdout/class" + std::to_string(label));
        rng.shuffle(members);
        std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
        split.val.insert(split.val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    return split;
}

}  // namespace abaf
