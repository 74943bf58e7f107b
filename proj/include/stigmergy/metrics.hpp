#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stigmergy {

// Fraction of cells where the two binary grids agree.
inline double similarity(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("similarity: grids must have equal non-zero size");
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        matches += (a[i] != 0) == (b[i] != 0);
    }
    return static_cast<double>(matches) / static_cast<double>(a.size());
}

namespace detail {

// Ranks with average-rank tie handling (1-based).
inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

} // namespace detail

// Spearman rank correlation with average-rank ties.
inline double spearman_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("spearman_rank: input lengths differ");
    }
    if (x.size() < 3) {
        throw std::invalid_argument("spearman_rank: need at least 3 observations");
    }
    const auto rx = detail::average_ranks(x);
    const auto ry = detail::average_ranks(y);

    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::domain_error("spearman_rank: correlation undefined for constant input");
    }
    return sxy / std::sqrt(sxx * syy);
}

// Batch utility: reward per unit cost.
inline double batch_utility(double reward_sum, double cost_sum) {
    if (cost_sum <= 0.0) {
        throw std::domain_error("batch_utility: cost must be positive");
    }
    return reward_sum / cost_sum;
}

// Per-seed outcome records plus aggregates, used by seed sweeps.
class SweepSummary {
public:
    struct Record {
        std::uint64_t seed = 0;
        std::map<std::string, double> values;
    };

    void add(Record record) { records_.push_back(std::move(record)); }

    const std::vector<Record>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    double mean(const std::string& key) const {
        const auto v = collect(key);
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    double median(const std::string& key) const {
        auto v = collect(key);
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    // Fraction of records whose value under `key` is >= threshold.
    double fraction_at_least(const std::string& key, double threshold) const {
        const auto v = collect(key);
        std::size_t hits = 0;
        for (double value : v) {
            hits += value >= threshold;
        }
        return static_cast<double>(hits) / static_cast<double>(v.size());
    }

private:
    std::vector<double> collect(const std::string& key) const {
        std::vector<double> out;
        out.reserve(records_.size());
        for (const auto& record : records_) {
            const auto it = record.values.find(key);
            if (it == record.values.end()) {
                throw std::invalid_argument("SweepSummary: no value named '" + key + "'");
            }
            out.push_back(it->second);
        }
        if (out.empty()) {
            throw std::invalid_argument("SweepSummary: no records");
        }
        return out;
    }

    std::vector<Record> records_;
};

} // namespace stigmergy
