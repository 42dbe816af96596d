#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mcsis {

double mean(std::span<const double> v);

// Population variance (divides by n).
double variance(std::span<const double> v);

// Pearson correlation; returns 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Linear-interpolation quantile (R type 7) of an already sorted sample.
double quantile_sorted(std::span<const double> sorted, double prob);

// Linear-interpolation quantile of an unsorted sample.
double quantile(std::span<const double> v, double prob);

double median(std::span<const double> v);

// 1-based average ranks (ties share the mean of their positions).
std::vector<double> average_ranks(std::span<const double> v);

bool all_finite(std::span<const double> v);

// True when the sample holds at least two distinct values.
bool has_spread(std::span<const double> v);

// SplitMix64 step; used to derive independent seeds from composite keys.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

}  // namespace mcsis
