#pragma once

#include <cstdint>
#include <string_view>

#include "dfrl/q_table.hpp"

namespace dfrl {

enum class AggregationMethod : std::uint8_t {
  kPairwiseAverage,  // "avg": literal sequential fold, (a + b) / 2
  kRunningMean,      // "running-mean": uniform mean over all folded tables
  kElementwiseMax,   // "max"
};

/// Config spelling: "avg" | "running-mean" | "max".
std::string_view to_string(AggregationMethod method);
AggregationMethod parse_aggregation_method(std::string_view text);

QTable aggregate_pairwise_average(const QTable& a, const QTable& b);

/// (count_a * a + b) / (count_a + 1). The caller tracks the count.
QTable aggregate_running_mean(const QTable& a, std::uint64_t count_a, const QTable& b);

QTable aggregate_elementwise_max(const QTable& a, const QTable& b);

/// Dispatches on method; count_a is used by kRunningMean only.
QTable aggregate(AggregationMethod method, const QTable& a, std::uint64_t count_a,
                 const QTable& b);

}  // namespace dfrl
