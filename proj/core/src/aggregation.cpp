#include "dfrl/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dfrl/error.hpp"

namespace dfrl {

namespace {

void require_same_shape(const QTable& a, const QTable& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cannot aggregate " + std::to_string(a.num_states()) + "x" +
                    std::to_string(a.num_actions()) + " with " +
                    std::to_string(b.num_states()) + "x" + std::to_string(b.num_actions()));
  }
}

template <typename Op>
QTable combine(const QTable& a, const QTable& b, Op op) {
  require_same_shape(a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = op(av[i], bv[i]);
  return QTable::from_values(a.num_states(), a.num_actions(), std::move(out));
}

}  // namespace

std::string_view to_string(AggregationMethod method) {
  switch (method) {
    case AggregationMethod::kPairwiseAverage: return "avg";
    case AggregationMethod::kRunningMean: return "running-mean";
    case AggregationMethod::kElementwiseMax: return "max";
  }
  return "?";
}

AggregationMethod parse_aggregation_method(std::string_view text) {
  if (text == "avg") return AggregationMethod::kPairwiseAverage;
  if (text == "running-mean") return AggregationMethod::kRunningMean;
  if (text == "max") return AggregationMethod::kElementwiseMax;
  throw Error(ErrorCode::kConfig,
              "unknown aggregation method '" + std::string(text) +
                  "' (expected avg, running-mean or max)");
}

QTable aggregate_pairwise_average(const QTable& a, const QTable& b) {
  return combine(a, b, [](double x, double y) {
    const double mid = (x + y) / 2.0;
    // x + y can overflow for finite inputs near the double range limit.
    return std::isfinite(mid) ? mid : x / 2.0 + y / 2.0;
  });
}

QTable aggregate_running_mean(const QTable& a, std::uint64_t count_a, const QTable& b) {
  if (count_a == 0) {
    throw Error(ErrorCode::kInvalidArgument, "running mean count must be >= 1");
  }
  const double n = static_cast<double>(count_a);
  return combine(a, b, [n](double x, double y) {
    const double mean = (n * x + y) / (n + 1.0);
    return std::isfinite(mean) ? mean : x * (n / (n + 1.0)) + y / (n + 1.0);
  });
}

QTable aggregate_elementwise_max(const QTable& a, const QTable& b) {
  return combine(a, b, [](double x, double y) { return std::max(x, y); });
}

QTable aggregate(AggregationMethod method, const QTable& a, std::uint64_t count_a,
                 const QTable& b) {
  switch (method) {
    case AggregationMethod::kPairwiseAverage: return aggregate_pairwise_average(a, b);
    case AggregationMethod::kRunningMean: return aggregate_running_mean(a, count_a, b);
    case AggregationMethod::kElementwiseMax: return aggregate_elementwise_max(a, b);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation method");
}

}  // namespace dfrl
