#include "dfrl/q_table.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dfrl/error.hpp"
#include "dfrl/float_format.hpp"

namespace dfrl {

namespace {

void require_finite(double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kNonFiniteValue, "q-table entries must be finite");
  }
}

}  // namespace

QTable::QTable(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
  if (num_states == 0 || num_actions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "q-table dimensions must be positive");
  }
  values_.assign(num_states * num_actions, 0.0);
}

QTable QTable::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "q-table needs at least one row");
  }
  const std::size_t width = rows.begin()->size();
  std::vector<double> values;
  values.reserve(rows.size() * width);
  for (const auto& r : rows) {
    if (r.size() != width) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged q-table rows");
    }
    values.insert(values.end(), r.begin(), r.end());
  }
  return from_values(rows.size(), width, std::move(values));
}

QTable QTable::from_values(std::size_t num_states, std::size_t num_actions,
                           std::vector<double> values) {
  QTable table(num_states, num_actions);
  if (values.size() != table.values_.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(table.values_.size()) + " values, got " +
                    std::to_string(values.size()));
  }
  for (double v : values) require_finite(v);
  table.values_ = std::move(values);
  return table;
}

double QTable::at(StateId s, ActionId a) const {
  assert(s < num_states_ && a < num_actions_);
  return values_[static_cast<std::size_t>(s) * num_actions_ + a];
}

void QTable::set(StateId s, ActionId a, double value) {
  check_state(s);
  check_action(a);
  require_finite(value);
  values_[static_cast<std::size_t>(s) * num_actions_ + a] = value;
}

std::span<const double> QTable::row(StateId s) const {
  check_state(s);
  return std::span<const double>(values_).subspan(
      static_cast<std::size_t>(s) * num_actions_, num_actions_);
}

bool QTable::bit_equal(const QTable& other) const noexcept {
  if (!same_shape(other)) return false;
  return std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(double)) == 0;
}

void QTable::check_state(StateId s, std::string_view what) const {
  if (s >= num_states_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                std::string(what) + " index " + std::to_string(s) + " out of range [0, " +
                    std::to_string(num_states_) + ")");
  }
}

void QTable::check_action(ActionId a, std::string_view what) const {
  if (a >= num_actions_) {
    throw Error(ErrorCode::kIndexOutOfRange,
                std::string(what) + " index " + std::to_string(a) + " out of range [0, " +
                    std::to_string(num_actions_) + ")");
  }
}

std::string to_text(const QTable& table) {
  std::string out = std::to_string(table.num_states()) + " " +
                    std::to_string(table.num_actions()) + "\n";
  for (StateId s = 0; s < table.num_states(); ++s) {
    const auto r = table.row(s);
    for (std::size_t a = 0; a < r.size(); ++a) {
      if (a != 0) out += ' ';
      out += format_double(r[a]);
    }
    out += '\n';
  }
  return out;
}

QTable qtable_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t states = 0;
  std::size_t actions = 0;
  if (!(in >> states >> actions)) {
    throw Error(ErrorCode::kInvalidArgument, "q-table text: missing header");
  }
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    const auto v = parse_double(token);
    if (!v) throw Error(ErrorCode::kInvalidArgument, "q-table text: bad number '" + token + "'");
    values.push_back(*v);
  }
  return QTable::from_values(states, actions, std::move(values));
}

}  // namespace dfrl
