#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfrl {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// Dense row-major |S| x |A| table of action values.
///
/// Every entry is finite. A new table is all zeros. Mutation through set()
/// rejects non-finite values; at() is unchecked apart from a debug assert.
class QTable {
 public:
  QTable(std::size_t num_states, std::size_t num_actions);

  /// Builds from nested rows; all rows must share one non-zero length.
  static QTable from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static QTable from_values(std::size_t num_states, std::size_t num_actions,
                            std::vector<double> values);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(StateId s, ActionId a) const;
  void set(StateId s, ActionId a, double value);

  std::span<const double> row(StateId s) const;
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const QTable& other) const noexcept {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_;
  }

  /// Bitwise equality of every entry (distinguishes -0.0 from 0.0).
  bool bit_equal(const QTable& other) const noexcept;

  bool operator==(const QTable&) const = default;

  /// Throws kIndexOutOfRange naming the offending index.
  void check_state(StateId s, std::string_view what = "state") const;
  void check_action(ActionId a, std::string_view what = "action") const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> values_;
};

/// Text form: "num_states num_actions" header line, then one line per state
/// with space-separated shortest round-trip decimals.
std::string to_text(const QTable& table);
QTable qtable_from_text(std::string_view text);

}  // namespace dfrl
