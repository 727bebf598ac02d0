#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace rses {

/// Counts calls against a fixed budget and tracks elapsed wall time.
/// Charges are atomic, so concurrent evaluations keep an exact total.
class EvaluationMeter {
 public:
  static constexpr double kDefaultWallClockCapS = 30.0;

  /// With `record_time` false the meter reports zero elapsed time, making
  /// traces byte-reproducible; the wall-clock cap is then inert.
  explicit EvaluationMeter(std::int64_t budget, double wall_clock_cap_s = kDefaultWallClockCapS,
                           bool record_time = true);

  EvaluationMeter(const EvaluationMeter&) = delete;
  EvaluationMeter& operator=(const EvaluationMeter&) = delete;

  /// Reserves one evaluation. Returns the zero-based index of the charged call,
  /// or -1 when the budget is spent.
  std::int64_t try_charge() noexcept;

  std::int64_t budget() const noexcept { return budget_; }
  std::int64_t used() const noexcept { return used_.load(std::memory_order_relaxed); }
  std::int64_t remaining() const noexcept { return budget_ - used(); }
  bool exhausted() const noexcept { return remaining() <= 0; }

  double wall_clock_cap_s() const noexcept { return wall_clock_cap_s_; }
  double elapsed_s() const noexcept;
  bool time_exceeded() const noexcept;

 private:
  std::int64_t budget_;
  std::atomic<std::int64_t> used_{0};
  double wall_clock_cap_s_;
  bool record_time_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rses
