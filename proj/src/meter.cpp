#include "rses/meter.hpp"

#include "rses/types.hpp"

namespace rses {

EvaluationMeter::EvaluationMeter(std::int64_t budget, double wall_clock_cap_s, bool record_time)
    : budget_(budget),
      wall_clock_cap_s_(wall_clock_cap_s),
      record_time_(record_time),
      start_(std::chrono::steady_clock::now()) {
  if (budget < 0) throw InvalidArgument("evaluation budget must be nonnegative");
  if (!(wall_clock_cap_s > 0.0)) throw InvalidArgument("wall-clock cap must be positive");
}

std::int64_t EvaluationMeter::try_charge() noexcept {
  std::int64_t current = used_.load(std::memory_order_relaxed);
  while (current < budget_) {
    if (used_.compare_exchange_weak(current, current + 1, std::memory_order_relaxed)) {
      return current;
    }
  }
  return -1;
}

double EvaluationMeter::elapsed_s() const noexcept {
  if (!record_time_) return 0.0;
  const auto now = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(now - start_).count();
}

bool EvaluationMeter::time_exceeded() const noexcept {
  return record_time_ && elapsed_s() > wall_clock_cap_s_;
}

}  // namespace rses
