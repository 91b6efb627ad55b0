#pragma once

#include <chrono>
#include <ostream>

namespace hyrom {

/// Online time split: building the (reduced) system, solving it, and the rest.
struct PhaseTimes {
  double construction = 0.0;
  double solution = 0.0;
  double other = 0.0;

  double total() const { return construction + solution + other; }
};

/// Adds the scope's wall time to `acc` on destruction.
class ScopedTimer {
 public:
  explicit ScopedTimer(double& acc) : acc_(acc), start_(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() { acc_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  double& acc_;
  std::chrono::steady_clock::time_point start_;
};

/// CSV lines `phase,elapsed_seconds`.
inline void write_timing_csv(std::ostream& os, const PhaseTimes& t) {
  os << "phase,elapsed_seconds\n";
  os << "construction," << t.construction << '\n';
  os << "solution," << t.solution << '\n';
  os << "other," << t.other << '\n';
  os << "total," << t.total() << '\n';
}

}  // namespace hyrom
