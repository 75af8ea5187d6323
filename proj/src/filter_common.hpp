#pragma once

#include "mrflp/types.hpp"

#include <chrono>
#include <string>

namespace mrflp::detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Re-raises the in-flight exception with a time prefix, keeping its type.
[[noreturn]] inline void rethrow_at(int t) {
  const std::string at = "t=" + std::to_string(t) + ": ";
  try {
    throw;
  } catch (const RankDeficiencyError& e) {
    throw RankDeficiencyError(at + e.what());
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(at + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(at + e.what());
  } catch (const Error& e) {
    throw Error(at + e.what());
  }
}

}  // namespace mrflp::detail
