#pragma once

// Shared error handling, logging and numeric tolerances.

#include <cstdio>
#include <cstdlib>
#include <cstdarg>
#include <stdexcept>
#include <string>

namespace flexor {

// Every tolerance used by the library lives here so that a change in one
// place propagates consistently through solver, projection and tests.
namespace tol {

// Newton-Raphson power flow.
inline constexpr double newton_mismatch = 1e-10;
inline constexpr int newton_max_iter = 30;

// Simplex LP.
inline constexpr double lp_feasibility = 1e-9;
inline constexpr double lp_pivot = 1e-9;
inline constexpr double lp_pivot_breakdown = 1e-12;

// Polytope machinery.
inline constexpr double redundancy_slack = 1e-7;
inline constexpr double coeff_zero = 1e-12;
inline constexpr double row_duplicate = 1e-10;
inline constexpr double eq_pivot = 1e-9;
inline constexpr int fm_row_cap = 100000;

// Membership and reporting.
inline constexpr double membership = 1e-7;

// SLP sampler.
inline constexpr double slp_step = 1e-7;
inline constexpr double slp_radius_min = 1e-9;
inline constexpr double slp_radius_init = 0.1;
inline constexpr double slp_shrink = 0.5;
inline constexpr double slp_expand = 1.5;
inline constexpr double sample_cert = 1e-6;

}  // namespace tol

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorCode {
  usage = 1,      // bad arguments or malformed input data
  data = 2,       // schema or model invariant violation
  numerical = 3,  // solver non-convergence or numeric breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_usage(const std::string& what) {
  throw Error(ErrorCode::usage, what);
}
[[noreturn]] inline void throw_data(const std::string& what) {
  throw Error(ErrorCode::data, what);
}
[[noreturn]] inline void throw_numerical(const std::string& what) {
  throw Error(ErrorCode::numerical, what);
}

// Log levels selected through the FLEXOR_LOG environment variable
// (off, info, debug). Messages go to stderr and never touch artifacts.
enum class LogLevel { off = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FLEXOR_LOG");
    if (env == nullptr) return LogLevel::off;
    const std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::off;
  }();
  return level;
}

inline void log_at(LogLevel level, const char* fmt, ...) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

#define FLEXOR_LOG_INFO(...) ::flexor::log_at(::flexor::LogLevel::info, __VA_ARGS__)
#define FLEXOR_LOG_DEBUG(...) ::flexor::log_at(::flexor::LogLevel::debug, __VA_ARGS__)

// Formats a double with 17 significant digits, enough to round-trip, and
// normalises negative zero so serialized artifacts are byte-stable.
inline std::string format_full(double x) {
  if (x == 0.0) x = 0.0;  // collapses -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace flexor
