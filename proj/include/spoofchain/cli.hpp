#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spoofchain {

class Connector;
class Clock;
class RateLimiter;

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEnvironment = 3;
inline constexpr int kExitInternal = 4;

// Seams for `live`; null members mean real TCP and the system clock.
struct CliSeams {
  Connector* connector = nullptr;
  Clock* clock = nullptr;
  RateLimiter* limiter = nullptr;  // null means the process-wide limiter
};

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, CliSeams seams = {});

}  // namespace spoofchain
