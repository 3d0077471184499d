#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace latgm::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInfeasible = 2;
inline constexpr int kUsage = 64;
inline constexpr int kDataError = 65;
inline constexpr int kSoftware = 70;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latgm::cli
