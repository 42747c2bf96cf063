#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flowpix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point behind the flowpix executable. Data goes to `out` or to files,
// diagnostics to `err`. Returns 0 on success, 1 on usage errors and 2 on
// data or format errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Edit distance used for "did you mean" hints.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace flowpix::cli
