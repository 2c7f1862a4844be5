#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace odds::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `odds` invocation. argv[0] is the program name. Normal output goes
/// to `out`, diagnostics and usage text to `err`.
int parse_and_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Parses `key=value` lines; blank lines and `#` comments are skipped. Each
/// entry becomes a `--key=value` token. Throws std::invalid_argument on a
/// malformed line.
std::vector<std::string> config_file_args(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace odds::cli
