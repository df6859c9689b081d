#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace etpa::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Parses a whole token as a double; throws MalformedFileError on junk.
double parse_double(std::string_view token, std::string_view context);

/// Writes through a sibling temporary and renames it into place, so a failed
/// write never leaves a partial file at `path`.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer);

} // namespace etpa::io
