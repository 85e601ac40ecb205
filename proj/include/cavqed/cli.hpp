#pragma once

// Batch front end. A run is described by one JSON config file; see the
// README for the schema. Relative paths inside the config resolve against
// the config file's directory.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace cavqed {

enum ExitCode : int {
  kExitOk = 0,
  kExitSchema = 2,     // bad config or malformed input file
  kExitIo = 3,         // unreadable input, unwritable output
  kExitNumerical = 4,  // solver or fit engine failure
};

// Runs the config at `config_path`. `mode_override` replaces the config's
// "mode". A one-line JSON summary (or, in derive mode, the metrics) goes to
// `out`; warnings and the error JSON go to `err`. Never throws.
int run(const std::string& config_path, const std::optional<std::string>& mode_override,
        std::ostream& out, std::ostream& err);

// SHA-256 of the canonical (key-sorted, compact) form of a JSON document.
// Throws ParseError on invalid JSON.
std::string config_digest(std::string_view json_text);

}  // namespace cavqed
