#pragma once

// Text encodings shared by the XML file format, the wire format and the CLI.

#include <optional>
#include <string>
#include <string_view>

#include "heprep/model.hpp"

namespace heprep {

/// Shortest decimal string that parses back to exactly `v`; integral values
/// print without a fractional part and exponents carry no '+' or leading
/// zeros ("1e21", "1e-7"). `v` must be finite.
std::string format_real(double v);

/// Strict full-string parse; rejects non-finite results.
std::optional<double> parse_real(std::string_view text);
std::optional<std::int64_t> parse_integer(std::string_view text);

/// bool -> "true"/"false", color -> "r,g,b", int -> decimal, real -> format_real.
std::string format_payload(const AttPayload& payload);
std::optional<AttPayload> parse_payload(AttValueKind kind, std::string_view text);

}  // namespace heprep
