#pragma once

#include <iosfwd>
#include <string>

#include "cardmv/model.hpp"

namespace cardmv::model {

/// Writes `inst` as a self-describing key/value text document. Floats are
/// written with 17 significant digits so that write-then-read reproduces
/// every value bit-exactly. Q is written row-major, one row per line.
void save_instance(const Instance& inst, std::ostream& os);
void save_instance(const Instance& inst, const std::string& path);

/// Serializes to a string (same format as save_instance).
std::string instance_to_string(const Instance& inst);

/// Parses the key/value document produced by save_instance. Throws
/// cardmv::ParseError with line information on malformed input.
Instance load_instance(std::istream& is);
Instance load_instance(const std::string& path);

/// True when the first line of the file carries the instance magic header.
bool looks_like_instance_file(const std::string& first_line);

} // namespace cardmv::model
