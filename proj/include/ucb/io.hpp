#pragma once

#include <string>

#include "ucb/bands.hpp"
#include "ucb/interference.hpp"

namespace ucb {

// Binary grid format: ascii header line
//   "ucbgrid <band> <nz> <ny> <ns> <z_lo> <z_hi> <y_lo> <y_hi> <s_lo> <s_hi>\n"
// followed by nz*ny*ns row-major complex doubles (re, im), s fastest.
void dump_field(const Field3& f, const std::string& path);
Field3 load_field(const std::string& path);

// CSV slice of a field at fixed sigma index (columns: y, s, re, im).
void dump_field_slice_csv(const Field3& f, int i, const std::string& path);

// Interference surface CSV, one row per surface-grid point:
//   ybar, s, s_n, residual
void dump_surface_csv(const InterferenceSurface& surf, const std::string& path);
InterferenceSurface load_surface_csv(const std::string& path);

// Minimal structural JSON-schema check: "object" with required typed keys,
// recursively. Returns an empty string when valid, else the first violation.
std::string validate_against_schema(const std::string& json_text, const std::string& schema_text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ucb
