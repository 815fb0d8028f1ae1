#pragma once

// Scene JSON reading/writing, report serialization and hashing.
//
// A scene file is a single JSON object:
//   {
//     "constants":  {"a": 1.5, ...},                 optional; folded into
//                                                    every expression at parse
//     "factors":    [{"name": str, "vars": [str],    first entry is the base
//                     "metric": [[expr-str]],
//                     "box": [[lo, hi]]}],
//     "twists":     [{"factor": int >= 1, "f": expr-str}],   one per factor
//     "field":      {"lifted": bool, "components": [[expr-str]]},
//     "grid":       {"points_per_dim": int, "inset": num,    optional,
//                    "guards": [expr-str], "guard_delta": num} with defaults
//     "tolerance":  num                              optional, default 1e-8
//   }
//
// Serialization is canonical: fixed key order, fixed layout, expressions in
// round-trip printer form, numbers in shortest round-trip form. Reports use
// 17 significant digits throughout, so identical runs give identical bytes.

#include <optional>
#include <string>
#include <vector>

#include "twistlab/lie.hpp"

namespace twistlab {

// Parses a scene document; malformed JSON, missing or mistyped fields and
// unparseable expressions all raise SchemaError with context.
Scene scene_from_json(const std::string& text);

// Canonical serialization; scene_from_json(scene_to_json(s)) reproduces the
// scene exactly.
std::string scene_to_json(const Scene& scene);

// Reads a whole file; SchemaError if unreadable.
std::string read_file(const std::string& path);

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

struct ModeReport {
  Mode mode = Mode::Oracle;
  std::optional<ResidualReport> order1, order2;
};

struct Disagreement {
  int order = 0;
  double oracle = 0.0, paper = 0.0, corrected = 0.0;
};

struct Report {
  std::string scene_sha256;
  std::vector<ModeReport> modes;
  std::vector<Disagreement> disagreement;  // orders whose verdicts differ
  int points_per_dim = 0;
  double inset = 0.0;
  std::size_t grid_size = 0;
  double tolerance = 0.0;
  std::vector<std::string> vars;  // product coordinate order, for argmax
};

std::string report_to_json(const Report& r);

// One row per (mode, order, grid point): normalized residual at that point.
std::string report_to_csv(const Report& r, const std::vector<Env>& grid);

}  // namespace twistlab
