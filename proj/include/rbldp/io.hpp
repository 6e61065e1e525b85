#pragma once

#include <ostream>
#include <string>

#include "rbldp/path_sim.hpp"
#include "rbldp/rbergomi.hpp"

namespace rbldp {

/// Shortest-round-trip-safe rendering with 17 significant digits.
std::string format_double(double x);

/// Columns t,W,Wperp,Z,B. `comment` (if non-empty) is written first as "# ...".
void write_bundle_csv(std::ostream& os, const PathBundle& bundle, const std::string& comment = {});

/// Columns t,v,X.
void write_model_csv(std::ostream& os, const ModelPaths& paths, const std::string& comment = {});

/// Long-format multi-replica output: header "replica,t,W,Wperp,Z,B,v,X"
/// followed by one row per (replica, node) from write_paths_rows.
void write_paths_header(std::ostream& os, const std::string& comment = {});
void write_paths_rows(std::ostream& os, const ModelPaths& paths);

}  // namespace rbldp
