#include "rbldp/io.hpp"

#include <cstdio>

namespace rbldp {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void write_comment(std::ostream& os, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
}

}  // namespace

void write_bundle_csv(std::ostream& os, const PathBundle& bundle, const std::string& comment) {
  write_comment(os, comment);
  os << "t,W,Wperp,Z,B\n";
  for (int k = 0; k < bundle.grid.size(); ++k)
    os << format_double(bundle.grid.time(k)) << ',' << format_double(bundle.w[k]) << ','
       << format_double(bundle.wperp[k]) << ',' << format_double(bundle.z[k]) << ','
       << format_double(bundle.b[k]) << '\n';
}

void write_model_csv(std::ostream& os, const ModelPaths& paths, const std::string& comment) {
  write_comment(os, comment);
  os << "t,v,X\n";
  const auto& grid = paths.bundle.grid;
  for (int k = 0; k < grid.size(); ++k)
    os << format_double(grid.time(k)) << ',' << format_double(paths.v[k]) << ','
       << format_double(paths.x[k]) << '\n';
}

void write_paths_header(std::ostream& os, const std::string& comment) {
  write_comment(os, comment);
  os << "replica,t,W,Wperp,Z,B,v,X\n";
}

void write_paths_rows(std::ostream& os, const ModelPaths& paths) {
  const auto& b = paths.bundle;
  for (int k = 0; k < b.grid.size(); ++k)
    os << b.replica << ',' << format_double(b.grid.time(k)) << ',' << format_double(b.w[k]) << ','
       << format_double(b.wperp[k]) << ',' << format_double(b.z[k]) << ','
       << format_double(b.b[k]) << ',' << format_double(paths.v[k]) << ','
       << format_double(paths.x[k]) << '\n';
}

}  // namespace rbldp
