#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "parobs/grid.hpp"

namespace parobs {

// CSV layout, one row per node and time level, levels outermost:
//   n = 1:  k,i0,value
//   n = 2:  k,i0,i1,value
// Values are printed in shortest round-trip form so that a read-back is exact.
void write_field_csv(std::ostream& os, const SpaceTimeField& field);
void write_field_csv(const std::string& path, const SpaceTimeField& field);
SpaceTimeField read_field_csv(std::istream& is, std::shared_ptr<const Grid> grid, std::string name);

// Flat binary layout (little-endian):
//   char[4] "PARF", uint32 version = 1, uint32 dim, uint32 nodes_per_axis,
//   uint32 levels, then levels * node_count doubles in CSV row order.
void write_field_binary(std::ostream& os, const SpaceTimeField& field);
void write_field_binary(const std::string& path, const SpaceTimeField& field);
SpaceTimeField read_field_binary(std::istream& is, std::shared_ptr<const Grid> grid, std::string name);
SpaceTimeField read_field_binary(const std::string& path, std::shared_ptr<const Grid> grid, std::string name);

// Shortest round-trip decimal form used by every CSV writer in the project.
std::string format_number(double v);

}  // namespace parobs
