#include "parobs/field_io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "parobs/errors.hpp"

namespace parobs {

std::string format_number(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_field_csv(std::ostream& os, const SpaceTimeField& field) {
  const Grid& g = field.grid();
  os << (g.dim() == 1 ? "k,i0,value\n" : "k,i0,i1,value\n");
  for (int k = 0; k < g.levels(); ++k) {
    const auto slice = field.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const auto i = g.multi_index(n);
      os << k << ',' << i[0];
      if (g.dim() == 2) os << ',' << i[1];
      os << ',' << format_number(slice[n]) << '\n';
    }
  }
}

void write_field_csv(const std::string& path, const SpaceTimeField& field) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_field_csv(os, field);
}

SpaceTimeField read_field_csv(std::istream& is, std::shared_ptr<const Grid> grid, std::string name) {
  SpaceTimeField out(grid, std::move(name), Provenance::solved);
  std::string line;
  std::getline(is, line);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::array<long, 3> idx{0, 0, 0};
    char comma = 0;
    row >> idx[0] >> comma >> idx[1];
    if (grid->dim() == 2) row >> comma >> idx[2];
    double v = 0;
    row >> comma >> v;
    if (!row) throw Error("malformed field CSV row: " + line);
    GridIndex at{static_cast<int>(idx[0]), {static_cast<int>(idx[1]), static_cast<int>(idx[2])}};
    if (!grid->contains(at)) throw Error("field CSV index outside grid: " + line);
    out(at.k, grid->flat(at.i)) = v;
    ++rows;
  }
  if (rows != grid->node_count() * static_cast<std::size_t>(grid->levels()))
    throw Error("field CSV row count does not match grid");
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  std::array<unsigned char, 8> b{};
  for (int j = 0; j < 8; ++j) b[j] = static_cast<unsigned char>(bits >> (8 * j));
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

double get_f64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t bits = 0;
  for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(b[j]) << (8 * j);
  double v = 0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void write_field_binary(std::ostream& os, const SpaceTimeField& field) {
  const Grid& g = field.grid();
  os.write("PARF", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(g.dim()));
  put_u32(os, static_cast<std::uint32_t>(g.nodes_per_axis()));
  put_u32(os, static_cast<std::uint32_t>(g.levels()));
  for (double v : field.values()) put_f64(os, v);
}

void write_field_binary(const std::string& path, const SpaceTimeField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_field_binary(os, field);
}

SpaceTimeField read_field_binary(std::istream& is, std::shared_ptr<const Grid> grid, std::string name) {
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (std::memcmp(magic.data(), "PARF", 4) != 0) throw Error("not a PARF field file");
  if (get_u32(is) != 1) throw Error("unsupported PARF version");
  const auto dim = get_u32(is);
  const auto n_axis = get_u32(is);
  const auto levels = get_u32(is);
  if (static_cast<int>(dim) != grid->dim() || static_cast<int>(n_axis) != grid->nodes_per_axis() ||
      static_cast<int>(levels) != grid->levels())
    throw Error("PARF header does not match grid");
  SpaceTimeField out(grid, std::move(name), Provenance::solved);
  for (int k = 0; k < grid->levels(); ++k) {
    auto slice = out.level(k);
    for (double& v : slice) v = get_f64(is);
  }
  if (!is) throw Error("truncated PARF field file");
  return out;
}

SpaceTimeField read_field_binary(const std::string& path, std::shared_ptr<const Grid> grid, std::string name) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_field_binary(is, std::move(grid), std::move(name));
}

}  // namespace parobs
