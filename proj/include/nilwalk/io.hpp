#ifndef NILWALK__IO_HPP_
#define NILWALK__IO_HPP_

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "albanese.hpp"
#include "algebra.hpp"
#include "quotient_graph.hpp"

namespace nilwalk {

using json = nlohmann::json;

namespace io {

// ---------------------------------------------------------------------------
// Schema helpers
// ---------------------------------------------------------------------------

inline const json & require(const json & node, const std::string & key, const std::string & where)
{
  if (!node.is_object()) { throw SchemaError(where + ": expected an object"); }
  auto it = node.find(key);
  if (it == node.end()) { throw SchemaError(where + "/" + key + ": missing field"); }
  return *it;
}

inline double as_number(const json & node, const std::string & where)
{
  if (!node.is_number()) { throw SchemaError(where + ": expected a number"); }
  return node.get<double>();
}

inline std::int64_t as_integer(const json & node, const std::string & where)
{
  if (!node.is_number_integer()) { throw SchemaError(where + ": expected an integer"); }
  return node.get<std::int64_t>();
}

inline std::vector<double> as_numbers(const json & node, const std::string & where)
{
  if (!node.is_array()) { throw SchemaError(where + ": expected an array"); }
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) { out.push_back(as_number(node[i], where + "/" + std::to_string(i))); }
  return out;
}

inline Vector to_vector(const std::vector<double> & v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline json to_json(const Vector & v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline json to_json(const Matrix & m)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) { rows.push_back(to_json(Vector(m.row(i).transpose()))); }
  return rows;
}

inline Matrix matrix_from_json(const json & node, const std::string & where)
{
  if (!node.is_array() || node.empty()) { throw SchemaError(where + ": expected a non-empty array of rows"); }
  const auto first = as_numbers(node[0], where + "/0");
  Matrix m(node.size(), first.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto row = as_numbers(node[i], where + "/" + std::to_string(i));
    if (row.size() != first.size()) { throw SchemaError(where + "/" + std::to_string(i) + ": ragged matrix"); }
    m.row(static_cast<Eigen::Index>(i)) = to_vector(row).transpose();
  }
  return m;
}

inline json read_json_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open " + path.string()); }
  try {
    return json::parse(in);
  } catch (const json::parse_error & e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw ConfigError("cannot write " + path.string()); }
  out << text;
}

// ---------------------------------------------------------------------------
// Algebra and graph schema
// ---------------------------------------------------------------------------

inline StratifiedAlgebra algebra_from_json(const json & node, const std::string & where = "/algebra")
{
  const auto & dims_node = require(node, "layer_dims", where);
  if (!dims_node.is_array() || dims_node.empty()) { throw SchemaError(where + "/layer_dims: expected a non-empty array"); }
  std::vector<int> dims;
  for (std::size_t i = 0; i < dims_node.size(); ++i) {
    dims.push_back(static_cast<int>(as_integer(dims_node[i], where + "/layer_dims/" + std::to_string(i))));
  }
  std::vector<BracketEntry> entries;
  if (auto it = node.find("brackets"); it != node.end()) {
    if (!it->is_array()) { throw SchemaError(where + "/brackets: expected an array"); }
    for (std::size_t n = 0; n < it->size(); ++n) {
      const std::string at = where + "/brackets/" + std::to_string(n);
      const auto & q       = (*it)[n];
      if (!q.is_array() || q.size() != 4) { throw SchemaError(at + ": expected [i, j, k, value]"); }
      entries.push_back({static_cast<int>(as_integer(q[0], at + "/0")), static_cast<int>(as_integer(q[1], at + "/1")),
                         static_cast<int>(as_integer(q[2], at + "/2")), as_number(q[3], at + "/3")});
    }
  }
  return StratifiedAlgebra(dims, entries);
}

inline json algebra_to_json(const StratifiedAlgebra & alg)
{
  json brackets = json::array();
  for (const auto & e : alg.generating_entries()) { brackets.push_back({e.i, e.j, e.k, e.value}); }
  return {{"layer_dims", alg.layer_dims()}, {"brackets", brackets}};
}

/// Parses the graph schema and validates the result.
inline VoltageGraph graph_from_json(const json & root)
{
  const auto alg      = algebra_from_json(require(root, "algebra", ""), "/algebra");
  const auto vertices = static_cast<int>(as_integer(require(root, "vertices", ""), "/vertices"));
  const auto & list   = require(root, "edges", "");
  if (!list.is_array()) { throw SchemaError("/edges: expected an array"); }
  std::vector<Edge> edges;
  for (std::size_t n = 0; n < list.size(); ++n) {
    const std::string at = "/edges/" + std::to_string(n);
    const auto & e       = list[n];
    const auto voltage   = as_numbers(require(e, "voltage", at), at + "/voltage");
    if (static_cast<int>(voltage.size()) != alg.dim()) {
      throw SchemaError(at + "/voltage: expected " + std::to_string(alg.dim()) + " coordinates");
    }
    edges.push_back({static_cast<int>(as_integer(require(e, "o", at), at + "/o")),
                     static_cast<int>(as_integer(require(e, "t", at), at + "/t")),
                     static_cast<int>(as_integer(require(e, "inv", at), at + "/inv")),
                     as_number(require(e, "p", at), at + "/p"), GroupElement{to_vector(voltage)}});
  }
  VoltageGraph graph(alg, vertices, edges);
  validate(graph);
  return graph;
}

inline json graph_to_json(const VoltageGraph & graph)
{
  json edges = json::array();
  for (const auto & e : graph.edges()) {
    edges.push_back({{"o", e.origin}, {"t", e.terminus}, {"inv", e.inverse}, {"p", e.probability},
                     {"voltage", to_json(e.voltage.log)}});
  }
  return {{"algebra", algebra_to_json(graph.algebra())}, {"vertices", graph.vertex_count()}, {"edges", edges}};
}

inline VoltageGraph ingest_graph(const std::filesystem::path & path) { return graph_from_json(read_json_file(path)); }

inline json albanese_to_json(const VoltageGraph & graph, const AlbaneseData & data, const InvariantMeasure & meas)
{
  json positions = json::array();
  for (const auto & p : data.harmonic.positions) { positions.push_back(to_json(p.log)); }
  return {{"algebra", algebra_to_json(graph.algebra())},
          {"vertices", graph.vertex_count()},
          {"invariant_measure", to_json(meas.vertex)},
          {"rho", to_json(data.rho)},
          {"sigma", to_json(data.sigma)},
          {"sigma_inv", to_json(data.sigma_inv)},
          {"residual", data.residual},
          {"positions", positions}};
}

// ---------------------------------------------------------------------------
// CSV and hashing
// ---------------------------------------------------------------------------

/// 17 significant digits, enough to round-trip a double.
inline std::string format_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter
{
public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size())
  {
    append_row(header);
  }

  CsvWriter & cell(const std::string & s)
  {
    row_.push_back(s);
    return *this;
  }
  CsvWriter & cell(double x) { return cell(format_double(x)); }
  CsvWriter & cell(std::int64_t x) { return cell(std::to_string(x)); }
  CsvWriter & cell(int x) { return cell(std::to_string(x)); }
  CsvWriter & cells(const Vector & v)
  {
    for (Eigen::Index i = 0; i < v.size(); ++i) { cell(v[i]); }
    return *this;
  }

  void end_row()
  {
    if (row_.size() != columns_) {
      throw InvalidArgument("CSV row has " + std::to_string(row_.size()) + " cells, header has "
                            + std::to_string(columns_));
    }
    append_row(row_);
    row_.clear();
  }

  const std::string & str() const { return text_; }
  void save(const std::filesystem::path & path) const { write_text(path, text_); }

private:
  void append_row(const std::vector<std::string> & cells)
  {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) { text_ += ','; }
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::vector<std::string> row_;
  std::string text_;
};

/// 64-bit FNV-1a as 16 hex digits.
inline std::string fnv1a_hex(const std::string & data)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace io
}  // namespace nilwalk

#endif  // NILWALK__IO_HPP_
