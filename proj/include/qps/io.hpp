#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qps/causal_diamond.hpp"
#include "qps/circuit.hpp"
#include "qps/classical_ps.hpp"
#include "qps/ecm.hpp"
#include "qps/mesh.hpp"
#include "qps/quantum_agent.hpp"

namespace qps::io {

using json = nlohmann::json;

/// File-system failures: missing files, refused overwrites.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Reads and parses a JSON file; IoError when unreadable, ParseError with
/// the parser's diagnostic when malformed.
json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes a file, creating parent directories. IoError when the file exists
/// and `force` is false.
void write_text(const std::filesystem::path& path, const std::string& content, bool force);
void write_json(const std::filesystem::path& path, const json& j, bool force);

// Mesh parameters: {dim, cells:[{layer, top_mode, theta1, theta2}], output_phases}.
json to_json(const MeshParameters& mesh);
MeshParameters mesh_from_json(const json& j);

// Arbitrary circuits: {dim, cells:[{layer, mode_a, mode_b, theta1, theta2}], output_phases}.
json to_json(const CircuitLayout& layout);
/// Accepts either the circuit or the mesh schema.
CircuitLayout circuit_from_json(const json& j);

/// Array of rows, each an array of [re, im] pairs.
json matrix_to_json(const CMatrix& m);
/// ParseError unless the value is a non-empty square array of [re, im].
CMatrix matrix_from_json(const json& j);

// ECM graph: {vertices:[{id, tag}], edges:[[from, to]]} with ids as labels.
json to_json(const EcmGraph& g);
EcmGraph ecm_from_json(const json& j);

/// Ordered list of {vertex, support, block}; the block is the local unitary
/// on the support.
json to_json(const UnitaryRoute& r);

/// {edges, h, g, gamma, eta}
json to_json(const ClassicalAgent& agent);

/// {mesh, percept_modes, action_modes}
json to_json(const QuantumAgent& agent);
QuantumAgent quantum_agent_from_json(const json& j);

/// {pair, diamond_cells, surface_cells, leaking_cells}
json to_json(const CausalDiamond& d);

// CSV -----------------------------------------------------------------------

/// Minimal CSV builder. Numbers are written with round-trip precision so
/// identical runs give identical files.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& row(const std::vector<double>& values);
  Csv& row(const std::vector<std::string>& values);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

std::string format_number(double x);

// SVG -----------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 640, height = 400;
};

/// Static line chart with a legend.
std::string line_plot_svg(const std::vector<Series>& series, const PlotSpec& spec);
/// Heat map of values in [0, 1], rows top to bottom.
std::string heatmap_svg(const Eigen::MatrixXd& values, const PlotSpec& spec);

}  // namespace qps::io
