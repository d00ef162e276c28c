#include "qps/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace qps::io {

namespace {

template <class F>
auto parsing(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("complex entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<double> doubles(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string(field) + " must be an array");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ParseError(std::string(field) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

// Files ---------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& content, bool force) {
  if (!force && std::filesystem::exists(path))
    throw IoError(path.string() + " exists (use --force to overwrite)");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j, bool force) {
  write_text(path, j.dump(2) + "\n", force);
}

// Mesh and circuits ---------------------------------------------------------

json to_json(const MeshParameters& mesh) {
  json cells = json::array();
  for (const auto& c : mesh.cells)
    cells.push_back({{"layer", c.layer}, {"top_mode", c.top_mode}, {"theta1", c.theta1}, {"theta2", c.theta2}});
  return {{"dim", mesh.dim}, {"cells", cells}, {"output_phases", mesh.output_phases}};
}

MeshParameters mesh_from_json(const json& j) {
  MeshParameters m = parsing("mesh", [&] {
    MeshParameters m;
    m.dim = j.at("dim").get<std::size_t>();
    for (const auto& c : j.at("cells"))
      m.cells.push_back({c.at("layer").get<std::size_t>(), c.at("top_mode").get<std::size_t>(),
                         c.at("theta1").get<double>(), c.at("theta2").get<double>()});
    m.output_phases = doubles(j.at("output_phases"), "output_phases");
    return m;
  });
  m.validate();
  return m;
}

json to_json(const CircuitLayout& layout) {
  json cells = json::array();
  for (const auto& c : layout.cells)
    cells.push_back({{"layer", c.layer},
                     {"mode_a", c.mode_a},
                     {"mode_b", c.mode_b},
                     {"theta1", c.theta1},
                     {"theta2", c.theta2}});
  return {{"dim", layout.dim}, {"cells", cells}, {"output_phases", layout.output_phases}};
}

CircuitLayout circuit_from_json(const json& j) {
  const bool mesh_schema = parsing("circuit", [&] {
    const auto& cells = j.at("cells");
    return !cells.empty() && cells.front().contains("top_mode");
  });
  if (mesh_schema) return CircuitLayout::from_mesh(mesh_from_json(j));
  CircuitLayout l = parsing("circuit", [&] {
    CircuitLayout l;
    l.dim = j.at("dim").get<std::size_t>();
    for (const auto& c : j.at("cells"))
      l.cells.push_back({c.at("layer").get<std::size_t>(), c.at("mode_a").get<std::size_t>(),
                         c.at("mode_b").get<std::size_t>(), c.at("theta1").get<double>(),
                         c.at("theta2").get<double>()});
    if (j.contains("output_phases")) l.output_phases = doubles(j.at("output_phases"), "output_phases");
    else l.output_phases.assign(l.dim, 0.0);
    return l;
  });
  l.validate();
  return l;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

CMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw ParseError("matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

// ECM and agents ------------------------------------------------------------

json to_json(const EcmGraph& g) {
  json vertices = json::array();
  for (std::size_t v = 0; v < g.size(); ++v)
    vertices.push_back({{"id", g.label(v)}, {"tag", std::string(tag_name(g.tag(v)))}});
  json edges = json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({g.label(a), g.label(b)});
  return {{"vertices", vertices}, {"edges", edges}};
}

EcmGraph ecm_from_json(const json& j) {
  EcmGraph g;
  parsing("ecm", [&] {
    for (const auto& v : j.at("vertices")) {
      const auto& id = v.at("id");
      const std::string label = id.is_string() ? id.get<std::string>() : id.dump();
      g.add_vertex(label, parse_tag(v.at("tag").get<std::string>()));
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("edges must be [from, to] pairs");
      const auto label = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
      g.add_edge(label(e[0]), label(e[1]));
    }
    return 0;
  });
  g.validate();
  return g;
}

json to_json(const UnitaryRoute& r) {
  json steps = json::array();
  for (const auto& st : r.steps) {
    const auto k = static_cast<Eigen::Index>(st.support.size());
    CMatrix block(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index c = 0; c < k; ++c)
        block(i, c) = st.matrix(static_cast<Eigen::Index>(st.support[static_cast<std::size_t>(i)]),
                                static_cast<Eigen::Index>(st.support[static_cast<std::size_t>(c)]));
    steps.push_back({{"vertex", st.vertex}, {"support", st.support}, {"block", matrix_to_json(block)}});
  }
  return {{"size", r.size}, {"steps", steps}};
}

json to_json(const ClassicalAgent& agent) {
  const auto& g = agent.graph();
  json edges = json::array(), h = json::array(), glow = json::array();
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t k = 0; k < g.children(v).size(); ++k) {
      edges.push_back({g.label(v), g.label(g.children(v)[k])});
      h.push_back(agent.h(v, k));
      glow.push_back(agent.glow(v, k));
    }
  return {{"edges", edges}, {"h", h}, {"g", glow}, {"gamma", agent.gamma()}, {"eta", agent.eta()}};
}

json to_json(const QuantumAgent& agent) {
  if (!agent.mesh()) throw StructuralError("only mesh-backed agents can be checkpointed");
  json percepts = json::array(), actions = json::array();
  for (std::size_t s = 0; s < agent.percept_count(); ++s) percepts.push_back(agent.percept_modes(s));
  for (std::size_t a = 0; a < agent.action_count(); ++a) actions.push_back(agent.action_modes(a));
  return {{"mesh", to_json(*agent.mesh())}, {"percept_modes", percepts}, {"action_modes", actions}};
}

QuantumAgent quantum_agent_from_json(const json& j) {
  auto mesh = mesh_from_json(parsing("agent", [&] { return j.at("mesh"); }));
  auto modes = [&](const char* key) {
    return parsing("agent", [&] { return j.at(key).get<std::vector<std::vector<std::size_t>>>(); });
  };
  return QuantumAgent(std::move(mesh), modes("percept_modes"), modes("action_modes"));
}

json to_json(const CausalDiamond& d) {
  return {{"pair", {{"inputs", d.pair.inputs}, {"outputs", d.pair.outputs}}},
          {"diamond_cells", d.diamond},
          {"surface_cells", d.surface},
          {"leaking_cells", d.leaking}};
}

// CSV -----------------------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == std::floor(x) && std::abs(x) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(x);
    return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

Csv::Csv(std::vector<std::string> header) : header_(std::move(header)) {}

Csv& Csv::row(const std::vector<double>& values) {
  std::vector<std::string> s;
  for (double v : values) s.push_back(format_number(v));
  return row(s);
}

Csv& Csv::row(const std::vector<std::string>& values) {
  if (values.size() != header_.size()) throw StructuralError("CSV row width differs from header");
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "," : "") + values[i];
  rows_.push_back(std::move(line));
  return *this;
}

std::string Csv::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
  out += "\n";
  for (const auto& r : rows_) out += r + "\n";
  return out;
}

// SVG -----------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string svg_open(const PlotSpec& spec) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << spec.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
     << escape_xml(spec.title) << "</text>\n";
  return os.str();
}

}  // namespace

std::string line_plot_svg(const std::vector<Series>& series, const PlotSpec& spec) {
  const double left = 60, right = 140, top = 30, bottom = 45;
  const double w = spec.width - left - right, h = spec.height - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double x : s.x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : s.y) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (!(xmin < xmax)) xmin -= 0.5, xmax += 0.5;
  if (!(ymin < ymax)) ymin -= 0.5, ymax += 0.5;
  const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * w; };
  const auto py = [&](double y) { return top + h - (y - ymin) / (ymax - ymin) * h; };

  std::ostringstream os;
  os << svg_open(spec);
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4, fy = ymin + (ymax - ymin) * i / 4;
    os << "<text x=\"" << px(fx) << "\" y=\"" << top + h + 15 << "\" text-anchor=\"middle\">"
       << std::setprecision(3) << fx << "</text>\n";
    os << "<text x=\"" << left - 5 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3)
       << fy << "</text>\n";
  }
  os << "<text x=\"" << left + w / 2 << "\" y=\"" << spec.height - 8 << "\" text-anchor=\"middle\">"
     << escape_xml(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(14," << top + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(spec.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      os << std::setprecision(6) << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + w + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + w + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + w + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap_svg(const Eigen::MatrixXd& values, const PlotSpec& spec) {
  const double left = 50, right = 20, top = 30, bottom = 40;
  const double w = spec.width - left - right, h = spec.height - top - bottom;
  const double cw = values.cols() ? w / static_cast<double>(values.cols()) : w;
  const double ch = values.rows() ? h / static_cast<double>(values.rows()) : h;
  std::ostringstream os;
  os << svg_open(spec);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = std::clamp(values(r, c), 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      os << "<rect x=\"" << left + static_cast<double>(c) * cw << "\" y=\"" << top + static_cast<double>(r) * ch
         << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"/>\n";
    }
    os << "<text x=\"" << left - 5 << "\" y=\"" << top + (static_cast<double>(r) + 0.5) * ch + 4
       << "\" text-anchor=\"end\">" << r << "</text>\n";
  }
  os << "<text x=\"" << left + w / 2 << "\" y=\"" << spec.height - 8 << "\" text-anchor=\"middle\">"
     << escape_xml(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(14," << top + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(spec.y_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace qps::io
