#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <toml.hpp>

#include "qps/causal_diamond.hpp"
#include "qps/circuit.hpp"
#include "qps/experiments.hpp"
#include "qps/io.hpp"
#include "qps/mesh.hpp"
#include "qps/quantum_agent.hpp"
#include "qps/training.hpp"

namespace qps::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string profile = "desk-scale";
  std::string out;
  bool force = false;
};

// Config ----------------------------------------------------------------------

json default_config(const std::string& profile) {
  const bool paper = profile == "paper-scale";
  const auto transfer = paper ? TransferConfig::paper_scale() : TransferConfig::desk_scale();
  return {
      {"method", "causal-diamond"},
      {"scenario", "four-pair"},
      {"gso", {{"dim", 10}, {"alpha", 1.1}, {"steps", 500}, {"s", 0}, {"a", 0}}},
      {"causal_diamond",
       {{"dim", 12},
        {"pairs", {{0, 1}, {1, 3}, {3, 4}, {5, 0}}},
        {"encoding", "adjacent"},
        {"tunable", "leaking"},
        {"merit", "geometric_mean"},
        {"max_sweeps", 200},
        {"target", 0.9},
        {"grid_points", 64},
        {"stop_at_target", true}}},
      {"multiwavelength",
       {{"dim", 10},
        {"pairs", {{0, 1}, {1, 3}, {2, 4}, {4, 0}}},
        {"encoding", "adjacent"},
        {"delta", 0.05},
        {"tunable", "diamond"},
        {"max_sweeps", 200},
        {"target", 0.8},
        {"stop_at_target", true}}},
      {"loss",
       {{"dim", 6},
        {"pairs", {{0, 1}, {1, 0}, {2, 3}}},
        {"rounds", 20000},
        {"batch", 200},
        {"optimizer_steps", 10},
        {"learning_rate", 0.01},
        {"reward", 1.0},
        {"reward_scale", 0.1},
        {"gamma", 0.0},
        {"eta", 1.0},
        {"distance", "kl_binary"}}},
      {"transfer",
       {{"stage1_max_flushes", transfer.middle.max_flushes},
        {"stage1_batch", transfer.middle.batch},
        {"rounds", transfer.task.rounds},
        {"batch", transfer.task.batch},
        {"pass_threshold", transfer.task.pass_threshold},
        {"classical_rounds", transfer.classical.training_rounds},
        {"classical_evaluation_rounds", transfer.classical.evaluation_rounds},
        {"tasks", json::array()},
        {"threads", 0}}},
  };
}

json load_config_file(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return io::read_json(path);
  if (ext == ".toml") {
    const std::string text = io::read_text(path);
    try {
      const auto table = toml::parse(text, path.string());
      std::ostringstream os;
      os << toml::json_formatter{table};
      return json::parse(os.str());
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << path.string() << ": " << e.description() << " at line " << e.source().begin.line;
      throw ParseError(os.str());
    }
  }
  throw ParseError("config must be .toml or .json: " + path.string());
}

/// Built-in defaults for the profile, patched by the file, patched by the
/// file's own profile section.
json resolve_config(const std::string& config_path, const std::string& profile) {
  json cfg = default_config(profile);
  if (!config_path.empty()) {
    json file = load_config_file(config_path);
    if (!file.is_object()) throw ParseError("config root must be a table");
    json profiles = file.contains("profiles") ? file["profiles"] : json::object();
    file.erase("profiles");
    cfg.merge_patch(file);
    if (profiles.contains(profile)) cfg.merge_patch(profiles[profile]);
  }
  return cfg;
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config field '") + key + "': " + e.what());
  }
}

std::vector<ModePair> parse_pairs(const json& section) {
  const auto raw = get<std::vector<std::vector<std::size_t>>>(section, "pairs");
  const auto enc = get<std::string>(section, "encoding");
  std::vector<ModePair> pairs;
  for (const auto& p : raw) {
    if (p.size() != 2) throw ParseError("pairs must be [s, a] entries");
    if (enc == "adjacent") pairs.push_back(ModePair::adjacent(p[0], p[1]));
    else if (enc == "single") pairs.push_back(ModePair::single(p[0], p[1]));
    else throw DomainError("unknown pair encoding '" + enc + "'");
  }
  return pairs;
}

TunableSet parse_tunable(const std::string& s) {
  if (s == "leaking") return TunableSet::leaking;
  if (s == "surface") return TunableSet::surface;
  if (s == "diamond") return TunableSet::diamond;
  if (s == "all") return TunableSet::all;
  throw DomainError("unknown tunable set '" + s + "'");
}

MeritMode parse_merit(const std::string& s) {
  if (s == "mean") return MeritMode::mean;
  if (s == "geometric_mean") return MeritMode::geometric_mean;
  if (s == "min") return MeritMode::min;
  throw DomainError("unknown merit '" + s + "'");
}

std::string pair_label(const ModePair& p) {
  std::string s = "p";
  for (auto m : p.inputs) s += "_" + std::to_string(m);
  s += "_to";
  for (auto m : p.outputs) s += "_" + std::to_string(m);
  return s;
}

/// Percept/action groups matching a pair encoding: single modes, or
/// adjacent mode pairs.
std::vector<std::vector<std::size_t>> mode_groups(std::size_t dim, const std::string& encoding) {
  std::vector<std::vector<std::size_t>> g;
  if (encoding == "adjacent") {
    for (std::size_t k = 0; 2 * k + 1 < dim; ++k) g.push_back({2 * k, 2 * k + 1});
  } else {
    for (std::size_t k = 0; k < dim; ++k) g.push_back({k});
  }
  return g;
}

json agent_checkpoint(const MeshParameters& mesh, const std::string& encoding) {
  const auto groups = mode_groups(mesh.dim, encoding);
  return io::to_json(QuantumAgent(mesh, groups, groups));
}

// Output ----------------------------------------------------------------------

class Output {
 public:
  Output(const Globals& g, std::string subcommand) : g_(g), sub_(std::move(subcommand)) {
    if (g_.out.empty()) throw DomainError("--out is required for " + sub_);
    dir_ = g_.out;
    if (!g_.force && fs::exists(dir_ / "manifest.json"))
      throw io::IoError((dir_ / "manifest.json").string() + " exists (use --force to overwrite)");
  }

  void manifest(const std::string& config_path, const json& resolved) {
    json m = {{"subcommand", sub_},
              {"config", config_path},
              {"seed", g_.seed},
              {"profile", g_.profile},
              {"out", g_.out},
              {"resolved_config", resolved}};
    io::write_json(dir_ / "manifest.json", m, g_.force);
  }
  void text(const std::string& name, const std::string& content) { io::write_text(dir_ / name, content, g_.force); }
  void json_file(const std::string& name, const json& j) { io::write_json(dir_ / name, j, g_.force); }
  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  const Globals& g_;
  std::string sub_;
  fs::path dir_;
};

// Subcommands -------------------------------------------------------------------

int cmd_decompose(const Globals& g, const std::string& input, std::ostream& out) {
  const CMatrix m = io::matrix_from_json(io::read_json(input));
  const UnitaryMatrix u = UnitaryMatrix::from_matrix(m);
  const MeshParameters mesh = clements_decompose(u);
  const double err = (build_unitary(mesh).matrix() - u.matrix()).norm();
  Output o(g, "decompose");
  o.manifest("", {{"input", input}});
  o.json_file("mesh.json", io::to_json(mesh));
  out << "dim " << mesh.dim << ", cells " << mesh.cells.size() << "\n";
  out << "roundtrip_error " << io::format_number(err) << "\n";
  return kOk;
}

int cmd_build(const Globals& g, const std::string& input, double lambda, double nominal, std::ostream& out) {
  const CircuitLayout layout = io::circuit_from_json(io::read_json(input));
  const UnitaryMatrix u = circuit_unitary(layout, WavelengthSpec{lambda, nominal});
  Output o(g, "build");
  o.manifest("", {{"input", input}, {"lambda", lambda}, {"lambda_nominal", nominal}});
  o.json_file("unitary.json", io::matrix_to_json(u.matrix()));
  out << "dim " << u.dim() << "\n";
  out << "unitarity_defect " << io::format_number(u.unitarity_defect()) << "\n";
  return kOk;
}

int cmd_diamond(const Globals& g, const std::string& input, std::size_t s, std::size_t a,
                const std::string& encoding, std::ostream& out) {
  const CircuitGraph graph(io::circuit_from_json(io::read_json(input)));
  ModePair pair = encoding == "adjacent" ? ModePair::adjacent(s, a) : ModePair::single(s, a);
  if (encoding != "adjacent" && encoding != "single") throw DomainError("unknown encoding '" + encoding + "'");
  for (auto m : pair.inputs)
    if (m >= graph.dim()) throw LookupError("input mode out of range");
  for (auto m : pair.outputs)
    if (m >= graph.dim()) throw LookupError("output mode out of range");
  const auto d = find_causal_diamond(graph, pair);
  const json report = io::to_json(d);
  Output o(g, "diamond");
  o.manifest("", {{"input", input}, {"s", s}, {"a", a}, {"encoding", encoding}});
  o.json_file("diamond.json", report);
  out << report.dump() << "\n";
  return kOk;
}

int cmd_trace(const Globals& g, const std::string& checkpoint, std::size_t percept, std::ostream& out) {
  const QuantumAgent agent = io::quantum_agent_from_json(io::read_json(checkpoint));
  if (percept >= agent.percept_count()) throw LookupError("unknown percept " + std::to_string(percept));
  const RealMatrix p = agent.layer_probabilities(percept);
  double worst = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c) worst = std::max(worst, std::abs(p.col(c).sum() - 1.0));
  out << "max_column_sum_error " << io::format_number(worst) << "\n";
  if (worst > 1e-12) throw NumericalError("layer probabilities do not sum to 1", 0);

  io::Csv csv({"layer", "mode", "probability"});
  for (Eigen::Index l = 0; l < p.cols(); ++l)
    for (Eigen::Index m = 0; m < p.rows(); ++m)
      csv.row(std::vector<double>{static_cast<double>(l), static_cast<double>(m), p(m, l)});
  Output o(g, "trace");
  o.manifest("", {{"checkpoint", checkpoint}, {"percept", percept}});
  o.text("trace.csv", csv.str());
  o.text("trace.svg", io::heatmap_svg(p, {"Layer-resolved detection probability, percept " + std::to_string(percept),
                                          "layer", "mode"}));
  return kOk;
}

int cmd_wavelength_scan(const Globals& g, const std::vector<std::size_t>& dims, const std::vector<double>& deltas,
                        std::size_t samples, std::ostream& out) {
  const auto pts = wavelength_fidelity_study(dims, deltas, samples, g.seed);
  io::Csv csv({"dim", "delta", "mean_fidelity", "stddev"});
  std::vector<io::Series> series;
  for (double d : deltas) series.push_back({"dλ=" + io::format_number(d), {}, {}});
  for (const auto& p : pts) {
    csv.row(std::vector<double>{static_cast<double>(p.dim), p.delta, p.mean, p.stddev});
    for (std::size_t k = 0; k < deltas.size(); ++k)
      if (deltas[k] == p.delta) {
        series[k].x.push_back(static_cast<double>(p.dim));
        series[k].y.push_back(p.mean);
      }
    out << "dim " << p.dim << " delta " << p.delta << " fidelity " << p.mean << "\n";
  }
  Output o(g, "wavelength-scan");
  o.manifest("", {{"dims", dims}, {"deltas", deltas}, {"samples", samples}});
  o.text("fidelity.csv", csv.str());
  o.text("fidelity.svg", io::line_plot_svg(series, {"Fidelity between effective unitaries", "modes", "fidelity"}));
  return kOk;
}

// train ---------------------------------------------------------------------------

void train_gso(const json& c, const Globals& g, Output& o, std::ostream& out) {
  const auto log = gso_curve(get<std::size_t>(c, "dim"), get<double>(c, "alpha"), get<std::size_t>(c, "steps"),
                             g.seed, get<std::size_t>(c, "s"), get<std::size_t>(c, "a"));
  std::vector<std::string> header{"step", "p_sa", "max_row_competitor", "max_column_competitor", "defect"};
  for (std::size_t j = 0; j < log.dim; ++j)
    if (j != log.s) header.push_back("row_" + std::to_string(j));
  for (std::size_t i = 0; i < log.dim; ++i)
    if (i != log.a) header.push_back("col_" + std::to_string(i));
  io::Csv csv(header);
  io::Series ps{"p_sa", {}, {}}, comp{"max competitor", {}, {}};
  for (const auto& r : log.records) {
    std::vector<double> row{static_cast<double>(r.step), r.p_sa,
                            *std::max_element(r.row_competitors.begin(), r.row_competitors.end()),
                            *std::max_element(r.column_competitors.begin(), r.column_competitors.end()), r.defect};
    row.insert(row.end(), r.row_competitors.begin(), r.row_competitors.end());
    row.insert(row.end(), r.column_competitors.begin(), r.column_competitors.end());
    csv.row(row);
    ps.x.push_back(static_cast<double>(r.step));
    ps.y.push_back(r.p_sa);
    comp.x.push_back(static_cast<double>(r.step));
    comp.y.push_back(r.max_competitor());
  }
  o.text("gso_curve.csv", csv.str());
  o.text("gso_curve.svg", io::line_plot_svg({ps, comp}, {"GSO learning curve", "update", "probability"}));
  json summary = {{"seed", g.seed},
                  {"converged_step", log.converged_step ? json(*log.converged_step) : json(nullptr)},
                  {"final_p_sa", log.records.back().p_sa},
                  {"max_defect", log.max_defect}};
  o.json_file("summary.json", summary);
  o.json_file("checkpoint.json", agent_checkpoint(clements_decompose(log.final_unitary), "single"));
  out << "converged_step " << summary["converged_step"].dump() << ", max_defect " << log.max_defect << "\n";
}

void train_diamond(const json& c, const Globals& g, Output& o, std::ostream& out, bool multiwavelength) {
  const auto pairs = parse_pairs(c);
  DiamondTrainConfig cfg;
  cfg.tunable = parse_tunable(get<std::string>(c, "tunable"));
  cfg.max_sweeps = get<std::size_t>(c, "max_sweeps");
  cfg.target = get<double>(c, "target");
  cfg.stop_at_target = get<bool>(c, "stop_at_target");
  if (c.contains("grid_points")) cfg.grid_points = get<std::size_t>(c, "grid_points");
  Rng rng(g.seed);
  const MeshParameters start = random_square_mesh(get<std::size_t>(c, "dim"), rng);
  std::vector<WavelengthSpec> lambdas{WavelengthSpec{}};
  DiamondTrainResult res;
  if (multiwavelength) {
    lambdas = wavelength_triplet(get<double>(c, "delta"));
    res = multiwavelength_train(start, pairs, lambdas, cfg);
  } else {
    cfg.merit = parse_merit(get<std::string>(c, "merit"));
    res = train_causal_diamond(CircuitLayout::from_mesh(start), pairs, cfg);
  }
  std::vector<std::string> header{"sweep", "merit"};
  for (const auto& p : pairs)
    for (const auto& wl : lambdas)
      header.push_back(pair_label(p) + (multiwavelength ? "_lambda_" + io::format_number(wl.lambda) : ""));
  io::Csv csv(header);
  std::vector<io::Series> series(header.size() - 2);
  for (std::size_t k = 0; k < series.size(); ++k) series[k].label = header[k + 2];
  for (std::size_t sweep = 0; sweep < res.log.probabilities.size(); ++sweep) {
    std::vector<double> row{static_cast<double>(sweep), res.log.merit[sweep]};
    const auto& p = res.log.probabilities[sweep];
    row.insert(row.end(), p.begin(), p.end());
    csv.row(row);
    for (std::size_t k = 0; k < p.size(); ++k) {
      series[k].x.push_back(static_cast<double>(sweep));
      series[k].y.push_back(p[k]);
    }
  }
  o.text("learning_curve.csv", csv.str());
  o.text("learning_curve.svg", io::line_plot_svg(series, {"Causal-diamond training", "sweep", "p_sa"}));
  const auto& last = res.log.probabilities.back();
  json summary = {{"seed", g.seed},
                  {"tuned_cells", res.log.tuned_cells},
                  {"sweeps", res.log.probabilities.size() - 1},
                  {"converged_sweep", res.log.converged_sweep ? json(*res.log.converged_sweep) : json(nullptr)},
                  {"final_probabilities", last}};
  o.json_file("summary.json", summary);
  o.json_file("checkpoint.json", agent_checkpoint(res.layout.to_mesh(), get<std::string>(c, "encoding")));
  out << "converged_sweep " << summary["converged_sweep"].dump() << ", tuned cells " << res.log.tuned_cells << "\n";
}

void train_loss_pairs(const json& c, const Globals& g, Output& o, std::ostream& out) {
  const std::size_t dim = get<std::size_t>(c, "dim");
  const auto raw = get<std::vector<std::vector<std::size_t>>>(c, "pairs");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& p : raw) {
    if (p.size() != 2 || p[0] >= dim || p[1] >= dim) throw DomainError("rewarded pairs must be modes of the mesh");
    pairs.emplace_back(p[0], p[1]);
  }
  TrainConfig tc;
  tc.gamma = get<double>(c, "gamma");
  tc.eta = get<double>(c, "eta");
  tc.reward_scale = get<double>(c, "reward_scale");
  tc.optimizer_steps = get<std::size_t>(c, "optimizer_steps");
  tc.action_count = dim;
  const auto dist = get<std::string>(c, "distance");
  if (dist == "kl_binary") tc.distance = Distance::kl_binary;
  else if (dist == "squared_error") tc.distance = Distance::squared_error;
  else throw DomainError("unknown distance '" + dist + "'");
  const double lr = get<double>(c, "learning_rate");
  const double reward = get<double>(c, "reward");

  Rng rng(g.seed);
  QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(dim, rng));
  ReplayBuffer buffer(get<std::size_t>(c, "batch"));
  AdamState adam;
  std::vector<std::string> header{"step", "loss"};
  for (const auto& [s, a] : pairs) header.push_back("p_" + std::to_string(s) + "_" + std::to_string(a));
  header.push_back("acceptance");
  header.push_back("learning_rate");
  io::Csv csv(header);
  std::vector<io::Series> series(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) series[k].label = header[k + 2];

  const auto rounds = get<std::size_t>(c, "rounds");
  std::size_t step = 0;
  for (std::size_t t = 0; t < rounds; ++t) {
    const std::size_t s = pairs[uniform_index(rng, pairs.size())].first;
    const auto pol = agent.policy(s);
    const std::size_t a = sample_discrete(rng, pol.probabilities);
    agent.glow().update(s, a, tc.eta);
    bool rewarded = false;
    for (const auto& p : pairs) rewarded = rewarded || (p.first == s && p.second == a);
    ReplayEntry e{s, a, rewarded ? reward : 0.0, agent.glow()(s, a), pol.probabilities[a], 0.0};
    if (!buffer.push(e)) continue;
    const auto r = replay_flush(buffer, agent, adam, tc, lr, static_cast<double>(t));
    ++step;
    std::vector<double> row{static_cast<double>(step), r.loss_after};
    double acceptance = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto pp = agent.policy(pairs[k].first);
      row.push_back(pp.probabilities[pairs[k].second]);
      acceptance += pp.acceptance / static_cast<double>(pairs.size());
      series[k].x.push_back(static_cast<double>(step));
      series[k].y.push_back(row.back());
    }
    row.push_back(acceptance);
    row.push_back(lr);
    csv.row(row);
  }
  o.text("training_log.csv", csv.str());
  o.text("training_log.svg", io::line_plot_svg(series, {"Replay training", "flush", "p_sa"}));
  json final_p = json::array();
  for (const auto& [s, a] : pairs) final_p.push_back(agent.policy(s).probabilities[a]);
  o.json_file("summary.json", {{"seed", g.seed}, {"flushes", step}, {"final_probabilities", final_p}});
  o.json_file("checkpoint.json", io::to_json(agent));
  out << "flushes " << step << ", final " << final_p.dump() << "\n";
}

void train_transfer(const json& c, const Globals& g, Output& o, std::ostream& out) {
  TransferConfig cfg = g.profile == "paper-scale" ? TransferConfig::paper_scale() : TransferConfig::desk_scale();
  cfg.middle.max_flushes = get<std::size_t>(c, "stage1_max_flushes");
  cfg.middle.batch = get<std::size_t>(c, "stage1_batch");
  cfg.task.rounds = get<std::size_t>(c, "rounds");
  cfg.task.batch = get<std::size_t>(c, "batch");
  cfg.task.pass_threshold = get<double>(c, "pass_threshold");
  cfg.classical.training_rounds = get<std::size_t>(c, "classical_rounds");
  cfg.classical.evaluation_rounds = get<std::size_t>(c, "classical_evaluation_rounds");
  cfg.tasks = get<std::vector<std::size_t>>(c, "tasks");
  cfg.threads = get<unsigned>(c, "threads");
  const auto res = run_transfer(cfg, g.seed);

  io::Csv s1({"flush", "batch_accuracy", "expected_accuracy", "worst_accuracy", "weighted_phase", "loss",
              "learning_rate"});
  for (const auto& r : res.middle.log)
    s1.row(std::vector<double>{static_cast<double>(r.flush), r.batch_accuracy, r.expected_accuracy, r.worst_accuracy,
                               r.weighted_phase, r.loss, r.learning_rate});
  o.text("stage1.csv", s1.str());

  json overlaps = json::array();
  double worst_overlap = 1.0, worst_marginal = 0.0;
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const CVector a = res.middle.trees[s].amplitudes();
    const double ov = target_overlap(s, a);
    overlaps.push_back(ov);
    worst_overlap = std::min(worst_overlap, ov);
    for (double m : observable_marginals(a)) worst_marginal = std::max(worst_marginal, std::abs(m - 1.0 / 3.0));
  }
  json tasks = json::array();
  std::vector<io::Series> curves;
  std::size_t passed = 0;
  for (std::size_t k = 0; k < res.tasks.size(); ++k) {
    const auto& t = res.tasks[k];
    const auto& cl = res.classical[k];
    io::Csv csv({"round", "weighted_accuracy", "raw_accuracy", "loss"});
    io::Series curve{t.task.name(), {}, {}};
    for (const auto& r : t.log) {
      csv.row(std::vector<double>{static_cast<double>(r.round), r.weighted_accuracy, r.raw_accuracy, r.loss});
      curve.x.push_back(static_cast<double>(r.round));
      curve.y.push_back(r.weighted_accuracy);
    }
    curves.push_back(std::move(curve));
    std::string fname = t.task.name();
    for (char& ch : fname)
      if (ch == '=' || ch == ',') ch = '_';
    o.text("tasks/" + fname + ".csv", csv.str());
    passed += t.passed ? 1 : 0;
    tasks.push_back({{"task", t.task.name()},
                     {"weighted_accuracy", t.weighted_accuracy},
                     {"raw_accuracy", t.raw_accuracy},
                     {"passed", t.passed},
                     {"classical_raw_accuracy", cl.raw_accuracy},
                     {"classical_sigma", cl.sigma},
                     {"classical_exact_raw_accuracy", cl.exact_raw_accuracy},
                     {"classical_exact_weighted_accuracy", cl.exact_weighted_accuracy}});
  }
  o.text("tasks.svg", io::line_plot_svg(curves, {"Task-layer training", "round", "weighted accuracy"}));
  json summary = {{"seed", g.seed},
                  {"profile", g.profile},
                  {"stage1",
                   {{"converged", res.middle.converged},
                    {"flushes", res.middle.log.size()},
                    {"min_overlap", worst_overlap},
                    {"max_marginal_deviation", worst_marginal},
                    {"overlaps", overlaps}}},
                  {"pass_threshold", cfg.task.pass_threshold},
                  {"tasks_passed", passed},
                  {"classical_bound", 8.0 / 9.0},
                  {"tasks", tasks}};
  o.json_file("summary.json", summary);
  json trees = json::array();
  for (const auto& t : res.middle.trees) trees.push_back(t.phases());
  json meshes = json::array();
  for (const auto& t : res.tasks) meshes.push_back({{"task", t.task.name()}, {"mesh", io::to_json(t.mesh)}});
  o.json_file("checkpoint.json", {{"trees", trees}, {"task_meshes", meshes}});
  out << "stage1 converged " << res.middle.converged << " after " << res.middle.log.size() << " flushes, min overlap "
      << worst_overlap << "\n";
  out << "tasks passed " << passed << "/" << res.tasks.size() << " at " << cfg.task.pass_threshold << "\n";
}

int cmd_train(const Globals& g, const std::string& config_path, std::string method, std::string scenario,
              std::ostream& out) {
  json cfg = resolve_config(config_path, g.profile);
  if (!method.empty()) cfg["method"] = method;
  if (!scenario.empty()) cfg["scenario"] = scenario;
  method = get<std::string>(cfg, "method");
  scenario = get<std::string>(cfg, "scenario");
  std::function<void(Output&)> job;
  if (method == "gso" && (scenario == "single-pair" || scenario == "four-pair")) {
    cfg["scenario"] = scenario = "single-pair";
    job = [&](Output& o) { train_gso(cfg["gso"], g, o, out); };
  } else if (method == "causal-diamond" && scenario == "four-pair") {
    job = [&](Output& o) { train_diamond(cfg["causal_diamond"], g, o, out, false); };
  } else if (method == "causal-diamond" && scenario == "multiwavelength") {
    job = [&](Output& o) { train_diamond(cfg["multiwavelength"], g, o, out, true); };
  } else if (method == "loss" && scenario == "rewarded-pairs") {
    job = [&](Output& o) { train_loss_pairs(cfg["loss"], g, o, out); };
  } else if (method == "loss" && scenario == "transfer") {
    job = [&](Output& o) { train_transfer(cfg["transfer"], g, o, out); };
  } else {
    throw DomainError("unknown method/scenario '" + method + "/" + scenario + "'");
  }
  Output o(g, "train");
  o.manifest(config_path, cfg);
  job(o);
  return kOk;
}

int report(std::ostream& err, const std::string& kind, const std::exception& e, int code) {
  err << "error (" << kind << "): " << e.what() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photonic projective-simulation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every stochastic step");
  app.add_option("--profile", g.profile, "Experiment profile")
      ->check(CLI::IsMember({"desk-scale", "paper-scale"}));
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--force", g.force, "Overwrite existing outputs");

  std::string input, config, method, scenario, encoding = "single";
  double lambda = 1.0, nominal = 1.0;
  std::size_t s = 0, a = 0, percept = 0, samples = 100;
  std::vector<std::size_t> dims{4, 8, 12};
  std::vector<double> deltas{0.01, 0.02, 0.05, 0.1};

  auto* dec = app.add_subcommand("decompose", "Decompose a unitary JSON into mesh phases");
  dec->add_option("input", input, "Unitary file ([re, im] entries)")->required();
  auto* bld = app.add_subcommand("build", "Build the unitary of a mesh or circuit file");
  bld->add_option("input", input, "Mesh or circuit file")->required();
  bld->add_option("--lambda", lambda, "Wavelength");
  bld->add_option("--lambda-nominal", nominal, "Design wavelength");
  auto* trn = app.add_subcommand("train", "Run a training harness");
  trn->add_option("--config", config, "TOML or JSON config");
  trn->add_option("--method", method, "loss | causal-diamond | gso");
  trn->add_option("--scenario", scenario, "four-pair | multiwavelength | single-pair | rewarded-pairs | transfer");
  auto* trc = app.add_subcommand("trace", "Layer-resolved probabilities of a checkpointed agent");
  trc->add_option("checkpoint", input, "Agent checkpoint")->required();
  trc->add_option("--percept", percept, "Percept index")->required();
  auto* dia = app.add_subcommand("diamond", "Causal diamond of a mode pair");
  dia->add_option("input", input, "Mesh or circuit file")->required();
  dia->add_option("--s", s, "Input (percept)")->required();
  dia->add_option("--a", a, "Output (action)")->required();
  dia->add_option("--encoding", encoding, "single | adjacent");
  auto* wls = app.add_subcommand("wavelength-scan", "Fidelity of effective unitaries across wavelengths");
  wls->add_option("--dims", dims, "Mesh sizes")->delimiter(',');
  wls->add_option("--deltas", deltas, "Relative wavelength offsets")->delimiter(',');
  wls->add_option("--samples", samples, "Random meshes per point");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error (usage): " << e.what() << "\n";
    return kIoError;
  }

  try {
    if (dec->parsed()) return cmd_decompose(g, input, out);
    if (bld->parsed()) return cmd_build(g, input, lambda, nominal, out);
    if (trn->parsed()) return cmd_train(g, config, method, scenario, out);
    if (trc->parsed()) return cmd_trace(g, input, percept, out);
    if (dia->parsed()) return cmd_diamond(g, input, s, a, encoding, out);
    if (wls->parsed()) return cmd_wavelength_scan(g, dims, deltas, samples, out);
  } catch (const ValidationError& e) {
    err << "error (validation): " << e.what() << " (defect " << e.defect() << ")\n";
    return kValidationError;
  } catch (const ParseError& e) {
    return report(err, "parse", e, kIoError);
  } catch (const io::IoError& e) {
    return report(err, "io", e, kIoError);
  } catch (const fs::filesystem_error& e) {
    return report(err, "io", e, kIoError);
  } catch (const Error& e) {
    return report(err, "validation", e, kValidationError);
  }
  return kValidationError;
}

}  // namespace qps::cli
