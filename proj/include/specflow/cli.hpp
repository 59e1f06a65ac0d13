#pragma once

// Command-line front end. Configs are JSON objects; unknown keys are
// rejected. Every run produces <subcommand>_report.json and a text summary,
// plus flow_trace.csv for flow-trace. Exit codes: 0 success, 1 method
// disagreement or numeric failure, 2 bad configuration (nothing written).

#include "specflow/bifurcate.hpp"
#include "specflow/parametrix.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace specflow::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string kind;  // builtin | explicit-samples | sturm-liouville | random-seeded
  std::string builtin = "scalar";
  double a = -1.0;
  double b = 1.0;
  int dimension = 1;
  double length = std::numbers::pi;
  double potential = 0.0;
  double endpointGap = 0.05;
  std::vector<double> grid;
  std::vector<Matrix> matrices;
  std::string nonlinearity = "none";
  double coefficient = 1.0;
  std::vector<std::string> methods{"morse", "crossings", "maslov", "oracle"};
  Tolerances tol;
  std::optional<std::uint64_t> seed;
  std::string outDir = ".";
  int replayFactor = 10;
  // maslov subcommand on an explicit frame path
  std::vector<double> frameTimes;
  std::vector<Matrix> frames;
  std::optional<Matrix> reference;
  std::string maslovMode = "relative";
};

struct Overrides {
  std::optional<std::string> outDir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tolerances;  // k=v
  std::optional<std::string> methods;   // comma separated
};

namespace detail {

inline void rejectUnknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline Matrix parseMatrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": matrix must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(where + ": empty row");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(where + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline json matrixJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vectorJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline void setTolerance(Tolerances& tol, const std::string& key, double value) {
  static const std::map<std::string, double Tolerances::*> fields{
      {"orth", &Tolerances::orth},     {"lagr", &Tolerances::lagr},       {"gap", &Tolerances::gap},
      {"rank", &Tolerances::rank},     {"sym", &Tolerances::sym},         {"ambiguityBand", &Tolerances::ambiguityBand},
      {"invRel", &Tolerances::invRel}, {"loc", &Tolerances::loc},         {"nd", &Tolerances::nd},
      {"pathGap", &Tolerances::pathGap}};
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("tolerance " + key + " must be positive");
  if (key == "maxRefine") {
    tol.maxRefine = static_cast<int>(value);
    return;
  }
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError("unknown tolerance '" + key + "'");
  tol.*(it->second) = value;
}

inline json tolerancesJson(const Tolerances& t) {
  return json{{"orth", t.orth}, {"lagr", t.lagr},   {"gap", t.gap},         {"rank", t.rank},
              {"sym", t.sym},   {"ambiguityBand", t.ambiguityBand},           {"invRel", t.invRel},
              {"loc", t.loc},   {"nd", t.nd},       {"pathGap", t.pathGap}, {"maxRefine", t.maxRefine}};
}

inline std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline ProblemConfig parseConfig(const json& root, const Overrides& ov = {}) {
  using detail::get;
  detail::rejectUnknown(root, {"problem", "nonlinearity", "methods", "tolerances", "output", "seed", "parametrix", "lagrangian"},
                        "config");
  ProblemConfig cfg;
  if (!root.contains("problem")) throw ConfigError("missing 'problem'");
  const json& p = root.at("problem");
  detail::rejectUnknown(p, {"kind", "name", "interval", "dimension", "length", "potential", "grid", "matrices", "endpointGap"},
                        "problem");
  if (!p.contains("kind")) throw ConfigError("missing problem.kind");
  cfg.kind = get<std::string>(p, "kind", "problem");
  static const std::set<std::string> kinds{"builtin", "explicit-samples", "sturm-liouville", "random-seeded"};
  if (!kinds.count(cfg.kind)) throw ConfigError("unknown problem.kind '" + cfg.kind + "'");
  if (p.contains("interval")) {
    const auto iv = get<std::vector<double>>(p, "interval", "problem");
    if (iv.size() != 2 || !(iv[1] > iv[0])) throw ConfigError("problem.interval must be [a, b] with a < b");
    cfg.a = iv[0];
    cfg.b = iv[1];
  } else if (cfg.kind == "sturm-liouville") {
    cfg.a = 0.5;
    cfg.b = 9.5;
  }
  if (p.contains("name")) cfg.builtin = get<std::string>(p, "name", "problem");
  if (p.contains("dimension")) cfg.dimension = get<int>(p, "dimension", "problem");
  if (p.contains("length")) cfg.length = get<double>(p, "length", "problem");
  if (p.contains("potential")) cfg.potential = get<double>(p, "potential", "problem");
  if (p.contains("endpointGap")) cfg.endpointGap = get<double>(p, "endpointGap", "problem");
  if (cfg.dimension < 1) throw ConfigError("problem.dimension must be positive");
  if (cfg.kind == "builtin" && cfg.builtin != "scalar" && cfg.builtin != "diagonal") {
    throw ConfigError("unknown builtin '" + cfg.builtin + "'");
  }
  if (cfg.kind == "sturm-liouville") {
    if (!p.contains("dimension")) cfg.dimension = 200;
    if (cfg.dimension < 3) throw ConfigError("sturm-liouville needs dimension >= 3");
    if (!(cfg.length > 0.0)) throw ConfigError("problem.length must be positive");
  }
  if (cfg.kind == "explicit-samples") {
    if (!p.contains("grid") || !p.contains("matrices")) throw ConfigError("explicit-samples needs grid and matrices");
    cfg.grid = get<std::vector<double>>(p, "grid", "problem");
    const json& ms = p.at("matrices");
    if (!ms.is_array() || ms.size() != cfg.grid.size() || cfg.grid.size() < 2) {
      throw ConfigError("problem.matrices must match problem.grid (at least two samples)");
    }
    for (std::size_t i = 0; i < ms.size(); ++i) cfg.matrices.push_back(detail::parseMatrix(ms[i], "problem.matrices"));
    for (std::size_t i = 0; i + 1 < cfg.grid.size(); ++i) {
      if (!(cfg.grid[i + 1] > cfg.grid[i])) throw ConfigError("problem.grid must be increasing");
    }
    for (const auto& m : cfg.matrices) {
      if (m.rows() != m.cols() || m.rows() != cfg.matrices.front().rows()) {
        throw ConfigError("problem.matrices must be square of one size");
      }
      if (relativeAsymmetry(m) > cfg.tol.sym) throw ConfigError("problem.matrices must be symmetric");
    }
    cfg.a = cfg.grid.front();
    cfg.b = cfg.grid.back();
    cfg.dimension = static_cast<int>(cfg.matrices.front().rows());
  }
  if (root.contains("nonlinearity")) {
    const json& nl = root.at("nonlinearity");
    detail::rejectUnknown(nl, {"kind", "coefficient"}, "nonlinearity");
    if (nl.contains("kind")) cfg.nonlinearity = get<std::string>(nl, "kind", "nonlinearity");
    if (nl.contains("coefficient")) cfg.coefficient = get<double>(nl, "coefficient", "nonlinearity");
    if (cfg.nonlinearity != "cubic" && cfg.nonlinearity != "quintic" && cfg.nonlinearity != "none") {
      throw ConfigError("nonlinearity.kind must be cubic, quintic or none");
    }
  }
  if (root.contains("methods")) cfg.methods = get<std::vector<std::string>>(root, "methods", "config");
  if (ov.methods) cfg.methods = detail::splitList(*ov.methods);
  for (const auto& m : cfg.methods) {
    if (m != "morse" && m != "crossings" && m != "maslov" && m != "oracle") throw ConfigError("unknown method '" + m + "'");
  }
  if (cfg.methods.empty()) throw ConfigError("no methods selected");
  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances must be an object");
    for (const auto& [key, value] : t.items()) {
      if (!value.is_number()) throw ConfigError("tolerance " + key + " must be a number");
      detail::setTolerance(cfg.tol, key, value.get<double>());
    }
  }
  for (const auto& kv : ov.tolerances) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--tol-override expects k=v, got '" + kv + "'");
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
    } catch (const std::exception&) {
      throw ConfigError("--tol-override value is not a number: '" + kv + "'");
    }
    detail::setTolerance(cfg.tol, kv.substr(0, eq), value);
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    detail::rejectUnknown(o, {"dir"}, "output");
    if (o.contains("dir")) cfg.outDir = get<std::string>(o, "dir", "output");
  }
  if (ov.outDir) cfg.outDir = *ov.outDir;
  if (root.contains("seed")) cfg.seed = get<std::uint64_t>(root, "seed", "config");
  if (ov.seed) cfg.seed = ov.seed;
  if (cfg.kind == "random-seeded" && !cfg.seed) throw ConfigError("random-seeded problems need a seed");
  if (root.contains("parametrix")) {
    const json& pp = root.at("parametrix");
    detail::rejectUnknown(pp, {"replayFactor"}, "parametrix");
    if (pp.contains("replayFactor")) cfg.replayFactor = get<int>(pp, "replayFactor", "parametrix");
    if (cfg.replayFactor < 1) throw ConfigError("parametrix.replayFactor must be positive");
  }
  if (root.contains("lagrangian")) {
    const json& l = root.at("lagrangian");
    detail::rejectUnknown(l, {"times", "frames", "reference", "mode"}, "lagrangian");
    if (!l.contains("times") || !l.contains("frames")) throw ConfigError("lagrangian needs times and frames");
    cfg.frameTimes = get<std::vector<double>>(l, "times", "lagrangian");
    const json& fs = l.at("frames");
    if (!fs.is_array() || fs.size() != cfg.frameTimes.size() || fs.size() < 2) {
      throw ConfigError("lagrangian.frames must match lagrangian.times");
    }
    for (const auto& f : fs) cfg.frames.push_back(detail::parseMatrix(f, "lagrangian.frames"));
    for (const auto& f : cfg.frames) {
      if (f.rows() != 2 * f.cols() || f.cols() != cfg.frames.front().cols()) {
        throw ConfigError("lagrangian.frames must be 2n x n of one size");
      }
    }
    if (l.contains("reference")) cfg.reference = detail::parseMatrix(l.at("reference"), "lagrangian.reference");
    if (l.contains("mode")) cfg.maslovMode = get<std::string>(l, "mode", "lagrangian");
    if (cfg.maslovMode != "relative" && cfg.maslovMode != "loop") throw ConfigError("lagrangian.mode must be relative or loop");
  }
  return cfg;
}

inline OperatorPath buildPath(const ProblemConfig& cfg) {
  if (cfg.kind == "builtin") {
    if (cfg.builtin == "scalar") {
      return OperatorPath::fromGenerator(
          cfg.a, cfg.b, 1, [](double t) { return Matrix(Matrix::Constant(1, 1, t)); },
          [](double) { return Matrix(Matrix::Constant(1, 1, 1.0)); });
    }
    const Eigen::Index n = cfg.dimension;
    return OperatorPath::fromGenerator(
        cfg.a, cfg.b, n,
        [n](double t) {
          Matrix m = Matrix::Identity(n, n);
          m(0, 0) = t;
          return m;
        },
        [n](double) {
          Matrix m = Matrix::Zero(n, n);
          m(0, 0) = 1.0;
          return m;
        });
  }
  if (cfg.kind == "explicit-samples") return OperatorPath::fromSamples(cfg.grid, cfg.matrices);
  if (cfg.kind == "sturm-liouville") {
    const double q = cfg.potential;
    return discretizeSturmLiouville(cfg.dimension, cfg.length, [q](double) { return q; }, cfg.a, cfg.b);
  }
  std::mt19937_64 rng(*cfg.seed);
  OperatorPath base = randomPolynomialPath(cfg.dimension, rng, cfg.endpointGap);
  if (cfg.a == -1.0 && cfg.b == 1.0) return base;
  const double a = cfg.a, b = cfg.b;
  const auto map = [a, b](double t) { return -1.0 + 2.0 * (t - a) / (b - a); };
  return OperatorPath::fromGenerator(
      a, b, base.n(), [base, map](double t) { return base.evaluate(map(t)); },
      [base, map, a, b](double t) {
        const auto d = base.derivative(map(t));
        return Matrix(*d * (2.0 / (b - a)));
      });
}

inline VariationalFamily buildFamily(const ProblemConfig& cfg) {
  OperatorPath path = buildPath(cfg);
  if (cfg.nonlinearity == "cubic") return cubicFamily(std::move(path), cfg.coefficient);
  if (cfg.nonlinearity == "quintic") return quinticFamily(std::move(path), cfg.coefficient);
  return linearFamily(std::move(path));
}

struct RunResult {
  int exitCode = 0;
  json report;
  std::string text;
  std::optional<std::string> csv;
};

namespace detail {

inline json errorJson(const Error& e) { return json{{"code", toString(e.code())}, {"message", e.what()}}; }

inline std::string textSummary(const std::string& sub, const json& report) {
  std::ostringstream out;
  out << "specflow " << kVersion << " " << sub << "\n";
  std::size_t width = 0;
  for (const auto& [key, value] : report.items()) width = std::max(width, key.size());
  for (const auto& [key, value] : report.items()) {
    if (key == "config" || key == "tolerances") continue;
    std::string shown = value.dump();
    if (shown.size() > 100) shown = shown.substr(0, 97) + "...";
    out << std::left << std::setw(static_cast<int>(width) + 2) << key << shown << "\n";
  }
  return out.str();
}

inline SpectralOptions spectralOptions() { return SpectralOptions{}; }

inline RunResult runSf(const ProblemConfig& cfg, json report) {
  const OperatorPath path = buildPath(cfg);
  const SpectralOptions opt = spectralOptions();
  json values = json::object();
  json errors = json::object();
  std::vector<int> got;
  json crossings = json::array();
  for (const auto& m : cfg.methods) {
    try {
      SpectralFlowResult r;
      if (m == "morse") r = spectralFlowViaMorse(path, cfg.tol);
      if (m == "crossings") {
        r = spectralFlowViaCrossings(path, opt, cfg.tol);
        for (const auto& c : r.crossings) {
          crossings.push_back({{"lambda", c.lambda},
                               {"kernelDim", c.kernelBasis.cols()},
                               {"signature", c.signature},
                               {"nondegenerate", c.nondegenerate}});
        }
      }
      if (m == "maslov") r = spectralFlowViaMaslov(path, opt, cfg.tol);
      if (m == "oracle") r = spectralFlowViaOracle(path, opt, cfg.tol);
      values[m] = r.value;
      got.push_back(r.value);
    } catch (const Error& e) {
      errors[m] = errorJson(e);
    }
  }
  const bool agree = errors.empty() && !got.empty() && std::all_of(got.begin(), got.end(), [&](int v) { return v == got[0]; });
  report["methods"] = values;
  report["errors"] = errors;
  report["crossings"] = crossings;
  report["agree"] = agree;
  report["value"] = agree ? json(got[0]) : json(nullptr);
  return {agree ? 0 : 1, report, "", std::nullopt};
}

inline RunResult runMaslov(const ProblemConfig& cfg, json report) {
  LagrangianPath lpath;
  LagrangianFrame ref;
  std::string mode = cfg.maslovMode;
  if (!cfg.frames.empty()) {
    std::vector<LagrangianFrame> frames;
    for (const auto& f : cfg.frames) frames.push_back(LagrangianFrame::fromBasis(f, cfg.tol));
    lpath = LagrangianPath::fromSamples(cfg.frameTimes, frames);
    ref = cfg.reference ? LagrangianFrame::fromBasis(*cfg.reference, cfg.tol) : LagrangianFrame::horizontal(lpath.n());
    report["source"] = "frames";
  } else {
    lpath = graphPath(buildPath(cfg), spectralOptions().maslovSamples);
    ref = LagrangianFrame::horizontal(lpath.n());
    report["source"] = "graph";
  }
  report["mode"] = mode;
  report["index"] = mode == "loop" ? maslovLoopIndex(lpath, cfg.tol) : relativeMaslovIndex(lpath, ref, cfg.tol);
  return {0, report, "", std::nullopt};
}

inline RunResult runParametrix(const ProblemConfig& cfg, json report) {
  const OperatorPath path = buildPath(cfg);
  const ParametrixPath pp = parametrixPath(path, ParametrixOptions{}, cfg.tol);
  const int density = static_cast<int>(cfg.replayFactor * std::max<std::size_t>(pp.grid.size(), 2));
  const CertificateReplay rep = replayCertificate(path, pp, density);
  report["dimF"] = pp.dimF();
  report["F"] = matrixJson(pp.f);
  report["absorbed"] = pp.absorbed;
  report["rounds"] = pp.rounds;
  report["samples"] = pp.grid.size();
  report["tauInv"] = pp.tauInv;
  report["minCertificate"] = pp.minCertificate;
  report["replay"] = {{"points", density},
                      {"minSigma", rep.minSigma},
                      {"worstLambda", rep.worstLambda},
                      {"maxRank", rep.maxRank},
                      {"ok", rep.ok}};
  json rs = json::array();
  for (double t : pp.grid) rs.push_back({{"lambda", t}, {"R", matrixJson(pp.dimF() ? pp.r(t) : Matrix(0, 0))}});
  report["R"] = rs;
  const bool ok = rep.ok && rep.maxRank <= pp.dimF();
  report["certified"] = ok;
  return {ok ? 0 : 1, report, "", std::nullopt};
}

inline RunResult runBifurcate(const ProblemConfig& cfg, json report) {
  const VariationalFamily fam = buildFamily(cfg);
  const BifurcationReport rep = analyseBifurcations(fam, spectralOptions(), BranchOptions{}, cfg.tol);
  json cands = json::array();
  for (const auto& c : rep.candidates) {
    cands.push_back({{"lambda", c.lambda},
                     {"kernelDim", c.kernelDim},
                     {"signature", c.signature},
                     {"nondegenerate", c.nondegenerate},
                     {"certified", c.certified}});
  }
  json branches = json::array();
  for (const auto& br : rep.verifiedBranches) {
    json pts = json::array();
    for (const auto& p : br.points) {
      pts.push_back({{"lambda", p.lambda}, {"norm", p.norm}, {"residual", p.residual}, {"u", vectorJson(p.u)}});
    }
    branches.push_back({{"lambdaStar", br.lambdaStar},
                        {"verified", br.verified},
                        {"exponent", br.exponent},
                        {"maxResidual", br.maxResidual},
                        {"failure", br.failure},
                        {"points", pts}});
  }
  report["candidates"] = cands;
  report["excludedNearEndpoints"] = rep.excludedNearEndpoints;
  report["totalSf"] = rep.totalSf;
  report["sfMethod"] = rep.sfMethod;
  report["maxKernelDim"] = rep.maxKernelDim;
  report["guaranteedCount"] = rep.guaranteedCount;
  report["verifiedBranches"] = branches;
  return {0, report, "", std::nullopt};
}

inline RunResult runFlowTrace(const ProblemConfig& cfg, json report) {
  const OperatorPath path = buildPath(cfg);
  const TrackedBranches tb = trackEigenvalues(path, spectralOptions());
  std::ostringstream csv;
  csv << std::setprecision(17) << "lambda,branch_index,eigenvalue\n";
  for (std::size_t i = 0; i < tb.lambda.size(); ++i) {
    for (Eigen::Index j = 0; j < tb.values[i].size(); ++j) csv << tb.lambda[i] << "," << j << "," << tb.values[i](j) << "\n";
  }
  report["points"] = tb.lambda.size();
  report["branches"] = path.n();
  report["csv"] = "flow_trace.csv";
  return {0, report, "", csv.str()};
}

}  // namespace detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> subs{"sf", "maslov", "parametrix", "bifurcate", "flow-trace"};
  return subs;
}

/// Runs a subcommand on a parsed config without touching the filesystem.
inline RunResult run(const std::string& sub, const ProblemConfig& cfg, const json& configEcho = json::object()) {
  json report;
  report["version"] = kVersion;
  report["subcommand"] = sub;
  report["config"] = configEcho;
  report["tolerances"] = detail::tolerancesJson(cfg.tol);
  const char* threads = std::getenv("SPECFLOW_THREADS");
  report["threads"] = threads ? json(std::string(threads)) : json(nullptr);
  report["interpolation"] = cfg.kind == "explicit-samples" ? "piecewise-linear" : "generator";
  RunResult res;
  try {
    if (sub == "sf") res = detail::runSf(cfg, report);
    else if (sub == "maslov") res = detail::runMaslov(cfg, report);
    else if (sub == "parametrix") res = detail::runParametrix(cfg, report);
    else if (sub == "bifurcate") res = detail::runBifurcate(cfg, report);
    else if (sub == "flow-trace") res = detail::runFlowTrace(cfg, report);
    else throw ConfigError("unknown subcommand '" + sub + "'");
  } catch (const Error& e) {
    res.exitCode = 1;
    res.report = report;
    res.report["error"] = detail::errorJson(e);
  }
  res.report["exitCode"] = res.exitCode;
  res.text = detail::textSummary(sub, res.report);
  return res;
}

inline void writeAtomically(const std::filesystem::path& target, const std::string& content) {
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

/// Writes <sub>_report.json, <sub>_report.txt and, for flow-trace, flow_trace.csv.
inline std::vector<std::filesystem::path> writeArtifacts(const std::string& sub, const RunResult& res,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string stem = sub;
  std::replace(stem.begin(), stem.end(), '-', '_');
  std::vector<std::filesystem::path> written{dir / (stem + "_report.json"), dir / (stem + "_report.txt")};
  writeAtomically(written[0], res.report.dump(2) + "\n");
  writeAtomically(written[1], res.text);
  if (res.csv) {
    written.push_back(dir / "flow_trace.csv");
    writeAtomically(written.back(), *res.csv);
  }
  return written;
}

inline json loadJson(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

inline int main(int argc, char** argv) {
  CLI::App app{"Spectral flow, Maslov index, parametrix and bifurcation tool"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string configPath;
  std::string outDir;
  std::uint64_t seed = 0;
  std::vector<std::string> tolOverrides;
  std::string methods;
  std::vector<CLI::App*> subs;
  for (const auto& name : subcommands()) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", configPath, "JSON problem config")->required();
    s->add_option("--out", outDir, "output directory");
    s->add_option("--seed", seed, "random seed");
    s->add_option("--tol-override", tolOverrides, "tolerance override k=v")->allow_extra_args(false);
    s->add_option("--methods", methods, "comma separated spectral-flow methods");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  std::string sub;
  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs) {
    if (s->parsed()) {
      sub = s->get_name();
      chosen = s;
    }
  }
  try {
    Overrides ov;
    if (chosen->count("--out")) ov.outDir = outDir;
    if (chosen->count("--seed")) ov.seed = seed;
    if (chosen->count("--methods")) ov.methods = methods;
    ov.tolerances = tolOverrides;
    const json root = loadJson(configPath);
    const ProblemConfig cfg = parseConfig(root, ov);
    const RunResult res = run(sub, cfg, root);
    writeArtifacts(sub, res, cfg.outDir);
    std::cout << res.text;
    return res.exitCode;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace specflow::cli
