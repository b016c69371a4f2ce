#include "wsmgp/config.hpp"

#include <fstream>
#include <sstream>

namespace wsmgp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error("config key '" + k + "': expected a number, got '" + v + "'");
}

Index to_index(const std::string& k, const std::string& v) {
  const double d = to_double(k, v);
  if (d != static_cast<double>(static_cast<Index>(d))) throw Error("config key '" + k + "': expected an integer");
  return static_cast<Index>(d);
}

bool to_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config key '" + k + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> items(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string it;
  while (std::getline(in, it, ',')) out.push_back(trim(it));
  return out;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap kv;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineNo) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config_text(s.str());
}

RunConfig::RunConfig() { synth.hp = default_generating_hp(); }

void apply_config(const ConfigMap& kv, RunConfig& rc) {
  for (const auto& [k, v] : kv) {
    if (k == "M") {
      rc.model.M = rc.synth.M = to_index(k, v);
    } else if (k == "Q") {
      rc.model.Q = to_index(k, v);
    } else if (k == "alpha0") {
      rc.model.alpha0 = to_double(k, v);
    } else if (k == "useDirichlet") {
      rc.model.useDirichlet = to_bool(k, v);
    } else if (k == "optimizeAlpha0") {
      rc.model.optimizeAlpha0 = to_bool(k, v);
    } else if (k == "method") {
      if (v == "quasi-newton") rc.opt.method = OptMethod::QuasiNewton;
      else if (v == "adaptive-first-order") rc.opt.method = OptMethod::AdaptiveFirstOrder;
      else throw Error("config key 'method': expected quasi-newton or adaptive-first-order");
    } else if (k == "maxIter") {
      rc.opt.maxIter = to_index(k, v);
    } else if (k == "tolRelBound") {
      rc.opt.tolRelBound = to_double(k, v);
    } else if (k == "emOuterIters") {
      rc.opt.emOuterIters = to_index(k, v);
    } else if (k == "emInnerStatIters") {
      rc.opt.emInnerStatIters = to_index(k, v);
    } else if (k == "emInnerHypIters") {
      rc.opt.emInnerHypIters = to_index(k, v);
    } else if (k == "batchSize") {
      rc.opt.batchSize = to_index(k, v);
    } else if (k == "stepSize") {
      rc.opt.stepSize = to_double(k, v);
    } else if (k == "informedInit") {
      rc.opt.informedInit = to_bool(k, v);
    } else if (k == "warmupRounds") {
      rc.opt.warmupRounds = to_index(k, v);
    } else if (k == "warmupIters") {
      rc.opt.warmupIters = to_index(k, v);
    } else if (k == "restarts") {
      rc.opt.restarts = to_index(k, v);
    } else if (k == "seed") {
      rc.opt.seed = rc.synth.seed = static_cast<std::uint64_t>(to_index(k, v));
    } else if (k == "perSourceCount") {
      rc.synth.perSourceCount = to_index(k, v);
    } else if (k == "gamma") {
      rc.synth.gamma = to_double(k, v);
    } else if (k == "lFrac") {
      rc.synth.lFrac = to_double(k, v);
    } else if (k == "bias") {
      rc.synth.bias = to_double(k, v);
    } else if (k == "noiseLabelFlip") {
      rc.synth.noiseLabelFlip = to_double(k, v);
    } else if (k == "xMin") {
      rc.synth.xMin = to_double(k, v);
    } else if (k == "xMax") {
      rc.synth.xMax = to_double(k, v);
    } else if (k == "gridSize") {
      rc.synth.gridSize = to_index(k, v);
    } else if (k == "heldOutPerSource") {
      rc.synth.heldOutPerSource = to_index(k, v);
    } else if (k == "gammas") {
      rc.bench.gammas.clear();
      for (const auto& s : items(v)) rc.bench.gammas.push_back(to_double(k, s));
    } else if (k == "lFracs") {
      rc.bench.lFracs.clear();
      for (const auto& s : items(v)) rc.bench.lFracs.push_back(to_double(k, s));
    } else if (k == "models") {
      rc.bench.models.clear();
      for (const auto& s : items(v)) rc.bench.models.push_back(parse_model(s));
    } else if (k == "replicates") {
      rc.bench.replicates = to_index(k, v);
    } else if (k == "scenario") {
      if (v == "two-source") rc.bench.scenario = Scenario::TwoSource;
      else if (v == "similar-curves") rc.bench.scenario = Scenario::SimilarCurves;
      else throw Error("config key 'scenario': expected two-source or similar-curves");
    } else if (k == "bound") {
      if (v != "cvb" && v != "svb") throw Error("config key 'bound': expected cvb or svb");
      rc.bench.svb = v == "svb";
    } else {
      throw Error("unknown config key '" + k + "'");
    }
  }
  if (rc.bench.scenario == Scenario::SimilarCurves) {
    rc.synth.hp = similar_curves_hp();
    rc.model.M = rc.synth.M = 3;
  } else if (rc.synth.hp.num_outputs() != rc.synth.M) {
    throw Error("the two-source scenario generates exactly M = 2 outputs");
  }
}

}  // namespace wsmgp
