#include "wsmgp/fit_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace wsmgp {

namespace {

using nlohmann::json;

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Vec json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

Mat json_mat(const json& j) {
  Mat m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
  for (Index r = 0; r < m.rows(); ++r) m.row(r) = json_vec(j.at("data").at(static_cast<std::size_t>(r))).transpose();
  return m;
}

}  // namespace

std::string fit_to_json(const SavedFit& f) {
  const auto& hp = f.fit.finalHp;
  json j;
  j["model"] = std::string(model_name(f.kind));
  j["family"] = hp.family == KernelFamily::Convolved ? "convolved" : "independent-se";
  j["latentPrecision"] = vec_json(hp.latent.precision);
  json outs = json::array();
  for (const auto& o : hp.outputs) outs.push_back({{"amplitude", o.amplitude}, {"precision", vec_json(o.precision)}});
  j["outputs"] = outs;
  j["sigma"] = vec_json(hp.noise.sigma);
  j["W"] = mat_json(hp.inducing.W);
  const auto& c = f.fit.finalCfg;
  j["config"] = {{"M", c.M}, {"Q", c.Q}, {"alpha0", c.alpha0}, {"useDirichlet", c.useDirichlet},
                 {"optimizeAlpha0", c.optimizeAlpha0}};
  const auto& s = f.fit.finalState;
  j["piHat"] = mat_json(s.piHat);
  j["muU"] = vec_json(s.muU);
  j["suChol"] = mat_json(s.suChol);
  j["bound"] = f.fit.finalBound;
  j["boundTrajectory"] = f.fit.boundTrajectory;
  return j.dump(2) + "\n";
}

SavedFit fit_from_json(const std::string& text) {
  SavedFit f;
  try {
    const json j = json::parse(text);
    f.kind = parse_model(j.at("model").get<std::string>());
    auto& hp = f.fit.finalHp;
    hp.family = j.at("family").get<std::string>() == "convolved" ? KernelFamily::Convolved : KernelFamily::IndependentSE;
    hp.latent.precision = json_vec(j.at("latentPrecision"));
    for (const auto& o : j.at("outputs")) hp.outputs.push_back({o.at("amplitude").get<double>(), json_vec(o.at("precision"))});
    hp.noise.sigma = json_vec(j.at("sigma"));
    hp.inducing.W = json_mat(j.at("W"));
    const auto& c = j.at("config");
    auto& cfg = f.fit.finalCfg;
    cfg.M = c.at("M").get<Index>();
    cfg.Q = c.at("Q").get<Index>();
    cfg.alpha0 = c.at("alpha0").get<double>();
    cfg.useDirichlet = c.at("useDirichlet").get<bool>();
    cfg.optimizeAlpha0 = c.at("optimizeAlpha0").get<bool>();
    auto& s = f.fit.finalState;
    s.piHat = json_mat(j.at("piHat"));
    s.muU = json_vec(j.at("muU"));
    s.suChol = json_mat(j.at("suChol"));
    f.fit.finalBound = j.at("bound").get<double>();
    f.fit.boundTrajectory = j.at("boundTrajectory").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed fit file: ") + e.what());
  }
  f.fit.finalHp.validate();
  return f;
}

void save_fit(const std::string& path, const SavedFit& f) {
  std::ofstream o(path);
  if (!o) throw Error("cannot write " + path);
  o << fit_to_json(f);
}

SavedFit load_fit(const std::string& path) {
  std::ifstream i(path);
  if (!i) throw Error("cannot open " + path);
  std::ostringstream s;
  s << i.rdbuf();
  return fit_from_json(s.str());
}

}  // namespace wsmgp
