#include "wsmgp/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace wsmgp {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(Index line, const std::string& what) {
  throw Error("line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, Index line, const std::string& col) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) fail(line, "cannot parse '" + s + "' in column " + col);
  return v;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> x_names(const CsvSchema& schema, Index d) {
  if (static_cast<Index>(schema.xColumns.size()) == d) return schema.xColumns;
  std::vector<std::string> n;
  for (Index k = 0; k < d; ++k) n.push_back(d == 1 ? "x" : "x" + std::to_string(k + 1));
  return n;
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("line 1: missing header row");
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) fail(1, "header lacks column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> xc;
  for (const auto& c : schema.xColumns) xc.push_back(need(c));
  const std::size_t yc = need(schema.yColumn);
  const auto lit = col.find(schema.labelColumn);
  std::vector<std::size_t> pc;
  for (Index m = 1;; ++m) {
    const auto it = col.find(schema.priorPrefix + std::to_string(m));
    if (it == col.end()) break;
    pc.push_back(it->second);
  }

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  std::vector<int> labels;
  std::vector<std::vector<double>> priors;
  Index lineNo = 1;
  int maxLabel = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      fail(lineNo, "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    std::vector<double> x;
    for (std::size_t k = 0; k < xc.size(); ++k) x.push_back(parse_double(cells[xc[k]], lineNo, schema.xColumns[k]));
    xs.push_back(std::move(x));
    ys.push_back(parse_double(cells[yc], lineNo, schema.yColumn));
    int label = kUnlabeled;
    if (lit != col.end() && !cells[lit->second].empty()) {
      const double v = parse_double(cells[lit->second], lineNo, schema.labelColumn);
      if (v != static_cast<int>(v) || v < 1) fail(lineNo, "label must be a positive integer");
      label = static_cast<int>(v) - 1;
      if (schema.M > 0 && label >= schema.M)
        fail(lineNo, "label " + std::to_string(label + 1) + " references unknown group (M = " + std::to_string(schema.M) + ")");
      maxLabel = std::max(maxLabel, label + 1);
    }
    labels.push_back(label);
    std::vector<double> pr;
    if (label != kUnlabeled)
      for (std::size_t k = 0; k < pc.size(); ++k)
        if (!cells[pc[k]].empty()) pr.push_back(parse_double(cells[pc[k]], lineNo, header[pc[k]]));
    if (!pr.empty() && pr.size() != pc.size()) fail(lineNo, "prior columns must be all present or all empty");
    priors.push_back(std::move(pr));
  }

  const Index M = schema.M > 0 ? schema.M : std::max<Index>({Index{1}, maxLabel, static_cast<Index>(pc.size())});
  if (!pc.empty() && static_cast<Index>(pc.size()) != M) throw Error("number of prior columns differs from M");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= M) throw Error("label " + std::to_string(labels[i] + 1) + " references unknown group");
  const Index N = static_cast<Index>(ys.size());
  Mat X(N, static_cast<Index>(xc.size()));
  Vec y(N);
  for (Index n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < xc.size(); ++k) X(n, static_cast<Index>(k)) = xs[static_cast<std::size_t>(n)][k];
    y(n) = ys[static_cast<std::size_t>(n)];
  }
  Dataset ds = make_dataset(std::move(X), std::move(y), labels, M);
  for (Index n = 0; n < N; ++n) {
    const auto& pr = priors[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < pr.size(); ++k) ds.priorPi(n, static_cast<Index>(k)) = pr[k];
  }
  return ds;
}

Dataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_csv(s.str(), schema);
}

std::string format_csv(const Dataset& ds, const CsvSchema& schema) {
  const auto xn = x_names(schema, ds.dim());
  const Index M = ds.priorPi.cols();
  std::ostringstream out;
  for (const auto& n : xn) out << n << ",";
  out << schema.yColumn << "," << schema.labelColumn;
  for (Index m = 0; m < M; ++m) out << "," << schema.priorPrefix << m + 1;
  out << "\n";
  for (Index n = 0; n < ds.size(); ++n) {
    for (Index k = 0; k < ds.dim(); ++k) out << fmt(ds.X(n, k)) << ",";
    out << fmt(ds.y(n)) << ",";
    if (ds.is_labeled(n)) out << ds.labels[static_cast<std::size_t>(n)] + 1;
    for (Index m = 0; m < M; ++m) {
      out << ",";
      if (ds.is_labeled(n)) out << fmt(ds.priorPi(n, m));
    }
    out << "\n";
  }
  return out.str();
}

void write_csv(const std::string& path, const Dataset& ds, const CsvSchema& schema) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << format_csv(ds, schema);
}

void write_curves_csv(const std::string& path, const Prediction& p) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  for (Index k = 0; k < p.xStar.cols(); ++k) f << (p.xStar.cols() == 1 ? std::string("x") : "x" + std::to_string(k + 1)) << ",";
  for (std::size_t m = 0; m < p.mean.size(); ++m) f << "mean_" << m + 1 << ",var_" << m + 1 << (m + 1 < p.mean.size() ? "," : "");
  f << "\n";
  for (Index i = 0; i < p.xStar.rows(); ++i) {
    for (Index k = 0; k < p.xStar.cols(); ++k) f << fmt(p.xStar(i, k)) << ",";
    for (std::size_t m = 0; m < p.mean.size(); ++m)
      f << fmt(p.mean[m](i)) << "," << fmt(p.varDiag[m](i)) << (m + 1 < p.mean.size() ? "," : "");
    f << "\n";
  }
}

void write_pihat_csv(const std::string& path, const Mat& piHat) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << "row";
  for (Index m = 0; m < piHat.cols(); ++m) f << ",pi_" << m + 1;
  f << "\n";
  for (Index n = 0; n < piHat.rows(); ++n) {
    f << n + 1;
    for (Index m = 0; m < piHat.cols(); ++m) f << "," << fmt(piHat(n, m));
    f << "\n";
  }
}

}  // namespace wsmgp
