#include "vprop/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "vprop/harness/runner.hpp"

namespace fs = std::filesystem;

namespace vprop {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("column '" + name + "' missing from training log");
    return static_cast<int>(it - header.begin());
  }
};

Table read_log(const std::string& dir) {
  const std::string path = dir + "/train_log.csv";
  if (!fs::exists(path)) throw std::runtime_error("missing " + path);
  if (!fs::exists(dir + "/manifest.json")) throw std::runtime_error("missing " + dir + "/manifest.json");
  std::istringstream in(read_file(path));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty training log " + path);
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::vector<std::string> report(const std::string& run_dir) {
  if (!fs::is_directory(run_dir)) throw std::runtime_error("run directory '" + run_dir + "' does not exist");
  const std::string out_path = run_dir + "/series.csv";

  if (fs::exists(run_dir + "/manifest.json")) {
    Table t = read_log(run_dir);
    const std::vector<std::string> cols = {"iter", "return_mean", "return_se", "v_disagree_max", "v_disagree_mean", "q_diag"};
    std::vector<int> idx;
    for (const auto& c : cols) idx.push_back(t.col(c));
    std::string out;
    for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
    out += '\n';
    for (const auto& r : t.rows) {
      for (std::size_t c = 0; c < idx.size(); ++c) out += (c ? "," : "") + r.at(idx[c]);
      out += '\n';
    }
    write_file(out_path, out);
    return {out_path};
  }

  std::vector<std::pair<std::string, std::string>> seeds;  // (label, dir)
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("seed_", 0) == 0 && fs::exists(entry.path() / "manifest.json"))
      seeds.emplace_back(name.substr(5), entry.path().string());
  }
  if (seeds.empty()) throw std::runtime_error("no manifest.json or seed_* runs found in '" + run_dir + "'");
  std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) {
    try {
      return std::stoull(a.first) < std::stoull(b.first);
    } catch (...) {
      return a.first < b.first;
    }
  });

  std::vector<Table> logs;
  for (const auto& s : seeds) logs.push_back(read_log(s.second));
  const std::size_t n_rows = logs.front().rows.size();
  for (const auto& l : logs)
    if (l.rows.size() != n_rows) throw std::runtime_error("seed runs logged different numbers of rows");

  std::string out = "iter";
  for (const auto& s : seeds) out += ",return_seed" + s.first;
  out += ",return_mean,return_se";
  for (const auto& s : seeds) out += ",disagree_seed" + s.first;
  out += ",disagree_mean,disagree_se\n";

  auto mean_se = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return std::make_pair(m, se);
  };

  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::string iter = logs.front().rows[r].at(logs.front().col("iter"));
    std::vector<double> ret, dis;
    std::string line = iter;
    for (const auto& l : logs) {
      if (l.rows[r].at(l.col("iter")) != iter) throw std::runtime_error("seed runs logged different iterations");
      ret.push_back(std::stod(l.rows[r].at(l.col("return_mean"))));
      dis.push_back(std::stod(l.rows[r].at(l.col("v_disagree_max"))));
      line += "," + l.rows[r].at(l.col("return_mean"));
    }
    auto [rm, rse] = mean_se(ret);
    line += "," + fmt(rm) + "," + fmt(rse);
    for (const auto& l : logs) line += "," + l.rows[r].at(l.col("v_disagree_max"));
    auto [dm, dse] = mean_se(dis);
    line += "," + fmt(dm) + "," + fmt(dse) + "\n";
    out += line;
  }
  write_file(out_path, out);
  return {out_path};
}

}  // namespace vprop
