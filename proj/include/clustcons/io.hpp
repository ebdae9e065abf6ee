#pragma once

// Schedule/clustering JSON documents, measure CSV files, SVG line plots and
// file hashing for run manifests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "clustcons/graph.hpp"
#include "json.hpp"

namespace clustcons {

using nlohmann::json;

inline json profile_to_json(const WeightProfile& p) {
  switch (p.kind) {
    case WeightProfile::Kind::constant:
      return {{"kind", "constant"}, {"scale", p.scale}};
    case WeightProfile::Kind::half_sine:
      return {{"kind", "half_sine"}, {"scale", p.scale}, {"duration", p.duration}};
  }
  return {};
}

inline WeightProfile profile_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return WeightProfile::constant(j.at("scale").get<double>());
  if (kind == "half_sine")
    return WeightProfile::half_sine(j.at("duration").get<double>(), j.value("scale", 1.0));
  throw std::invalid_argument("unknown weight profile kind '" + kind + "'");
}

inline json clustering_to_json(const Clustering& c) { return c.all_members(); }

inline Clustering clustering_from_json(std::size_t n, const json& j) {
  return Clustering::from_members(n, j.get<std::vector<std::vector<VertexId>>>());
}

//! {n, clusters, switching_times, segments: [{edges: [[to, from, weight], ...], profile}]}
inline json schedule_to_json(const CouplingSchedule& s, const Clustering* c = nullptr) {
  json j;
  j["n"] = s.n();
  if (c) j["clusters"] = clustering_to_json(*c);
  j["switching_times"] = std::vector<double>(s.breakpoints().begin(), s.breakpoints().end());
  json segs = json::array();
  for (const Segment& seg : s.segments()) {
    json edges = json::array();
    for (const Edge& e : seg.edges) edges.push_back(json::array({e.target, e.source, e.weight}));
    segs.push_back({{"edges", std::move(edges)}, {"profile", profile_to_json(seg.profile)}});
  }
  j["segments"] = std::move(segs);
  return j;
}

inline CouplingSchedule schedule_from_json(const json& j) {
  const auto n = j.at("n").get<std::size_t>();
  auto times = j.at("switching_times").get<std::vector<double>>();
  std::vector<Segment> segments;
  for (const json& sj : j.at("segments")) {
    Segment seg;
    for (const json& e : sj.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw std::invalid_argument("edge must be [to, from, weight]");
      seg.edges.push_back({e[0].get<VertexId>(), e[1].get<VertexId>(), e[2].get<double>()});
    }
    seg.profile = profile_from_json(sj.at("profile"));
    segments.push_back(std::move(seg));
  }
  return CouplingSchedule(n, std::move(times), std::move(segments));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("csv: no column '" + name + "'");
    return columns[static_cast<std::size_t>(it - header.begin())];
  }
  bool has(const std::string& name) const { return std::find(header.begin(), header.end(), name) != header.end(); }
};

inline CsvTable read_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  t.columns.resize(t.header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= t.header.size()) throw std::invalid_argument("csv: too many cells on row " + std::to_string(row));
      t.columns[col++].push_back(std::stod(cell));
    }
    if (col != t.header.size()) throw std::invalid_argument("csv: too few cells on row " + std::to_string(row));
  }
  return t;
}

struct PlotSeries {
  std::string label;
  std::vector<double> values;
  std::string color = "#1f77b4";
};

//! Static line chart; at most max_points vertices per polyline.
inline std::string render_svg(const std::string& title, const std::vector<double>& times,
                              const std::vector<PlotSeries>& series, bool log_scale = false,
                              std::size_t max_points = 2000) {
  constexpr double width = 800, height = 400, left = 70, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto transform = [&](double v) { return log_scale ? std::log10(std::max(v, 1e-16)) : v; };

  double tmin = times.empty() ? 0.0 : times.front(), tmax = times.empty() ? 1.0 : times.back();
  if (!(tmax > tmin)) tmax = tmin + 1.0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& s : series)
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      vmin = std::min(vmin, transform(v));
      vmax = std::max(vmax, transform(v));
    }
  if (!std::isfinite(vmin)) vmin = 0.0, vmax = 1.0;
  if (!(vmax > vmin)) vmax = vmin + 1.0;

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double y = top + ph * (1.0 - f);
    const double v = vmin + f * (vmax - vmin);
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << (log_scale ? "1e" : "") << v << "</text>\n";
    const double x = left + pw * f;
    os << "<text x=\"" << x << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tmin + f * (tmax - tmin)
       << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";

  const std::size_t stride = std::max<std::size_t>(1, times.size() / std::max<std::size_t>(1, max_points));
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    const std::size_t count = std::min(times.size(), s.values.size());
    for (std::size_t i = 0; i < count; i += stride) {
      if (!std::isfinite(s.values[i])) continue;
      const double x = left + pw * (times[i] - tmin) / (tmax - tmin);
      const double y = top + ph * (1.0 - (transform(s.values[i]) - vmin) / (vmax - vmin));
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 + 14.0 * static_cast<double>(si)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << s.color << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace clustcons
