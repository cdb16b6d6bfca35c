#pragma once

// JSON and CSV serialization of property reports. Every floating value is
// rounded to 9 significant digits so that reports are byte-stable.

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "horizon/diagnostics.hpp"

namespace horizon {

// Rounds to 9 significant digits. Non-finite values pass through unchanged
// and are written as null by the JSON layer.
inline double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

inline std::string format9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline const char* verdict(const PropertyReport& r) {
  if (r.inconclusive) return "inconclusive";
  return r.pass ? "pass" : "fail";
}

inline nlohmann::ordered_json to_json(const PropertyReport& r) {
  using nlohmann::ordered_json;
  auto num = [](double v) -> ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return round9(v);
  };
  ordered_json j;
  j["property"] = r.property;
  j["construction"] = r.construction;
  j["params"] = ordered_json::object();
  for (const auto& [k, v] : r.params) j["params"][k] = v;
  j["verdict"] = verdict(r);
  j["tolerance"] = num(r.tolerance);
  j["max_violation"] = num(r.max_violation);
  j["violation_fraction"] = num(r.violation_fraction);
  j["violation_cap"] = num(r.violation_cap);
  if (r.witness) {
    ordered_json w;
    w["path"] = r.witness->path;
    w["times"] = ordered_json::array();
    for (double t : r.witness->times) w["times"].push_back(num(t));
    w["lhs"] = num(r.witness->lhs);
    w["rhs"] = num(r.witness->rhs);
    w["note"] = r.witness->note;
    j["witness"] = std::move(w);
  } else {
    j["witness"] = nullptr;
  }
  j["seed"] = r.seed;
  j["n_paths"] = r.n_paths;
  j["n_steps"] = r.n_steps;
  j["metrics"] = ordered_json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = num(v);
  return j;
}

inline PropertyReport report_from_json(const nlohmann::ordered_json& j) {
  PropertyReport r;
  auto num = [](const nlohmann::ordered_json& v) {
    return v.is_null() ? NAN : v.get<double>();
  };
  r.property = j.at("property").get<std::string>();
  r.construction = j.at("construction").get<std::string>();
  for (const auto& [k, v] : j.at("params").items()) r.params[k] = v.get<std::string>();
  const auto v = j.at("verdict").get<std::string>();
  if (v != "pass" && v != "fail" && v != "inconclusive") {
    throw std::invalid_argument("report: unknown verdict '" + v + "'");
  }
  r.pass = v == "pass";
  r.inconclusive = v == "inconclusive";
  r.tolerance = num(j.at("tolerance"));
  r.max_violation = num(j.at("max_violation"));
  r.violation_fraction = num(j.at("violation_fraction"));
  if (j.contains("violation_cap")) r.violation_cap = num(j.at("violation_cap"));
  if (const auto& w = j.at("witness"); !w.is_null()) {
    Witness wi;
    wi.path = w.at("path").get<std::size_t>();
    for (const auto& t : w.at("times")) wi.times.push_back(num(t));
    wi.lhs = num(w.at("lhs"));
    wi.rhs = num(w.at("rhs"));
    wi.note = w.at("note").get<std::string>();
    r.witness = std::move(wi);
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_paths = j.at("n_paths").get<std::size_t>();
  r.n_steps = j.at("n_steps").get<std::size_t>();
  if (j.contains("metrics")) {
    for (const auto& [k, m] : j.at("metrics").items()) r.metrics[k] = num(m);
  }
  return r;
}

inline void write_json(const std::vector<PropertyReport>& reports, std::ostream& os) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  os << arr.dump(2) << '\n';
}

inline std::vector<PropertyReport> read_json(std::istream& is) {
  const auto arr = nlohmann::ordered_json::parse(is);
  if (!arr.is_array()) throw std::invalid_argument("report: expected a JSON array");
  std::vector<PropertyReport> out;
  for (const auto& j : arr) out.push_back(report_from_json(j));
  return out;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

inline constexpr const char* kReportCsvHeader =
    "property,construction,verdict,tolerance,max_violation,violation_fraction,"
    "violation_cap,seed,n_paths,n_steps,params";

// One row per report; params are folded into "k=v;k=v".
inline void write_csv(const std::vector<PropertyReport>& reports, std::ostream& os) {
  os << kReportCsvHeader << '\n';
  for (const auto& r : reports) {
    std::string params;
    for (const auto& [k, v] : r.params) {
      if (!params.empty()) params += ';';
      params += k + "=" + v;
    }
    os << detail::csv_escape(r.property) << ',' << detail::csv_escape(r.construction) << ','
       << verdict(r) << ',' << format9(r.tolerance) << ',' << format9(r.max_violation) << ','
       << format9(r.violation_fraction) << ',' << format9(r.violation_cap) << ',' << r.seed
       << ',' << r.n_paths << ',' << r.n_steps << ',' << detail::csv_escape(params) << '\n';
  }
}

}  // namespace horizon
