#include "rankone/measure_json.hpp"

#include "rankone/errors.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace rankone {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ValidationError(where + ": unknown field \"" + key + "\"");
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  if (!j.at(key).is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing field \"" + key + "\"");
  const json& arr = j.at(key);
  if (!arr.is_array()) throw ValidationError(where + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(where + "." + key + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("expected a number, got " + j.dump());
}

json to_json(const WeightDescriptor& w) {
  json params = std::visit(
      overloaded{
          [](const weight::Constant& c) { return json{{"c", c.c}}; },
          [](const weight::Polynomial& p) { return json{{"coefficients", p.coefficients}}; },
          [](const weight::PowerLaw& p) { return json{{"c", p.c}, {"p", p.p}}; },
          [](const weight::PowerLog& p) { return json{{"c", p.c}, {"p", p.p}}; },
          [](const weight::Semicircle& s) { return json{{"scale", s.scale}}; },
          [](const weight::Arcsine& s) { return json{{"scale", s.scale}}; },
          [](const weight::Table& t) { return json{{"x", t.x}, {"y", t.y}}; },
      },
      w);
  return json{{"kind", kind_name(w)}, {"params", params}};
}

json to_json(const Measure& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms()) atoms.push_back({a.position, a.mass});
  json ac = json::array();
  for (const auto& p : mu.pieces())
    ac.push_back({{"interval", {p.interval.lo, p.interval.hi}}, {"weight", to_json(p.weight)}});
  return json{{"atoms", atoms}, {"ac", ac}};
}

json to_json(const DiscreteMeasure& mu) {
  return json{{"nodes", mu.nodes()}, {"weights", mu.weights()}, {"mass_error", mu.mass_error()}};
}

WeightDescriptor weight_from_json(const json& j, const std::string& where) {
  only_keys(j, {"kind", "params"}, where);
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError(where + ": missing string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const json params = j.contains("params") && !j.at("params").is_null() ? j.at("params") : json::object();
  const std::string pw = where + ".params";
  if (kind == "constant") {
    only_keys(params, {"c"}, pw);
    return weight::Constant{number(params, "c", pw)};
  }
  if (kind == "polynomial") {
    only_keys(params, {"coefficients"}, pw);
    return weight::Polynomial{numbers(params, "coefficients", pw)};
  }
  if (kind == "power_law") {
    only_keys(params, {"c", "p"}, pw);
    return weight::PowerLaw{number(params, "c", pw), number(params, "p", pw)};
  }
  if (kind == "power_log") {
    only_keys(params, {"c", "p"}, pw);
    return weight::PowerLog{number(params, "c", pw), number(params, "p", pw)};
  }
  if (kind == "semicircle") {
    only_keys(params, {"scale"}, pw);
    return weight::Semicircle{number_or(params, "scale", 1.0, pw)};
  }
  if (kind == "arcsine") {
    only_keys(params, {"scale"}, pw);
    return weight::Arcsine{number_or(params, "scale", 1.0, pw)};
  }
  if (kind == "table") {
    only_keys(params, {"x", "y"}, pw);
    return weight::Table{numbers(params, "x", pw), numbers(params, "y", pw)};
  }
  throw ValidationError(where + ".kind: unknown weight kind \"" + kind + "\"");
}

Measure measure_from_json(const json& j, const std::string& where) {
  only_keys(j, {"atoms", "ac"}, where);
  std::vector<Atom> atoms;
  if (j.contains("atoms")) {
    const json& arr = j.at("atoms");
    if (!arr.is_array()) throw ValidationError(where + ".atoms: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".atoms[" + std::to_string(i) + "]";
      const json& a = arr[i];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        throw ValidationError(w + ": expected [position, mass]");
      const double mass = a[1].get<double>();
      if (!(mass > 0.0)) throw ValidationError(w + ": invariant violated: mass > 0");
      atoms.push_back({a[0].get<double>(), mass});
    }
  }
  std::vector<AcPiece> pieces;
  if (j.contains("ac")) {
    const json& arr = j.at("ac");
    if (!arr.is_array()) throw ValidationError(where + ".ac: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + ".ac[" + std::to_string(i) + "]";
      only_keys(arr[i], {"interval", "weight"}, w);
      const std::vector<double> iv = numbers(arr[i], "interval", w);
      if (iv.size() != 2) throw ValidationError(w + ".interval: expected [a, b]");
      if (!(iv[0] < iv[1])) throw ValidationError(w + ".interval: invariant violated: a < b");
      if (!arr[i].contains("weight")) throw ValidationError(w + ": missing field \"weight\"");
      try {
        pieces.push_back(make_piece(Interval(iv[0], iv[1]), weight_from_json(arr[i].at("weight"), w + ".weight")));
      } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(w, 0) == 0) throw;
        throw ValidationError(w + ": invariant violated: " + msg);
      }
    }
  }
  try {
    return Measure(std::move(atoms), std::move(pieces));
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": invariant violated: " + e.what());
  }
}

}  // namespace rankone
