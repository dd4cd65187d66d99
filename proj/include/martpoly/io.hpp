#pragma once

// Document formats: market JSON, tree JSON and the t,k,value surface CSV.
// Every number is carried as a canonical rational string.

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "martpoly/exactmath.hpp"
#include "martpoly/market.hpp"
#include "martpoly/models.hpp"
#include "martpoly/multiperiod.hpp"

namespace martpoly::io {

using nlohmann::json;

inline json to_json(const Rational& q) { return to_string(q); }

inline json to_json(std::span<const Rational> v) {
  json arr = json::array();
  for (const auto& x : v) arr.push_back(to_string(x));
  return arr;
}

inline json to_json(const RationalMatrix& m) {
  json arr = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) arr.push_back(to_json(m.row(i)));
  return arr;
}

// Rational strings; plain JSON integers are accepted, floats never.
inline Rational rational_from_json(const json& j, const std::string& what) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) {
    return parse_rational(j.dump());
  }
  throw ParseError(what + ": expected a rational string such as \"3/4\"");
}

inline RationalVector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  RationalVector v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v.push_back(rational_from_json(j[i], what + "[" + std::to_string(i) + "]"));
  return v;
}

inline const json& require(const json& obj, const char* key,
                           const std::string& what) {
  if (!obj.is_object()) throw ParseError(what + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(what + ": missing field '" + key + "'");
  return *it;
}

inline json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
}

// {"rate": "0", "spot": ["1/2"], "payoffs": [["2","0","0","0"]],
//  "probabilities": [...]}   (probabilities optional)
//
// A market without assets has no payoff rows to fix b, so it must carry
// either probabilities or an explicit "outcomes" count.
inline OnePeriodMarket market_from_json(const json& j) {
  const std::string what = "market";
  OnePeriodMarket mkt;
  mkt.rate = rational_from_json(require(j, "rate", what), "rate");
  mkt.spot = vector_from_json(require(j, "spot", what), "spot");
  const json& rows = require(j, "payoffs", what);
  if (!rows.is_array()) throw ParseError("payoffs: expected an array of rows");
  std::vector<RationalVector> payoff_rows;
  for (std::size_t i = 0; i < rows.size(); ++i)
    payoff_rows.push_back(
        vector_from_json(rows[i], "payoffs[" + std::to_string(i) + "]"));
  if (j.contains("probabilities") && !j["probabilities"].is_null())
    mkt.probabilities = vector_from_json(j["probabilities"], "probabilities");

  std::size_t b = 0;
  if (!payoff_rows.empty()) {
    b = payoff_rows.front().size();
  } else if (j.contains("outcomes")) {
    if (!j["outcomes"].is_number_unsigned())
      throw ParseError("outcomes: expected a positive integer");
    b = j["outcomes"].get<std::size_t>();
  } else if (mkt.probabilities) {
    b = mkt.probabilities->size();
  } else {
    throw ParseError(
        "market without assets needs \"outcomes\" or \"probabilities\"");
  }
  mkt.payoffs = RationalMatrix::from_rows(payoff_rows, b);
  mkt.validate();
  return mkt;
}

inline json market_to_json(const OnePeriodMarket& mkt) {
  json j;
  j["rate"] = to_json(mkt.rate);
  j["spot"] = to_json(mkt.spot);
  j["payoffs"] = to_json(mkt.payoffs);
  if (mkt.assets() == 0) j["outcomes"] = mkt.outcomes();
  if (mkt.probabilities) j["probabilities"] = to_json(*mkt.probabilities);
  return j;
}

// {"assets": 1, "rates": ["0","0"],
//  "nodes": [{"id": "root", "time": 0, "children": ["u","d"],
//             "prices": ["1"], "probabilities": [...],
//             "local_assets": [{"spot": "..", "payoffs": [..]}]}, ...]}
inline TreeMarket tree_from_json(const json& j) {
  const std::string what = "tree";
  TreeMarket tm;
  const json& assets = require(j, "assets", what);
  if (!assets.is_number_unsigned())
    throw ParseError("assets: expected a nonnegative integer");
  tm.assets = assets.get<std::size_t>();
  tm.rates = vector_from_json(require(j, "rates", what), "rates");
  const json& nodes = require(j, "nodes", what);
  if (!nodes.is_array()) throw ParseError("nodes: expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const json& n = nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    TreeNode node;
    const json& id = require(n, "id", where);
    if (!id.is_string()) throw ParseError(where + ".id: expected a string");
    node.id = id.get<std::string>();
    const json& time = require(n, "time", where);
    if (!time.is_number_integer())
      throw ParseError(where + ".time: expected an integer");
    node.time = time.get<int>();
    if (n.contains("children")) {
      if (!n["children"].is_array())
        throw ParseError(where + ".children: expected an array");
      for (const auto& c : n["children"]) {
        if (!c.is_string())
          throw ParseError(where + ".children: ids must be strings");
        node.children.push_back(c.get<std::string>());
      }
    }
    node.prices = vector_from_json(require(n, "prices", where),
                                   where + ".prices");
    if (n.contains("probabilities") && !n["probabilities"].is_null())
      node.probabilities =
          vector_from_json(n["probabilities"], where + ".probabilities");
    if (n.contains("local_assets")) {
      for (const auto& a : n["local_assets"]) {
        node.local_assets.push_back(
            {rational_from_json(require(a, "spot", where), where + ".spot"),
             vector_from_json(require(a, "payoffs", where),
                              where + ".payoffs")});
      }
    }
    tm.nodes.push_back(std::move(node));
  }
  tm.validate();
  return tm;
}

inline json tree_to_json(const TreeMarket& tm) {
  json j;
  j["assets"] = tm.assets;
  j["rates"] = to_json(tm.rates);
  json nodes = json::array();
  for (const auto& node : tm.nodes) {
    json n;
    n["id"] = node.id;
    n["time"] = node.time;
    n["children"] = node.children;
    n["prices"] = to_json(node.prices);
    if (node.probabilities) n["probabilities"] = to_json(*node.probabilities);
    if (!node.local_assets.empty()) {
      json locals = json::array();
      for (const auto& a : node.local_assets)
        locals.push_back({{"spot", to_json(a.spot)},
                          {"payoffs", to_json(a.payoffs)}});
      n["local_assets"] = std::move(locals);
    }
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline std::string surface_to_csv(const DerivativeSurface& s) {
  std::ostringstream out;
  out << "t,k,value\n";
  for (std::size_t t = 0; t < s.layers.size(); ++t)
    for (const auto& [k, v] : s.layers[t])
      out << t << ',' << k << ',' << to_string(v) << '\n';
  return out.str();
}

inline DerivativeSurface surface_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,k,value")
    throw ParseError("surface CSV must start with the header t,k,value");
  DerivativeSurface s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError("surface CSV: bad row '" + line + "'");
    const Rational t = parse_rational(line.substr(0, c1));
    const Rational k = parse_rational(line.substr(c1 + 1, c2 - c1 - 1));
    if (denominator_of(t) != 1 || denominator_of(k) != 1 || t < 0 || k < 0)
      throw ParseError("surface CSV: t and k must be nonnegative integers");
    const auto ti = static_cast<std::size_t>(numerator_of(t).convert_to<long>());
    if (s.layers.size() <= ti) s.layers.resize(ti + 1);
    s.layers[ti][numerator_of(k).convert_to<long>()] =
        parse_rational(line.substr(c2 + 1));
  }
  if (!s.layers.empty() && !s.layers[0].empty())
    s.s0 = s.layers[0].begin()->first;
  return s;
}

}  // namespace martpoly::io
