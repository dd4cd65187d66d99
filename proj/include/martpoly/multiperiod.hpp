#pragma once

// Finite multi-period markets on an information tree. Each internal node A
// at time t defines a one-period "(t, A) component" whose outcomes are the
// children of A; the whole market is viable (complete) iff every component
// is.
//
// Nodes may be shared by several parents (recombining lattices such as the
// KKL grid). A component depends only on its node, so the verdicts equal
// those of the unrolled tree while the node count stays polynomial.

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "martpoly/analysis.hpp"
#include "martpoly/exactmath.hpp"
#include "martpoly/market.hpp"

namespace martpoly {

// An asset that only trades over one component: bought at the node for
// `spot`, paying `payoffs[w]` at the w-th child.
struct LocalAsset {
  Rational spot;
  RationalVector payoffs;
};

struct TreeNode {
  std::string id;
  int time = 0;
  std::vector<std::string> children;
  RationalVector prices;  // one per tree-wide asset
  std::optional<RationalVector> probabilities;  // physical, over children
  std::vector<LocalAsset> local_assets;
};

struct TreeMarket {
  std::size_t assets = 0;
  RationalVector rates;  // rates[t] applies from t to t + 1
  std::vector<TreeNode> nodes;

  int horizon() const { return static_cast<int>(rates.size()); }

  // id -> position in `nodes`. Throws InvalidInput on any structural defect.
  std::unordered_map<std::string, std::size_t> validate() const {
    if (nodes.empty()) throw InvalidInput("tree has no nodes");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!index.emplace(nodes[i].id, i).second)
        throw InvalidInput("duplicate node id '" + nodes[i].id + "'");

    const int horizon_t = horizon();
    std::unordered_map<std::string, int> parents;
    std::size_t roots = 0;
    for (const auto& node : nodes) {
      const std::string where = "node '" + node.id + "'";
      if (node.time < 0) throw InvalidInput(where + ": negative time");
      if (node.time == 0) ++roots;
      if (node.prices.size() != assets)
        throw InvalidInput(where + ": expected " + std::to_string(assets) +
                           " prices");
      if (node.children.empty() && node.time != horizon_t)
        throw InvalidInput(where + ": leaf at time " +
                           std::to_string(node.time) +
                           " but the horizon is " + std::to_string(horizon_t));
      if (!node.children.empty() && node.time >= horizon_t)
        throw InvalidInput(where + ": has children at or after the horizon");
      std::unordered_set<std::string> seen;
      for (const auto& child : node.children) {
        auto it = index.find(child);
        if (it == index.end())
          throw InvalidInput(where + ": unknown child '" + child + "'");
        if (!seen.insert(child).second)
          throw InvalidInput(where + ": child '" + child + "' listed twice");
        if (nodes[it->second].time != node.time + 1)
          throw InvalidInput(where + ": child '" + child +
                             "' is not one step later");
        ++parents[child];
      }
      if (node.probabilities) {
        const auto& p = *node.probabilities;
        if (p.size() != node.children.size())
          throw InvalidInput(where + ": one probability per child expected");
        for (const auto& x : p)
          if (x <= 0) throw InvalidInput(where + ": probabilities must be > 0");
        if (!node.children.empty() && sum(p) != 1)
          throw InvalidInput(where + ": probabilities must sum to 1");
      }
      for (const auto& local : node.local_assets)
        if (local.payoffs.size() != node.children.size())
          throw InvalidInput(where + ": local asset needs one payoff per child");
    }
    if (roots != 1)
      throw InvalidInput("tree needs exactly one node at time 0, found " +
                         std::to_string(roots));
    for (const auto& node : nodes)
      if (node.time > 0 && parents[node.id] == 0)
        throw InvalidInput("node '" + node.id + "' is unreachable");
    for (std::size_t t = 0; t < rates.size(); ++t)
      if (rates[t] == -1)
        throw InvalidInput("1 + rate must be nonzero at step " +
                           std::to_string(t));
    return index;
  }

  const TreeNode& root() const {
    for (const auto& n : nodes)
      if (n.time == 0) return n;
    throw InvalidInput("tree has no root");
  }
};

struct Component {
  int time = 0;
  std::string node;
  OnePeriodMarket market;
};

// One component per internal node, breadth-first from the root.
inline std::vector<Component> components(const TreeMarket& tm) {
  const auto index = tm.validate();
  std::vector<Component> out;
  std::deque<std::size_t> queue{index.at(tm.root().id)};
  std::unordered_set<std::size_t> visited{queue.front()};
  while (!queue.empty()) {
    const TreeNode& node = tm.nodes[queue.front()];
    queue.pop_front();
    if (node.children.empty()) continue;

    const std::size_t b = node.children.size();
    const std::size_t n = tm.assets + node.local_assets.size();
    Component c{node.time, node.id, {}};
    c.market.rate = tm.rates[node.time];
    c.market.spot = node.prices;
    c.market.payoffs = RationalMatrix(n, b);
    for (std::size_t w = 0; w < b; ++w) {
      const std::size_t child = index.at(node.children[w]);
      for (std::size_t i = 0; i < tm.assets; ++i)
        c.market.payoffs(i, w) = tm.nodes[child].prices[i];
      if (visited.insert(child).second) queue.push_back(child);
    }
    for (std::size_t a = 0; a < node.local_assets.size(); ++a) {
      c.market.spot.push_back(node.local_assets[a].spot);
      for (std::size_t w = 0; w < b; ++w)
        c.market.payoffs(tm.assets + a, w) = node.local_assets[a].payoffs[w];
    }
    c.market.probabilities = node.probabilities;
    out.push_back(std::move(c));
  }
  return out;
}

struct ComponentReport {
  int time = 0;
  std::string node;
  bool arbitrage_free = false;
  bool complete = false;
  EmmCharacterization emm;
};

struct TreeReport {
  bool viable = true;
  bool complete = true;
  std::vector<ComponentReport> per_component;
};

inline TreeReport analyze_tree(const TreeMarket& tm,
                               const EnumerationLimits& limits = {}) {
  TreeReport report;
  for (auto& c : components(tm)) {
    const MartingaleSystem sys = build_system(c.market);
    ComponentReport r{c.time, c.node, false, false,
                      characterize_system(sys, limits)};
    r.arbitrage_free = r.emm.emm_exists;
    r.complete = r.arbitrage_free && spans_outcomes(sys);
    report.viable = report.viable && r.arbitrage_free;
    report.complete = report.complete && r.complete;
    report.per_component.push_back(std::move(r));
  }
  return report;
}

struct ComponentPlan {
  int time = 0;
  std::string node;
  CompletionPlan plan;
};

// A completion plan for every incomplete component, breadth-first.
inline std::vector<ComponentPlan> complete_tree(
    const TreeMarket& tm, const EnumerationLimits& limits = {}) {
  const TreeReport report = analyze_tree(tm, limits);
  if (!report.viable)
    throw NotViable("tree market is not arbitrage-free; cannot complete");
  std::vector<ComponentPlan> plans;
  for (auto& c : components(tm)) {
    if (is_complete(c.market, limits)) continue;
    plans.push_back({c.time, c.node, complete_market(c.market, {}, limits)});
  }
  return plans;
}

// Adds each plan's rows as local assets of its node.
inline TreeMarket apply_tree_completion(TreeMarket tm,
                                        const std::vector<ComponentPlan>& plans) {
  const auto index = tm.validate();
  for (const auto& p : plans) {
    TreeNode& node = tm.nodes[index.at(p.node)];
    for (std::size_t a = 0; a < p.plan.added_payoff_rows.rows(); ++a)
      node.local_assets.push_back(
          {p.plan.prices[a], p.plan.added_payoff_rows.row_vector(a)});
  }
  return tm;
}

// A single-period market as a one-level tree (root "0", children "1".."b").
inline TreeMarket tree_from_market(const OnePeriodMarket& mkt) {
  mkt.validate();
  TreeMarket tm;
  tm.assets = mkt.assets();
  tm.rates = {mkt.rate};
  TreeNode root{"0", 0, {}, mkt.spot, mkt.probabilities, {}};
  std::vector<TreeNode> leaves;
  for (std::size_t w = 0; w < mkt.outcomes(); ++w) {
    TreeNode leaf{std::to_string(w + 1), 1, {}, mkt.payoffs.column(w),
                  std::nullopt, {}};
    root.children.push_back(leaf.id);
    leaves.push_back(std::move(leaf));
  }
  tm.nodes.push_back(std::move(root));
  for (auto& l : leaves) tm.nodes.push_back(std::move(l));
  return tm;
}

}  // namespace martpoly
