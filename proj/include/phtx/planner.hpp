#pragma once

// Directed graphs with non-negative weights, binary-heap Dijkstra, and the
// state-graph construction used to plan over sampled latent points.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/text_io.hpp"

namespace phtx::planner {

using NodeId = std::size_t;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Arc {
  NodeId target;
  double weight;
};

/// Adjacency-list digraph; every weight is finite and >= 0.
template <class Payload>
class WeightedDigraph {
 public:
  WeightedDigraph() = default;

  NodeId add_node(Payload payload) {
    payloads_.push_back(std::move(payload));
    adj_.emplace_back();
    return payloads_.size() - 1;
  }

  void add_edge(NodeId from, NodeId to, double weight) {
    if (from >= size() || to >= size()) throw InvalidArgument("edge endpoint out of range");
    if (!std::isfinite(weight) || weight < 0.0)
      throw InvalidArgument("edge weight must be finite and >= 0, got " + format_real(weight));
    adj_[from].push_back({to, weight});
  }

  std::size_t size() const { return payloads_.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : adj_) n += a.size();
    return n;
  }
  const Payload& payload(NodeId v) const { return payloads_.at(v); }
  const std::vector<Arc>& out_edges(NodeId v) const { return adj_.at(v); }

  /// Weight of the lightest u->v edge, if any.
  std::optional<double> edge_weight(NodeId u, NodeId v) const {
    std::optional<double> best;
    for (const auto& a : adj_.at(u))
      if (a.target == v && (!best || a.weight < *best)) best = a.weight;
    return best;
  }

 private:
  std::vector<Payload> payloads_;
  std::vector<std::vector<Arc>> adj_;
};

struct SsspResult {
  NodeId source = 0;
  std::vector<double> dist;                 // kInf when unreachable
  std::vector<std::optional<NodeId>> pred;  // empty for source and unreachable
};

/// Single-source shortest paths. Among equal-distance predecessors the one
/// with the smaller index wins.
template <class P>
SsspResult dijkstra(const WeightedDigraph<P>& g, NodeId src) {
  if (src >= g.size()) throw InvalidArgument("source node out of range");
  for (NodeId u = 0; u < g.size(); ++u)
    for (const auto& a : g.out_edges(u))
      if (!(a.weight >= 0.0)) throw InvalidArgument("negative edge weight");

  SsspResult r;
  r.source = src;
  r.dist.assign(g.size(), kInf);
  r.pred.assign(g.size(), std::nullopt);
  std::vector<char> done(g.size(), 0);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  r.dist[src] = 0.0;
  heap.push({0.0, src});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (done[u] || d > r.dist[u]) continue;
    done[u] = 1;
    for (const auto& a : g.out_edges(u)) {
      const NodeId v = a.target;
      if (done[v]) continue;
      const double nd = d + a.weight;
      if (nd < r.dist[v]) {
        r.dist[v] = nd;
        r.pred[v] = u;
        heap.push({nd, v});
      } else if (nd == r.dist[v] && r.pred[v] && u < *r.pred[v]) {
        r.pred[v] = u;
      }
    }
  }
  return r;
}

struct Path {
  std::vector<NodeId> nodes;
  double cost = 0.0;
};

/// Predecessor walk from an existing SSSP result.
inline std::optional<Path> extract_path(const SsspResult& r, NodeId dst) {
  if (dst >= r.dist.size()) throw InvalidArgument("destination node out of range");
  if (!std::isfinite(r.dist[dst])) return std::nullopt;
  Path p;
  p.cost = r.dist[dst];
  for (std::optional<NodeId> v = dst; v; v = r.pred[*v]) p.nodes.push_back(*v);
  std::reverse(p.nodes.begin(), p.nodes.end());
  return p;
}

template <class P>
std::optional<Path> shortest_path(const WeightedDigraph<P>& g, NodeId src, NodeId dst) {
  if (dst >= g.size()) throw InvalidArgument("destination node out of range");
  return extract_path(dijkstra(g, src), dst);
}

struct KNearest {
  std::size_t k;
};
struct WithinRadius {
  double r;
};
using ConnectRule = std::variant<KNearest, WithinRadius>;

/// State graph over latent samples. Neighbourhoods are made symmetric, so an
/// edge is added in both directions whenever either endpoint selects the other.
/// Edge weights come from `edge_cost(y_from, y_to)`.
inline WeightedDigraph<Vec> build_ndm_graph(const std::vector<Vec>& samples, const ConnectRule& rule,
                                            const std::function<double(const Vec&, const Vec&)>& edge_cost) {
  if (samples.size() < 2) throw InvalidArgument("state graph needs at least two samples");
  const std::size_t n = samples.size();
  std::vector<std::vector<char>> link(n, std::vector<char>(n, 0));
  if (const auto* kn = std::get_if<KNearest>(&rule)) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) order.emplace_back((samples[i] - samples[j]).norm(), j);
      std::sort(order.begin(), order.end());
      for (std::size_t m = 0; m < std::min(kn->k, order.size()); ++m) {
        link[i][order[m].second] = 1;
        link[order[m].second][i] = 1;
      }
    }
  } else {
    const double r = std::get<WithinRadius>(rule).r;
    if (!(r >= 0.0)) throw InvalidArgument("radius must be >= 0");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && (samples[i] - samples[j]).norm() <= r) link[i][j] = 1;
  }

  WeightedDigraph<Vec> g;
  for (const auto& s : samples) g.add_node(s);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!link[i][j]) continue;
      const double w = edge_cost(samples[i], samples[j]);
      if (!std::isfinite(w) || w < 0.0)
        throw InvalidArgument("edge cost for pair (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is " + format_real(w) + ", must be finite and >= 0");
      g.add_edge(i, j, w);
    }
  return g;
}

/// Trapezoid of a value function along the edge: (V(a) + V(b)) / 2.
inline std::function<double(const Vec&, const Vec&)> trapezoid_cost(std::function<double(const Vec&)> V) {
  return [V = std::move(V)](const Vec& a, const Vec& b) { return 0.5 * (V(a) + V(b)); };
}

/// Every stride-th node, always keeping both endpoints.
inline std::vector<NodeId> waypoints(const std::vector<NodeId>& path, std::size_t stride) {
  if (path.empty()) throw InvalidArgument("path is empty");
  if (stride == 0) throw InvalidArgument("stride must be >= 1");
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < path.size(); k += stride) out.push_back(path[k]);
  if ((path.size() - 1) % stride != 0) out.push_back(path.back());
  return out;
}

// Graph text format:
//
//   n <count>
//   v <index> <label>          (optional node labels)
//   e <src> <dst> <weight>
//
// '#' starts a comment. Indices are 0-based.

using LabeledGraph = WeightedDigraph<std::string>;

inline LabeledGraph read_graph(std::istream& in) {
  LabeledGraph g;
  std::string raw;
  std::size_t lineno = 0;
  bool sized = false;
  auto node_index = [&](const std::string& tok) {
    const long v = parse_int(tok, lineno);
    if (v < 0 || static_cast<std::size_t>(v) >= g.size())
      throw ParseError("node index " + tok + " out of range", lineno);
    return static_cast<NodeId>(v);
  };
  std::vector<std::string> labels;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    const auto t = split_ws(line);
    if (t[0] == "n") {
      if (sized) throw ParseError("duplicate 'n' line", lineno);
      if (t.size() != 2) throw ParseError("expected 'n <count>'", lineno);
      const long n = parse_int(t[1], lineno);
      if (n < 0) throw ParseError("node count must be >= 0", lineno);
      for (long i = 0; i < n; ++i) g.add_node(std::to_string(i));
      sized = true;
    } else if (!sized) {
      throw ParseError("'n <count>' must come first", lineno);
    } else if (t[0] == "v") {
      if (t.size() != 3) throw ParseError("expected 'v <index> <label>'", lineno);
      const auto v = node_index(t[1]);
      labels.resize(g.size());
      labels[v] = t[2];
    } else if (t[0] == "e") {
      if (t.size() != 4) throw ParseError("expected 'e <src> <dst> <weight>'", lineno);
      const auto a = node_index(t[1]), b = node_index(t[2]);
      const double w = parse_real(t[3], lineno);
      if (!std::isfinite(w) || w < 0.0) throw ParseError("edge weight must be finite and >= 0", lineno);
      g.add_edge(a, b, w);
    } else {
      throw ParseError("unknown directive '" + t[0] + "'", lineno);
    }
  }
  if (!sized) throw ParseError("missing 'n <count>' line", lineno);
  if (labels.empty()) return g;
  // Rebuild with labels as payloads.
  LabeledGraph out;
  for (NodeId v = 0; v < g.size(); ++v) out.add_node(labels[v].empty() ? g.payload(v) : labels[v]);
  for (NodeId v = 0; v < g.size(); ++v)
    for (const auto& a : g.out_edges(v)) out.add_edge(v, a.target, a.weight);
  return out;
}

/// Resolves a label, falling back to a numeric index.
inline std::optional<NodeId> find_node(const LabeledGraph& g, const std::string& key) {
  for (NodeId v = 0; v < g.size(); ++v)
    if (g.payload(v) == key) return v;
  try {
    std::size_t used = 0;
    const long v = std::stol(key, &used);
    if (used == key.size() && v >= 0 && static_cast<std::size_t>(v) < g.size()) return static_cast<NodeId>(v);
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

/// CSV with columns node,dist,pred; unreachable rows carry "inf" and an empty pred.
inline void write_sssp_csv(std::ostream& out, const SsspResult& r) {
  out << "node,dist,pred\n";
  for (NodeId v = 0; v < r.dist.size(); ++v) {
    out << v << ',' << (std::isfinite(r.dist[v]) ? format_real(r.dist[v]) : std::string("inf")) << ',';
    if (r.pred[v]) out << *r.pred[v];
    out << '\n';
  }
}

}  // namespace phtx::planner
