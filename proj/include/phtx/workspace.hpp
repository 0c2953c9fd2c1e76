#pragma once

// Episodic workspace graph: typed nodes (actors, objects, events, state
// snapshots, locations) and typed edges, a weighted fact set scored against
// the latent state, and conversion to a weighted digraph for explanation
// chains.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/planner.hpp"
#include "phtx/text_io.hpp"

namespace phtx::workspace {

enum class NodeKind { Actor, Object, Event, State, Location };
enum class EdgeKind { Temporal, Causal, RoleAgent, RoleTheme, Spatial, EpisodicBinding };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Actor: return "actor";
    case NodeKind::Object: return "object";
    case NodeKind::Event: return "event";
    case NodeKind::State: return "state";
    case NodeKind::Location: return "location";
  }
  return "?";
}

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Temporal: return "temporal";
    case EdgeKind::Causal: return "causal";
    case EdgeKind::RoleAgent: return "role-agent";
    case EdgeKind::RoleTheme: return "role-theme";
    case EdgeKind::Spatial: return "spatial";
    case EdgeKind::EpisodicBinding: return "episodic-binding";
  }
  return "?";
}

inline std::optional<NodeKind> parse_node_kind(const std::string& s) {
  for (auto k : {NodeKind::Actor, NodeKind::Object, NodeKind::Event, NodeKind::State, NodeKind::Location})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline std::optional<EdgeKind> parse_edge_kind(const std::string& s) {
  for (auto k : {EdgeKind::Temporal, EdgeKind::Causal, EdgeKind::RoleAgent, EdgeKind::RoleTheme,
                 EdgeKind::Spatial, EdgeKind::EpisodicBinding})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct Node {
  std::string id;
  NodeKind kind;
  std::string label;
};

/// `time_gap` is the transition's Delta t; `jump` and `uncertainty` are
/// caller-supplied scores for the episodic weight.
struct Edge {
  EdgeKind kind;
  std::string src, dst;
  std::optional<double> time_gap;
  double jump = 0.0;
  double uncertainty = 0.0;
};

/// Checks the endpoint kinds an edge of this kind may connect.
inline bool endpoints_allowed(EdgeKind e, NodeKind a, NodeKind b) {
  switch (e) {
    case EdgeKind::Temporal: return a == NodeKind::State && b == NodeKind::State;
    case EdgeKind::Causal: return a == NodeKind::Event && b == NodeKind::Event;
    case EdgeKind::RoleAgent:
    case EdgeKind::RoleTheme: return (a == NodeKind::Actor || a == NodeKind::Object) && b == NodeKind::Event;
    case EdgeKind::Spatial: return a == NodeKind::State && b == NodeKind::Location;
    case EdgeKind::EpisodicBinding:
      return (a == NodeKind::State && b == NodeKind::Event) || (a == NodeKind::Event && b == NodeKind::State);
  }
  return false;
}

class WorkspaceGraph {
 public:
  void add_node(Node n) {
    if (n.id.empty()) throw InvalidArgument("node id is empty");
    if (index_.count(n.id)) throw InvalidArgument("duplicate node id '" + n.id + "'");
    index_[n.id] = nodes_.size();
    nodes_.push_back(std::move(n));
  }

  void add_edge(Edge e) {
    const Node& a = node(e.src);
    const Node& b = node(e.dst);
    if (!endpoints_allowed(e.kind, a.kind, b.kind))
      throw InvalidArgument(std::string(to_string(e.kind)) + " edge cannot connect " + to_string(a.kind) + " '" +
                            a.id + "' to " + to_string(b.kind) + " '" + b.id + "'");
    if (e.time_gap && !(*e.time_gap >= 0.0)) throw InvalidArgument("edge time gap must be >= 0");
    if (!(e.jump >= 0.0) || !(e.uncertainty >= 0.0)) throw InvalidArgument("edge scores must be >= 0");
    edges_.push_back(std::move(e));
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw InvalidArgument("unknown node '" + id + "'");
    return it->second;
  }
  const Node& node(const std::string& id) const { return nodes_[index_of(id)]; }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t> index_;
};

/// Pre-extracted update proposed by an operator.
struct Proposal {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};

/// Last-write-wins merge keyed on node id. Duplicate edges are dropped; every
/// edge is re-validated against the merged node kinds.
inline WorkspaceGraph reconcile(const WorkspaceGraph& base, const Proposal& proposal) {
  std::vector<Node> nodes = base.nodes();
  for (const auto& n : proposal.nodes) {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& m) { return m.id == n.id; });
    if (it != nodes.end()) *it = n;
    else nodes.push_back(n);
  }
  WorkspaceGraph out;
  for (auto& n : nodes) out.add_node(n);
  auto same = [](const Edge& x, const Edge& y) { return x.kind == y.kind && x.src == y.src && x.dst == y.dst; };
  std::vector<Edge> edges;
  for (const auto* list : {&base.edges(), &proposal.edges})
    for (const auto& e : *list) {
      auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& m) { return same(m, e); });
      if (it != edges.end()) *it = e;
      else edges.push_back(e);
    }
  for (auto& e : edges) out.add_edge(e);
  return out;
}

struct Fact {
  std::string subject, relation, object;
  bool truth = true;
  double weight = 1.0;
};

using FactSet = std::vector<Fact>;

/// Fact scoring head s(f | z).
using FactScorer = std::function<double(const Fact&, const Vec& z)>;

inline constexpr double kLogFloor = -30.0;

/// log(sigmoid(s)) floored at -30.
inline double log_sigmoid(double s) {
  const double v = s >= 0.0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
  return std::max(v, kLogFloor);
}

/// Importance-weighted binary cross-entropy, averaged over the m facts.
inline double ws_fact_loss(const Vec& z, const FactSet& facts, const FactScorer& scorer) {
  if (facts.empty()) throw InvalidArgument("fact set is empty");
  double sum = 0.0;
  for (const auto& f : facts) {
    if (!(f.weight >= 0.0)) throw InvalidArgument("fact weights must be >= 0");
    const double s = scorer(f, z);
    sum += f.weight * (f.truth ? -log_sigmoid(s) : -log_sigmoid(-s));
  }
  return sum / static_cast<double>(facts.size());
}

struct DistancePair {
  Vec z_i, z_j;
  double d_ws;
};

/// sum (dist(z_i, z_j) - f(d_ws))^2. f must be non-decreasing on the sorted
/// d_ws values and their midpoints.
inline double ws_geo_loss(const std::vector<DistancePair>& pairs, const std::function<double(double)>& f_map,
                          const std::function<double(const Vec&, const Vec&)>& dist) {
  std::vector<double> probe;
  for (const auto& p : pairs) probe.push_back(p.d_ws);
  std::sort(probe.begin(), probe.end());
  const std::size_t m = probe.size();
  for (std::size_t k = 0; k + 1 < m; ++k) probe.push_back(0.5 * (probe[k] + probe[k + 1]));
  std::sort(probe.begin(), probe.end());
  for (std::size_t k = 0; k + 1 < probe.size(); ++k)
    if (f_map(probe[k + 1]) < f_map(probe[k]))
      throw InvalidArgument("workspace distance map is not monotone on the sampled range");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double r = dist(p.z_i, p.z_j) - f_map(p.d_ws);
    sum += r * r;
  }
  return sum;
}

struct EpisodicCoefficients {
  double alpha = 1.0;  // time gap
  double beta = 1.0;   // narrative jump
  double gamma = 1.0;  // uncertainty
};

/// alpha*dt + beta*jump + gamma*unc; all inputs must be >= 0.
inline double episodic_edge_weight(double dt, double jump, double unc, double alpha, double beta, double gamma) {
  for (double x : {dt, jump, unc, alpha, beta, gamma})
    if (!(x >= 0.0)) throw InvalidArgument("episodic weight inputs must be >= 0");
  return alpha * dt + beta * jump + gamma * unc;
}

/// Temporal and causal edges become weighted directed edges. Role edges become
/// zero-weight actor/object -> event connectors, spatial edges zero-weight
/// state -> location connectors, and binding edges zero-weight connectors in
/// both directions. Node order and payloads (ids) follow the workspace.
inline planner::WeightedDigraph<std::string> to_weighted_digraph(const WorkspaceGraph& ws,
                                                                 const EpisodicCoefficients& c) {
  planner::WeightedDigraph<std::string> g;
  for (const auto& n : ws.nodes()) g.add_node(n.id);
  for (const auto& e : ws.edges()) {
    const auto a = ws.index_of(e.src), b = ws.index_of(e.dst);
    switch (e.kind) {
      case EdgeKind::Temporal:
      case EdgeKind::Causal:
        g.add_edge(a, b, episodic_edge_weight(e.time_gap.value_or(0.0), e.jump, e.uncertainty, c.alpha, c.beta,
                                              c.gamma));
        break;
      case EdgeKind::RoleAgent:
      case EdgeKind::RoleTheme:
      case EdgeKind::Spatial:
        g.add_edge(a, b, 0.0);
        break;
      case EdgeKind::EpisodicBinding:
        g.add_edge(a, b, 0.0);
        g.add_edge(b, a, 0.0);
        break;
    }
  }
  return g;
}

struct ExplanationChain {
  std::vector<std::string> nodes;
  double cost = 0.0;
};

/// Minimal-cost chain from src to dst, or nullopt when unreachable.
inline std::optional<ExplanationChain> explanation_chain(const WorkspaceGraph& ws, const std::string& src,
                                                         const std::string& dst, const EpisodicCoefficients& c) {
  const auto a = ws.index_of(src), b = ws.index_of(dst);
  const auto g = to_weighted_digraph(ws, c);
  const auto path = planner::shortest_path(g, a, b);
  if (!path) return std::nullopt;
  ExplanationChain out;
  out.cost = path->cost;
  for (auto v : path->nodes) out.nodes.push_back(g.payload(v));
  return out;
}

// Workspace text format, one record per line:
//
//   node <id> <kind> <label...>
//   edge <kind> <src> <dst> [t=<gap>] [jump=<score>] [unc=<score>]
//
// '#' starts a comment. Labels run to the end of the line.

inline WorkspaceGraph read_workspace(std::istream& in) {
  WorkspaceGraph g;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    const auto t = split_ws(line);
    try {
      if (t[0] == "node") {
        if (t.size() < 3) throw ParseError("expected 'node <id> <kind> <label>'", lineno);
        const auto kind = parse_node_kind(t[2]);
        if (!kind) throw ParseError("unknown node kind '" + t[2] + "'", lineno);
        std::string label;
        for (std::size_t k = 3; k < t.size(); ++k) label += (k > 3 ? " " : "") + t[k];
        g.add_node({t[1], *kind, label});
      } else if (t[0] == "edge") {
        if (t.size() < 4) throw ParseError("expected 'edge <kind> <src> <dst>'", lineno);
        const auto kind = parse_edge_kind(t[1]);
        if (!kind) throw ParseError("unknown edge kind '" + t[1] + "'", lineno);
        Edge e{*kind, t[2], t[3], std::nullopt, 0.0, 0.0};
        for (std::size_t k = 4; k < t.size(); ++k) {
          const auto eq = t[k].find('=');
          if (eq == std::string::npos) throw ParseError("expected key=value, got '" + t[k] + "'", lineno);
          const auto key = t[k].substr(0, eq);
          const double v = parse_real(t[k].substr(eq + 1), lineno);
          if (key == "t") e.time_gap = v;
          else if (key == "jump") e.jump = v;
          else if (key == "unc") e.uncertainty = v;
          else throw ParseError("unknown edge attribute '" + key + "'", lineno);
        }
        g.add_edge(std::move(e));
      } else {
        throw ParseError("unknown record '" + t[0] + "'", lineno);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return g;
}

inline void write_workspace(std::ostream& out, const WorkspaceGraph& g) {
  for (const auto& n : g.nodes()) {
    out << "node " << n.id << ' ' << to_string(n.kind);
    if (!n.label.empty()) out << ' ' << n.label;
    out << '\n';
  }
  for (const auto& e : g.edges()) {
    out << "edge " << to_string(e.kind) << ' ' << e.src << ' ' << e.dst;
    if (e.time_gap) out << " t=" << format_real(*e.time_gap);
    if (e.jump != 0.0) out << " jump=" << format_real(e.jump);
    if (e.uncertainty != 0.0) out << " unc=" << format_real(e.uncertainty);
    out << '\n';
  }
}

}  // namespace phtx::workspace
