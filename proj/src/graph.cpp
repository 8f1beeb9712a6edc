#include "dagbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "dagbench/errors.hpp"
#include "dagbench/rng.hpp"

namespace dagbench {

namespace {

void require_node(int d, int i, const char* what) {
  if (i < 0 || i >= d) {
    throw ParameterError(std::string(what) + ": node " + std::to_string(i) +
                         " out of range for d=" + std::to_string(d));
  }
}

std::vector<int> random_permutation(int d, Rng& rng) {
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// Orient an undirected skeleton from lower to higher rank.
Dag orient_by_rank(const BoolMatrix& skeleton, const std::vector<int>& rank) {
  const int d = static_cast<int>(skeleton.rows());
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (!skeleton(i, j)) continue;
      if (rank[i] < rank[j]) {
        adj(i, j) = true;
      } else {
        adj(j, i) = true;
      }
    }
  }
  return Dag(std::move(adj));
}

}  // namespace

Dag::Dag(int d) {
  if (d < 0) throw ParameterError("Dag: negative node count");
  adj_ = BoolMatrix::Constant(d, d, false);
}

Dag::Dag(BoolMatrix adj) : adj_(std::move(adj)) {
  if (adj_.rows() != adj_.cols()) throw ShapeError("Dag: adjacency must be square");
  for (int i = 0; i < adj_.rows(); ++i) {
    if (adj_(i, i)) throw ParameterError("Dag: self-loop at node " + std::to_string(i));
  }
  if (!is_acyclic(adj_)) throw ParameterError("Dag: adjacency contains a directed cycle");
}

Dag Dag::from_edges(int d, const std::vector<Edge>& edges) {
  if (d < 0) throw ParameterError("Dag: negative node count");
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (const auto& [i, j] : edges) {
    require_node(d, i, "Dag::from_edges");
    require_node(d, j, "Dag::from_edges");
    adj(i, j) = true;
  }
  return Dag(std::move(adj));
}

int Dag::num_edges() const { return static_cast<int>(adj_.count()); }

std::vector<Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      if (adj_(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

NodeSet Dag::parents(int i) const {
  require_node(size(), i, "Dag::parents");
  NodeSet out;
  for (int p = 0; p < size(); ++p) {
    if (adj_(p, i)) out.push_back(p);
  }
  return out;
}

NodeSet Dag::children(int i) const {
  require_node(size(), i, "Dag::children");
  NodeSet out;
  for (int c = 0; c < size(); ++c) {
    if (adj_(i, c)) out.push_back(c);
  }
  return out;
}

std::vector<int> Dag::topological_order() const { return *topological_sort(adj_); }

bool GraphKind::canonical() const {
  switch (family) {
    case Family::ER:
    case Family::SF:
      return degree == 2 || degree == 4 || degree == 6;
    case Family::GRP:
      return degree == 6;
  }
  return false;
}

std::string to_string(GraphKind::Family family) {
  switch (family) {
    case GraphKind::Family::ER:
      return "ER";
    case GraphKind::Family::SF:
      return "SF";
    case GraphKind::Family::GRP:
      return "GRP";
  }
  return "?";
}

std::string GraphKind::label() const { return to_string(family) + "-" + std::to_string(degree); }

GraphKind GraphKind::parse(const std::string& label) {
  const auto dash = label.find('-');
  if (dash == std::string::npos) throw ParameterError("graph kind '" + label + "': expected FAMILY-k");
  const std::string fam = label.substr(0, dash);
  GraphKind kind;
  if (fam == "ER") {
    kind.family = Family::ER;
  } else if (fam == "SF") {
    kind.family = Family::SF;
  } else if (fam == "GRP") {
    kind.family = Family::GRP;
  } else {
    throw ParameterError("graph kind '" + label + "': unknown family");
  }
  try {
    std::size_t used = 0;
    kind.degree = std::stoi(label.substr(dash + 1), &used);
    if (used != label.size() - dash - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParameterError("graph kind '" + label + "': bad degree");
  }
  if (kind.degree < 0) throw ParameterError("graph kind '" + label + "': negative degree");
  return kind;
}

std::optional<std::vector<int>> topological_sort(const BoolMatrix& adj) {
  if (adj.rows() != adj.cols()) throw ShapeError("topological_sort: adjacency must be square");
  const int d = static_cast<int>(adj.rows());
  std::vector<int> indegree(d, 0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (adj(i, j)) ++indegree[j];
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < d; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v = 0; v < d; ++v) {
      if (adj(u, v) && --indegree[v] == 0) ready.push(v);
    }
  }
  if (static_cast<int>(order.size()) != d) return std::nullopt;
  return order;
}

bool is_acyclic(const BoolMatrix& adj) { return topological_sort(adj).has_value(); }

Dag gen_er(int d, double k, std::uint64_t seed) {
  if (d < 2) throw ParameterError("gen_er: need d >= 2");
  if (k < 0) throw ParameterError("gen_er: negative degree");
  const long long max_edges = static_cast<long long>(d) * (d - 1) / 2;
  if (k * d / 2.0 > static_cast<double>(max_edges)) {
    throw ParameterError("gen_er: edge budget exceeds complete-graph capacity");
  }
  const auto m = static_cast<long long>(std::llround(k * d / 2.0));

  Rng rng = make_rng(seed);
  std::vector<Edge> pairs;
  pairs.reserve(static_cast<std::size_t>(max_edges));
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
  }
  // Partial Fisher-Yates: the first m entries are a uniform m-subset.
  for (long long t = 0; t < m; ++t) {
    std::uniform_int_distribution<long long> pick(t, max_edges - 1);
    std::swap(pairs[t], pairs[pick(rng)]);
  }
  BoolMatrix skeleton = BoolMatrix::Constant(d, d, false);
  for (long long t = 0; t < m; ++t) {
    skeleton(pairs[t].first, pairs[t].second) = true;
  }
  return orient_by_rank(skeleton, random_permutation(d, rng));
}

Dag gen_sf(int d, int k, std::uint64_t seed) {
  if (k % 2 != 0) throw ParameterError("gen_sf: degree must be even (k/2 attachments per node)");
  const int m = k / 2;
  if (m < 1 || d <= m) throw ParameterError("gen_sf: need d > k/2 >= 1");

  Rng rng = make_rng(seed);
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  std::vector<double> degree(d, 0.0);
  for (int t = 1; t < d; ++t) {
    const int attach = std::min(m, t);
    std::vector<double> weight(degree.begin(), degree.begin() + t);
    for (int a = 0; a < attach; ++a) {
      double total = std::accumulate(weight.begin(), weight.end(), 0.0);
      int target = 0;
      if (total <= 0.0) {
        // Only happens while every existing node is still isolated.
        std::vector<int> open;
        for (int s = 0; s < t; ++s) {
          if (!adj(t, s)) open.push_back(s);
        }
        std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        target = open[pick(rng)];
      } else {
        std::discrete_distribution<int> pick(weight.begin(), weight.end());
        target = pick(rng);
      }
      adj(t, target) = true;
      weight[target] = 0.0;
    }
    for (int s = 0; s < t; ++s) {
      if (adj(t, s)) {
        degree[s] += 1.0;
        degree[t] += 1.0;
      }
    }
  }
  return relabel(Dag(std::move(adj)), random_permutation(d, rng));
}

Dag gen_grp(int d, double k, std::uint64_t seed) {
  if (d < 4) throw ParameterError("gen_grp: need d >= 4");
  if (k < 0) throw ParameterError("gen_grp: negative degree");
  Rng rng = make_rng(seed);

  std::vector<int> sizes;
  std::normal_distribution<double> size_law(d / 5.0, d / 10.0);
  int assigned = 0;
  while (assigned < d) {
    int s = std::max(2, static_cast<int>(std::lround(size_law(rng))));
    s = std::min(s, d - assigned);
    if (s < 2) {
      sizes.back() += s;  // a single leftover node joins the previous cluster
    } else {
      sizes.push_back(s);
    }
    assigned += s;
  }
  std::vector<int> cluster(d);
  {
    int node = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      for (int t = 0; t < sizes[c]; ++t) cluster[node++] = static_cast<int>(c);
    }
  }

  double intra_pairs = 0.0;
  for (int s : sizes) intra_pairs += s * (s - 1) / 2.0;
  const double all_pairs = d * (d - 1) / 2.0;
  const double target_edges = k * d / 2.0;
  double p_in = 0.4;
  double p_out = 0.0;
  if (p_in * intra_pairs >= target_edges) {
    p_in = intra_pairs > 0 ? target_edges / intra_pairs : 0.0;
  } else if (all_pairs > intra_pairs) {
    p_out = std::min(1.0, (target_edges - p_in * intra_pairs) / (all_pairs - intra_pairs));
  }

  std::bernoulli_distribution in_edge(p_in);
  std::bernoulli_distribution out_edge(p_out);
  BoolMatrix skeleton = BoolMatrix::Constant(d, d, false);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      skeleton(i, j) = cluster[i] == cluster[j] ? in_edge(rng) : out_edge(rng);
    }
  }
  // Cluster membership is contiguous by construction; hide that behind a
  // random relabeling before orienting.
  const std::vector<int> perm = random_permutation(d, rng);
  BoolMatrix shuffled = BoolMatrix::Constant(d, d, false);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (skeleton(i, j)) {
        const int a = std::min(perm[i], perm[j]);
        const int b = std::max(perm[i], perm[j]);
        shuffled(a, b) = true;
      }
    }
  }
  return orient_by_rank(shuffled, random_permutation(d, rng));
}

Dag generate(const GraphKind& kind, int d, std::uint64_t seed) {
  switch (kind.family) {
    case GraphKind::Family::ER:
      return gen_er(d, kind.degree, seed);
    case GraphKind::Family::SF:
      return gen_sf(d, kind.degree, seed);
    case GraphKind::Family::GRP:
      return gen_grp(d, kind.degree, seed);
  }
  throw ParameterError("generate: unknown graph family");
}

Dag relabel(const Dag& g, const std::vector<int>& perm) {
  const int d = g.size();
  if (static_cast<int>(perm.size()) != d) throw ShapeError("relabel: permutation size mismatch");
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (const auto& [i, j] : g.edges()) adj(perm[i], perm[j]) = true;
  return Dag(std::move(adj));
}

NodeSet descendants(const Dag& g, int i) {
  require_node(g.size(), i, "descendants");
  const int d = g.size();
  std::vector<bool> seen(d, false);
  std::vector<int> stack{i};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < d; ++v) {
      if (g.has_edge(u, v) && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  NodeSet out;
  for (int v = 0; v < d; ++v) {
    if (seen[v]) out.push_back(v);
  }
  return out;
}

NodeSet ancestors(const Dag& g, int i) {
  require_node(g.size(), i, "ancestors");
  NodeSet out;
  const std::vector<bool> closure = ancestral_closure(g, {i});
  for (int v = 0; v < g.size(); ++v) {
    if (closure[v] && v != i) out.push_back(v);
  }
  return out;
}

std::vector<bool> ancestral_closure(const Dag& g, const NodeSet& nodes) {
  const int d = g.size();
  std::vector<bool> seen(d, false);
  std::vector<int> stack;
  for (int v : nodes) {
    require_node(d, v, "ancestral_closure");
    if (!seen[v]) {
      seen[v] = true;
      stack.push_back(v);
    }
  }
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int p = 0; p < d; ++p) {
      if (g.has_edge(p, u) && !seen[p]) {
        seen[p] = true;
        stack.push_back(p);
      }
    }
  }
  return seen;
}

bool d_separated(const Dag& g, int i, int j, const NodeSet& z) {
  const int d = g.size();
  require_node(d, i, "d_separated");
  require_node(d, j, "d_separated");
  if (i == j) throw ParameterError("d_separated: i and j must differ");
  std::vector<bool> observed(d, false);
  for (int v : z) {
    require_node(d, v, "d_separated");
    if (v == i || v == j) throw ParameterError("d_separated: i and j must not be in the conditioning set");
    observed[v] = true;
  }
  // A collider is open iff it is an ancestor of (or in) the conditioning set.
  const std::vector<bool> opens_collider = ancestral_closure(g, z);

  // Visit states (node, arrived-from-child) / (node, arrived-from-parent).
  std::vector<bool> up_seen(d, false);
  std::vector<bool> down_seen(d, false);
  std::vector<std::pair<int, bool>> queue{{i, true}};
  up_seen[i] = true;
  while (!queue.empty()) {
    const auto [v, from_child] = queue.back();
    queue.pop_back();
    if (v == j && !observed[v]) return false;
    if (from_child) {
      if (observed[v]) continue;
      for (int u = 0; u < d; ++u) {
        if (g.has_edge(u, v) && !up_seen[u]) {
          up_seen[u] = true;
          queue.emplace_back(u, true);
        }
        if (g.has_edge(v, u) && !down_seen[u]) {
          down_seen[u] = true;
          queue.emplace_back(u, false);
        }
      }
    } else {
      if (!observed[v]) {
        for (int u = 0; u < d; ++u) {
          if (g.has_edge(v, u) && !down_seen[u]) {
            down_seen[u] = true;
            queue.emplace_back(u, false);
          }
        }
      }
      if (opens_collider[v]) {
        for (int u = 0; u < d; ++u) {
          if (g.has_edge(u, v) && !up_seen[u]) {
            up_seen[u] = true;
            queue.emplace_back(u, true);
          }
        }
      }
    }
  }
  return true;
}

Eigen::MatrixXd total_effect_matrix(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw ShapeError("total_effect_matrix: W must be square");
  const auto d = weights.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  return Eigen::MatrixXd((eye - weights).partialPivLu().solve(eye)) - eye;
}

double total_effect(const Dag& g, const Eigen::MatrixXd& weights, int i, int j) {
  const int d = g.size();
  if (weights.rows() != d || weights.cols() != d) throw ShapeError("total_effect: W shape does not match graph");
  require_node(d, i, "total_effect");
  require_node(d, j, "total_effect");
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      if (weights(a, b) != 0.0 && !g.has_edge(a, b)) {
        throw ParameterError("total_effect: weight on non-edge (" + std::to_string(a) + "," +
                             std::to_string(b) + ")");
      }
    }
  }
  // Path sums along a topological order; exact for nilpotent W.
  const std::vector<int> order = g.topological_order();
  std::vector<double> effect(d, 0.0);
  effect[i] = 1.0;
  for (int v : order) {
    if (v == i) continue;
    double acc = 0.0;
    for (int p = 0; p < d; ++p) {
      if (g.has_edge(p, v)) acc += effect[p] * weights(p, v);
    }
    effect[v] = acc;
  }
  return i == j ? 0.0 : effect[j];
}

void write_edge_list(std::ostream& out, const Dag& g) {
  out << "# dag d=" << g.size() << "\n";
  for (const auto& [i, j] : g.edges()) out << i << " " << j << "\n";
}

Dag read_edge_list(std::istream& in) {
  std::string line;
  int d = -1;
  int line_no = 0;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      const auto pos = line.find("dag d=");
      if (pos != std::string::npos && d < 0) {
        try {
          d = std::stoi(line.substr(pos + 6));
        } catch (const std::exception&) {
          throw FormatError("edge list line " + std::to_string(line_no) + ": bad header");
        }
      }
      continue;
    }
    if (d < 0) throw FormatError("edge list: missing '# dag d=<d>' header before line " + std::to_string(line_no));
    std::istringstream fields(line);
    int i = 0;
    int j = 0;
    std::string rest;
    if (!(fields >> i >> j) || (fields >> rest)) {
      throw FormatError("edge list line " + std::to_string(line_no) + ": expected 'i j'");
    }
    if (i < 0 || j < 0 || i >= d || j >= d) {
      throw FormatError("edge list line " + std::to_string(line_no) + ": node out of range");
    }
    edges.emplace_back(i, j);
  }
  if (d < 0) throw FormatError("edge list: missing '# dag d=<d>' header");
  try {
    return Dag::from_edges(d, edges);
  } catch (const ParameterError& e) {
    throw FormatError(std::string("edge list: ") + e.what());
  }
}

Dag read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list_file(const std::string& path, const Dag& g) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write edge list '" + path + "'");
  write_edge_list(out, g);
}

}  // namespace dagbench
