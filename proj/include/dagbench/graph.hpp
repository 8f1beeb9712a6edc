#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dagbench {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
/// Sorted list of node indices.
using NodeSet = std::vector<int>;
using Edge = std::pair<int, int>;

/// Directed acyclic graph over nodes 0..d-1. adj(i, j) is true iff i -> j.
/// Construction validates squareness, the empty diagonal and acyclicity, so
/// every Dag value is a DAG.
class Dag {
 public:
  Dag() = default;
  /// Empty graph on d nodes.
  explicit Dag(int d);
  explicit Dag(BoolMatrix adj);

  static Dag from_edges(int d, const std::vector<Edge>& edges);

  int size() const { return static_cast<int>(adj_.rows()); }
  bool has_edge(int i, int j) const { return adj_(i, j); }
  const BoolMatrix& adjacency() const { return adj_; }
  int num_edges() const;
  /// Edges in row-major order.
  std::vector<Edge> edges() const;
  NodeSet parents(int i) const;
  NodeSet children(int i) const;
  /// Kahn order with ties broken by smallest index.
  std::vector<int> topological_order() const;

  bool operator==(const Dag& other) const { return adj_ == other.adj_; }

 private:
  BoolMatrix adj_;
};

/// Random graph families used by the benchmark.
struct GraphKind {
  enum class Family { ER, SF, GRP };
  Family family = Family::ER;
  int degree = 2;

  /// ER/SF with k in {2,4,6} or GRP with k = 6.
  bool canonical() const;
  /// "ER-2", "SF-4", "GRP-6".
  std::string label() const;
  static GraphKind parse(const std::string& label);
};

std::string to_string(GraphKind::Family family);

/// Kahn peeling; std::nullopt if the graph has a directed cycle.
std::optional<std::vector<int>> topological_sort(const BoolMatrix& adj);
bool is_acyclic(const BoolMatrix& adj);

/// Erdos-Renyi DAG with exactly round(k*d/2) edges, oriented along a random
/// permutation.
Dag gen_er(int d, double k, std::uint64_t seed);
/// Barabasi-Albert DAG with k/2 attachments per new node (edges point from
/// the new node into existing ones), followed by a random relabeling.
Dag gen_sf(int d, int k, std::uint64_t seed);
/// Gaussian random partition graph with expected degree close to k.
Dag gen_grp(int d, double k, std::uint64_t seed);
Dag generate(const GraphKind& kind, int d, std::uint64_t seed);

/// Relabel node i as perm[i].
Dag relabel(const Dag& g, const std::vector<int>& perm);

NodeSet descendants(const Dag& g, int i);
NodeSet ancestors(const Dag& g, int i);
/// Ancestors of every node in `nodes`, including the nodes themselves.
std::vector<bool> ancestral_closure(const Dag& g, const NodeSet& nodes);

/// d-separation of i and j given z via Bayes-ball reachability.
bool d_separated(const Dag& g, int i, int j, const NodeSet& z);

/// Sum over directed paths i ~> j of the product of edge weights.
double total_effect(const Dag& g, const Eigen::MatrixXd& weights, int i, int j);
/// (I - W)^{-1} - I for a weight matrix with acyclic support.
Eigen::MatrixXd total_effect_matrix(const Eigen::MatrixXd& weights);

/// Edge-list text format: "# dag d=<d>" header, then one "i j" pair per line.
void write_edge_list(std::ostream& out, const Dag& g);
Dag read_edge_list(std::istream& in);
Dag read_edge_list_file(const std::string& path);
void write_edge_list_file(const std::string& path, const Dag& g);

}  // namespace dagbench
