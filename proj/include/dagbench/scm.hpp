#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagbench/graph.hpp"
#include "dagbench/rng.hpp"

namespace dagbench {

enum class NoiseDist { Gaussian, Exponential };

std::string to_string(NoiseDist dist);
NoiseDist parse_noise_dist(const std::string& name);

/// Independent additive noise, one scale per node. Exponential noise is
/// centered: sigma * (Exp(1) - 1).
struct NoiseSpec {
  NoiseDist dist = NoiseDist::Gaussian;
  Eigen::VectorXd scale;

  static NoiseSpec gaussian(int d, double sigma = 1.0);
  static NoiseSpec exponential(int d, double sigma = 1.0);
  void validate(int d) const;
};

/// X_j = sum_p W(p, j) X_p + U_j.
struct LinearScm {
  Dag dag;
  Eigen::MatrixXd weights;
  NoiseSpec noise;

  int size() const { return dag.size(); }
  /// Support and shape checks.
  void validate() const;
  /// Short human-readable description for dataset metadata.
  std::string describe() const;
};

/// Additive-noise model whose mechanisms are Gaussian-process draws with an
/// RBF kernel.
struct GpScm {
  Dag dag;
  double bandwidth = 1.0;
  NoiseSpec noise;

  int size() const { return dag.size(); }
  std::string describe() const;
};

struct DatasetMeta {
  std::string scenario = "vanilla";
  std::uint64_t seed = 0;
  std::string scm_id;
  Dag truth;
};

/// n x d sample matrix plus provenance. Always finite and non-empty.
struct Dataset {
  Eigen::MatrixXd X;
  DatasetMeta meta;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

/// Validates the Dataset invariants and assembles one.
Dataset make_dataset(Eigen::MatrixXd X, DatasetMeta meta);

/// Edge weights uniform on [-2,-0.5] U [0.5,2].
LinearScm make_linear_scm(const Dag& dag, const NoiseSpec& noise, std::uint64_t seed);
/// Vanilla model: standard Gaussian noise.
LinearScm make_linear_scm(const Dag& dag, std::uint64_t seed);

/// n x d matrix of independent draws from the noise law, column by column.
Eigen::MatrixXd sample_noise(const NoiseSpec& noise, int n, Rng& rng);
/// Apply the structural equations row-wise to a given noise matrix.
Eigen::MatrixXd propagate(const LinearScm& scm, const Eigen::MatrixXd& noise);

Dataset sample_linear(const LinearScm& scm, int n, std::uint64_t seed);

/// One joint draw f ~ N(0, K + eps I) at the given input rows, using the
/// standard-normal vector z. Rows are put into a canonical order before the
/// draw so that permuting the inputs permutes the outputs identically.
Eigen::VectorXd sample_gp_function(const Eigen::MatrixXd& inputs, double bandwidth,
                                   const Eigen::VectorXd& z);

inline constexpr int kMaxGpSamples = 5000;
Dataset sample_gp(const GpScm& scm, int n, std::uint64_t seed);

/// CSV with header x0,...,x{d-1} plus a JSON sidecar `<path>.meta.json`.
void write_dataset(const std::string& csv_path, const Dataset& data);

/// Header names and values of a numeric CSV file.
struct NumericTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};
NumericTable read_numeric_csv(const std::string& path);

}  // namespace dagbench
