#include "dagbench/scm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dagbench/errors.hpp"

namespace dagbench {

std::string to_string(NoiseDist dist) {
  return dist == NoiseDist::Gaussian ? "gaussian" : "exponential";
}

NoiseDist parse_noise_dist(const std::string& name) {
  if (name == "gaussian") return NoiseDist::Gaussian;
  if (name == "exponential") return NoiseDist::Exponential;
  throw ParameterError("unknown noise distribution '" + name + "'");
}

NoiseSpec NoiseSpec::gaussian(int d, double sigma) {
  return NoiseSpec{NoiseDist::Gaussian, Eigen::VectorXd::Constant(d, sigma)};
}

NoiseSpec NoiseSpec::exponential(int d, double sigma) {
  return NoiseSpec{NoiseDist::Exponential, Eigen::VectorXd::Constant(d, sigma)};
}

void NoiseSpec::validate(int d) const {
  if (scale.size() != d) throw ShapeError("NoiseSpec: scale vector must have one entry per node");
  for (int i = 0; i < d; ++i) {
    if (!(scale(i) > 0.0) || !std::isfinite(scale(i))) {
      throw ParameterError("NoiseSpec: noise scales must be positive and finite");
    }
  }
}

void LinearScm::validate() const {
  const int d = dag.size();
  if (weights.rows() != d || weights.cols() != d) throw ShapeError("LinearScm: W shape does not match graph");
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (weights(i, j) != 0.0 && !dag.has_edge(i, j)) {
        throw ParameterError("LinearScm: weight on a non-edge");
      }
      if (!std::isfinite(weights(i, j))) throw ParameterError("LinearScm: non-finite weight");
    }
  }
  noise.validate(d);
}

std::string LinearScm::describe() const {
  std::ostringstream out;
  out << "linear d=" << size() << " edges=" << dag.num_edges() << " noise=" << to_string(noise.dist);
  return out.str();
}

std::string GpScm::describe() const {
  std::ostringstream out;
  out << "gp d=" << size() << " edges=" << dag.num_edges() << " bandwidth=" << bandwidth
      << " noise=" << to_string(noise.dist);
  return out.str();
}

Dataset make_dataset(Eigen::MatrixXd X, DatasetMeta meta) {
  if (X.rows() == 0) throw DegenerateDataError("Dataset: no samples");
  if (!X.allFinite()) throw DegenerateDataError("Dataset: non-finite entries");
  if (meta.truth.size() != 0 && meta.truth.size() != X.cols()) {
    throw ShapeError("Dataset: true graph size does not match column count");
  }
  return Dataset{std::move(X), std::move(meta)};
}

LinearScm make_linear_scm(const Dag& dag, const NoiseSpec& noise, std::uint64_t seed) {
  const int d = dag.size();
  noise.validate(d);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> magnitude(0.5, 2.0);
  std::bernoulli_distribution negative(0.5);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [i, j] : dag.edges()) {
    const double w = magnitude(rng);
    W(i, j) = negative(rng) ? -w : w;
  }
  return LinearScm{dag, std::move(W), noise};
}

LinearScm make_linear_scm(const Dag& dag, std::uint64_t seed) {
  return make_linear_scm(dag, NoiseSpec::gaussian(dag.size()), seed);
}

Eigen::MatrixXd sample_noise(const NoiseSpec& noise, int n, Rng& rng) {
  const auto d = noise.scale.size();
  Eigen::MatrixXd U(n, d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int t = 0; t < n; ++t) {
      const double e = noise.dist == NoiseDist::Gaussian ? gauss(rng) : expo(rng) - 1.0;
      U(t, j) = noise.scale(j) * e;
    }
  }
  return U;
}

Eigen::MatrixXd propagate(const LinearScm& scm, const Eigen::MatrixXd& noise) {
  const int d = scm.size();
  if (noise.cols() != d) throw ShapeError("propagate: noise column count does not match graph");
  Eigen::MatrixXd X = noise;
  for (int j : scm.dag.topological_order()) {
    for (int p : scm.dag.parents(j)) X.col(j) += scm.weights(p, j) * X.col(p);
  }
  return X;
}

Dataset sample_linear(const LinearScm& scm, int n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample_linear: need n >= 1");
  scm.validate();
  Rng rng = make_rng(seed);
  Eigen::MatrixXd X = propagate(scm, sample_noise(scm.noise, n, rng));
  return make_dataset(std::move(X), DatasetMeta{"vanilla", seed, scm.describe(), scm.dag});
}

Eigen::VectorXd sample_gp_function(const Eigen::MatrixXd& inputs, double bandwidth,
                                   const Eigen::VectorXd& z) {
  const auto n = inputs.rows();
  if (z.size() != n) throw ShapeError("sample_gp_function: z must have one entry per input row");
  if (!(bandwidth > 0.0)) throw ParameterError("sample_gp_function: bandwidth must be positive");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      if (inputs(a, c) != inputs(b, c)) return inputs(a, c) < inputs(b, c);
    }
    return false;
  });
  Eigen::MatrixXd sorted(n, inputs.cols());
  for (Eigen::Index r = 0; r < n; ++r) sorted.row(r) = inputs.row(order[r]);

  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    K(s, s) = 1.0;
    for (Eigen::Index t = 0; t < s; ++t) {
      const double v = std::exp(-(sorted.row(s) - sorted.row(t)).squaredNorm() * scale);
      K(s, t) = v;
      K(t, s) = v;
    }
  }
  double jitter = 1e-8 * K.trace() / static_cast<double>(n);
  for (int attempt = 0; attempt <= 6; ++attempt) {
    Eigen::MatrixXd jittered = K;
    jittered.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> chol(jittered);
    if (chol.info() == Eigen::Success) {
      const Eigen::VectorXd f_sorted = chol.matrixL() * z;
      Eigen::VectorXd f(n);
      for (Eigen::Index r = 0; r < n; ++r) f(order[r]) = f_sorted(r);
      return f;
    }
    jitter *= 2.0;
  }
  throw NumericalError("sample_gp_function: kernel Cholesky failed after maximum jitter");
}

Dataset sample_gp(const GpScm& scm, int n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample_gp: need n >= 1");
  if (n > kMaxGpSamples) throw ParameterError("sample_gp: n exceeds the kernel-matrix cost guard");
  const int d = scm.size();
  scm.noise.validate(d);
  Rng rng = make_rng(seed);
  Eigen::MatrixXd X = sample_noise(scm.noise, n, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j : scm.dag.topological_order()) {
    const NodeSet pa = scm.dag.parents(j);
    if (pa.empty()) continue;
    Eigen::MatrixXd P(n, static_cast<Eigen::Index>(pa.size()));
    for (std::size_t c = 0; c < pa.size(); ++c) P.col(static_cast<Eigen::Index>(c)) = X.col(pa[c]);
    Eigen::VectorXd z(n);
    for (int t = 0; t < n; ++t) z(t) = gauss(rng);
    X.col(j) += sample_gp_function(P, scm.bandwidth, z);
  }
  return make_dataset(std::move(X), DatasetMeta{"vanilla-gp", seed, scm.describe(), scm.dag});
}

void write_dataset(const std::string& csv_path, const Dataset& data) {
  std::ofstream out(csv_path);
  if (!out) throw FormatError("cannot write dataset '" + csv_path + "'");
  for (int j = 0; j < data.d(); ++j) out << (j ? "," : "") << "x" << j;
  out << "\n";
  char buf[32];
  for (int t = 0; t < data.n(); ++t) {
    for (int j = 0; j < data.d(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X(t, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }

  nlohmann::json meta;
  meta["scenario"] = data.meta.scenario;
  meta["seed"] = data.meta.seed;
  meta["scm"] = data.meta.scm_id;
  meta["n"] = data.n();
  meta["d"] = data.d();
  auto edges = nlohmann::json::array();
  for (const auto& [i, j] : data.meta.truth.edges()) edges.push_back({i, j});
  meta["true_edges"] = edges;
  std::ofstream side(csv_path + ".meta.json");
  if (!side) throw FormatError("cannot write dataset metadata for '" + csv_path + "'");
  side << meta.dump(2) << "\n";
}

NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  NumericTable table;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw FormatError(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) {
      if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
      table.columns.push_back(name);
    }
  }
  const auto d = static_cast<Eigen::Index>(table.columns.size());
  std::vector<double> values;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++row;
    std::istringstream fields(line);
    std::string cell;
    Eigen::Index count = 0;
    while (std::getline(fields, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || std::string_view(end).find_first_not_of(" \t") != std::string_view::npos ||
          !std::isfinite(v)) {
        throw FormatError(path + ": data row " + std::to_string(row) + ": unparseable value '" + cell + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != d) {
      throw FormatError(path + ": data row " + std::to_string(row) + ": expected " + std::to_string(d) +
                        " columns, found " + std::to_string(count));
    }
  }
  if (row == 0) throw FormatError(path + ": no data rows");
  table.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), row, d);
  return table;
}

}  // namespace dagbench
