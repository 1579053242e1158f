#include "stochlin/problem_generators.hpp"

#include "stochlin/error.hpp"
#include "stochlin/rng.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace stochlin {

namespace {

Matrix gaussian_matrix(Eigen::Index r, Eigen::Index c, StreamRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Vector gaussian_vector(Eigen::Index n, StreamRng& rng) {
  return gaussian_matrix(n, 1, rng).col(0);
}

// Orthonormal columns from the QR factor of a Gaussian matrix.
Matrix random_orthonormal(Eigen::Index n, Eigen::Index k, StreamRng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, k, rng));
  return qr.householderQ() * Matrix::Identity(n, k);
}

// Geometric spacing from 1 down to 1/condition.
Vector geometric(Eigen::Index k, double condition) {
  Vector s(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    s(i) = std::pow(condition, -t);
  }
  return s;
}

void require_condition(double c) {
  if (!(c >= 1.0) || !std::isfinite(c)) throw InvalidInput("condition must be finite and >= 1");
}

std::vector<std::pair<std::size_t, std::size_t>> graph_edges(const ProblemSpec& spec) {
  const std::size_t n = spec.nodes;
  std::vector<std::pair<std::size_t, std::size_t>> e;
  if (spec.graph == "path") {
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  } else if (spec.graph == "cycle") {
    if (n < 3) throw InvalidInput("cycle graph needs at least 3 nodes");
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  } else if (spec.graph == "complete") {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    }
  } else if (spec.graph == "edges") {
    e = spec.edges;
  } else {
    throw InvalidInput("unknown graph '" + spec.graph + "' (path, cycle, complete, edges)");
  }
  return e;
}

}  // namespace

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::GaussianConsistent: return "gaussian-consistent";
    case ProblemKind::Diagonal: return "diagonal";
    case ProblemKind::SpdBEqualsA: return "spd";
    case ProblemKind::Gossip: return "gossip";
  }
  return "diagonal";
}

std::optional<ProblemKind> parse_problem_kind(const std::string& name) {
  if (name == "gaussian-consistent") return ProblemKind::GaussianConsistent;
  if (name == "diagonal") return ProblemKind::Diagonal;
  if (name == "spd" || name == "spd-with-B-equals-A") return ProblemKind::SpdBEqualsA;
  if (name == "gossip" || name == "graph-incidence-gossip") return ProblemKind::Gossip;
  return std::nullopt;
}

Matrix incidence_matrix(std::size_t nodes,
                        const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (edges.empty()) throw InvalidInput("graph has no edges");
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(edges.size()), static_cast<Eigen::Index>(nodes));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    if (u >= nodes || v >= nodes) throw InvalidInput("edge endpoint out of range");
    if (u == v) throw InvalidInput("self-loops are not allowed");
    A(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(u)) = 1.0;
    A(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(v)) = -1.0;
  }
  return A;
}

bool is_connected(std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (nodes == 0) return false;
  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = nodes;
  for (auto [u, v] : edges) {
    if (u >= nodes || v >= nodes) continue;
    const auto a = find(u), b = find(v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

GeneratedProblem generate_problem(const ProblemSpec& spec) {
  StreamRng rng(spec.seed, {kGeneratorStream, 0});
  GeneratedProblem p;
  switch (spec.kind) {
    case ProblemKind::GaussianConsistent: {
      require_condition(spec.condition);
      if (spec.rows == 0 || spec.cols == 0) throw InvalidInput("gaussian-consistent needs rows, cols >= 1");
      const auto m = static_cast<Eigen::Index>(spec.rows);
      const auto n = static_cast<Eigen::Index>(spec.cols);
      const auto full = std::min(m, n);
      const auto k = spec.rank == 0 ? full : static_cast<Eigen::Index>(spec.rank);
      if (k > full) throw InvalidInput("rank exceeds min(rows, cols)");
      if (spec.condition == 1.0 && k == full) {
        p.A = gaussian_matrix(m, n, rng);
      } else {
        const Matrix U = random_orthonormal(m, k, rng);
        const Matrix V = random_orthonormal(n, k, rng);
        p.A = U * geometric(k, spec.condition).asDiagonal() * V.transpose();
      }
      p.x_planted = spec.planted ? *spec.planted : gaussian_vector(n, rng);
      p.B = Matrix::Identity(n, n);
      break;
    }
    case ProblemKind::Diagonal: {
      Vector d;
      if (spec.diagonal) {
        d = *spec.diagonal;
      } else {
        require_condition(spec.condition);
        if (spec.cols == 0) throw InvalidInput("diagonal needs cols >= 1 or explicit entries");
        d = geometric(static_cast<Eigen::Index>(spec.cols), spec.condition).cwiseInverse();
        d /= d.minCoeff();
      }
      if (d.size() == 0) throw InvalidInput("diagonal must be non-empty");
      p.A = d.asDiagonal();
      p.x_planted = spec.planted ? *spec.planted : Vector::Ones(d.size());
      p.B = Matrix::Identity(d.size(), d.size());
      break;
    }
    case ProblemKind::SpdBEqualsA: {
      require_condition(spec.condition);
      if (spec.cols == 0) throw InvalidInput("spd needs cols >= 1");
      const auto n = static_cast<Eigen::Index>(spec.cols);
      const Matrix Q = random_orthonormal(n, n, rng);
      p.A = Q * geometric(n, spec.condition).asDiagonal() * Q.transpose();
      p.A = 0.5 * (p.A + p.A.transpose());
      p.x_planted = spec.planted ? *spec.planted : gaussian_vector(n, rng);
      p.B = p.A;
      break;
    }
    case ProblemKind::Gossip: {
      if (spec.nodes < 2) throw InvalidInput("gossip needs at least 2 nodes");
      const auto edges = graph_edges(spec);
      if (spec.require_connected && !is_connected(spec.nodes, edges)) {
        throw InvalidInput("gossip graph is disconnected");
      }
      p.A = incidence_matrix(spec.nodes, edges);
      const auto n = static_cast<Eigen::Index>(spec.nodes);
      p.x_planted = spec.planted ? *spec.planted : Vector::Zero(n);
      p.B = Matrix::Identity(n, n);
      p.b = Vector::Zero(p.A.rows());
      return p;
    }
  }
  if (p.x_planted.size() != p.A.cols()) throw InvalidInput("planted solution has wrong length");
  p.b = p.A * p.x_planted;
  return p;
}

}  // namespace stochlin
