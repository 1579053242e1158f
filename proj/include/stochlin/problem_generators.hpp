#pragma once

// Synthetic consistent systems for experiments and tests.

#include "stochlin/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stochlin {

enum class ProblemKind { GaussianConsistent, Diagonal, SpdBEqualsA, Gossip };
std::string to_string(ProblemKind k);
std::optional<ProblemKind> parse_problem_kind(const std::string& name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Diagonal;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;        // gaussian-consistent: 0 means min(rows, cols)
  double condition = 1.0;      // ratio of largest to smallest singular value
  std::optional<Vector> diagonal;  // diagonal kind: explicit entries
  std::optional<Vector> planted;   // default: ones (diagonal), Gaussian otherwise
  std::uint64_t seed = 0;

  // gossip
  std::string graph = "path";  // path | cycle | complete | edges
  std::size_t nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  bool require_connected = true;
};

struct GeneratedProblem {
  Matrix A;
  Vector b;
  Matrix B;  // identity, or A for the spd kind
  Vector x_planted;
};

GeneratedProblem generate_problem(const ProblemSpec& spec);

// Edge-vertex incidence matrix (row e has +1 at u and -1 at v).
Matrix incidence_matrix(std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

bool is_connected(std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

}  // namespace stochlin
