#pragma once

// Distributions over sketch matrices S in R^{m x q}.

#include "stochlin/linalg.hpp"
#include "stochlin/rng.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace stochlin {

// A sketch matrix. Structured families (identity, coordinate, block, count)
// are stored as signed column selections: column j equals sign[j] * e_{index[j]}.
// Gaussian sketches are stored densely.
class SketchSample {
 public:
  static SketchSample selection(std::size_t rows, std::vector<std::size_t> index,
                                std::vector<double> sign = {});
  static SketchSample dense(Matrix s);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const;
  bool is_selection() const { return dense_.size() == 0; }

  const std::vector<std::size_t>& index() const { return index_; }
  const std::vector<double>& sign() const { return sign_; }

  Matrix transpose_times(const Matrix& m) const;  // S^T M
  Vector transpose_times(const Vector& v) const;  // S^T v
  Matrix materialize() const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::size_t> index_;
  std::vector<double> sign_;
  Matrix dense_;
};

enum class SketchKind { FixedIdentity, Coordinate, Block, Gaussian, CountSketch, CountMin };

std::string to_string(SketchKind kind);
std::optional<SketchKind> parse_sketch_kind(const std::string& name);

struct SupportAtom {
  SketchSample sample;
  double probability;
};

using FiniteSupport = std::vector<SupportAtom>;

inline constexpr std::size_t kDefaultSupportCap = 100000;

class SketchDistribution {
 public:
  static SketchDistribution fixed_identity(std::size_t m);
  static SketchDistribution coordinate(std::vector<double> probabilities);
  static SketchDistribution block(std::size_t m, std::size_t q, bool with_replacement = false);
  static SketchDistribution gaussian(std::size_t m, std::size_t q);
  static SketchDistribution count_sketch(std::size_t m, std::size_t q);
  static SketchDistribution count_min(std::size_t m, std::size_t q);

  SketchKind kind() const { return kind_; }
  std::size_t rows() const { return m_; }
  std::size_t q() const { return q_; }
  bool with_replacement() const { return with_replacement_; }
  const std::vector<double>& probabilities() const { return p_; }

  SketchSample sample(StreamRng& rng) const;

  // Enumerated support for discrete families, or nullopt when the family is
  // continuous or the atom count exceeds `cap`.
  std::optional<FiniteSupport> support(std::size_t cap = kDefaultSupportCap) const;

  // Number of atoms support() would produce (nullopt for gaussian); may be
  // huge, saturates at SIZE_MAX.
  std::optional<std::size_t> support_size() const;

 private:
  SketchDistribution(SketchKind kind, std::size_t m, std::size_t q);

  SketchKind kind_;
  std::size_t m_;
  std::size_t q_;
  bool with_replacement_ = false;
  std::vector<double> p_;
  std::vector<double> cdf_;
};

inline SketchSample sample(const SketchDistribution& dist, StreamRng& rng) {
  return dist.sample(rng);
}

inline std::optional<FiniteSupport> support(const SketchDistribution& dist,
                                            std::size_t cap = kDefaultSupportCap) {
  return dist.support(cap);
}

// Randomized Kaczmarz: coordinate sampling with p_i = ||A_i:||^2 / ||A||_F^2.
SketchDistribution kaczmarz_distribution(const Matrix& A);

}  // namespace stochlin
