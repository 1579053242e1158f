#include "stochlin/sketching.hpp"

#include "stochlin/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace stochlin {

// ---------------------------------------------------------------------------
// SketchSample

SketchSample SketchSample::selection(std::size_t rows, std::vector<std::size_t> index,
                                     std::vector<double> sign) {
  if (index.empty()) throw InvalidInput("sketch must have at least one column");
  if (sign.empty()) sign.assign(index.size(), 1.0);
  if (sign.size() != index.size()) throw InvalidInput("sketch sign/index length mismatch");
  for (auto i : index) {
    if (i >= rows) throw InvalidInput("sketch column index out of range");
  }
  SketchSample s;
  s.rows_ = rows;
  s.index_ = std::move(index);
  s.sign_ = std::move(sign);
  return s;
}

SketchSample SketchSample::dense(Matrix m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("sketch must be non-empty");
  require_finite(m, "sketch");
  SketchSample s;
  s.rows_ = static_cast<std::size_t>(m.rows());
  s.dense_ = std::move(m);
  return s;
}

std::size_t SketchSample::cols() const {
  return is_selection() ? index_.size() : static_cast<std::size_t>(dense_.cols());
}

Matrix SketchSample::transpose_times(const Matrix& m) const {
  if (static_cast<std::size_t>(m.rows()) != rows_) throw InvalidInput("S^T M: dimension mismatch");
  if (!is_selection()) return dense_.transpose() * m;
  Matrix out(static_cast<Eigen::Index>(index_.size()), m.cols());
  for (std::size_t j = 0; j < index_.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) =
        sign_[j] * m.row(static_cast<Eigen::Index>(index_[j]));
  }
  return out;
}

Vector SketchSample::transpose_times(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != rows_) throw InvalidInput("S^T v: dimension mismatch");
  if (!is_selection()) return dense_.transpose() * v;
  Vector out(static_cast<Eigen::Index>(index_.size()));
  for (std::size_t j = 0; j < index_.size(); ++j) {
    out(static_cast<Eigen::Index>(j)) = sign_[j] * v(static_cast<Eigen::Index>(index_[j]));
  }
  return out;
}

Matrix SketchSample::materialize() const {
  if (!is_selection()) return dense_;
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols()));
  for (std::size_t j = 0; j < index_.size(); ++j) {
    s(static_cast<Eigen::Index>(index_[j]), static_cast<Eigen::Index>(j)) = sign_[j];
  }
  return s;
}

// ---------------------------------------------------------------------------
// kinds

std::string to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::FixedIdentity: return "fixed-identity";
    case SketchKind::Coordinate: return "coordinate";
    case SketchKind::Block: return "block";
    case SketchKind::Gaussian: return "gaussian";
    case SketchKind::CountSketch: return "count-sketch";
    case SketchKind::CountMin: return "count-min";
  }
  return "unknown";
}

std::optional<SketchKind> parse_sketch_kind(const std::string& name) {
  for (auto k : {SketchKind::FixedIdentity, SketchKind::Coordinate, SketchKind::Block,
                 SketchKind::Gaussian, SketchKind::CountSketch, SketchKind::CountMin}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SketchDistribution

namespace {

std::size_t saturating_binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // exact while it fits; the running product stays an integer at every step
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::size_t>::max()) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(r);
}

template <class Visit>
void for_each_combination(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> c(k);
  std::iota(c.begin(), c.end(), std::size_t{0});
  while (true) {
    visit(c);
    std::size_t i = k;
    while (i > 0 && c[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++c[i - 1];
    for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

// Non-decreasing sequences of length k over [0, n): the multisets drawn with replacement.
template <class Visit>
void for_each_multiset(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> c(k, 0);
  while (true) {
    visit(c);
    std::size_t i = k;
    while (i > 0 && c[i - 1] == n - 1) --i;
    if (i == 0) return;
    const std::size_t v = c[i - 1] + 1;
    for (std::size_t j = i - 1; j < k; ++j) c[j] = v;
  }
}

// Probability of an ordered-with-replacement draw landing on this multiset.
double multiset_probability(const std::vector<std::size_t>& c, std::size_t n) {
  double log_p = std::lgamma(static_cast<double>(c.size()) + 1.0);
  std::size_t run = 1;
  for (std::size_t j = 1; j <= c.size(); ++j) {
    if (j < c.size() && c[j] == c[j - 1]) {
      ++run;
    } else {
      log_p -= std::lgamma(static_cast<double>(run) + 1.0);
      run = 1;
    }
  }
  log_p -= static_cast<double>(c.size()) * std::log(static_cast<double>(n));
  return std::exp(log_p);
}

std::size_t uniform_index(StreamRng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return pick(rng);
}

}  // namespace

SketchDistribution::SketchDistribution(SketchKind kind, std::size_t m, std::size_t q)
    : kind_(kind), m_(m), q_(q) {
  if (m == 0) throw InvalidInput("sketch distribution needs m >= 1");
  if (q == 0) throw InvalidInput("sketch distribution needs q >= 1");
}

SketchDistribution SketchDistribution::fixed_identity(std::size_t m) {
  return SketchDistribution(SketchKind::FixedIdentity, m, m);
}

SketchDistribution SketchDistribution::coordinate(std::vector<double> probabilities) {
  if (probabilities.empty()) throw InvalidInput("coordinate distribution needs probabilities");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidInput("coordinate probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidInput("coordinate probabilities must sum to 1 (got " + std::to_string(total) + ")");
  }
  SketchDistribution d(SketchKind::Coordinate, probabilities.size(), 1);
  d.p_ = std::move(probabilities);
  d.cdf_.resize(d.p_.size());
  std::partial_sum(d.p_.begin(), d.p_.end(), d.cdf_.begin());
  return d;
}

SketchDistribution SketchDistribution::block(std::size_t m, std::size_t q, bool with_replacement) {
  if (q > m) throw InvalidInput("block sketch needs 1 <= q <= m");
  SketchDistribution d(SketchKind::Block, m, q);
  d.with_replacement_ = with_replacement;
  return d;
}

SketchDistribution SketchDistribution::gaussian(std::size_t m, std::size_t q) {
  return SketchDistribution(SketchKind::Gaussian, m, q);
}

SketchDistribution SketchDistribution::count_sketch(std::size_t m, std::size_t q) {
  SketchDistribution d(SketchKind::CountSketch, m, q);
  d.with_replacement_ = true;
  return d;
}

SketchDistribution SketchDistribution::count_min(std::size_t m, std::size_t q) {
  SketchDistribution d(SketchKind::CountMin, m, q);
  d.with_replacement_ = true;
  return d;
}

SketchSample SketchDistribution::sample(StreamRng& rng) const {
  switch (kind_) {
    case SketchKind::FixedIdentity: {
      std::vector<std::size_t> idx(m_);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      return SketchSample::selection(m_, std::move(idx));
    }
    case SketchKind::Coordinate: {
      const double u = rng.uniform01();
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      auto i = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
      if (i >= m_) i = m_ - 1;
      // never land on a zero-probability row through rounding in the cdf tail
      while (p_[i] == 0.0 && i > 0) --i;
      return SketchSample::selection(m_, {i});
    }
    case SketchKind::Block: {
      std::vector<std::size_t> idx;
      idx.reserve(q_);
      if (with_replacement_) {
        for (std::size_t j = 0; j < q_; ++j) idx.push_back(uniform_index(rng, m_));
      } else {
        std::vector<std::size_t> pool(m_);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t j = 0; j < q_; ++j) {
          const std::size_t r = j + uniform_index(rng, m_ - j);
          std::swap(pool[j], pool[r]);
          idx.push_back(pool[j]);
        }
      }
      return SketchSample::selection(m_, std::move(idx));
    }
    case SketchKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix s(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(q_));
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, j) = normal(rng);
      }
      return SketchSample::dense(std::move(s));
    }
    case SketchKind::CountSketch: {
      std::vector<std::size_t> idx(q_);
      std::vector<double> sign(q_);
      for (std::size_t j = 0; j < q_; ++j) {
        const std::size_t r = uniform_index(rng, 2 * m_);
        idx[j] = r % m_;
        sign[j] = r < m_ ? 1.0 : -1.0;
      }
      return SketchSample::selection(m_, std::move(idx), std::move(sign));
    }
    case SketchKind::CountMin: {
      std::vector<std::size_t> idx(q_);
      for (std::size_t j = 0; j < q_; ++j) idx[j] = uniform_index(rng, m_);
      return SketchSample::selection(m_, std::move(idx));
    }
  }
  throw InvalidInput("unknown sketch kind");
}

std::optional<std::size_t> SketchDistribution::support_size() const {
  switch (kind_) {
    case SketchKind::FixedIdentity: return 1;
    case SketchKind::Coordinate:
      return static_cast<std::size_t>(std::count_if(p_.begin(), p_.end(), [](double p) { return p > 0.0; }));
    case SketchKind::Block:
      return with_replacement_ ? saturating_binomial(m_ + q_ - 1, q_) : saturating_binomial(m_, q_);
    case SketchKind::Gaussian: return std::nullopt;
    case SketchKind::CountSketch: return saturating_binomial(2 * m_ + q_ - 1, q_);
    case SketchKind::CountMin: return saturating_binomial(m_ + q_ - 1, q_);
  }
  return std::nullopt;
}

std::optional<FiniteSupport> SketchDistribution::support(std::size_t cap) const {
  const auto count = support_size();
  if (!count || *count > cap) return std::nullopt;
  FiniteSupport atoms;
  atoms.reserve(*count);
  switch (kind_) {
    case SketchKind::FixedIdentity: {
      std::vector<std::size_t> idx(m_);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      atoms.push_back({SketchSample::selection(m_, std::move(idx)), 1.0});
      break;
    }
    case SketchKind::Coordinate:
      for (std::size_t i = 0; i < m_; ++i) {
        if (p_[i] > 0.0) atoms.push_back({SketchSample::selection(m_, {i}), p_[i]});
      }
      break;
    case SketchKind::Block:
      if (with_replacement_) {
        for_each_multiset(m_, q_, [&](const std::vector<std::size_t>& c) {
          atoms.push_back({SketchSample::selection(m_, c), multiset_probability(c, m_)});
        });
      } else {
        const double p = 1.0 / static_cast<double>(*count);
        for_each_combination(m_, q_, [&](const std::vector<std::size_t>& c) {
          atoms.push_back({SketchSample::selection(m_, c), p});
        });
      }
      break;
    case SketchKind::Gaussian: return std::nullopt;
    case SketchKind::CountSketch:
      for_each_multiset(2 * m_, q_, [&](const std::vector<std::size_t>& c) {
        std::vector<std::size_t> idx(c.size());
        std::vector<double> sign(c.size());
        for (std::size_t j = 0; j < c.size(); ++j) {
          idx[j] = c[j] % m_;
          sign[j] = c[j] < m_ ? 1.0 : -1.0;
        }
        atoms.push_back({SketchSample::selection(m_, std::move(idx), std::move(sign)),
                         multiset_probability(c, 2 * m_)});
      });
      break;
    case SketchKind::CountMin:
      for_each_multiset(m_, q_, [&](const std::vector<std::size_t>& c) {
        atoms.push_back({SketchSample::selection(m_, c), multiset_probability(c, m_)});
      });
      break;
  }
  return atoms;
}

SketchDistribution kaczmarz_distribution(const Matrix& A) {
  require_finite(A, "A");
  const Vector row_sq = A.rowwise().squaredNorm();
  const double total = row_sq.sum();
  std::vector<double> p(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (row_sq(i) == 0.0) {
      throw InvalidInput("Kaczmarz sampling undefined: row " + std::to_string(i) + " of A is zero");
    }
    p[static_cast<std::size_t>(i)] = row_sq(i) / total;
  }
  // renormalise so the sum is 1 to rounding
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= s;
  return SketchDistribution::coordinate(std::move(p));
}

}  // namespace stochlin
