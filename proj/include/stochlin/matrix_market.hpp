#pragma once

#include "stochlin/linalg.hpp"

#include <string>

namespace stochlin {

// Matrix Market reader: coordinate or array storage; real, integer or pattern
// fields; general, symmetric or skew-symmetric layout. Symmetric storage is
// expanded. Errors carry the file path and line number.
Matrix load_matrix_market(const std::string& path);
Matrix parse_matrix_market(const std::string& text, const std::string& path = "<string>");

// A vector from a Matrix Market n x 1 (or 1 x n) matrix, or a plain file with
// one value per line (blank lines and lines starting with '#' or '%' skipped).
Vector load_vector(const std::string& path);

}  // namespace stochlin
