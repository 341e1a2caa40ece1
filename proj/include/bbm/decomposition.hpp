#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bbm/model.hpp"
#include "bbm/rng.hpp"

namespace bbm {

/// y = x - mean(x), i.e. the centering operator I - n^{-1}J applied in
/// O(n). Never materializes the matrix.
std::vector<double> apply_centering(std::span<const double> x);
void apply_centering_in_place(std::span<double> x);

/// Materializes A^(m) = I - 2^{-m} J (m <= 6 only) and returns its
/// numerical rank: singular values above 1e-9 relative to the largest.
int centering_rank(int m);

/// Materialized A^(m) as a dense row-major 2^m x 2^m matrix, m <= 6.
/// Exposed for the algebra tests (idempotence, A v = 0, product check).
std::vector<double> centering_matrix(int m);

/// Subsystem weights c_1..c_k with sum 0 and unit sum of squares.
struct SubsystemWeights {
  std::vector<double> c;
  /// Throws unless sum(c)=0 and sum(c^2)=1, each within 1e-12.
  void validate() const;
};

enum class LineagePolicy { FirstChild, SeededRandom };

/// Tracks one descendant per tagged particle across branchings.
/// Children 2i and 2i+1 descend from parent i.
class Lineage {
 public:
  Lineage(std::vector<std::size_t> initial, LineagePolicy policy,
          RngStream* rng = nullptr);
  void on_branch();
  std::span<const std::size_t> indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
  LineagePolicy policy_;
  RngStream* rng_;
};

/// Psi = sum_i c_i Z^{lineage(i)}, a d-vector; translation invariant by
/// construction.
std::vector<double> psi_functional(const ParticleCloud& cloud,
                                   const SubsystemWeights& w,
                                   std::span<const std::size_t> lineage);

}  // namespace bbm
