#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "hermes/embedding.hpp"

namespace hermes {

struct SpectralParams {
  int k_max = 20;           // upper bound on the cluster count
  std::uint64_t seed = 0;   // k-means seed
  int kmeans_iterations = 100;
};

// Clusters embeddings by cosine affinity:
//   affinity  = cosine clipped to [0, 1]
//   laplacian = I - D^{-1/2} A D^{-1/2}
//   k         = largest eigengap among the smallest k_max+1 eigenvalues
//   partition = seeded k-means over the row-normalized eigenvector rows
// Returns one label in {1..k} per embedding. Deterministic given the seed.
std::vector<int> spectral_cluster(const std::vector<Embedding>& embeddings,
                                  const SpectralParams& params);

// The eigengap rule on an ascending eigenvalue sequence.
int choose_cluster_count(const Eigen::VectorXd& eigenvalues, int k_max);

// Seeded k-means over matrix rows (k-means++ init, fixed iteration cap).
// Returns 0-based assignments.
std::vector<int> kmeans_rows(const Eigen::MatrixXd& rows, int k,
                             std::uint64_t seed, int max_iterations = 100);

}  // namespace hermes
