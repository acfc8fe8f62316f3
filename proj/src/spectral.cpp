#include "hermes/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hermes/errors.hpp"

namespace hermes {

namespace {

// Uniform draw in [0, 1) from raw engine output, so results do not depend
// on the standard library's distribution implementation.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t weighted_pick(std::mt19937_64& rng, const Eigen::VectorXd& weights) {
  const double total = weights.sum();
  if (total <= 0.0) return static_cast<std::size_t>(rng() % weights.size());
  double u = unit_draw(rng) * total;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(weights.size() - 1);
}

}  // namespace

int choose_cluster_count(const Eigen::VectorXd& eigenvalues, int k_max) {
  const int n = static_cast<int>(eigenvalues.size());
  const int max_k = std::min(k_max, n - 1);
  if (max_k < 1) return 1;
  int best_k = 1;
  double best_gap = -1.0;
  for (int k = 1; k <= max_k; ++k) {
    const double gap = eigenvalues[k] - eigenvalues[k - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return best_k;
}

std::vector<int> kmeans_rows(const Eigen::MatrixXd& rows, int k,
                             std::uint64_t seed, int max_iterations) {
  const Eigen::Index n = rows.rows();
  if (k < 1 || n < k) {
    throw ValidationError("kmeans: need at least k rows (" +
                          std::to_string(n) + " rows, k=" + std::to_string(k) +
                          ")");
  }
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  Eigen::MatrixXd centers(k, rows.cols());
  centers.row(0) = rows.row(static_cast<Eigen::Index>(rng() % n));
  Eigen::VectorXd dist2 =
      (rows.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    centers.row(c) = rows.row(static_cast<Eigen::Index>(weighted_pick(rng, dist2)));
    dist2 = dist2.cwiseMin(
        (rows.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += rows.row(i);
      counts[assign[static_cast<std::size_t>(i)]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Empty cluster: seize the point farthest from its current center.
      Eigen::Index far_i = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d =
            (rows.row(i) - centers.row(assign[static_cast<std::size_t>(i)]))
                .squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      centers.row(c) = rows.row(far_i);
      assign[static_cast<std::size_t>(far_i)] = c;
      changed = true;
    }
    if (!changed) break;
  }
  return assign;
}

std::vector<int> spectral_cluster(const std::vector<Embedding>& embeddings,
                                  const SpectralParams& params) {
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  if (n < 2) {
    throw ValidationError("spectral_cluster: need at least 2 embeddings");
  }
  if (params.k_max < 1) {
    throw ValidationError("spectral_cluster: k_max must be >= 1");
  }

  Eigen::MatrixXd affinity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    affinity(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      // Negative cosines break the normalized-Laplacian assumptions.
      const double a =
          std::clamp(cosine_similarity(embeddings[static_cast<std::size_t>(i)],
                                       embeddings[static_cast<std::size_t>(j)]),
                     0.0, 1.0);
      affinity(i, j) = a;
      affinity(j, i) = a;
    }
  }

  const Eigen::VectorXd degree = affinity.rowwise().sum();
  const Eigen::VectorXd inv_sqrt_d = degree.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd laplacian =
      Eigen::MatrixXd::Identity(n, n) -
      inv_sqrt_d.asDiagonal() * affinity * inv_sqrt_d.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error(
        "spectral_cluster: eigensolver did not converge to machine "
        "precision (Eigen::SelfAdjointEigenSolver tolerance)");
  }

  const int k = choose_cluster_count(solver.eigenvalues(), params.k_max);
  if (k == 1) return std::vector<int>(static_cast<std::size_t>(n), 1);
  if (n < k) {
    throw ValidationError("spectral_cluster: fewer embeddings than clusters");
  }

  Eigen::MatrixXd rows = solver.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = rows.row(i).norm();
    if (norm > 0.0) rows.row(i) /= norm;
  }

  std::vector<int> labels =
      kmeans_rows(rows, k, params.seed, params.kmeans_iterations);
  for (int& label : labels) label += 1;
  return labels;
}

}  // namespace hermes
