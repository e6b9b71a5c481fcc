#ifndef HYPERFUSE_KMEANS_HPP
#define HYPERFUSE_KMEANS_HPP

#include <cstdint>
#include <vector>

namespace hyperfuse {

struct KmeansResult {
    std::vector<float> centroids;          // k * dim
    std::vector<std::uint32_t> assignments;  // one word id per input row
    double inertia = 0.0;                  // sum of squared distances
    std::size_t iterations = 0;
    std::vector<double> inertia_history;   // one entry per Lloyd iteration
};

/// Lloyd's algorithm from k-means++ seeding. Deterministic given the seed;
/// nearest-centroid ties go to the lower centroid id; a centroid that loses
/// all members is re-seeded at the point farthest from its own centroid.
KmeansResult kmeans(const std::vector<float>& data, std::size_t n, std::size_t dim,
                    std::size_t k, std::uint64_t seed, std::size_t max_iters = 100,
                    double tol = 1e-6, unsigned threads = 1);

}  // namespace hyperfuse

#endif
