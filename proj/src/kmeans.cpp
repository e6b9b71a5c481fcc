#include "hyperfuse/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyperfuse/errors.hpp"
#include "hyperfuse/parallel.hpp"
#include "hyperfuse/rng.hpp"

namespace hyperfuse {

namespace {

double sq_dist(const float* a, const float* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

// k-means++ seeding; falls back to the lowest-index unused point when all
// remaining squared distances are zero (duplicate-heavy data).
std::vector<float> seed_centroids(const std::vector<float>& data, std::size_t n,
                                  std::size_t dim, std::size_t k, Xoshiro256& rng) {
    std::vector<float> centroids(k * dim);
    std::vector<char> used(n, 0);
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());

    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy_n(&data[first * dim], dim, centroids.begin());
    used[first] = 1;

    for (std::size_t c = 1; c < k; ++c) {
        const float* last = &centroids[(c - 1) * dim];
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = std::min(dist[i], sq_dist(&data[i * dim], last, dim));
            if (!used[i]) total += dist[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (used[i]) continue;
                target -= dist[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick == n) {
            // all mass consumed (or zero): lowest-index unused point
            for (std::size_t i = 0; i < n; ++i)
                if (!used[i]) {
                    pick = i;
                    break;
                }
        }
        used[pick] = 1;
        std::copy_n(&data[pick * dim], dim, &centroids[c * dim]);
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const std::vector<float>& data, std::size_t n, std::size_t dim,
                    std::size_t k, std::uint64_t seed, std::size_t max_iters,
                    double tol, unsigned threads) {
    if (k < 1 || n < k) throw TooFewPoints(n, k);

    Xoshiro256 rng(seed);
    KmeansResult res;
    res.centroids = seed_centroids(data, n, dim, k, rng);
    res.assignments.assign(n, 0);
    std::vector<double> point_cost(n, 0.0);

    const auto assign = [&]() {
        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::uint32_t best_c = 0;
                for (std::size_t c = 0; c < k; ++c) {
                    const double d = sq_dist(&data[i * dim], &res.centroids[c * dim], dim);
                    if (d < best) {  // ties keep the lower centroid id
                        best = d;
                        best_c = static_cast<std::uint32_t>(c);
                    }
                }
                res.assignments[i] = best_c;
                point_cost[i] = best;
            }
        });
        double inertia = 0.0;
        for (double c : point_cost) inertia += c;
        return inertia;
    };

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        res.iterations = iter + 1;
        res.inertia = assign();
        res.inertia_history.push_back(res.inertia);

        // empty-cluster repair: re-seed at the farthest point from its centroid
        std::vector<std::size_t> members(k, 0);
        for (std::uint32_t a : res.assignments) members[a]++;
        for (std::size_t c = 0; c < k; ++c) {
            if (members[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (members[res.assignments[i]] <= 1) continue;  // keep donors nonempty
                if (point_cost[i] > far_d) {
                    far_d = point_cost[i];
                    far = i;
                }
            }
            members[res.assignments[far]]--;
            members[c] = 1;
            res.assignments[far] = static_cast<std::uint32_t>(c);
            std::copy_n(&data[far * dim], dim, &res.centroids[c * dim]);
            point_cost[far] = 0.0;
        }

        // centroid update
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = res.assignments[i];
            counts[c]++;
            for (std::size_t d = 0; d < dim; ++d)
                sums[c * dim + d] += data[i * dim + d];
        }
        double max_move = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double move = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const float next = static_cast<float>(sums[c * dim + d] /
                                                      static_cast<double>(counts[c]));
                const double delta = next - res.centroids[c * dim + d];
                move += delta * delta;
                res.centroids[c * dim + d] = next;
            }
            max_move = std::max(max_move, std::sqrt(move));
        }
        if (max_move < tol) break;
    }

    // final assignment so the result is a fixed point of reassignment
    res.inertia = assign();
    if (res.inertia_history.empty() || res.inertia < res.inertia_history.back())
        res.inertia_history.push_back(res.inertia);
    else
        res.inertia = res.inertia_history.back();
    return res;
}

}  // namespace hyperfuse
