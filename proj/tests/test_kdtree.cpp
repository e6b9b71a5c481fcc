#include <doctest.h>

#include <algorithm>
#include <vector>

#include "hyperfuse/kdtree.hpp"
#include "hyperfuse/rng.hpp"

using namespace hyperfuse;

namespace {

std::vector<KdTree::Neighbor> brute_force(const std::vector<float>& points,
                                          std::size_t n, std::size_t dim,
                                          const float* query, std::size_t count) {
    std::vector<KdTree::Neighbor> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff =
                static_cast<double>(points[i * dim + j]) - query[j];
            d += diff * diff;
        }
        all[i] = {static_cast<std::uint32_t>(i), d};
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.id < b.id;
    });
    all.resize(std::min(count, all.size()));
    return all;
}

void check_agrees(const std::vector<float>& points, std::size_t n, std::size_t dim,
                  const KdTree& tree, const float* query, std::size_t count) {
    const auto expect = brute_force(points, n, dim, query, count);
    const auto got = tree.knn(query, count);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == expect[i].id);
        CHECK(got[i].dist_sq == expect[i].dist_sq);
    }
}

}  // namespace

TEST_CASE("matches brute force on random low-dimensional data") {
    Xoshiro256 rng(17);
    const std::size_t n = 500, dim = 3;
    std::vector<float> points(n * dim);
    for (auto& v : points) v = static_cast<float>(rng.uniform() * 20.0 - 10.0);
    const KdTree tree(points, n, dim);

    for (int q = 0; q < 200; ++q) {
        float query[3];
        for (auto& v : query) v = static_cast<float>(rng.uniform() * 24.0 - 12.0);
        check_agrees(points, n, dim, tree, query, 1 + q % 5);
    }
}

TEST_CASE("matches brute force on 128-d descriptors") {
    Xoshiro256 rng(4);
    const std::size_t n = 800, dim = 128;
    std::vector<float> points(n * dim);
    for (auto& v : points) v = static_cast<float>(rng.uniform());
    const KdTree tree(points, n, dim);

    for (int q = 0; q < 50; ++q) {
        std::vector<float> query(dim);
        for (auto& v : query) v = static_cast<float>(rng.uniform());
        check_agrees(points, n, dim, tree, query.data(), 2);
    }
}

TEST_CASE("equidistant ties resolve to the lower id") {
    // symmetric pair around the query; both at distance 1
    const std::vector<float> points = {1.0f, 0.0f, -1.0f, 0.0f, 5.0f, 5.0f};
    const KdTree tree(points, 3, 2);
    const float query[2] = {0.0f, 0.0f};
    const auto nn = tree.knn(query, 2);
    CHECK(nn[0].id == 0);
    CHECK(nn[1].id == 1);
    CHECK(nn[0].dist_sq == nn[1].dist_sq);
}

TEST_CASE("duplicate points are all returned in id order") {
    std::vector<float> points;
    for (int i = 0; i < 20; ++i) {
        points.push_back(3.0f);
        points.push_back(4.0f);
    }
    const KdTree tree(points, 20, 2);
    const float query[2] = {3.0f, 4.0f};
    const auto nn = tree.knn(query, 5);
    for (std::uint32_t i = 0; i < 5; ++i) {
        CHECK(nn[i].id == i);
        CHECK(nn[i].dist_sq == 0.0);
    }
}

TEST_CASE("count above size returns every point") {
    const std::vector<float> points = {0.0f, 1.0f, 2.0f};
    const KdTree tree(points, 3, 1);
    const float query = 1.1f;
    CHECK(tree.knn(&query, 10).size() == 3);
}
