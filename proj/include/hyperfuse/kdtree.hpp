#ifndef HYPERFUSE_KDTREE_HPP
#define HYPERFUSE_KDTREE_HPP

#include <cstdint>
#include <vector>

namespace hyperfuse {

/// Exact k-d tree over fixed-dimension float points. Splits on the
/// max-variance dimension at the median; queries backtrack, so results match
/// a brute-force linear scan exactly, including the lower-id tie rule.
class KdTree {
public:
    struct Neighbor {
        std::uint32_t id = 0;
        double dist_sq = 0.0;
    };

    KdTree() = default;
    KdTree(std::vector<float> points, std::size_t n, std::size_t dim);

    /// `count` exact nearest neighbors in ascending (distance, id) order.
    std::vector<Neighbor> knn(const float* query, std::size_t count = 2) const;

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    const float* point(std::size_t id) const { return &points_[id * dim_]; }

private:
    struct Node {
        std::int32_t left = -1;   // child node index, -1 for leaf
        std::int32_t right = -1;
        std::uint32_t begin = 0;  // index range into order_ (leaves)
        std::uint32_t end = 0;
        std::uint16_t split_dim = 0;
        float split_val = 0.0f;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const float* query, std::size_t count,
                std::vector<Neighbor>& best) const;

    std::vector<float> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    static constexpr std::uint32_t kLeafSize = 8;
};

}  // namespace hyperfuse

#endif
