#include "hyperfuse/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

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

}  // namespace

KdTree::KdTree(std::vector<float> points, std::size_t n, std::size_t dim)
    : points_(std::move(points)), n_(n), dim_(dim) {
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    if (n > 0) build(0, static_cast<std::uint32_t>(n));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const std::int32_t node_idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node_idx].begin = begin;
    nodes_[node_idx].end = end;
    if (end - begin <= kLeafSize) return node_idx;

    // split on the max-variance dimension
    std::size_t split_dim = 0;
    double best_var = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
        double sum = 0.0, sq = 0.0;
        for (std::uint32_t i = begin; i < end; ++i) {
            const double v = points_[order_[i] * dim_ + d];
            sum += v;
            sq += v * v;
        }
        const double count = end - begin;
        const double var = sq / count - (sum / count) * (sum / count);
        if (var > best_var) {
            best_var = var;
            split_dim = d;
        }
    }
    if (best_var <= 0.0) return node_idx;  // all points identical: stay a leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
                         const float va = points_[a * dim_ + split_dim];
                         const float vb = points_[b * dim_ + split_dim];
                         return va < vb || (va == vb && a < b);
                     });

    nodes_[node_idx].split_dim = static_cast<std::uint16_t>(split_dim);
    nodes_[node_idx].split_val = points_[order_[mid] * dim_ + split_dim];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[node_idx].left = left;
    nodes_[node_idx].right = right;
    return node_idx;
}

void KdTree::search(std::int32_t node_idx, const float* query, std::size_t count,
                    std::vector<Neighbor>& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_idx)];

    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t id = order_[i];
            const Neighbor cand{id, sq_dist(query, &points_[id * dim_], dim_)};
            const auto worse = [](const Neighbor& a, const Neighbor& b) {
                return a.dist_sq < b.dist_sq ||
                       (a.dist_sq == b.dist_sq && a.id < b.id);
            };
            if (best.size() < count) {
                best.insert(std::upper_bound(best.begin(), best.end(), cand, worse),
                            cand);
            } else if (worse(cand, best.back())) {
                best.pop_back();
                best.insert(std::upper_bound(best.begin(), best.end(), cand, worse),
                            cand);
            }
        }
        return;
    }

    const double delta =
        static_cast<double>(query[node.split_dim]) - node.split_val;
    const std::int32_t near = delta < 0.0 ? node.left : node.right;
    const std::int32_t far = delta < 0.0 ? node.right : node.left;
    search(near, query, count, best);
    if (best.size() < count || delta * delta <= best.back().dist_sq)
        search(far, query, count, best);
}

std::vector<KdTree::Neighbor> KdTree::knn(const float* query, std::size_t count) const {
    std::vector<Neighbor> best;
    best.reserve(count + 1);
    if (count == 0 || n_ == 0) return best;
    search(0, query, count, best);
    return best;
}

}  // namespace hyperfuse
