#include "facegen/align/kdtree.hpp"

#include "facegen/core/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace facegen {

KdTree::KdTree(const Vertices& points) : points_(points) {
    if (points_.rows() == 0) throw ArgumentError("cannot build a k-d tree over an empty point set");
    std::vector<int> idx(points_.rows());
    std::iota(idx.begin(), idx.end(), 0);
    nodes_.reserve(idx.size());
    root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](int a, int b) {
        const double pa = points_(a, axis), pb = points_(b, axis);
        return pa < pb || (pa == pb && a < b);
    });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({idx[mid], axis, -1, -1});
    const int left = build(idx, lo, mid, depth + 1);
    const int right = build(idx, mid + 1, hi, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(int node, const Eigen::Vector3d& q, Neighbor& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const double d = (points_.row(n.point).transpose() - q).squaredNorm();
    if (d < best.dist_sq || (d == best.dist_sq && n.point < best.index)) best = {n.point, d};
    const double diff = q[n.axis] - points_(n.point, n.axis);
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    search(near, q, best);
    // Equal-distance points on the far side may still have a lower index.
    if (diff * diff <= best.dist_sq) search(far, q, best);
}

Neighbor KdTree::nearest(const Eigen::Vector3d& q) const {
    Neighbor best{-1, std::numeric_limits<double>::infinity()};
    search(root_, q, best);
    return best;
}

std::vector<Neighbor> KdTree::nearest_all(const Vertices& queries) const {
    std::vector<Neighbor> out(queries.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) out[i] = nearest(queries.row(i).transpose());
    return out;
}

}  // namespace facegen
