#pragma once

#include "facegen/core/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace facegen {

struct Neighbor {
    int index = -1;
    double dist_sq = 0.0;
};

// Axis-aligned 3-d tree over a fixed point set. Among equidistant points the
// lowest index wins.
class KdTree {
   public:
    explicit KdTree(const Vertices& points);

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    Neighbor nearest(const Eigen::Vector3d& q) const;
    std::vector<Neighbor> nearest_all(const Vertices& queries) const;

   private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1, right = -1;
    };
    int build(std::vector<int>& idx, int lo, int hi, int depth);
    void search(int node, const Eigen::Vector3d& q, Neighbor& best) const;

    Vertices points_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace facegen
