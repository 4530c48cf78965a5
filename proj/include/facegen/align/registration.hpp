#pragma once

#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace facegen {

// p -> scale * R p + t
struct SimilarityTransform {
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * rotation * p + translation; }
    Vertices apply(const Vertices& v) const;
    FaceMesh apply(const FaceMesh& m) const;
    // (this o other)(p) = this(other(p))
    SimilarityTransform compose(const SimilarityTransform& other) const;
    SimilarityTransform inverse() const;

    // Rotation about the y axis by `degrees`.
    static SimilarityTransform from_yaw(double degrees, const Eigen::Vector3d& t = Eigen::Vector3d::Zero(),
                                        double scale = 1.0);
};

// Least-squares transform taking src onto dst (Umeyama). Throws ArgumentError
// on count mismatch or fewer than 3 points, RankError when src or dst is
// collinear.
SimilarityTransform procrustes(const Vertices& src, const Vertices& dst, bool with_scale = true);

double rms_distance(const Vertices& a, const Vertices& b);

struct IcpConfig {
    int max_iters = 50;
    double tol = 1e-6;  // relative RMS change
    bool with_scale = false;
};

struct IcpResult {
    SimilarityTransform transform;
    double rms = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> rms_history;  // RMS after each correspondence update
};

// Nearest-neighbour ICP moving src onto dst, starting from `init`.
IcpResult icp(const Vertices& src, const Vertices& dst, const IcpConfig& cfg = {},
              const SimilarityTransform& init = {});
// Same, with correspondences at the closest point on the triangles incident
// to the nearest vertex of dst. Sliding along the surface avoids the
// vertex-snapping minima of the point-set version; meshes without faces fall
// back to it.
IcpResult icp(const Vertices& src, const FaceMesh& dst, const IcpConfig& cfg = {},
              const SimilarityTransform& init = {});

struct NicpConfig {
    std::vector<double> stiffness = {100, 30, 10, 3, 1};
    int iterations_per_level = 6;
    double cg_tolerance = 1e-12;
    double max_distance = 0.0;  // > 0 drops correspondences farther than this (mm)
    bool rigid_init = true;
};

struct NicpResult {
    FaceMesh mesh;
    SimilarityTransform rigid;
    std::vector<std::vector<double>> energy;  // per level, per iteration
};

// Deforms `templ` onto the scan points: rigid ICP, then per-vertex
// translations under a graph-Laplacian stiffness term for each level of the
// schedule. Throws ArgumentError for scans with < 100 points and
// NumericalError if a linear solve fails to converge.
NicpResult nicp(const FaceMesh& templ, const Vertices& scan, const NicpConfig& cfg = {});

// Uniform scale about the origin matching the pupil distance of `reference`.
FaceMesh interpupillary_scale(const FaceMesh& mesh, const FaceMesh& reference, const std::array<int, 2>& pupils);

// Unique undirected edges of a triangle list, sorted.
std::vector<std::array<int, 2>> mesh_edges(const Faces& faces);

}  // namespace facegen
