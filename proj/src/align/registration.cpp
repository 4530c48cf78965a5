#include "facegen/align/registration.hpp"

#include "facegen/align/kdtree.hpp"
#include "facegen/core/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace facegen {

Vertices SimilarityTransform::apply(const Vertices& v) const {
    Vertices out = (scale * (v * rotation.transpose())).rowwise() + translation.transpose();
    return out;
}

FaceMesh SimilarityTransform::apply(const FaceMesh& m) const {
    FaceMesh out = m;
    out.vertices = apply(m.vertices);
    return out;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const {
    SimilarityTransform r;
    r.scale = scale * other.scale;
    r.rotation = rotation * other.rotation;
    r.translation = scale * rotation * other.translation + translation;
    return r;
}

SimilarityTransform SimilarityTransform::inverse() const {
    SimilarityTransform r;
    r.scale = 1.0 / scale;
    r.rotation = rotation.transpose();
    r.translation = -r.scale * (r.rotation * translation);
    return r;
}

SimilarityTransform SimilarityTransform::from_yaw(double degrees, const Eigen::Vector3d& t, double scale) {
    SimilarityTransform r;
    r.scale = scale;
    r.rotation = Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
    r.translation = t;
    return r;
}

namespace {
bool collinear(const Eigen::MatrixXd& centered) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    const auto& s = svd.singularValues();
    return s[0] == 0.0 || s[1] <= 1e-10 * s[0];
}
}  // namespace

SimilarityTransform procrustes(const Vertices& src, const Vertices& dst, bool with_scale) {
    if (src.rows() != dst.rows()) throw ArgumentError("procrustes needs equal point counts");
    if (src.rows() < 3) throw ArgumentError("procrustes needs at least 3 points");
    const double n = static_cast<double>(src.rows());
    const Eigen::RowVector3d ms = src.colwise().mean();
    const Eigen::RowVector3d md = dst.colwise().mean();
    const Eigen::MatrixXd xs = src.rowwise() - ms;
    const Eigen::MatrixXd xd = dst.rowwise() - md;
    if (collinear(xs) || collinear(xd)) throw RankError("procrustes: points are collinear");

    const Eigen::Matrix3d cov = xd.transpose() * xs / n;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d(1.0, 1.0, 1.0);
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d[2] = -1.0;

    SimilarityTransform t;
    t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    if (with_scale) {
        const double var_s = xs.squaredNorm() / n;
        t.scale = svd.singularValues().dot(d) / var_s;
    }
    t.translation = md.transpose() - t.scale * t.rotation * ms.transpose();
    return t;
}

double rms_distance(const Vertices& a, const Vertices& b) {
    if (a.rows() == 0) return 0.0;
    return std::sqrt((a - b).rowwise().squaredNorm().mean());
}

namespace {

using Vec3 = Eigen::Vector3d;

// Closest point of triangle abc to p (Voronoi-region walk).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && d4 - d3 >= 0 && d5 - d6 >= 0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double den = 1.0 / (va + vb + vc);
    return a + ab * (vb * den) + ac * (vc * den);
}

// Shared ICP loop; `match` fills the correspondence of every moved point
// and returns the summed squared distance.
template <class Match>
IcpResult icp_loop(const Vertices& src, const IcpConfig& cfg, const SimilarityTransform& init, Match&& match) {
    IcpResult res;
    res.transform = init;
    SimilarityTransform current = init;
    Vertices matched(src.rows(), 3);
    double prev = std::numeric_limits<double>::infinity();
    double best = prev;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const double rms = std::sqrt(match(current.apply(src), matched) / static_cast<double>(src.rows()));
        res.rms_history.push_back(rms);
        res.iterations = it + 1;
        if (rms < best) {
            best = rms;
            res.transform = current;
            res.rms = rms;
        }
        if (rms <= 1e-12 || (std::isfinite(prev) && std::abs(prev - rms) <= cfg.tol * prev)) {
            res.converged = true;
            break;
        }
        prev = rms;
        current = procrustes(src, matched, cfg.with_scale);
    }
    return res;
}

}  // namespace

IcpResult icp(const Vertices& src, const Vertices& dst, const IcpConfig& cfg, const SimilarityTransform& init) {
    if (src.rows() == 0 || dst.rows() == 0) throw ArgumentError("icp needs non-empty point sets");
    const KdTree tree(dst);
    return icp_loop(src, cfg, init, [&](const Vertices& moved, Vertices& matched) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < moved.rows(); ++i) {
            const auto nb = tree.nearest(moved.row(i).transpose());
            matched.row(i) = dst.row(nb.index);
            sum += nb.dist_sq;
        }
        return sum;
    });
}

IcpResult icp(const Vertices& src, const FaceMesh& dst, const IcpConfig& cfg, const SimilarityTransform& init) {
    if (src.rows() == 0 || dst.vertices.rows() == 0) throw ArgumentError("icp needs non-empty point sets");
    if (dst.faces.rows() == 0) return icp(src, dst.vertices, cfg, init);
    const Vertices& v = dst.vertices;
    std::vector<std::vector<int>> ring(v.rows());
    for (Eigen::Index f = 0; f < dst.faces.rows(); ++f)
        for (int k = 0; k < 3; ++k) ring[dst.faces(f, k)].push_back(static_cast<int>(f));
    const KdTree tree(v);
    return icp_loop(src, cfg, init, [&](const Vertices& moved, Vertices& matched) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < moved.rows(); ++i) {
            const Vec3 q = moved.row(i).transpose();
            const auto nb = tree.nearest(q);
            Vec3 best = v.row(nb.index).transpose();
            double best_d = nb.dist_sq;
            for (int f : ring[nb.index]) {
                const Vec3 c = closest_on_triangle(q, v.row(dst.faces(f, 0)).transpose(),
                                                   v.row(dst.faces(f, 1)).transpose(),
                                                   v.row(dst.faces(f, 2)).transpose());
                const double d = (c - q).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            matched.row(i) = best.transpose();
            sum += best_d;
        }
        return sum;
    });
}

std::vector<std::array<int, 2>> mesh_edges(const Faces& faces) {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(faces.rows() * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 0; k < 3; ++k) {
            int a = faces(f, k), b = faces(f, (k + 1) % 3);
            if (a > b) std::swap(a, b);
            edges.push_back({a, b});
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

NicpResult nicp(const FaceMesh& templ, const Vertices& scan, const NicpConfig& cfg) {
    if (scan.rows() < 100) throw ArgumentError("nicp needs a scan with at least 100 points");
    const Eigen::Index n = templ.vertices.rows();
    NicpResult res;
    Vertices base = templ.vertices;
    if (cfg.rigid_init) {
        res.rigid = icp(base, scan, {100, 1e-9, false}).transform;
        base = res.rigid.apply(base);
    }
    const KdTree tree(scan);
    const auto edges = mesh_edges(templ.faces);

    std::vector<Eigen::Triplet<double>> lap;
    lap.reserve(edges.size() * 4);
    for (const auto& e : edges) {
        lap.emplace_back(e[0], e[0], 1.0);
        lap.emplace_back(e[1], e[1], 1.0);
        lap.emplace_back(e[0], e[1], -1.0);
        lap.emplace_back(e[1], e[0], -1.0);
    }
    Eigen::SparseMatrix<double> laplacian(n, n);
    laplacian.setFromTriplets(lap.begin(), lap.end());

    Eigen::MatrixXd disp = Eigen::MatrixXd::Zero(n, 3);
    Eigen::MatrixXd target(n, 3);
    Eigen::VectorXd w(n);
    auto energy = [&](double alpha) {
        double data = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) data += w[i] * (base.row(i) + disp.row(i) - target.row(i)).squaredNorm();
        double stiff = 0.0;
        for (const auto& e : edges) stiff += (disp.row(e[0]) - disp.row(e[1])).squaredNorm();
        return data + alpha * stiff;
    };
    auto correspond = [&] {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Vector3d p = (base.row(i) + disp.row(i)).transpose();
            const auto nb = tree.nearest(p);
            target.row(i) = scan.row(nb.index);
            w[i] = (cfg.max_distance > 0.0 && nb.dist_sq > cfg.max_distance * cfg.max_distance) ? 0.0 : 1.0;
        }
    };

    for (double alpha : cfg.stiffness) {
        Eigen::SparseMatrix<double> a = alpha * laplacian;
        std::vector<double> level;
        for (int it = 0; it < cfg.iterations_per_level; ++it) {
            correspond();
            level.push_back(energy(alpha));
            Eigen::SparseMatrix<double> sys = a;
            for (Eigen::Index i = 0; i < n; ++i) sys.coeffRef(i, i) += w[i];
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
            cg.setTolerance(cfg.cg_tolerance);
            cg.setMaxIterations(10 * n);
            cg.compute(sys);
            for (int c = 0; c < 3; ++c) {
                const Eigen::VectorXd rhs = w.cwiseProduct(target.col(c) - base.col(c));
                Eigen::VectorXd x = cg.solveWithGuess(rhs, disp.col(c));
                if (cg.info() != Eigen::Success)
                    throw NumericalError("nicp: conjugate gradient did not converge at stiffness " +
                                         std::to_string(alpha));
                disp.col(c) = x;
            }
        }
        correspond();
        level.push_back(energy(alpha));
        res.energy.push_back(std::move(level));
    }
    res.mesh = templ;
    res.mesh.vertices = base + disp;
    return res;
}

FaceMesh interpupillary_scale(const FaceMesh& mesh, const FaceMesh& reference, const std::array<int, 2>& pupils) {
    auto ipd = [&](const FaceMesh& m) {
        for (int p : pupils)
            if (p < 0 || static_cast<std::size_t>(p) >= m.num_vertices())
                throw ValidationError("pupil index out of range");
        return (m.vertices.row(pupils[0]) - m.vertices.row(pupils[1])).norm();
    };
    const double d = ipd(mesh);
    if (d <= 0.0) throw ValidationError("mesh has coincident pupil vertices");
    FaceMesh out = mesh;
    out.vertices *= ipd(reference) / d;
    return out;
}

}  // namespace facegen
