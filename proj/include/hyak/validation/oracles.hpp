#pragma once

// Reference computations that deliberately take a different route from the
// production code they check. Slow by design; meant for tests and the
// `validate` command only.

#include <span>
#include <vector>

#include "hyak/geometry.hpp"
#include "hyak/sampling.hpp"

namespace hyak::oracle {

/// Cell of `site` as the convex hull of every pairwise intersection of the
/// constraint lines (bisectors and box sides) that satisfies all constraints.
Polygon voronoi_cell_by_vertex_enumeration(std::span<const Point> sites, const Box& box, int site);

/// Cells of `i` and `j` share an edge when at least two distinct vertices of
/// both enumerated cells lie on their common bisector.
std::vector<std::vector<int>> shared_edge_adjacency(std::span<const Point> sites, const Box& box);

/// Delaunay adjacency by the empty-circumcircle test over all point triples.
std::vector<std::vector<int>> delaunay_adjacency(std::span<const Point> sites);

/// Circumcentres of all Delaunay triangles (Voronoi vertices before clipping).
std::vector<Point> delaunay_circumcentres(std::span<const Point> sites);

/// Moore-Penrose inverse of a connected-graph ICAR structure via
/// (Q + 11'/n)^-1 - 11'/n.
Eigen::MatrixXd icar_pseudo_inverse(const Eigen::MatrixXd& structure);

struct LogisticOptimum {
    Eigen::VectorXd beta;
    Eigen::Vector4d gamma;
    double log_likelihood = 0.0;
    int evaluations = 0;
};

/// Maximises the grouped binomial likelihood of logit p = x.beta + gamma_j with
/// restarted Nelder-Mead (no derivatives).
LogisticOptimum maximise_logistic_likelihood(const SampleData& sample, const Eigen::MatrixXd& x);

/// (1/S) sum_s sum_ij (Yhat - Y)^2 computed directly.
double direct_mse(std::span<const CellMatrix> predictions, std::span<const CellMatrix> truths);

}  // namespace hyak::oracle
