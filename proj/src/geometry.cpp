#include "hyak/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "hyak/rng.hpp"

namespace hyak {

namespace {

constexpr int kBoxEdge = -1;

// Polygon whose edge k runs from vertices[k] to vertices[k + 1] and lies on
// the bisector with village labels[k] (or on the box when negative).
struct LabeledPolygon {
    std::vector<Point> vertices;
    std::vector<int> labels;
};

LabeledPolygon box_polygon(const Box& box) {
    return {{Point(box.xmin, box.ymin), Point(box.xmax, box.ymin), Point(box.xmax, box.ymax),
             Point(box.xmin, box.ymax)},
            {kBoxEdge, kBoxEdge, kBoxEdge, kBoxEdge}};
}

// Keeps { p : normal . p <= offset }; edges created along the cut get `label`.
LabeledPolygon clip(const LabeledPolygon& poly, const Point& normal, double offset, int label) {
    LabeledPolygon out;
    const std::size_t m = poly.vertices.size();
    if (m == 0) return out;
    out.vertices.reserve(m + 1);
    out.labels.reserve(m + 1);

    for (std::size_t k = 0; k < m; ++k) {
        const Point& cur = poly.vertices[k];
        const Point& nxt = poly.vertices[(k + 1) % m];
        const double sc = normal.dot(cur) - offset;
        const double sn = normal.dot(nxt) - offset;
        const bool cur_in = sc <= 0.0;
        const bool nxt_in = sn <= 0.0;
        if (cur_in) {
            out.vertices.push_back(cur);
            out.labels.push_back(poly.labels[k]);
            if (!nxt_in) {
                const double t = sc / (sc - sn);
                out.vertices.push_back(cur + t * (nxt - cur));
                out.labels.push_back(label);
            }
        } else if (nxt_in) {
            const double t = sc / (sc - sn);
            out.vertices.push_back(cur + t * (nxt - cur));
            out.labels.push_back(poly.labels[k]);
        }
    }
    return out;
}

std::vector<Point> jittered(std::span<const Point> centroids) {
    // golden-angle directions, one per index
    constexpr double kGoldenAngle = std::numbers::pi * (3.0 - 2.2360679774997896964);
    std::vector<Point> out(centroids.begin(), centroids.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double angle = kGoldenAngle * static_cast<double>(i);
        out[i] += kTessellationJitter * Point(std::cos(angle), std::sin(angle));
    }
    return out;
}

void check_inputs(std::span<const Point> centroids, const Box& box, std::size_t minimum) {
    if (centroids.size() < minimum) {
        throw GeometryError(GeometryError::Kind::too_few_points,
                            "need at least " + std::to_string(minimum) + " centroids, got " +
                                std::to_string(centroids.size()));
    }
    if (!(box.width() > 0.0 && box.height() > 0.0)) {
        throw GeometryError(GeometryError::Kind::outside_box, "bounding box is empty");
    }
    const double tol = 1e-12 * box.diagonal();
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        if (!box.strictly_contains(centroids[i])) {
            throw GeometryError(GeometryError::Kind::outside_box,
                                "centroid " + std::to_string(i) + " is not strictly inside the box");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if ((centroids[i] - centroids[j]).norm() <= tol) {
                throw GeometryError(GeometryError::Kind::duplicate_centroid,
                                    "centroids " + std::to_string(j) + " and " + std::to_string(i) +
                                        " coincide");
            }
        }
    }
}

std::vector<LabeledPolygon> labeled_cells(std::span<const Point> centroids, const Box& box) {
    const std::vector<Point> pts = jittered(centroids);
    std::vector<LabeledPolygon> cells;
    cells.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        LabeledPolygon cell = box_polygon(box);
        for (std::size_t j = 0; j < pts.size() && !cell.vertices.empty(); ++j) {
            if (j == i) continue;
            const Point normal = pts[j] - pts[i];
            const double offset = 0.5 * (pts[j].squaredNorm() - pts[i].squaredNorm());
            cell = clip(cell, normal, offset, static_cast<int>(j));
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

}  // namespace

double Box::diagonal() const { return std::hypot(width(), height()); }

bool VillageMap::is_hdss(int village) const {
    return std::binary_search(hdss_ids.begin(), hdss_ids.end(), village);
}

std::vector<Polygon> voronoi_cells(std::span<const Point> centroids, const Box& box) {
    check_inputs(centroids, box, 1);
    std::vector<Polygon> out;
    for (auto& cell : labeled_cells(centroids, box)) {
        out.push_back(std::move(cell.vertices));
    }
    return out;
}

VillageMap build_neighbor_graph(std::span<const Point> centroids, const Box& box) {
    check_inputs(centroids, box, 2);
    const auto cells = labeled_cells(centroids, box);
    const std::size_t n = centroids.size();

    // shared edge length as seen from each side
    Eigen::MatrixXd shared = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = cells[i].vertices;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const int label = cells[i].labels[k];
            if (label < 0) continue;
            shared(i, label) += (v[(k + 1) % v.size()] - v[k]).norm();
        }
    }

    const double min_edge = 1e-12 * box.diagonal();
    VillageMap map;
    map.centroids.assign(centroids.begin(), centroids.end());
    map.box = box;
    map.neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && std::max(shared(i, j), shared(j, i)) > min_edge) {
                map.neighbors[i].push_back(static_cast<int>(j));
            }
        }
    }
    for (const auto& cell : cells) {
        map.cells.push_back(cell.vertices);
    }
    return map;
}

Box padded_bounding_box(std::span<const Point> centroids, double fraction) {
    if (centroids.empty()) {
        throw GeometryError(GeometryError::Kind::too_few_points, "no centroids");
    }
    Box box{centroids[0].x(), centroids[0].y(), centroids[0].x(), centroids[0].y()};
    for (const auto& p : centroids) {
        box.xmin = std::min(box.xmin, p.x());
        box.xmax = std::max(box.xmax, p.x());
        box.ymin = std::min(box.ymin, p.y());
        box.ymax = std::max(box.ymax, p.y());
    }
    // a degenerate extent still needs a usable margin
    const double dx = std::max(box.width(), 1e-6) * fraction;
    const double dy = std::max(box.height(), 1e-6) * fraction;
    return {box.xmin - dx, box.ymin - dy, box.xmax + dx, box.ymax + dy};
}

std::vector<Point> generate_layout(std::uint64_t seed, int village_count) {
    constexpr double kWidth = 30.0;
    constexpr double kHeight = 20.0;
    constexpr int kCandidates = 12;
    Rng rng = make_rng(seed, 0, "layout");
    std::uniform_real_distribution<double> ux(0.0, kWidth);
    std::uniform_real_distribution<double> uy(0.0, kHeight);

    std::vector<Point> points;
    points.reserve(village_count);
    for (int i = 0; i < village_count; ++i) {
        Point best(ux(rng), uy(rng));
        double best_dist = -1.0;
        for (int c = 0; c < kCandidates; ++c) {
            const Point candidate = c == 0 ? best : Point(ux(rng), uy(rng));
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& p : points) nearest = std::min(nearest, (p - candidate).norm());
            if (nearest > best_dist) {
                best_dist = nearest;
                best = candidate;
            }
        }
        // four decimals keeps the layout exactly representable in config files
        points.emplace_back(std::round(best.x() * 1e4) / 1e4, std::round(best.y() * 1e4) / 1e4);
    }
    return points;
}

double polygon_area(const Polygon& polygon) {
    double twice = 0.0;
    for (std::size_t k = 0; k < polygon.size(); ++k) {
        const Point& a = polygon[k];
        const Point& b = polygon[(k + 1) % polygon.size()];
        twice += a.x() * b.y() - a.y() * b.x();
    }
    return 0.5 * twice;
}

bool polygon_is_convex(const Polygon& polygon, double tolerance) {
    const std::size_t m = polygon.size();
    if (m < 3) return false;
    for (std::size_t k = 0; k < m; ++k) {
        const Point e1 = polygon[(k + 1) % m] - polygon[k];
        const Point e2 = polygon[(k + 2) % m] - polygon[(k + 1) % m];
        const double cross = e1.x() * e2.y() - e1.y() * e2.x();
        if (cross < -tolerance * std::max(1.0, e1.norm() * e2.norm())) return false;
    }
    return true;
}

bool polygon_contains(const Polygon& polygon, const Point& p, double tolerance) {
    const std::size_t m = polygon.size();
    for (std::size_t k = 0; k < m; ++k) {
        const Point e = polygon[(k + 1) % m] - polygon[k];
        const Point d = p - polygon[k];
        if (e.x() * d.y() - e.y() * d.x() < -tolerance * std::max(1.0, e.norm())) return false;
    }
    return true;
}

bool graph_is_connected(const std::vector<std::vector<int>>& neighbors) {
    const std::size_t n = neighbors.size();
    if (n == 0) return true;
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (const int w : neighbors[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++reached;
                frontier.push(w);
            }
        }
    }
    return reached == n;
}

}  // namespace hyak
