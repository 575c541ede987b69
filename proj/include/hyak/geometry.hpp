#pragma once

// Study-region geometry: clipped Voronoi cells around village centroids and
// the shared-edge neighbour graph used by the spatial model.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyak/types.hpp"

namespace hyak {

struct Box {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 1.0;
    double ymax = 1.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    double diagonal() const;
    bool strictly_contains(const Point& p) const {
        return p.x() > xmin && p.x() < xmax && p.y() > ymin && p.y() < ymax;
    }
};

/// Vertices in counterclockwise order, no repeated closing vertex.
using Polygon = std::vector<Point>;

class GeometryError : public std::invalid_argument {
public:
    enum class Kind { too_few_points, duplicate_centroid, outside_box, disconnected };

    GeometryError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct VillageMap {
    std::vector<Point> centroids;
    Box box;
    std::vector<Polygon> cells;
    /// neighbors[i] is sorted ascending; adjacency is symmetric and irreflexive.
    std::vector<std::vector<int>> neighbors;
    /// Villages designated as surveillance (HDSS) sites, sorted ascending.
    std::vector<int> hdss_ids;

    int village_count() const { return static_cast<int>(centroids.size()); }
    int degree(int village) const { return static_cast<int>(neighbors.at(village).size()); }
    bool is_hdss(int village) const;
};

/// Magnitude of the deterministic per-point jitter applied before tessellation.
inline constexpr double kTessellationJitter = 1e-9;

/// One clipped convex cell per centroid. A single centroid owns the whole box.
std::vector<Polygon> voronoi_cells(std::span<const Point> centroids, const Box& box);

/// Cells plus the adjacency of cells sharing a positive-length edge.
VillageMap build_neighbor_graph(std::span<const Point> centroids, const Box& box);

/// Bounding box of the centroids grown by `fraction` of its extent on each side.
Box padded_bounding_box(std::span<const Point> centroids, double fraction = 0.15);

/// Fixed reproducible village layout: best-candidate sampling in a 30 x 20
/// map-unit region.
std::vector<Point> generate_layout(std::uint64_t seed, int village_count);

inline constexpr std::uint64_t kDefaultLayoutSeed = 0x41474E43'4F555254ULL;  // "AGNCOURT"

double polygon_area(const Polygon& polygon);
bool polygon_is_convex(const Polygon& polygon, double tolerance = 1e-12);
bool polygon_contains(const Polygon& polygon, const Point& p, double tolerance = 1e-9);

/// True when every village can reach every other one through neighbour links.
bool graph_is_connected(const std::vector<std::vector<int>>& neighbors);

}  // namespace hyak
