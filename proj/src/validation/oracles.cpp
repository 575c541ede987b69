#include "hyak/validation/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/LU>

namespace hyak::oracle {

namespace {

// a.x <= b
struct HalfPlane {
    Eigen::Vector2d a;
    double b;
};

std::vector<HalfPlane> constraints_for(std::span<const Point> sites, const Box& box, int site) {
    std::vector<HalfPlane> planes;
    const Point& p = sites[site];
    for (int j = 0; j < static_cast<int>(sites.size()); ++j) {
        if (j == site) continue;
        const Point& q = sites[j];
        // |x - p|^2 <= |x - q|^2  <=>  2(q - p).x <= |q|^2 - |p|^2
        planes.push_back({2.0 * (q - p), q.squaredNorm() - p.squaredNorm()});
    }
    planes.push_back({{-1.0, 0.0}, -box.xmin});
    planes.push_back({{1.0, 0.0}, box.xmax});
    planes.push_back({{0.0, -1.0}, -box.ymin});
    planes.push_back({{0.0, 1.0}, box.ymax});
    return planes;
}

double scale_of(const Box& box) { return std::hypot(box.xmax - box.xmin, box.ymax - box.ymin); }

}  // namespace

Polygon voronoi_cell_by_vertex_enumeration(std::span<const Point> sites, const Box& box, int site) {
    const auto planes = constraints_for(sites, box, site);
    const double tol = 1e-9 * scale_of(box);
    std::vector<Point> vertices;
    for (std::size_t a = 0; a < planes.size(); ++a) {
        for (std::size_t b = a + 1; b < planes.size(); ++b) {
            Eigen::Matrix2d m;
            m.row(0) = planes[a].a.transpose();
            m.row(1) = planes[b].a.transpose();
            const double det = m.determinant();
            if (std::abs(det) < 1e-14 * planes[a].a.norm() * planes[b].a.norm()) continue;
            const Point v = m.inverse() * Eigen::Vector2d(planes[a].b, planes[b].b);
            bool feasible = true;
            for (const auto& h : planes) {
                if (h.a.dot(v) - h.b > tol * h.a.norm()) {
                    feasible = false;
                    break;
                }
            }
            if (!feasible) continue;
            bool duplicate = false;
            for (const auto& w : vertices) duplicate = duplicate || (w - v).norm() <= tol;
            if (!duplicate) vertices.push_back(v);
        }
    }
    if (vertices.size() < 3) return vertices;
    Point centre = Point::Zero();
    for (const auto& v : vertices) centre += v;
    centre /= static_cast<double>(vertices.size());
    std::sort(vertices.begin(), vertices.end(), [&](const Point& u, const Point& w) {
        return std::atan2(u.y() - centre.y(), u.x() - centre.x()) <
               std::atan2(w.y() - centre.y(), w.x() - centre.x());
    });
    return vertices;
}

std::vector<std::vector<int>> shared_edge_adjacency(std::span<const Point> sites, const Box& box) {
    const int n = static_cast<int>(sites.size());
    std::vector<Polygon> cells;
    for (int i = 0; i < n; ++i) cells.push_back(voronoi_cell_by_vertex_enumeration(sites, box, i));
    const double tol = 1e-7 * scale_of(box);

    auto on_bisector = [&](const Point& v, int i, int j) {
        return std::abs((v - sites[i]).norm() - (v - sites[j]).norm()) <= tol;
    };
    std::vector<std::vector<int>> adjacency(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            std::vector<Point> shared;
            for (const auto& v : cells[i]) {
                if (on_bisector(v, i, j)) shared.push_back(v);
            }
            double extent = 0.0;
            for (const auto& u : shared) {
                for (const auto& w : shared) extent = std::max(extent, (u - w).norm());
            }
            if (extent > tol) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }
    }
    for (auto& row : adjacency) std::sort(row.begin(), row.end());
    return adjacency;
}

namespace {

bool circumcircle(const Point& a, const Point& b, const Point& c, Point& centre, double& r2) {
    const double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
    if (std::abs(d) < 1e-14) return false;
    const double a2 = a.squaredNorm();
    const double b2 = b.squaredNorm();
    const double c2 = c.squaredNorm();
    centre = {(a2 * (b.y() - c.y()) + b2 * (c.y() - a.y()) + c2 * (a.y() - b.y())) / d,
              (a2 * (c.x() - b.x()) + b2 * (a.x() - c.x()) + c2 * (b.x() - a.x())) / d};
    r2 = (a - centre).squaredNorm();
    return true;
}

template <typename Visit>
void for_each_delaunay_triangle(std::span<const Point> sites, Visit visit) {
    const int n = static_cast<int>(sites.size());
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            for (int c = b + 1; c < n; ++c) {
                Point centre;
                double r2 = 0.0;
                if (!circumcircle(sites[a], sites[b], sites[c], centre, r2)) continue;
                bool empty = true;
                for (int k = 0; k < n && empty; ++k) {
                    if (k == a || k == b || k == c) continue;
                    empty = (sites[k] - centre).squaredNorm() > r2 * (1.0 + 1e-12);
                }
                if (empty) visit(a, b, c, centre);
            }
        }
    }
}

}  // namespace

std::vector<std::vector<int>> delaunay_adjacency(std::span<const Point> sites) {
    const int n = static_cast<int>(sites.size());
    std::vector<std::vector<int>> adjacency(n);
    auto link = [&](int u, int v) {
        if (std::find(adjacency[u].begin(), adjacency[u].end(), v) == adjacency[u].end()) {
            adjacency[u].push_back(v);
            adjacency[v].push_back(u);
        }
    };
    for_each_delaunay_triangle(sites, [&](int a, int b, int c, const Point&) {
        link(a, b);
        link(b, c);
        link(a, c);
    });
    for (auto& row : adjacency) std::sort(row.begin(), row.end());
    return adjacency;
}

std::vector<Point> delaunay_circumcentres(std::span<const Point> sites) {
    std::vector<Point> out;
    for_each_delaunay_triangle(sites, [&](int, int, int, const Point& c) { out.push_back(c); });
    return out;
}

Eigen::MatrixXd icar_pseudo_inverse(const Eigen::MatrixXd& structure) {
    const auto n = structure.rows();
    const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return Eigen::MatrixXd((structure + J).fullPivLu().inverse()) - J;
}

namespace {

// Written out from the binomial pmf, independent of the production code.
double negative_loglik(const SampleData& sample, const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
    const auto k = x.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double lin = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) lin += x(i, c) * theta(c);
        for (int j = 0; j < kStrata; ++j) {
            const double n = sample.design.n(i, j);
            if (n == 0) continue;
            const double y = sample.y(i, j);
            const double eta = lin + theta(k + j);
            // log p = -log(1 + e^-eta), log(1 - p) = -log(1 + e^eta)
            const double log_p = -std::log1p(std::exp(-eta));
            const double log_q = -std::log1p(std::exp(eta));
            total += y * log_p + (n - y) * log_q;
        }
    }
    return -total;
}

struct Simplex {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> values;
};

template <typename F>
Eigen::VectorXd nelder_mead(F f, Eigen::VectorXd start, double step, int& evaluations) {
    const auto dim = start.size();
    Simplex s;
    s.points.push_back(start);
    for (Eigen::Index d = 0; d < dim; ++d) {
        Eigen::VectorXd p = start;
        p(d) += step;
        s.points.push_back(p);
    }
    for (const auto& p : s.points) s.values.push_back(f(p));
    evaluations += static_cast<int>(s.points.size());

    std::vector<std::size_t> order(s.points.size());
    for (int iter = 0; iter < 200000; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.values[a] < s.values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        double diameter = 0.0;
        for (const auto& p : s.points) diameter = std::max(diameter, (p - s.points[best]).cwiseAbs().maxCoeff());
        if (diameter < 1e-10 && s.values[worst] - s.values[best] < 1e-12 * (1.0 + std::abs(s.values[best]))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t k = 0; k < s.points.size(); ++k) {
            if (k != worst) centroid += s.points[k];
        }
        centroid /= static_cast<double>(dim);

        const Eigen::VectorXd reflected = centroid + (centroid - s.points[worst]);
        const double fr = f(reflected);
        ++evaluations;
        if (fr < s.values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - s.points[worst]);
            const double fe = f(expanded);
            ++evaluations;
            if (fe < fr) {
                s.points[worst] = expanded;
                s.values[worst] = fe;
            } else {
                s.points[worst] = reflected;
                s.values[worst] = fr;
            }
            continue;
        }
        if (fr < s.values[second_worst]) {
            s.points[worst] = reflected;
            s.values[worst] = fr;
            continue;
        }
        const bool outside = fr < s.values[worst];
        const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                                   : Eigen::VectorXd(centroid + 0.5 * (s.points[worst] - centroid));
        const double fc = f(contracted);
        ++evaluations;
        if (fc < std::min(fr, s.values[worst])) {
            s.points[worst] = contracted;
            s.values[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k < s.points.size(); ++k) {
            if (k == best) continue;
            s.points[k] = s.points[best] + 0.5 * (s.points[k] - s.points[best]);
            s.values[k] = f(s.points[k]);
            ++evaluations;
        }
    }
    const auto it = std::min_element(s.values.begin(), s.values.end());
    return s.points[static_cast<std::size_t>(it - s.values.begin())];
}

}  // namespace

LogisticOptimum maximise_logistic_likelihood(const SampleData& sample, const Eigen::MatrixXd& x) {
    const auto k = x.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k + kStrata);
    const double overall = std::clamp(static_cast<double>(sample.y.sum()) / std::max(1, sample.design.n.sum()),
                                      1e-3, 1.0 - 1e-3);
    theta.tail(kStrata).setConstant(std::log(overall / (1.0 - overall)));

    auto f = [&](const Eigen::VectorXd& t) { return negative_loglik(sample, x, t); };
    LogisticOptimum out;
    double value = f(theta);
    double step = 0.5;
    for (int restart = 0; restart < 50; ++restart) {
        const Eigen::VectorXd next = nelder_mead(f, theta, step, out.evaluations);
        const double next_value = f(next);
        const bool improved = next_value < value - 1e-12 * (1.0 + std::abs(value));
        const double moved = (next - theta).cwiseAbs().maxCoeff();
        theta = next;
        value = std::min(value, next_value);
        if (!improved && moved < 1e-8) break;
        step = std::max(1e-3, std::min(0.1, 10.0 * moved));
    }
    out.beta = theta.head(k);
    out.gamma = theta.tail(kStrata);
    out.log_likelihood = -value;
    return out;
}

double direct_mse(std::span<const CellMatrix> predictions, std::span<const CellMatrix> truths) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw std::invalid_argument("direct_mse: need equally many non-empty replicates");
    }
    long double total = 0.0L;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        for (Eigen::Index i = 0; i < predictions[s].rows(); ++i) {
            for (Eigen::Index j = 0; j < predictions[s].cols(); ++j) {
                const long double e = predictions[s](i, j) - truths[s](i, j);
                total += e * e;
            }
        }
    }
    return static_cast<double>(total / static_cast<long double>(predictions.size()));
}

}  // namespace hyak::oracle
