#include "hyak/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hyak {

std::string_view design_name(DesignKind kind) {
    return kind == DesignKind::cluster ? "cluster" : "hyak";
}

SampleDesign cluster_sample(Rng& rng, const CountMatrix& N, const ClusterOptions& options) {
    const int villages = static_cast<int>(N.rows());
    if (options.villages < 1 || villages < options.villages) {
        throw std::invalid_argument("cluster_sample: need at least " +
                                    std::to_string(options.villages) + " villages");
    }
    std::vector<int> ids(villages);
    std::iota(ids.begin(), ids.end(), 0);
    // partial Fisher-Yates: the first `options.villages` entries are the draw
    for (int k = 0; k < options.villages; ++k) {
        std::uniform_int_distribution<int> pick(k, villages - 1);
        std::swap(ids[k], ids[pick(rng)]);
    }

    SampleDesign design;
    design.kind = DesignKind::cluster;
    design.n = CountMatrix::Zero(villages, kStrata);
    for (int k = 0; k < options.villages; ++k) {
        const int i = ids[k];
        for (int j = 0; j < kStrata; ++j) {
            if (N(i, j) < options.per_stratum) {
                throw std::invalid_argument("cluster_sample: village " + std::to_string(i) +
                                            " has fewer children than the per-stratum allocation");
            }
            design.n(i, j) = options.per_stratum;
        }
    }
    return design;
}

std::vector<int> select_hdss_villages(const Eigen::MatrixXd& x, Rng& rng) {
    const int villages = static_cast<int>(x.rows());
    if (villages < 3) throw std::invalid_argument("select_hdss_villages: need at least 3 villages");
    if (x.cols() < 2) throw std::invalid_argument("select_hdss_villages: need two covariates");

    int high = 0;
    for (int i = 1; i < villages; ++i) {
        if (x(i, 0) * x(i, 1) > x(high, 0) * x(high, 1)) high = i;
    }
    int low = high == 0 ? 1 : 0;
    for (int i = 0; i < villages; ++i) {
        if (i == high) continue;
        if ((1 - x(i, 0)) * (1 - x(i, 1)) > (1 - x(low, 0)) * (1 - x(low, 1))) low = i;
    }
    std::vector<int> rest;
    for (int i = 0; i < villages; ++i) {
        if (i != high && i != low) rest.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, rest.size() - 1);
    return {high, low, rest[pick(rng)]};
}

CountMatrix informed_allocation(const CellMatrix& predicted, const CountMatrix& capacity,
                                int budget) {
    if (predicted.rows() != capacity.rows()) {
        throw std::invalid_argument("informed_allocation: dimension mismatch");
    }
    if (budget < 0) throw std::invalid_argument("informed_allocation: negative budget");
    if (!predicted.allFinite() || (predicted.array() < 0.0).any()) {
        throw std::invalid_argument("informed_allocation: predictions must be finite and >= 0");
    }
    if (!(predicted.sum() > 0.0)) {
        throw std::invalid_argument("informed_allocation: all predicted deaths are zero");
    }
    if (budget > capacity.sum()) {
        throw std::invalid_argument("informed_allocation: budget exceeds available children");
    }

    const auto cells = static_cast<int>(predicted.size());
    // row-major cell index c = i * kStrata + j
    auto pred = [&](int c) { return predicted(c / kStrata, c % kStrata); };
    auto cap = [&](int c) { return capacity(c / kStrata, c % kStrata); };

    CountMatrix alloc = CountMatrix::Zero(predicted.rows(), kStrata);
    std::vector<int> active;
    for (int c = 0; c < cells; ++c) {
        if (cap(c) > 0) active.push_back(c);
    }
    long remaining = budget;
    std::vector<double> quota(cells, 0.0);

    while (true) {
        double weight_total = 0.0;
        for (const int c : active) weight_total += pred(c);
        const bool uniform = !(weight_total > 0.0);
        for (const int c : active) {
            const double w = uniform ? 1.0 : pred(c);
            const double total = uniform ? static_cast<double>(active.size()) : weight_total;
            quota[c] = static_cast<double>(remaining) * w / total;
        }
        std::vector<int> still_active;
        bool capped_any = false;
        for (const int c : active) {
            if (quota[c] > cap(c)) {
                alloc(c / kStrata, c % kStrata) = cap(c);
                remaining -= cap(c);
                capped_any = true;
            } else {
                still_active.push_back(c);
            }
        }
        active.swap(still_active);
        if (!capped_any) break;
    }

    long assigned = 0;
    std::vector<std::pair<double, int>> fractions;
    fractions.reserve(active.size());
    for (const int c : active) {
        const double whole = std::floor(quota[c]);
        alloc(c / kStrata, c % kStrata) = static_cast<int>(whole);
        assigned += static_cast<long>(whole);
        fractions.emplace_back(quota[c] - whole, c);
    }
    std::stable_sort(fractions.begin(), fractions.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    long leftover = remaining - assigned;
    for (const auto& [frac, c] : fractions) {
        if (leftover <= 0) break;
        int& slot = alloc(c / kStrata, c % kStrata);
        if (slot < cap(c)) {
            ++slot;
            --leftover;
        }
    }
    if (leftover != 0) {
        throw std::logic_error("informed_allocation: rounding left " + std::to_string(leftover) +
                               " children unassigned");
    }
    return alloc;
}

SampleDesign hyak_design(const CountMatrix& N, std::span<const int> hdss_ids,
                         const FitResult& hdss_fit, int budget) {
    const int villages = static_cast<int>(N.rows());
    if (hdss_fit.p_hat.rows() != villages) {
        throw std::invalid_argument("hyak_design: fit does not cover every village");
    }
    SampleDesign design;
    design.kind = DesignKind::hyak;
    design.hdss_ids.assign(hdss_ids.begin(), hdss_ids.end());
    std::sort(design.hdss_ids.begin(), design.hdss_ids.end());
    design.n = CountMatrix::Zero(villages, kStrata);

    std::vector<int> surveyed;
    for (int i = 0; i < villages; ++i) {
        if (std::binary_search(design.hdss_ids.begin(), design.hdss_ids.end(), i)) {
            design.n.row(i) = N.row(i);
        } else {
            surveyed.push_back(i);
        }
    }
    CellMatrix predicted(static_cast<Eigen::Index>(surveyed.size()), kStrata);
    CountMatrix capacity(static_cast<Eigen::Index>(surveyed.size()), kStrata);
    for (std::size_t r = 0; r < surveyed.size(); ++r) {
        const int i = surveyed[r];
        for (int j = 0; j < kStrata; ++j) {
            predicted(r, j) = N(i, j) * hdss_fit.p_hat(i, j);
            capacity(r, j) = N(i, j);
        }
    }
    const CountMatrix alloc = informed_allocation(predicted, capacity, budget);
    for (std::size_t r = 0; r < surveyed.size(); ++r) design.n.row(surveyed[r]) = alloc.row(r);
    return design;
}

SampleData draw_sample_outcomes(Rng& rng, const SampleDesign& design, const CountMatrix& N,
                                const CountMatrix& Y) {
    if (design.n.rows() != N.rows() || Y.rows() != N.rows()) {
        throw std::invalid_argument("draw_sample_outcomes: dimension mismatch");
    }
    SampleData data{design, CountMatrix::Zero(N.rows(), kStrata)};
    for (Eigen::Index i = 0; i < N.rows(); ++i) {
        for (int j = 0; j < kStrata; ++j) {
            const int n = design.n(i, j);
            if (n < 0 || n > N(i, j)) {
                throw std::invalid_argument("draw_sample_outcomes: allocation outside [0, N]");
            }
            if (n == N(i, j)) {
                data.y(i, j) = Y(i, j);
            } else if (n > 0) {
                data.y(i, j) = draw_hypergeometric(rng, N(i, j), Y(i, j), n);
            }
        }
    }
    return data;
}

SampleData census_of(std::span<const int> villages, const CountMatrix& N, const CountMatrix& Y) {
    SampleData data;
    data.design.kind = DesignKind::hyak;
    data.design.n = CountMatrix::Zero(N.rows(), kStrata);
    data.y = CountMatrix::Zero(N.rows(), kStrata);
    for (const int i : villages) {
        data.design.n.row(i) = N.row(i);
        data.y.row(i) = Y.row(i);
        data.design.hdss_ids.push_back(i);
    }
    std::sort(data.design.hdss_ids.begin(), data.design.hdss_ids.end());
    return data;
}

}  // namespace hyak
