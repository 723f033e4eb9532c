/*
 * Copyright 2026 The tangentscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tscope/intrinsic_dim.hpp"

#include "tscope/kernels.hpp"
#include "tscope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace tscope {

PointCloud PointCloud::deduplicated(const Matrix& pts) {
    std::vector<Index> order(static_cast<std::size_t>(pts.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    auto row_less = [&](Index a, Index b) {
        for (Index j = 0; j < pts.cols(); ++j) {
            if (pts(a, j) != pts(b, j)) {
                return pts(a, j) < pts(b, j);
            }
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), row_less);
    std::vector<bool> drop(order.size(), false);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (pts.row(order[i]) == pts.row(order[i - 1])) {
            drop[static_cast<std::size_t>(std::max(order[i], order[i - 1]))] = true;
        }
    }
    std::vector<Index> keep;
    for (Index i = 0; i < pts.rows(); ++i) {
        if (!drop[static_cast<std::size_t>(i)]) {
            keep.push_back(i);
        }
    }
    Matrix out(static_cast<Index>(keep.size()), pts.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.row(static_cast<Index>(i)) = pts.row(keep[i]);
    }
    PointCloud c(std::move(out));
    c.distinct = true;
    return c;
}

NeighborTable knn_search(const Matrix& points, Index k) {
    const Index n = points.rows();
    const Index d = points.cols();
    require(n <= max_neighbor_points, ErrorCode::too_many_points,
            std::to_string(n) + " points exceeds the brute-force cap of " + std::to_string(max_neighbor_points));
    require(k >= 1 && k < n, ErrorCode::invalid_argument, "need 1 <= k < N");

    NeighborTable t;
    t.distance.resize(n, k);
    t.index.resize(n, k);
    std::vector<double> d2(static_cast<std::size_t>(n));
    std::vector<Index> order(static_cast<std::size_t>(n));
    const auto dim = static_cast<std::size_t>(d);
    for (Index i = 0; i < n; ++i) {
        kernels::squared_distances(points.row(i).data(), points.data(), static_cast<std::size_t>(n), dim, d2.data());
        d2[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
        std::iota(order.begin(), order.end(), Index{0});
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
            const double da = d2[static_cast<std::size_t>(a)];
            const double db = d2[static_cast<std::size_t>(b)];
            return da < db || (da == db && a < b);
        });
        for (Index j = 0; j < k; ++j) {
            t.index(i, j) = order[static_cast<std::size_t>(j)];
            t.distance(i, j) = std::sqrt(d2[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
        }
    }
    return t;
}

double twonn_id(const PointCloud& cloud) {
    const Index n = cloud.size();
    require(n >= 10, ErrorCode::invalid_argument, "TwoNN needs at least 10 points");
    const NeighborTable t = knn_search(cloud.points, 2);
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
        require(t.distance(i, 0) > 0.0, ErrorCode::duplicate_points,
                "point " + std::to_string(i) + " has a duplicate; deduplicate the cloud first");
        s += std::log(t.distance(i, 1) / t.distance(i, 0));
    }
    require(s > 0.0, ErrorCode::degenerate, "all first and second neighbour distances are equal");
    return static_cast<double>(n) / s;
}

namespace {

struct DisjointSet {
    std::vector<Index> parent;
    explicit DisjointSet(Index n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), Index{0});
    }
    Index find(Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& p = parent[static_cast<std::size_t>(x)];
            p = parent[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(Index a, Index b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        return true;
    }
};

} // namespace

double mst_length_dense(const Matrix& points) {
    const Index n = points.rows();
    if (n < 2) {
        return 0.0;
    }
    const auto dim = static_cast<std::size_t>(points.cols());
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
    std::vector<double> d2(static_cast<std::size_t>(n));
    double total = 0.0;
    Index current = 0;
    in_tree[0] = true;
    for (Index added = 1; added < n; ++added) {
        kernels::squared_distances(points.row(current).data(), points.data(), static_cast<std::size_t>(n), dim,
                                   d2.data());
        Index next = -1;
        double next_d = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
            const auto u = static_cast<std::size_t>(j);
            if (in_tree[u]) {
                continue;
            }
            best[u] = std::min(best[u], d2[u]);
            if (best[u] < next_d) {
                next_d = best[u];
                next = j;
            }
        }
        in_tree[static_cast<std::size_t>(next)] = true;
        total += std::sqrt(next_d);
        current = next;
    }
    return total;
}

double mst_length(const Matrix& points) {
    const Index n = points.rows();
    if (n < 2) {
        return 0.0;
    }
    const Index k = std::min<Index>(10, n - 1);
    const NeighborTable t = knn_search(points, k);
    struct Edge {
        double w;
        Index a;
        Index b;
    };
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n * k));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < k; ++j) {
            const Index o = t.index(i, j);
            edges.push_back({t.distance(i, j), std::min(i, o), std::max(i, o)});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.w != y.w) {
            return x.w < y.w;
        }
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });
    DisjointSet ds(n);
    double total = 0.0;
    Index used = 0;
    for (const auto& e : edges) {
        if (ds.unite(e.a, e.b)) {
            total += e.w;
            ++used;
        }
    }
    if (used != n - 1) {
        return mst_length_dense(points);
    }
    return total;
}

std::vector<Index> default_gmst_sizes(Index n) {
    const Index lo = std::min(n, std::max<Index>(20, n / 8));
    std::vector<Index> sizes;
    for (int i = 0; i < 5; ++i) {
        const double f = static_cast<double>(i) / 4.0;
        const auto s = static_cast<Index>(std::llround(std::exp((1.0 - f) * std::log(lo) + f * std::log(n))));
        if (sizes.empty() || sizes.back() != s) {
            sizes.push_back(s);
        }
    }
    return sizes;
}

GmstResult gmst_id(const PointCloud& cloud, std::vector<Index> sizes, Index repeats, std::uint64_t seed) {
    const Index n = cloud.size();
    require(n >= 10, ErrorCode::invalid_argument, "GMST needs at least 10 points");
    require(repeats >= 1, ErrorCode::invalid_argument, "repeats must be positive");
    require(sizes.size() >= 3, ErrorCode::invalid_argument, "GMST needs at least 3 subsample sizes");
    std::sort(sizes.begin(), sizes.end());
    require(sizes.front() >= 2 && sizes.back() <= n, ErrorCode::invalid_argument, "subsample sizes must lie in [2, N]");
    require(sizes.front() != sizes.back(), ErrorCode::degenerate, "all subsample sizes are identical");

    GmstResult out;
    out.sizes = sizes;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const Index m = sizes[si];
        double acc = 0.0;
        for (Index r = 0; r < repeats; ++r) {
            Rng rng(derive_seed(seed, si * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r)));
            std::iota(perm.begin(), perm.end(), Index{0});
            Matrix sub(m, cloud.points.cols());
            for (Index i = 0; i < m; ++i) {
                const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
                std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
                sub.row(i) = cloud.points.row(perm[static_cast<std::size_t>(i)]);
            }
            const double len = mst_length(sub);
            require(len > 0.0, ErrorCode::degenerate, "subsample has zero MST length");
            acc += std::log(len);
        }
        out.mean_log_length.push_back(acc / static_cast<double>(repeats));
    }

    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        mx += std::log(static_cast<double>(sizes[i]));
        my += out.mean_log_length[i];
    }
    mx /= static_cast<double>(sizes.size());
    my /= static_cast<double>(sizes.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double dx = std::log(static_cast<double>(sizes[i])) - mx;
        sxx += dx * dx;
        sxy += dx * (out.mean_log_length[i] - my);
    }
    out.slope = sxy / sxx;
    out.dimension = out.slope < 1.0 ? 1.0 / (1.0 - out.slope) : std::numeric_limits<double>::infinity();
    return out;
}

KnnEntropy knn_graph_entropy(const PointCloud& cloud, Index k, double intrinsic_dim) {
    const Index n = cloud.size();
    require(n >= 10, ErrorCode::invalid_argument, "entropy estimate needs at least 10 points");
    require(k >= 1 && k < n, ErrorCode::invalid_argument, "need 1 <= k < N");
    const NeighborTable t = knn_search(cloud.points, k);
    KnnEntropy out;
    out.k = k;
    out.total_length = t.distance.sum();
    require(out.total_length > 0.0, ErrorCode::degenerate, "all points are identical");
    out.intrinsic_dim = intrinsic_dim > 0.0 ? intrinsic_dim : twonn_id(cloud);
    const double m = out.intrinsic_dim;
    const double alpha = (m - 1.0) / m;
    out.entropy = m * (std::log(out.total_length / static_cast<double>(k)) - alpha * std::log(static_cast<double>(n)));
    return out;
}

} // namespace tscope
