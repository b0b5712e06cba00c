#include "mbsfn/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "mbsfn/rng.hpp"

namespace mbsfn {

InterestDistribution interest_distribution_from_string(const std::string& name) {
    if (name == "uniform") return InterestDistribution::uniform;
    if (name == "exponential") return InterestDistribution::exponential;
    throw std::invalid_argument("unknown interest distribution '" + name +
                                "' (valid: uniform, exponential)");
}

std::string to_string(InterestDistribution d) {
    return d == InterestDistribution::uniform ? "uniform" : "exponential";
}

namespace {

// Monotone-chain convex hull over cell centers.
std::vector<std::pair<double, double>> convex_hull(const CellGrid& grid) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(grid.cells.size());
    for (const Cell& c : grid.cells) pts.emplace_back(c.x, c.y);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a.first - o.first) * (b.second - o.second) -
               (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> hull(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

bool point_in_hull(const std::vector<std::pair<double, double>>& hull, double x, double y) {
    if (hull.size() == 1)
        return std::abs(x - hull[0].first) < 1e-9 && std::abs(y - hull[0].second) < 1e-9;
    if (hull.size() == 2) {
        // Degenerate hull: accept points on the segment.
        double cx = (x - hull[0].first) * (hull[1].second - hull[0].second) -
                    (y - hull[0].second) * (hull[1].first - hull[0].first);
        return std::abs(cx) < 1e-6;
    }
    for (size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        double cx = (b.first - a.first) * (y - a.second) - (b.second - a.second) * (x - a.first);
        if (cx < 0) return false;
    }
    return true;
}

int nearest_cell(const CellGrid& grid, double x, double y) {
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (const Cell& c : grid.cells) {
        double dx = x - c.x, dy = y - c.y, d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = c.id;
        }
    }
    return best;
}

double truncated_normal(Rng& rng, double sigma, double bound) {
    if (sigma <= 0.0 || bound <= 0.0) return 0.0;
    for (int tries = 0; tries < 100000; ++tries) {
        double v = rng.normal() * sigma;
        if (v >= -bound && v <= bound) return v;
    }
    return 0.0; // unreachable for any bound containing the mode
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

} // namespace

UserPopulation generate_users(const CellGrid& grid, double users_per_cell, uint64_t seed) {
    if (!(users_per_cell > 0.0)) throw std::invalid_argument("users_per_cell must be > 0");
    int total = static_cast<int>(std::llround(users_per_cell * grid.cell_count()));
    auto hull = convex_hull(grid);
    double min_x = hull[0].first, max_x = hull[0].first;
    double min_y = hull[0].second, max_y = hull[0].second;
    for (const auto& p : hull) {
        min_x = std::min(min_x, p.first);
        max_x = std::max(max_x, p.first);
        min_y = std::min(min_y, p.second);
        max_y = std::max(max_y, p.second);
    }
    Rng rng(substream(seed, "users"));
    UserPopulation pop;
    pop.users.reserve(total);
    for (int id = 0; id < total; ++id) {
        double x, y;
        do {
            x = rng.uniform(min_x, max_x);
            y = rng.uniform(min_y, max_y);
        } while (!point_in_hull(hull, x, y));
        UE ue;
        ue.id = id;
        ue.x = x;
        ue.y = y;
        ue.serving_cell = nearest_cell(grid, x, y);
        pop.users.push_back(ue);
    }
    return pop;
}

CatalogBuild build_catalog(const std::vector<std::vector<int>>& zone_adj, int items_per_zone,
                           int neighbor_overlap, const std::vector<double>& rates_bps,
                           uint64_t seed) {
    int zones = static_cast<int>(zone_adj.size());
    if (zones < 1) throw std::invalid_argument("need at least one zone");
    if (items_per_zone < 1) throw std::invalid_argument("items_per_zone must be >= 1");
    if (neighbor_overlap < 0 || neighbor_overlap > items_per_zone)
        throw std::invalid_argument("neighbor_overlap must be in [0, items_per_zone]");
    if (rates_bps.empty()) throw std::invalid_argument("need at least one service rate");

    Rng rng(substream(seed, "catalog"));
    CatalogBuild out;
    out.catalog.items_per_zone = items_per_zone;
    out.catalog.neighbor_overlap = neighbor_overlap;
    out.catalog.zone_items.assign(zones, {});

    auto fresh_item = [&]() {
        int id = static_cast<int>(out.items.size());
        ContentItem item;
        item.id = id;
        item.service_rate_bps = rates_bps[id % rates_bps.size()];
        out.items.push_back(item);
        return id;
    };

    for (int z = 0; z < zones; ++z) {
        std::vector<int> done_neighbors;
        for (int nb : zone_adj[z])
            if (nb < z) done_neighbors.push_back(nb);

        std::vector<int> chosen;
        if (!done_neighbors.empty()) {
            // Greedy shared-item selection: prefer items covering several
            // still-unsatisfied neighbor quotas; random among ties.
            std::vector<int> need(done_neighbors.size(), neighbor_overlap);
            std::vector<int> pool;
            for (int nb : done_neighbors)
                for (int it : out.catalog.zone_items[nb]) pool.push_back(it);
            std::sort(pool.begin(), pool.end());
            pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

            while (static_cast<int>(chosen.size()) < items_per_zone) {
                int best_score = 0;
                std::vector<int> best_items;
                for (int it : pool) {
                    if (std::find(chosen.begin(), chosen.end(), it) != chosen.end()) continue;
                    int score = 0;
                    for (size_t k = 0; k < done_neighbors.size(); ++k) {
                        if (need[k] <= 0) continue;
                        const auto& cat = out.catalog.zone_items[done_neighbors[k]];
                        if (std::find(cat.begin(), cat.end(), it) != cat.end()) ++score;
                    }
                    if (score > best_score) {
                        best_score = score;
                        best_items.assign(1, it);
                    } else if (score == best_score && score > 0) {
                        best_items.push_back(it);
                    }
                }
                if (best_score == 0) break; // all quotas met (or unmeetable)
                int pick = best_items[rng.uniform_int(0, static_cast<int>(best_items.size()) - 1)];
                chosen.push_back(pick);
                for (size_t k = 0; k < done_neighbors.size(); ++k) {
                    const auto& cat = out.catalog.zone_items[done_neighbors[k]];
                    if (std::find(cat.begin(), cat.end(), pick) != cat.end()) --need[k];
                }
            }
        }
        while (static_cast<int>(chosen.size()) < items_per_zone) chosen.push_back(fresh_item());
        std::sort(chosen.begin(), chosen.end());
        out.catalog.zone_items[z] = std::move(chosen);
    }

    // Popularity ranks: items not shared with any neighboring zone first
    // (most popular), shared items at the tail, each group by ascending id.
    for (int z = 0; z < zones; ++z) {
        auto& cat = out.catalog.zone_items[z];
        std::stable_partition(cat.begin(), cat.end(), [&](int it) {
            for (int nb : zone_adj[z]) {
                const auto& other = out.catalog.zone_items[nb];
                if (std::find(other.begin(), other.end(), it) != other.end()) return false;
            }
            return true;
        });
    }

    for (int z = 0; z < zones; ++z)
        for (int nb : zone_adj[z]) {
            if (nb <= z) continue;
            int shared = 0;
            for (int it : out.catalog.zone_items[z]) {
                const auto& other = out.catalog.zone_items[nb];
                if (std::find(other.begin(), other.end(), it) != other.end()) ++shared;
            }
            out.catalog.achieved_overlap.emplace_back(z, nb, shared);
        }
    return out;
}

CatalogBuild build_catalog(int zone_count, int items_per_zone, int neighbor_overlap,
                           const std::vector<double>& rates_bps, uint64_t seed) {
    if (zone_count < 1) throw std::invalid_argument("zone_count must be >= 1");
    std::vector<std::vector<int>> chain(zone_count);
    for (int z = 0; z < zone_count; ++z) {
        if (z > 0) chain[z].push_back(z - 1);
        if (z + 1 < zone_count) chain[z].push_back(z + 1);
    }
    return build_catalog(chain, items_per_zone, neighbor_overlap, rates_bps, seed);
}

std::vector<double> interest_pmf(InterestDistribution dist, int n, double lambda) {
    std::vector<double> pmf(n, 1.0 / n);
    if (dist == InterestDistribution::exponential) {
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
            pmf[k] = std::exp(-lambda * k / n);
            total += pmf[k];
        }
        for (double& p : pmf) p /= total;
    }
    return pmf;
}

int sample_interest(const UE& ue, const CellGrid& grid, const ZoneCatalog& catalog,
                    InterestDistribution dist, double lambda, uint64_t seed) {
    int zone = grid.cells[ue.serving_cell].zone_id;
    const auto& items = catalog.zone_items[zone];
    auto pmf = interest_pmf(dist, static_cast<int>(items.size()), lambda);
    Rng rng(substream(seed, "interest", static_cast<uint64_t>(ue.id)));
    double u = rng.next_double(), acc = 0.0;
    for (size_t k = 0; k < pmf.size(); ++k) {
        acc += pmf[k];
        if (u < acc) return items[k];
    }
    return items.back();
}

void assign_demand(UserPopulation& pop, const CellGrid& grid, const ZoneCatalog& catalog,
                   InterestDistribution dist, double lambda, double unicast_fraction,
                   uint64_t seed) {
    if (unicast_fraction < 0.0 || unicast_fraction > 1.0)
        throw std::invalid_argument("unicast_fraction must be in [0, 1]");
    int n = pop.size();
    int unicast_n = static_cast<int>(std::llround(unicast_fraction * n));
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    Rng rng(substream(seed, "demand_split"));
    for (int i = n - 1; i > 0; --i)
        std::swap(ids[i], ids[rng.uniform_int(0, i)]);
    std::vector<char> unicast(n, 0);
    for (int k = 0; k < unicast_n; ++k) unicast[ids[k]] = 1;
    for (UE& ue : pop.users)
        ue.item = unicast[ue.id] ? -1 : sample_interest(ue, grid, catalog, dist, lambda, seed);
}

InterestSnapshot count_interest(const UserPopulation& pop, int cell_count, int item_count) {
    InterestSnapshot snap;
    snap.init(cell_count, item_count);
    for (const UE& ue : pop.users)
        if (!ue.is_unicast()) ++snap.at(ue.serving_cell, ue.item);
    snap.w_est = snap.w;
    return snap;
}

int live_frames_in_window(const ContentItem& item, int t0, int window) {
    if (window <= 0) throw std::invalid_argument("window must be > 0");
    int lo = std::max(t0, item.start_frame);
    int hi = std::min(t0 + window, item.start_frame + item.duration_frames);
    return std::max(0, hi - lo);
}

double epsilon(const ContentItem& item, int t0, int window) {
    return static_cast<double>(live_frames_in_window(item, t0, window)) / window;
}

std::vector<ContentItem> generate_timeline(std::vector<ContentItem> items, int horizon_frames,
                                           int duration_min, int duration_max, uint64_t seed) {
    if (duration_min < 1 || duration_max < duration_min)
        throw std::invalid_argument("invalid duration range");
    if (horizon_frames < duration_max)
        throw std::invalid_argument("horizon must be >= max duration");
    for (ContentItem& item : items) {
        Rng rng(substream(seed, "timeline", static_cast<uint64_t>(item.id)));
        item.duration_frames = static_cast<int>(rng.uniform_int(duration_min, duration_max));
        item.start_frame = static_cast<int>(rng.uniform_int(0, horizon_frames - item.duration_frames));
    }
    return items;
}

int estimate_interest(int actual_w, int t_s, double sigma0_sq, uint64_t seed) {
    if (t_s < 0) throw std::invalid_argument("t_s must be >= 0");
    if (sigma0_sq < 0.0) throw std::invalid_argument("sigma0_sq must be >= 0");
    if (actual_w <= 0 || sigma0_sq == 0.0 || t_s == 0) return std::max(actual_w, 0);
    Rng rng(seed);
    double noise = truncated_normal(rng, std::sqrt(sigma0_sq * t_s), actual_w);
    return std::max(0, round_half_up(actual_w + noise));
}

int churn_interest(int actual_w, int t_d, double sigma0_sq, uint64_t seed) {
    if (t_d < 0) throw std::invalid_argument("t_d must be >= 0");
    if (sigma0_sq < 0.0) throw std::invalid_argument("sigma0_sq must be >= 0");
    if (actual_w <= 0 || sigma0_sq == 0.0 || t_d == 0) return std::max(actual_w, 0);
    Rng rng(seed);
    double noise = truncated_normal(rng, std::sqrt(sigma0_sq * t_d), 0.3 * actual_w);
    return std::max(0, round_half_up(actual_w + noise));
}

std::string serialize_population(const UserPopulation& pop) {
    std::string out = "ue_id x_m y_m serving_cell item\n";
    char buf[160];
    for (const UE& ue : pop.users) {
        std::snprintf(buf, sizeof(buf), "%d %.3f %.3f %d %d\n", ue.id, ue.x, ue.y,
                      ue.serving_cell, ue.item);
        out += buf;
    }
    return out;
}

std::string serialize_catalog(const ZoneCatalog& catalog, const std::vector<ContentItem>& items) {
    std::string out = "zone rank item_id service_rate_bps\n";
    char buf[160];
    for (size_t z = 0; z < catalog.zone_items.size(); ++z)
        for (size_t k = 0; k < catalog.zone_items[z].size(); ++k) {
            int it = catalog.zone_items[z][k];
            std::snprintf(buf, sizeof(buf), "%zu %zu %d %.0f\n", z, k, it,
                          items[it].service_rate_bps);
            out += buf;
        }
    return out;
}

} // namespace mbsfn
