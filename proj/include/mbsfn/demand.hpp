#ifndef MBSFN_DEMAND_HPP_
#define MBSFN_DEMAND_HPP_

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "mbsfn/topology.hpp"

namespace mbsfn {

struct ContentItem {
    int id = 0;
    double service_rate_bps = 0.0;
    int start_frame = 0;    // static scenarios: 0
    int duration_frames = 1; // static scenarios: the whole horizon
};

/// Per-zone content lists. Within a zone the list is in popularity-rank
/// order (rank 0 most popular); items shared with a neighboring zone occupy
/// the least-popular ranks.
struct ZoneCatalog {
    int items_per_zone = 16;
    int neighbor_overlap = 12;
    std::vector<std::vector<int>> zone_items; // rank-ordered item ids per zone
    // Achieved pairwise overlaps (zone_a, zone_b, shared) for neighbor pairs;
    // interior zones with many neighbors may be forced above the target.
    std::vector<std::tuple<int, int, int>> achieved_overlap;
};

enum class InterestDistribution { uniform, exponential };

InterestDistribution interest_distribution_from_string(const std::string& name);
std::string to_string(InterestDistribution d);

struct UE {
    int id = 0;
    double x = 0.0, y = 0.0;
    int serving_cell = 0;
    int item = -1; // -1: native unicast demand, otherwise the broadcast item of interest
    bool is_unicast() const { return item < 0; }
};

struct UserPopulation {
    std::vector<UE> users;
    int size() const { return static_cast<int>(users.size()); }
};

/// Interest counts per (cell, item): w the ground truth, w_est the planner's
/// (possibly noisy) view. Dense row-major over cell then item.
struct InterestSnapshot {
    int cells = 0;
    int items = 0;
    std::vector<int> w;
    std::vector<int> w_est;

    void init(int c, int i) {
        cells = c;
        items = i;
        w.assign(static_cast<size_t>(c) * i, 0);
        w_est = w;
    }
    int& at(int c, int i) { return w[static_cast<size_t>(c) * items + i]; }
    int at(int c, int i) const { return w[static_cast<size_t>(c) * items + i]; }
    int& est(int c, int i) { return w_est[static_cast<size_t>(c) * items + i]; }
    int est(int c, int i) const { return w_est[static_cast<size_t>(c) * items + i]; }
};

/// Place round(users_per_cell * |C|) UEs uniformly over the convex hull of
/// the cell centers; serving cell is the strongest (nearest) eNB.
UserPopulation generate_users(const CellGrid& grid, double users_per_cell, uint64_t seed);

struct CatalogBuild {
    ZoneCatalog catalog;
    std::vector<ContentItem> items; // the global pool referenced by the catalog
};

/// Build per-zone catalogs over a zone adjacency graph. Each zone lists
/// `items_per_zone` items; each neighboring pair shares at least
/// `neighbor_overlap` of them (exactly, when only one earlier neighbor
/// constrains the zone). Fresh items cycle through `rates_bps`.
CatalogBuild build_catalog(const std::vector<std::vector<int>>& zone_adj, int items_per_zone,
                           int neighbor_overlap, const std::vector<double>& rates_bps,
                           uint64_t seed);

/// Chain-adjacency convenience (zone k neighbors k-1 and k+1).
CatalogBuild build_catalog(int zone_count, int items_per_zone, int neighbor_overlap,
                           const std::vector<double>& rates_bps, uint64_t seed);

/// Popularity mass of rank k among n ranks: p(k) proportional to
/// exp(-lambda * k / n) (exponential), or 1/n (uniform).
std::vector<double> interest_pmf(InterestDistribution dist, int n, double lambda);

/// Draw the item one UE is interested in from its zone's catalog.
int sample_interest(const UE& ue, const CellGrid& grid, const ZoneCatalog& catalog,
                    InterestDistribution dist, double lambda, uint64_t seed);

/// Mark round(unicast_fraction * N) users as native unicast (seeded choice)
/// and draw a broadcast interest for everyone else.
void assign_demand(UserPopulation& pop, const CellGrid& grid, const ZoneCatalog& catalog,
                   InterestDistribution dist, double lambda, double unicast_fraction,
                   uint64_t seed);

InterestSnapshot count_interest(const UserPopulation& pop, int cell_count, int item_count);

/// Frames of [t0, t0+window) during which the item is live.
int live_frames_in_window(const ContentItem& item, int t0, int window);
/// Fraction of the window during which the item is live, in [0, 1].
double epsilon(const ContentItem& item, int t0, int window);

/// Give every item a duration ~ U{dmin..dmax} and a start ~ U{0..horizon-d}.
std::vector<ContentItem> generate_timeline(std::vector<ContentItem> items, int horizon_frames,
                                           int duration_min, int duration_max, uint64_t seed);

/// Interest estimate ahead of an item start: actual count plus zero-mean
/// Gaussian noise with variance sigma0_sq * t_s, truncated to +-actual.
int estimate_interest(int actual_w, int t_s, double sigma0_sq, uint64_t seed);

/// In-flight churn: variance sigma0_sq * t_d, truncated to +-0.3 * actual.
int churn_interest(int actual_w, int t_d, double sigma0_sq, uint64_t seed);

std::string serialize_population(const UserPopulation& pop);
std::string serialize_catalog(const ZoneCatalog& catalog, const std::vector<ContentItem>& items);

} // namespace mbsfn

#endif
