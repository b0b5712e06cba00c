#ifndef MBSFN_SCENARIO_HPP_
#define MBSFN_SCENARIO_HPP_

#include <cstdint>
#include <vector>

#include "mbsfn/demand.hpp"
#include "mbsfn/radio.hpp"
#include "mbsfn/topology.hpp"

namespace mbsfn {

struct ScenarioParams {
    int cell_count = 57;
    double inter_site_distance_m = 500.0;
    int zones = 4;
    double users_per_cell = 60.0;
    double unicast_fraction = 0.25;
    InterestDistribution distribution = InterestDistribution::exponential;
    double exp_parameter = 3.5;
    int items_per_zone = 16;
    int neighbor_overlap = 12;
    std::vector<double> service_rates_bps = {500e3};
    RadioConfig radio;
};

/// Everything a planner consumes: topology, radio model, catalog, users and
/// their interest counts. Immutable once built; shareable across threads.
struct Scenario {
    ScenarioParams params;
    CellGrid grid;
    ZoneCatalog catalog;
    std::vector<ContentItem> items;
    UserPopulation users;
    InterestSnapshot interest;

    int cell_count() const { return grid.cell_count(); }
    int item_count() const { return static_cast<int>(items.size()); }
    int user_count() const { return users.size(); }
};

Scenario build_scenario(const ScenarioParams& params, uint64_t seed);

/// Precomputed per-user link state. Received powers are recomputed from
/// geometry on demand; only O(users) aggregates are stored.
struct LinkCache {
    const Scenario* scn = nullptr;
    double noise_mw = 0.0;
    std::vector<double> total_mw;  // per user: received power summed over all cells
    std::vector<int> unicast_cqi;  // per user
    std::vector<int> unicast_bits; // per user
    std::vector<int> x_demand;     // per user: fallback RBs/frame (-1 infeasible, 0 for unicast UEs)
    std::vector<std::vector<int>> bcast_by_cell;   // broadcast UEs per cell, cqi desc then id asc
    std::vector<std::vector<int>> unicast_by_cell; // native unicast UEs per cell, id asc
    std::vector<std::vector<int64_t>> unicast_prefix_bits; // per cell: prefix sums over that order
    std::vector<std::vector<int>> bcast_users_by_cell_item; // (c*items+i) -> user ids

    double user_cell_mw(int user, int cell) const;
    double combined_sinr_db(int user, const std::vector<int>& area_cells) const;
    int combined_bits(int user, const std::vector<int>& area_cells) const;
    const std::vector<int>& users_of(int cell, int item) const;
};

LinkCache build_link_cache(const Scenario& scn);

} // namespace mbsfn

#endif
