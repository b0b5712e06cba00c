#include "mbsfn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbsfn/rng.hpp"

namespace mbsfn {

Scenario build_scenario(const ScenarioParams& params, uint64_t seed) {
    params.radio.validate();
    if (params.zones < 1) throw std::invalid_argument("zones must be >= 1");

    Scenario scn;
    scn.params = params;
    scn.grid = assign_zones(build_hex_grid(params.cell_count, params.inter_site_distance_m),
                            params.zones);

    auto built = build_catalog(zone_adjacency(scn.grid), params.items_per_zone,
                               params.neighbor_overlap, params.service_rates_bps,
                               substream(seed, "catalog_stream"));
    scn.catalog = std::move(built.catalog);
    scn.items = std::move(built.items);

    scn.users = generate_users(scn.grid, params.users_per_cell, seed);
    assign_demand(scn.users, scn.grid, scn.catalog, params.distribution, params.exp_parameter,
                  params.unicast_fraction, seed);
    scn.interest = count_interest(scn.users, scn.grid.cell_count(), scn.item_count());
    return scn;
}

double LinkCache::user_cell_mw(int user, int cell) const {
    const UE& ue = scn->users.users[user];
    const Cell& c = scn->grid.cells[cell];
    double dx = ue.x - c.x, dy = ue.y - c.y;
    double d = std::sqrt(dx * dx + dy * dy);
    return rx_power_mw(std::max(d, 1e-3), scn->params.radio);
}

double LinkCache::combined_sinr_db(int user, const std::vector<int>& area_cells) const {
    double signal = 0.0;
    for (int c : area_cells) signal += user_cell_mw(user, c);
    double interference = std::max(0.0, total_mw[user] - signal);
    return mw_to_dbm(signal / (noise_mw + interference));
}

int LinkCache::combined_bits(int user, const std::vector<int>& area_cells) const {
    return bits_per_rb(cqi_from_sinr(combined_sinr_db(user, area_cells)));
}

const std::vector<int>& LinkCache::users_of(int cell, int item) const {
    return bcast_users_by_cell_item[static_cast<size_t>(cell) * scn->item_count() + item];
}

LinkCache build_link_cache(const Scenario& scn) {
    LinkCache link;
    link.scn = &scn;
    link.noise_mw = dbm_to_mw(scn.params.radio.noise_dbm_per_rb());

    const int cells = scn.cell_count();
    const int items = scn.item_count();
    const int users = scn.user_count();
    link.total_mw.assign(users, 0.0);
    link.unicast_cqi.assign(users, 0);
    link.unicast_bits.assign(users, 0);
    link.x_demand.assign(users, 0);
    link.bcast_by_cell.assign(cells, {});
    link.unicast_by_cell.assign(cells, {});
    link.bcast_users_by_cell_item.assign(static_cast<size_t>(cells) * items, {});

    for (int u = 0; u < users; ++u) {
        const UE& ue = scn.users.users[u];
        double total = 0.0;
        for (int c = 0; c < cells; ++c) total += link.user_cell_mw(u, c);
        link.total_mw[u] = total;
        double serving = link.user_cell_mw(u, ue.serving_cell);
        double sinr = mw_to_dbm(serving / (link.noise_mw + std::max(0.0, total - serving)));
        link.unicast_cqi[u] = cqi_from_sinr(sinr);
        link.unicast_bits[u] = bits_per_rb(link.unicast_cqi[u]);
        if (ue.is_unicast()) {
            link.unicast_by_cell[ue.serving_cell].push_back(u);
        } else {
            auto demand =
                rb_demand_per_frame(scn.items[ue.item].service_rate_bps, link.unicast_bits[u]);
            link.x_demand[u] = demand ? *demand : -1;
            link.bcast_by_cell[ue.serving_cell].push_back(u);
            link.bcast_users_by_cell_item[static_cast<size_t>(ue.serving_cell) * items + ue.item]
                .push_back(u);
        }
    }

    for (auto& list : link.bcast_by_cell)
        std::sort(list.begin(), list.end(), [&](int a, int b) {
            if (link.unicast_cqi[a] != link.unicast_cqi[b])
                return link.unicast_cqi[a] > link.unicast_cqi[b];
            return a < b;
        });

    link.unicast_prefix_bits.assign(cells, {});
    for (int c = 0; c < cells; ++c) {
        auto& list = link.unicast_by_cell[c];
        std::sort(list.begin(), list.end());
        auto& prefix = link.unicast_prefix_bits[c];
        prefix.assign(list.size() + 1, 0);
        for (size_t k = 0; k < list.size(); ++k)
            prefix[k + 1] = prefix[k] + link.unicast_bits[list[k]];
    }
    return link;
}

} // namespace mbsfn
