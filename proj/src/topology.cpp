#include "mbsfn/topology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <stdexcept>

namespace mbsfn {
namespace {

// Axial direction order used for ring walks; any fixed order works, this one
// starts east and goes counterclockwise.
constexpr std::array<std::array<int, 2>, 6> kAxialDirs = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1},
}};

} // namespace

int CellGrid::zone_count() const {
    int z = 0;
    for (const Cell& c : cells) z = std::max(z, c.zone_id + 1);
    return z;
}

const std::vector<int>& CellGrid::neighbors_of(int cell_id) const {
    if (cell_id < 0 || cell_id >= cell_count())
        throw std::out_of_range("unknown cell id " + std::to_string(cell_id));
    return adjacency[cell_id];
}

bool CellGrid::are_adjacent(int a, int b) const {
    const auto& n = neighbors_of(a);
    return std::binary_search(n.begin(), n.end(), b);
}

CellGrid build_hex_grid(int cell_count, double inter_site_distance) {
    if (cell_count < 1) throw std::invalid_argument("cell_count must be >= 1");
    if (!(inter_site_distance > 0.0))
        throw std::invalid_argument("inter_site_distance must be > 0");

    CellGrid grid;
    grid.inter_site_distance = inter_site_distance;
    grid.cells.reserve(cell_count);

    // Central cell plus concentric rings, truncated in ring-walk order.
    std::vector<std::array<int, 2>> axial;
    axial.push_back({0, 0});
    for (int ring = 1; static_cast<int>(axial.size()) < cell_count; ++ring) {
        int q = kAxialDirs[4][0] * ring;
        int r = kAxialDirs[4][1] * ring;
        for (int side = 0; side < 6 && static_cast<int>(axial.size()) < cell_count; ++side) {
            for (int step = 0; step < ring && static_cast<int>(axial.size()) < cell_count; ++step) {
                axial.push_back({q, r});
                q += kAxialDirs[side][0];
                r += kAxialDirs[side][1];
            }
        }
    }

    const double sq3_2 = std::sqrt(3.0) / 2.0;
    std::map<std::pair<int, int>, int> by_axial;
    for (int id = 0; id < cell_count; ++id) {
        Cell c;
        c.id = id;
        c.q = axial[id][0];
        c.r = axial[id][1];
        c.x = inter_site_distance * (c.q + 0.5 * c.r);
        c.y = inter_site_distance * sq3_2 * c.r;
        grid.cells.push_back(c);
        by_axial[{c.q, c.r}] = id;
    }

    grid.adjacency.assign(cell_count, {});
    for (const Cell& c : grid.cells) {
        for (const auto& d : kAxialDirs) {
            auto it = by_axial.find({c.q + d[0], c.r + d[1]});
            if (it != by_axial.end()) grid.adjacency[c.id].push_back(it->second);
        }
        std::sort(grid.adjacency[c.id].begin(), grid.adjacency[c.id].end());
    }
    return grid;
}

std::vector<int> neighbors(const CellGrid& grid, int cell_id) {
    return grid.neighbors_of(cell_id);
}

namespace {

// Serpentine sweep: axial rows in ascending r, alternating q direction so
// consecutive cells are almost always grid-adjacent.
std::vector<int> sweep_order(const CellGrid& grid) {
    std::map<int, std::vector<int>> rows; // r -> cell ids
    for (const Cell& c : grid.cells) rows[c.r].push_back(c.id);
    std::vector<int> order;
    order.reserve(grid.cells.size());
    int row_rank = 0;
    for (auto& [r, ids] : rows) {
        std::sort(ids.begin(), ids.end(), [&](int a, int b) {
            return grid.cells[a].q < grid.cells[b].q;
        });
        if (row_rank % 2 == 1) std::reverse(ids.begin(), ids.end());
        order.insert(order.end(), ids.begin(), ids.end());
        ++row_rank;
    }
    return order;
}

std::vector<std::vector<int>> components_of(const CellGrid& grid, const std::vector<int>& members) {
    std::vector<char> in_set(grid.cell_count(), 0), seen(grid.cell_count(), 0);
    for (int c : members) in_set[c] = 1;
    std::vector<std::vector<int>> comps;
    for (int start : members) {
        if (seen[start]) continue;
        std::vector<int> comp;
        std::deque<int> queue{start};
        seen[start] = 1;
        while (!queue.empty()) {
            int c = queue.front();
            queue.pop_front();
            comp.push_back(c);
            for (int n : grid.neighbors_of(c))
                if (in_set[n] && !seen[n]) {
                    seen[n] = 1;
                    queue.push_back(n);
                }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

} // namespace

bool is_connected_subset(const CellGrid& grid, const std::vector<int>& cells) {
    if (cells.empty()) return false;
    return components_of(grid, cells).size() == 1;
}

CellGrid assign_zones(CellGrid grid, int zone_count) {
    const int n = grid.cell_count();
    if (zone_count < 1 || zone_count > n)
        throw std::invalid_argument("zone_count must be in [1, cell_count]");

    std::vector<int> order = sweep_order(grid);
    std::vector<int> sweep_pos(n);
    for (int i = 0; i < n; ++i) sweep_pos[order[i]] = i;

    // Near-equal chunk sizes, remainder on the first zones.
    std::vector<int> zone_of(n, -1);
    int base = n / zone_count, extra = n % zone_count, at = 0;
    for (int z = 0; z < zone_count; ++z) {
        int size = base + (z < extra ? 1 : 0);
        for (int k = 0; k < size; ++k) zone_of[order[at++]] = z;
    }

    // Repair pass: a truncated outer ring can strand a few cells from their
    // chunk. Move each stray component to the adjacent zone it touches most.
    for (int pass = 0; pass < 2 * zone_count + 8; ++pass) {
        bool changed = false;
        for (int z = 0; z < zone_count; ++z) {
            std::vector<int> members;
            for (int c = 0; c < n; ++c)
                if (zone_of[c] == z) members.push_back(c);
            auto comps = components_of(grid, members);
            if (comps.size() <= 1) continue;
            // Keep the component holding the zone's first sweep cell.
            std::sort(comps.begin(), comps.end(), [&](const auto& a, const auto& b) {
                auto pos = [&](const std::vector<int>& v) {
                    int best = n;
                    for (int c : v) best = std::min(best, sweep_pos[c]);
                    return best;
                };
                return pos(a) < pos(b);
            });
            for (size_t k = 1; k < comps.size(); ++k) {
                std::vector<int> touch(zone_count, 0);
                for (int c : comps[k])
                    for (int nb : grid.neighbors_of(c))
                        if (zone_of[nb] != z) ++touch[zone_of[nb]];
                int target = -1, best = 0;
                for (int t = 0; t < zone_count; ++t)
                    if (touch[t] > best) best = touch[t], target = t;
                if (target < 0) continue; // isolated; resolved in a later pass
                for (int c : comps[k]) zone_of[c] = target;
                changed = true;
            }
        }
        if (!changed) break;
    }

    for (int c = 0; c < n; ++c) grid.cells[c].zone_id = zone_of[c];
    return grid;
}

std::vector<std::vector<int>> zone_members(const CellGrid& grid) {
    std::vector<std::vector<int>> members(grid.zone_count());
    for (const Cell& c : grid.cells) members[c.zone_id].push_back(c.id);
    return members;
}

std::vector<std::vector<int>> zone_adjacency(const CellGrid& grid) {
    int zc = grid.zone_count();
    std::vector<std::vector<int>> adj(zc);
    for (const Cell& c : grid.cells)
        for (int nb : grid.neighbors_of(c)) {
            int za = c.zone_id, zb = grid.cells[nb].zone_id;
            if (za != zb) adj[za].push_back(zb);
        }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

std::string serialize_grid(const CellGrid& grid) {
    std::string out = "cell_id x_m y_m zone_id\n";
    char buf[128];
    for (const Cell& c : grid.cells) {
        std::snprintf(buf, sizeof(buf), "%d %.3f %.3f %d\n", c.id, c.x, c.y, c.zone_id);
        out += buf;
    }
    return out;
}

} // namespace mbsfn
