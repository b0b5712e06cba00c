#ifndef MBSFN_TOPOLOGY_HPP_
#define MBSFN_TOPOLOGY_HPP_

#include <string>
#include <vector>

namespace mbsfn {

struct Cell {
    int id = 0;
    double x = 0.0; // meters
    double y = 0.0;
    int zone_id = 0;
    // Axial hex coordinates, kept so zone assignment can sweep rows.
    int q = 0;
    int r = 0;
};

/// Hexagonal cell layout of a synchronization area plus its adjacency
/// relation. Cells are laid out in concentric rings around a central cell
/// and truncated in ring order, so any cell count >= 1 is constructible.
struct CellGrid {
    std::vector<Cell> cells;
    double inter_site_distance = 0.0; // meters
    std::vector<std::vector<int>> adjacency; // sorted neighbor ids per cell

    int cell_count() const { return static_cast<int>(cells.size()); }
    int zone_count() const;
    const std::vector<int>& neighbors_of(int cell_id) const;
    bool are_adjacent(int a, int b) const;
};

CellGrid build_hex_grid(int cell_count, double inter_site_distance);

/// Neighbor set of one cell (copy of the adjacency row). Throws on bad id.
std::vector<int> neighbors(const CellGrid& grid, int cell_id);

/// Partition the grid into `zone_count` contiguous, near-equal-size zones by
/// sweeping cells in serpentine axial-row order, then repairing any stray
/// fragments caused by truncated outer rings.
CellGrid assign_zones(CellGrid grid, int zone_count);

/// Zone ids adjacent to each zone (derived from cell adjacency).
std::vector<std::vector<int>> zone_adjacency(const CellGrid& grid);

/// Cell ids per zone.
std::vector<std::vector<int>> zone_members(const CellGrid& grid);

/// One record per cell: id x y zone_id. Stable formatting for goldens.
std::string serialize_grid(const CellGrid& grid);

/// True when `cells` (sorted ids) induces a connected subgraph.
bool is_connected_subset(const CellGrid& grid, const std::vector<int>& cells);

} // namespace mbsfn

#endif
