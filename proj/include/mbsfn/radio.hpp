#ifndef MBSFN_RADIO_HPP_
#define MBSFN_RADIO_HPP_

#include <optional>
#include <vector>

#include "mbsfn/topology.hpp"

namespace mbsfn {

/// Parametric macro-cell link model. Links are deterministic (no fading or
/// shadowing); the planner only needs average per-position channel quality.
struct RadioConfig {
    double tx_power_dbm = 43.0;
    double enb_antenna_gain_dbi = 14.0;
    double ue_antenna_gain_dbi = 0.0;
    double enb_height_m = 25.0;
    double ue_height_m = 1.5;
    double bandwidth_mhz = 10.0;
    double carrier_ghz = 2.6;
    double noise_figure_db = 9.0;
    double link_bonus_db = 3.0; // scalar stand-in for the 2x2 MIMO gain
    int rbs_per_frame = 500;    // R
    int subframes_per_frame = 10;
    int mbsfn_capable_subframes = 6;

    int rbs_per_subframe() const { return rbs_per_frame / subframes_per_frame; }
    double noise_dbm_per_rb() const;
    /// Transmit power is spread evenly over the RBs of one subframe.
    double tx_dbm_per_rb() const;
    void validate() const;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// 128.1 + 37.6 log10(d_km); distances below 25 m are clamped to 25 m.
double path_loss_db(double distance_m, const RadioConfig& cfg);

/// Received per-RB power from one eNB at the given distance, dBm / mW.
double rx_power_dbm(double distance_m, const RadioConfig& cfg);
double rx_power_mw(double distance_m, const RadioConfig& cfg);

double sinr_unicast_db(double x, double y, int serving_cell, const CellGrid& grid,
                       const RadioConfig& cfg);

/// MBSFN reception: all cells of the area combine constructively; every cell
/// outside the area interferes.
double sinr_broadcast_db(double x, double y, const std::vector<int>& area_cells,
                         const CellGrid& grid, const RadioConfig& cfg);

/// Monotone step map from SINR to the 0..15 CQI scale (0 = out of service).
int cqi_from_sinr(double sinr_db);

/// Bits carried by one RB at the given CQI (144 data REs per RB).
int bits_per_rb(int cqi);

inline constexpr double kFrameSeconds = 0.010;

/// RBs per frame needed to sustain `service_rate_bps`; nullopt when the rate
/// is positive but the link carries zero bits (out of service).
std::optional<int> rb_demand_per_frame(double service_rate_bps, int bits_per_rb);

} // namespace mbsfn

#endif
