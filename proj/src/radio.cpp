#include "mbsfn/radio.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace mbsfn {
namespace {

constexpr double kRbBandwidthHz = 180e3;
constexpr double kDataResPerRb = 144.0;
constexpr double kMinDistanceM = 25.0;

// 15-level CQI table: activation SINR threshold (dB) and spectral
// efficiency (bits/symbol), index 0 <-> CQI 1.
constexpr std::array<double, 15> kCqiSinrThresholdDb = {
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
};
constexpr std::array<double, 15> kCqiSpectralEff = {
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
};

double squared_distance(double x, double y, const Cell& c) {
    double dx = x - c.x, dy = y - c.y;
    return dx * dx + dy * dy;
}

} // namespace

double RadioConfig::noise_dbm_per_rb() const {
    return -174.0 + 10.0 * std::log10(kRbBandwidthHz) + noise_figure_db;
}

double RadioConfig::tx_dbm_per_rb() const {
    return tx_power_dbm - 10.0 * std::log10(static_cast<double>(rbs_per_subframe()));
}

void RadioConfig::validate() const {
    if (rbs_per_frame <= 0 || subframes_per_frame <= 0)
        throw std::invalid_argument("rbs_per_frame and subframes_per_frame must be positive");
    if (rbs_per_frame % subframes_per_frame != 0)
        throw std::invalid_argument("rbs_per_frame must be divisible by subframes_per_frame");
    if (mbsfn_capable_subframes < 0 || mbsfn_capable_subframes > subframes_per_frame)
        throw std::invalid_argument("mbsfn_capable_subframes out of range");
    if (!(bandwidth_mhz > 0.0) || !(carrier_ghz > 0.0))
        throw std::invalid_argument("bandwidth and carrier must be positive");
}

double path_loss_db(double distance_m, const RadioConfig&) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be > 0");
    double d_km = std::max(distance_m, kMinDistanceM) / 1000.0;
    return 128.1 + 37.6 * std::log10(d_km);
}

double rx_power_dbm(double distance_m, const RadioConfig& cfg) {
    return cfg.tx_dbm_per_rb() + cfg.enb_antenna_gain_dbi + cfg.ue_antenna_gain_dbi +
           cfg.link_bonus_db - path_loss_db(distance_m, cfg);
}

double rx_power_mw(double distance_m, const RadioConfig& cfg) {
    return dbm_to_mw(rx_power_dbm(distance_m, cfg));
}

double sinr_unicast_db(double x, double y, int serving_cell, const CellGrid& grid,
                       const RadioConfig& cfg) {
    return sinr_broadcast_db(x, y, {serving_cell}, grid, cfg);
}

double sinr_broadcast_db(double x, double y, const std::vector<int>& area_cells,
                         const CellGrid& grid, const RadioConfig& cfg) {
    if (area_cells.empty()) throw std::invalid_argument("area_cells must be non-empty");
    std::vector<char> in_area(grid.cell_count(), 0);
    for (int c : area_cells) {
        if (c < 0 || c >= grid.cell_count())
            throw std::out_of_range("unknown cell id " + std::to_string(c));
        in_area[c] = 1;
    }
    double signal = 0.0, interference = 0.0;
    for (const Cell& c : grid.cells) {
        double d = std::sqrt(squared_distance(x, y, c));
        double p = rx_power_mw(std::max(d, 1e-3), cfg);
        (in_area[c.id] ? signal : interference) += p;
    }
    double noise = dbm_to_mw(cfg.noise_dbm_per_rb());
    return mw_to_dbm(signal / (noise + interference));
}

int cqi_from_sinr(double sinr_db) {
    int cqi = 0;
    for (int k = 0; k < 15; ++k)
        if (sinr_db >= kCqiSinrThresholdDb[k]) cqi = k + 1;
    return cqi;
}

int bits_per_rb(int cqi) {
    if (cqi < 0 || cqi > 15) throw std::invalid_argument("cqi must be in 0..15");
    if (cqi == 0) return 0;
    return static_cast<int>(std::floor(kCqiSpectralEff[cqi - 1] * kDataResPerRb));
}

std::optional<int> rb_demand_per_frame(double service_rate_bps, int bits) {
    if (service_rate_bps < 0.0) throw std::invalid_argument("service rate must be >= 0");
    if (bits < 0) throw std::invalid_argument("bits_per_rb must be >= 0");
    if (service_rate_bps == 0.0) return 0;
    if (bits == 0) return std::nullopt;
    // Integral rates (the usual case) are handled in exact integer math so
    // that ceil() is immune to the binary representation of the 10 ms frame.
    int64_t rate_i = std::llround(service_rate_bps);
    if (std::abs(service_rate_bps - static_cast<double>(rate_i)) <
        1e-9 * std::max(1.0, service_rate_bps)) {
        int64_t denom = 100LL * bits; // bits delivered per second by one RB/frame
        return static_cast<int>((rate_i + denom - 1) / denom);
    }
    return static_cast<int>(std::ceil(service_rate_bps * kFrameSeconds / bits));
}

} // namespace mbsfn
