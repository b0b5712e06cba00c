#ifndef MBSFN_EXPERIMENT_HPP_
#define MBSFN_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbsfn/planners.hpp"
#include "mbsfn/scenario.hpp"

namespace mbsfn {

struct DynamicConfig {
    bool enabled = false;
    int horizon_frames = 180;
    int period_frames = 30;
    std::vector<double> sigma0_sq = {0.0};
    int duration_min = 10;
    int duration_max = 30;
};

struct ExperimentConfig {
    int grid_cells = 57;
    double inter_site_distance_m = 500.0;
    std::vector<int> zone_counts = {4};
    double users_per_cell = 60.0;
    double unicast_fraction = 0.25;
    std::vector<InterestDistribution> distributions = {InterestDistribution::exponential};
    double exp_parameter = 3.5;
    int items_per_zone = 16;
    int neighbor_overlap = 12;
    std::vector<double> service_rates_bps = {500e3};
    bool mixed_rates = false;
    RadioConfig radio;
    std::vector<std::string> planners = {"scf"};
    std::vector<int> max_mbsfn = {256};
    ConstraintIMode constraint_i_mode = ConstraintIMode::global_limit;
    int tau = 2;
    double target_serve_fraction = 1.0;
    bool fast_eval = true;
    bool mcf_exhaustive_step1 = false;
    std::vector<uint64_t> seeds = {1};
    int threads = 1;
    DynamicConfig dynamic;

    PlannerConfig planner_config(int max_mbsfn_value) const;
};

/// Per-frame realized throughput of a frozen plan within one window.
struct FrameRecord {
    int frame = 0;
    double t_bb = 0.0, t_bu = 0.0, t_u = 0.0, t_total = 0.0;
};

struct WindowRecord {
    int window_start = 0;
    ThroughputReport planned; // Eq-(5) view at the planning instant
    std::vector<FrameRecord> frames;
};

struct RunRecord {
    // config point
    std::string planner;
    uint64_t seed = 0;
    int grid_cells = 0;
    int zones = 0;
    InterestDistribution distribution = InterestDistribution::exponential;
    double service_rate_bps = 0.0; // 0 when mixed
    bool mixed_rates = false;
    int max_mbsfn = 0;
    ConstraintIMode constraint_i_mode = ConstraintIMode::global_limit;
    double sigma0_sq = -1.0; // < 0 for static runs
    // results
    ThroughputReport report; // static report, or horizon mean for dynamic runs
    std::vector<StageTrace> traces;
    std::vector<WindowRecord> windows; // dynamic runs only
    std::string plan_dump;
    double wallclock_s = 0.0;
    // mixed-rate class accounting (served fraction of demand users per class)
    double served_frac_large = -1.0, served_frac_medium = -1.0, served_frac_small = -1.0;
};

ScenarioParams scenario_params(const ExperimentConfig& cfg, int zones,
                               InterestDistribution dist, double rate_bps);

/// The saturated mixed-rate catalog: one 2 Mb/s item in every zone, one
/// 1 Mb/s item per zone, 14 small items at 192-500 kb/s.
Scenario mixed_rate_scenario(const ExperimentConfig& cfg, int zones, InterestDistribution dist,
                             uint64_t seed);

std::vector<RunRecord> run_static(const ExperimentConfig& cfg, uint64_t seed);
std::vector<RunRecord> run_dynamic(const ExperimentConfig& cfg, uint64_t seed);

/// All records for every configured seed, merged in deterministic order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

} // namespace mbsfn

#endif
