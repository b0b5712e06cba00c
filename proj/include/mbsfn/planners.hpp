#ifndef MBSFN_PLANNERS_HPP_
#define MBSFN_PLANNERS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbsfn/areas.hpp"
#include "mbsfn/scenario.hpp"

namespace mbsfn {

/// Output of Cell Aggregation: per item, the connected components of the
/// cells holding at least tau interested users.
struct CandidateArea {
    int item = -1;
    std::vector<int> cells;            // sorted
    std::vector<int> interested_count; // parallel to cells
};

struct PlannerConfig {
    int tau = 2;
    int max_mbsfn = 256;
    ConstraintIMode constraint_i_mode = ConstraintIMode::global_limit;
    double target_serve_fraction = 1.0;
    bool fast_eval = true;            // cached per-cell evaluation, bit-identical to reference
    bool mcf_exhaustive_step1 = false; // exact knapsack instead of density greedy
};

struct StageTrace {
    std::string stage;
    int candidate_count = 0;
    int area_count = 0;
    double throughput = 0.0;
};

struct PlannerResult {
    AreaPlan plan;
    ThroughputReport report;
    std::vector<StageTrace> traces;
};

/// Planning-time interest view: count matrix (w or noisy estimate) plus the
/// per-item live fractions of the upcoming window.
struct PlanningInterest {
    const InterestSnapshot* counts = nullptr; // null: use the scenario's actual counts
    bool use_estimates = false;
    std::vector<int> eps_num; // per item; empty = all live
    int eps_den = 1;
};

std::vector<CandidateArea> cell_aggregation(const CellGrid& grid, const InterestSnapshot& counts,
                                            bool use_estimates, const std::vector<int>& items,
                                            int tau);

/// Greedy area activation: per round, every remaining candidate is checked
/// against constraints (ii)-(iv) and the full-system throughput of the plan
/// plus that candidate; the best strictly-improving one is kept.
std::pair<double, AreaPlan> hill_climbing(const std::vector<CandidateArea>& candidates,
                                          const Scenario& scn, const LinkCache& link,
                                          const PlannerConfig& config, const AreaPlan& initial);

std::pair<double, AreaPlan> rate_increase(const AreaPlan& plan, double throughput,
                                          const Scenario& scn, const LinkCache& link,
                                          const PlannerConfig& config);

AreaPlan area_fusion(const AreaPlan& plan, const Scenario& scn, const LinkCache& link,
                     const PlannerConfig& config);

PlannerResult scf(const Scenario& scn, const LinkCache& link, const PlannerConfig& config,
                  const PlanningInterest* interest = nullptr);

PlannerResult mcf(const Scenario& scn, const LinkCache& link, const PlannerConfig& config,
                  const PlanningInterest* interest = nullptr);

PlannerResult unicast_baseline(const Scenario& scn, const LinkCache& link,
                               const PlannerConfig& config,
                               const PlanningInterest* interest = nullptr);

/// Exhaustive search over all feasible subsets of the Cell Aggregation
/// candidates (test oracle; guarded to tiny instances).
PlannerResult oracle_optimal(const Scenario& scn, const LinkCache& link,
                             const PlannerConfig& config);

PlannerResult run_planner(const std::string& name, const Scenario& scn, const LinkCache& link,
                          const PlannerConfig& config, const PlanningInterest* interest = nullptr);

std::vector<std::string> known_planners();

} // namespace mbsfn

#endif
