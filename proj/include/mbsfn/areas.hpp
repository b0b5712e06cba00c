#ifndef MBSFN_AREAS_HPP_
#define MBSFN_AREAS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbsfn/scenario.hpp"

namespace mbsfn {

enum class ConstraintIMode { neighbor_limit, global_limit };

ConstraintIMode constraint_i_mode_from_string(const std::string& name);
std::string to_string(ConstraintIMode mode);

/// One MBSFN area: a contiguous cell set broadcasting a set of items, each
/// with a per-frame RB budget B and a per-RB throughput rho driven by the
/// worst served user.
struct MbsfnArea {
    int id = 0;
    std::vector<int> cells; // sorted cell ids
    std::vector<int> items; // sorted item ids
    std::vector<int> budget_rbs; // per item, parallel to `items`
    std::vector<int> bits_rb;    // per item (rho)
    std::vector<std::vector<int>> served; // [item][cell] planned user counts

    int item_index(int item) const;
    int total_budget() const;
};

/// Per-cell, per-subframe RB usage split by traffic class.
struct SubframeLayout {
    int subframes = 0;
    int rbs_per_subframe = 0;
    std::vector<std::vector<int>> broadcast; // [cell][subframe]
    std::vector<std::vector<int>> fallback;
    std::vector<std::vector<int>> unicast;
};

struct AreaPlan {
    std::vector<MbsfnArea> areas;
    std::vector<char> removed; // per user: dropped from broadcast service
    // Finalized allocation (set by allocate_subframes):
    std::vector<int> fallback_rbs; // per user X
    std::vector<int> unicast_rbs;  // per user U
    std::vector<char> unserved;    // per user
    SubframeLayout layout;
    bool finalized = false;

    double mean_area_size() const;
};

struct ConstraintResult {
    bool pass = true;
    std::vector<int> violators; // area ids (i) or cell ids (ii, iii)
};

/// Constraint (i): either per-area neighboring-area count (overlapping or
/// adjacent areas) <= max, or total area count <= max.
ConstraintResult check_constraint_i(const AreaPlan& plan, const CellGrid& grid,
                                    ConstraintIMode mode, int max_mbsfn);
/// Constraint (ii): a cell belongs to at most 8 areas.
ConstraintResult check_constraint_ii(const AreaPlan& plan, const CellGrid& grid);
/// Constraint (iii): per cell, broadcast RBs per frame <= 0.6 R.
ConstraintResult check_constraint_iii(const AreaPlan& plan, int rbs_per_frame);

/// Weighting for the dynamic throughput expression: the w factor comes from
/// a count matrix and every item carries a live-fraction eps_num[i]/eps_den.
struct DynamicWeights {
    const InterestSnapshot* counts = nullptr;
    bool use_estimates = true; // read counts->w_est (planning) vs counts->w (realized)
    std::vector<int> eps_num;  // per item; empty means all-ones
    int eps_den = 1;
};

/// Integer-exact evaluation of a plan. Throughputs are accumulated as int64
/// numerators over eps_den so results are independent of summation order.
struct PlanEval {
    int64_t t_bb_num = 0;
    int64_t t_bu_num = 0;
    int64_t t_u = 0;
    int eps_den = 1;
    int64_t bcast_rbs = 0;    // per frame, summed over cells
    int64_t fallback_rbs = 0; // admitted X total
    int64_t unicast_rbs = 0;
    int64_t bcast_users = 0;
    int64_t fallback_users = 0;
    int64_t unserved_users = 0;
    int64_t demand_users = 0;
    double served_demand_bits = 0.0; // demanded bits/frame actually served
    std::vector<int> per_user_x;
    std::vector<int> per_user_u;
    std::vector<char> per_user_unserved;
    std::vector<int> cell_bcast_rbs;

    double t_bb() const { return static_cast<double>(t_bb_num) / eps_den; }
    double t_bu() const { return static_cast<double>(t_bu_num) / eps_den; }
    double t_u_bits() const { return static_cast<double>(t_u); }
    double t_total() const { return t_bb() + t_bu() + t_u_bits(); }
    int64_t t_total_num() const { return t_bb_num + t_bu_num + t_u * eps_den; }
};

/// Reusable evaluator; owns scratch buffers so planners can call it in tight
/// loops. Pure: the same inputs always produce the same PlanEval.
class PlanEvaluator {
public:
    PlanEvaluator(const Scenario& scn, const LinkCache& link);

    /// weights == nullptr evaluates the static expression (actual counts,
    /// eps = 1). Counts are reduced by users flagged in `removed`.
    PlanEval evaluate(const std::vector<MbsfnArea>& areas, const std::vector<char>& removed,
                      const DynamicWeights* weights = nullptr);

    const Scenario& scenario() const { return *scn_; }
    const LinkCache& link() const { return *link_; }

    struct CellTotals {
        int64_t t_bu_num = 0, t_u = 0;
        int64_t fb_rbs = 0, uni_rbs = 0;
        int64_t bcast_users = 0, fb_users = 0, unserved = 0, demand = 0;
        double served_bits = 0.0;
    };
    // Single-cell slice of the evaluation against a coverage view (area id
    // per (cell,item), -1 when uncovered). The incremental planner path calls
    // this directly so cached and full evaluations share one implementation.
    CellTotals eval_cell(int cell, int bcast_rbs, const std::vector<int>& cov,
                         const std::vector<char>& removed, const DynamicWeights* weights,
                         std::vector<int>* per_user_x, std::vector<int>* per_user_u,
                         std::vector<char>* per_user_unserved) const;

private:
    const Scenario* scn_;
    const LinkCache* link_;
    std::vector<int> cov_;
    std::vector<int> cell_bcast_;
};

struct PackResult {
    bool feasible = false;
    // [cell][subframe] broadcast RBs.
    std::vector<std::vector<int>> used;
};

/// Deterministic broadcast packer: areas in ascending id order, items in
/// ascending id order, each budget dealt round-robin over the MBSFN-capable
/// subframes subject to the per-cell per-subframe residual.
PackResult pack_broadcast(const std::vector<MbsfnArea>& areas, const CellGrid& grid,
                          const RadioConfig& radio);

/// Finalize the plan: pack broadcast subframes, admit unicast-fallback users
/// by decreasing CQI at full demand, split residual RBs equally among native
/// unicast users, and lay everything out per subframe. Throws when the
/// broadcast budgets alone cannot be packed.
AreaPlan allocate_subframes(AreaPlan plan, const Scenario& scn, const LinkCache& link,
                            const DynamicWeights* weights = nullptr);

struct ThroughputReport {
    double t_bb = 0.0, t_bu = 0.0, t_u = 0.0, t_total = 0.0;
    double serving_ratio = 0.0;       // demand-bits basis
    double serving_ratio_users = 0.0; // user-count basis (informational)
    double rb_gain = 0.0;             // NaN when the plan spends no broadcast-demand RBs
    double frac_rb_bb = 0.0, frac_rb_bu = 0.0, frac_rb_uu = 0.0;
    double unserved_fraction = 0.0;
    int num_areas = 0;
    double mean_area_size = 0.0;
    int64_t bcast_served_users = 0, fallback_served_users = 0, unserved_users = 0,
            demand_users = 0;
};

ThroughputReport compute_throughput(const AreaPlan& plan, const Scenario& scn,
                                    const LinkCache& link);
ThroughputReport compute_throughput_dynamic(const AreaPlan& plan, const Scenario& scn,
                                            const LinkCache& link, const DynamicWeights& weights);

/// Throughput of a finalized plan without the baseline-relative metrics;
/// cheap enough for per-frame realized evaluation.
struct FrozenThroughput {
    double t_bb = 0.0, t_bu = 0.0, t_u = 0.0;
    double t_total() const { return t_bb + t_bu + t_u; }
    int64_t t_bb_num = 0, t_bu_num = 0, t_u_int = 0;
    int eps_den = 1;
};
FrozenThroughput frozen_throughput(const AreaPlan& plan, const Scenario& scn,
                                   const LinkCache& link, const DynamicWeights* weights);

std::string serialize_plan(const AreaPlan& plan, const ThroughputReport& report);

} // namespace mbsfn

#endif
