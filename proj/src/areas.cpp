#include "mbsfn/areas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace mbsfn {

ConstraintIMode constraint_i_mode_from_string(const std::string& name) {
    if (name == "neighbor_limit") return ConstraintIMode::neighbor_limit;
    if (name == "global_limit") return ConstraintIMode::global_limit;
    throw std::invalid_argument("unknown constraint_i_mode '" + name +
                                "' (valid: neighbor_limit, global_limit)");
}

std::string to_string(ConstraintIMode mode) {
    return mode == ConstraintIMode::neighbor_limit ? "neighbor_limit" : "global_limit";
}

int MbsfnArea::item_index(int item) const {
    auto it = std::lower_bound(items.begin(), items.end(), item);
    if (it == items.end() || *it != item) return -1;
    return static_cast<int>(it - items.begin());
}

int MbsfnArea::total_budget() const {
    int total = 0;
    for (int b : budget_rbs) total += b;
    return total;
}

double AreaPlan::mean_area_size() const {
    if (areas.empty()) return 0.0;
    double total = 0.0;
    for (const MbsfnArea& m : areas) total += static_cast<double>(m.cells.size());
    return total / static_cast<double>(areas.size());
}

namespace {

bool cells_overlap(const std::vector<int>& a, const std::vector<int>& b) {
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j])
            ++i;
        else
            ++j;
    }
    return false;
}

bool areas_adjacent(const MbsfnArea& a, const MbsfnArea& b, const CellGrid& grid) {
    for (int c : a.cells)
        for (int n : grid.neighbors_of(c))
            if (std::binary_search(b.cells.begin(), b.cells.end(), n)) return true;
    return false;
}

} // namespace

ConstraintResult check_constraint_i(const AreaPlan& plan, const CellGrid& grid,
                                    ConstraintIMode mode, int max_mbsfn) {
    ConstraintResult res;
    if (mode == ConstraintIMode::global_limit) {
        if (static_cast<int>(plan.areas.size()) > max_mbsfn) {
            res.pass = false;
            for (const MbsfnArea& m : plan.areas) res.violators.push_back(m.id);
        }
        return res;
    }
    const auto& areas = plan.areas;
    for (size_t i = 0; i < areas.size(); ++i) {
        int neighbors = 0;
        for (size_t j = 0; j < areas.size(); ++j) {
            if (i == j) continue;
            if (cells_overlap(areas[i].cells, areas[j].cells) ||
                areas_adjacent(areas[i], areas[j], grid))
                ++neighbors;
        }
        if (neighbors > max_mbsfn) {
            res.pass = false;
            res.violators.push_back(areas[i].id);
        }
    }
    return res;
}

ConstraintResult check_constraint_ii(const AreaPlan& plan, const CellGrid& grid) {
    ConstraintResult res;
    std::vector<int> count(grid.cell_count(), 0);
    for (const MbsfnArea& m : plan.areas)
        for (int c : m.cells) ++count[c];
    for (int c = 0; c < grid.cell_count(); ++c)
        if (count[c] > 8) {
            res.pass = false;
            res.violators.push_back(c);
        }
    return res;
}

ConstraintResult check_constraint_iii(const AreaPlan& plan, int rbs_per_frame) {
    ConstraintResult res;
    // Budget cap is 0.6 R, inclusive. R is a multiple of 10 so 0.6 R is exact.
    int cap = (rbs_per_frame * 6) / 10;
    int max_cell = -1;
    for (const MbsfnArea& m : plan.areas)
        for (int c : m.cells) max_cell = std::max(max_cell, c);
    std::vector<int> load(max_cell + 1, 0);
    for (const MbsfnArea& m : plan.areas)
        for (int c : m.cells) load[c] += m.total_budget();
    for (int c = 0; c <= max_cell; ++c)
        if (load[c] > cap) {
            res.pass = false;
            res.violators.push_back(c);
        }
    return res;
}

PackResult pack_broadcast(const std::vector<MbsfnArea>& areas, const CellGrid& grid,
                          const RadioConfig& radio) {
    PackResult res;
    const int K = radio.mbsfn_capable_subframes;
    const int cap = radio.rbs_per_subframe();
    res.used.assign(grid.cell_count(), std::vector<int>(radio.subframes_per_frame, 0));

    std::vector<const MbsfnArea*> order;
    order.reserve(areas.size());
    for (const MbsfnArea& m : areas) order.push_back(&m);
    std::sort(order.begin(), order.end(),
              [](const MbsfnArea* a, const MbsfnArea* b) { return a->id < b->id; });

    std::vector<int> avail(K), placed(K);
    for (const MbsfnArea* m : order) {
        for (size_t k = 0; k < m->items.size(); ++k) {
            int budget = m->budget_rbs[k];
            if (budget <= 0) continue;
            for (int s = 0; s < K; ++s) {
                avail[s] = cap;
                for (int c : m->cells) avail[s] = std::min(avail[s], cap - res.used[c][s]);
                placed[s] = 0;
            }
            int remaining = budget;
            while (remaining > 0) {
                bool progress = false;
                for (int s = 0; s < K && remaining > 0; ++s)
                    if (placed[s] < avail[s]) {
                        ++placed[s];
                        --remaining;
                        progress = true;
                    }
                if (!progress) return res; // infeasible
            }
            for (int s = 0; s < K; ++s)
                if (placed[s] > 0)
                    for (int c : m->cells) res.used[c][s] += placed[s];
        }
    }
    res.feasible = true;
    return res;
}

PlanEvaluator::PlanEvaluator(const Scenario& scn, const LinkCache& link)
    : scn_(&scn), link_(&link) {
    cov_.assign(static_cast<size_t>(scn.cell_count()) * scn.item_count(), -1);
    cell_bcast_.assign(scn.cell_count(), 0);
}

PlanEvaluator::CellTotals PlanEvaluator::eval_cell(
    int cell, int bcast_rbs, const std::vector<int>& cov, const std::vector<char>& removed,
    const DynamicWeights* weights, std::vector<int>* per_user_x, std::vector<int>* per_user_u,
    std::vector<char>* per_user_unserved) const {
    CellTotals t;
    const int R = scn_->params.radio.rbs_per_frame;
    const int items = scn_->item_count();
    const auto& users = scn_->users.users;
    int remaining = std::max(0, R - bcast_rbs);

    for (int u : link_->bcast_by_cell[cell]) {
        int item = users[u].item;
        int64_t eps_num = 1, eps_den = 1;
        if (weights != nullptr) {
            eps_den = weights->eps_den;
            eps_num = weights->eps_num.empty() ? 1 : weights->eps_num[item];
            if (eps_num == 0) continue; // no demand inside this window
        }
        ++t.demand;
        bool covered = cov[static_cast<size_t>(cell) * items + item] >= 0;
        double demand_bits =
            scn_->items[item].service_rate_bps * kFrameSeconds * eps_num / eps_den;
        if (covered && !removed[u]) {
            ++t.bcast_users;
            t.served_bits += demand_bits;
            continue;
        }
        int x = link_->x_demand[u];
        if (x >= 0 && x <= remaining) {
            remaining -= x;
            ++t.fb_users;
            t.fb_rbs += x;
            t.t_bu_num += static_cast<int64_t>(x) * link_->unicast_bits[u] * eps_num;
            t.served_bits += demand_bits;
            if (per_user_x != nullptr) (*per_user_x)[u] = x;
        } else {
            ++t.unserved;
            if (per_user_unserved != nullptr) (*per_user_unserved)[u] = 1;
        }
    }

    const auto& uni = link_->unicast_by_cell[cell];
    if (!uni.empty()) {
        int n = static_cast<int>(uni.size());
        int residual = remaining;
        int q = residual / n, r = residual % n;
        t.uni_rbs = residual;
        t.t_u = q * link_->unicast_prefix_bits[cell][n] + link_->unicast_prefix_bits[cell][r];
        if (per_user_u != nullptr)
            for (int k = 0; k < n; ++k) (*per_user_u)[uni[k]] = q + (k < r ? 1 : 0);
    }
    return t;
}

PlanEval PlanEvaluator::evaluate(const std::vector<MbsfnArea>& areas,
                                 const std::vector<char>& removed,
                                 const DynamicWeights* weights) {
    const int cells = scn_->cell_count();
    const int items = scn_->item_count();
    const int users = scn_->user_count();

    std::fill(cov_.begin(), cov_.end(), -1);
    std::fill(cell_bcast_.begin(), cell_bcast_.end(), 0);

    // Coverage: the lowest-id area covering (cell, item) serves those users.
    std::vector<const MbsfnArea*> order;
    order.reserve(areas.size());
    for (const MbsfnArea& m : areas) order.push_back(&m);
    std::sort(order.begin(), order.end(),
              [](const MbsfnArea* a, const MbsfnArea* b) { return a->id < b->id; });
    for (const MbsfnArea* m : order) {
        int budget = m->total_budget();
        for (int c : m->cells) {
            cell_bcast_[c] += budget;
            for (int i : m->items) {
                int& slot = cov_[static_cast<size_t>(c) * items + i];
                if (slot < 0) slot = m->id;
            }
        }
    }

    PlanEval out;
    out.eps_den = weights != nullptr ? weights->eps_den : 1;
    out.per_user_x.assign(users, 0);
    out.per_user_u.assign(users, 0);
    out.per_user_unserved.assign(users, 0);
    out.cell_bcast_rbs = cell_bcast_;

    // Removed users do not count toward the w factor of any covering area.
    std::vector<int> removed_count(static_cast<size_t>(cells) * items, 0);
    for (int u = 0; u < users; ++u)
        if (removed[u] && !scn_->users.users[u].is_unicast())
            ++removed_count[static_cast<size_t>(scn_->users.users[u].serving_cell) * items +
                            scn_->users.users[u].item];

    const InterestSnapshot* counts =
        weights != nullptr && weights->counts != nullptr ? weights->counts : &scn_->interest;
    bool use_est = weights != nullptr && weights->counts != nullptr && weights->use_estimates;
    for (const MbsfnArea* m : order) {
        for (size_t k = 0; k < m->items.size(); ++k) {
            int item = m->items[k];
            int64_t eps_num = 1;
            if (weights != nullptr && !weights->eps_num.empty()) eps_num = weights->eps_num[item];
            if (eps_num == 0) continue;
            int64_t b_rho = static_cast<int64_t>(m->budget_rbs[k]) * m->bits_rb[k];
            for (int c : m->cells) {
                size_t idx = static_cast<size_t>(c) * items + item;
                if (cov_[idx] != m->id) continue; // a lower-id area serves these users
                int w = use_est ? counts->est(c, item) : counts->at(c, item);
                w = std::max(0, w - removed_count[idx]);
                out.t_bb_num += b_rho * w * eps_num;
            }
        }
    }

    for (int c = 0; c < cells; ++c) {
        CellTotals t = eval_cell(c, cell_bcast_[c], cov_, removed, weights, &out.per_user_x,
                                 &out.per_user_u, &out.per_user_unserved);
        out.t_bu_num += t.t_bu_num;
        out.t_u += t.t_u;
        out.fallback_rbs += t.fb_rbs;
        out.unicast_rbs += t.uni_rbs;
        out.bcast_users += t.bcast_users;
        out.fallback_users += t.fb_users;
        out.unserved_users += t.unserved;
        out.demand_users += t.demand;
        out.served_demand_bits += t.served_bits;
        out.bcast_rbs += cell_bcast_[c];
    }
    return out;
}

AreaPlan allocate_subframes(AreaPlan plan, const Scenario& scn, const LinkCache& link,
                            const DynamicWeights* weights) {
    const RadioConfig& radio = scn.params.radio;
    PackResult pack = pack_broadcast(plan.areas, scn.grid, radio);
    if (!pack.feasible)
        throw std::runtime_error("broadcast budgets cannot be packed within the MBSFN subframes");

    if (plan.removed.empty()) plan.removed.assign(scn.user_count(), 0);
    PlanEvaluator ev(scn, link);
    PlanEval eval = ev.evaluate(plan.areas, plan.removed, weights);
    plan.fallback_rbs = eval.per_user_x;
    plan.unicast_rbs = eval.per_user_u;
    plan.unserved = eval.per_user_unserved;

    SubframeLayout layout;
    layout.subframes = radio.subframes_per_frame;
    layout.rbs_per_subframe = radio.rbs_per_subframe();
    layout.broadcast = std::move(pack.used);
    layout.fallback.assign(scn.cell_count(), std::vector<int>(layout.subframes, 0));
    layout.unicast.assign(scn.cell_count(), std::vector<int>(layout.subframes, 0));

    // First-fit fill of per-user RBs into residual subframe capacity.
    auto fill = [&](int cell, int rbs, std::vector<std::vector<int>>& dest) {
        for (int s = 0; s < layout.subframes && rbs > 0; ++s) {
            int free = layout.rbs_per_subframe - layout.broadcast[cell][s] -
                       layout.fallback[cell][s] - layout.unicast[cell][s];
            int take = std::min(free, rbs);
            if (take > 0) {
                dest[cell][s] += take;
                rbs -= take;
            }
        }
        return rbs == 0;
    };
    for (int c = 0; c < scn.cell_count(); ++c) {
        for (int u : link.bcast_by_cell[c])
            if (eval.per_user_x[u] > 0 && !fill(c, eval.per_user_x[u], layout.fallback))
                throw std::runtime_error("internal error: admitted fallback does not fit");
        for (int u : link.unicast_by_cell[c])
            if (eval.per_user_u[u] > 0 && !fill(c, eval.per_user_u[u], layout.unicast))
                throw std::runtime_error("internal error: unicast split does not fit");
    }
    plan.layout = std::move(layout);
    plan.finalized = true;
    return plan;
}

namespace {

struct FrozenTotals {
    int64_t t_bb_num = 0, t_bu_num = 0, t_u = 0;
    int64_t bcast_rbs = 0, fallback_rbs = 0, unicast_rbs = 0;
    int64_t bcast_users = 0, fb_users = 0, unserved = 0, demand = 0;
    double served_bits = 0.0;
};

// Read a finalized plan back out, substituting the given count matrix into
// the w factor of the broadcast expression.
FrozenTotals frozen_totals(const AreaPlan& plan, const Scenario& scn, const LinkCache& link,
                           const DynamicWeights* weights) {
    if (!plan.finalized)
        throw std::invalid_argument("plan must be finalized by allocate_subframes");
    FrozenTotals t;
    const int items = scn.item_count();
    const int users = scn.user_count();

    std::vector<int> cov(static_cast<size_t>(scn.cell_count()) * items, -1);
    std::vector<const MbsfnArea*> order;
    for (const MbsfnArea& m : plan.areas) order.push_back(&m);
    std::sort(order.begin(), order.end(),
              [](const MbsfnArea* a, const MbsfnArea* b) { return a->id < b->id; });
    for (const MbsfnArea* m : order)
        for (int c : m->cells)
            for (int i : m->items) {
                int& slot = cov[static_cast<size_t>(c) * items + i];
                if (slot < 0) slot = m->id;
            }

    std::vector<int> removed_count(static_cast<size_t>(scn.cell_count()) * items, 0);
    for (int u = 0; u < users; ++u)
        if (!plan.removed.empty() && plan.removed[u] && !scn.users.users[u].is_unicast())
            ++removed_count[static_cast<size_t>(scn.users.users[u].serving_cell) * items +
                            scn.users.users[u].item];

    const InterestSnapshot* counts =
        weights != nullptr && weights->counts != nullptr ? weights->counts : &scn.interest;
    bool use_est = weights != nullptr && weights->counts != nullptr && weights->use_estimates;
    for (const MbsfnArea* m : order) {
        t.bcast_rbs += static_cast<int64_t>(m->total_budget()) * m->cells.size();
        for (size_t k = 0; k < m->items.size(); ++k) {
            int item = m->items[k];
            int64_t eps_num = 1;
            if (weights != nullptr && !weights->eps_num.empty()) eps_num = weights->eps_num[item];
            if (eps_num == 0) continue;
            int64_t b_rho = static_cast<int64_t>(m->budget_rbs[k]) * m->bits_rb[k];
            for (int c : m->cells) {
                size_t idx = static_cast<size_t>(c) * items + item;
                if (cov[idx] != m->id) continue;
                int w = use_est ? counts->est(c, item) : counts->at(c, item);
                w = std::max(0, w - removed_count[idx]);
                t.t_bb_num += b_rho * w * eps_num;
            }
        }
    }

    for (int u = 0; u < users; ++u) {
        const UE& ue = scn.users.users[u];
        if (ue.is_unicast()) {
            t.t_u += static_cast<int64_t>(plan.unicast_rbs[u]) * link.unicast_bits[u];
            t.unicast_rbs += plan.unicast_rbs[u];
            continue;
        }
        int64_t eps_num = 1, eps_den = 1;
        if (weights != nullptr) {
            eps_den = weights->eps_den;
            if (!weights->eps_num.empty()) eps_num = weights->eps_num[ue.item];
            if (eps_num == 0) continue;
        }
        ++t.demand;
        double demand_bits = scn.items[ue.item].service_rate_bps * kFrameSeconds *
                             static_cast<double>(eps_num) / static_cast<double>(eps_den);
        size_t idx = static_cast<size_t>(ue.serving_cell) * items + ue.item;
        bool covered = cov[idx] >= 0;
        bool removed = !plan.removed.empty() && plan.removed[u];
        if (covered && !removed) {
            ++t.bcast_users;
            t.served_bits += demand_bits;
        } else if (plan.fallback_rbs[u] > 0) {
            ++t.fb_users;
            t.fallback_rbs += plan.fallback_rbs[u];
            t.t_bu_num += static_cast<int64_t>(plan.fallback_rbs[u]) * link.unicast_bits[u] * eps_num;
            t.served_bits += demand_bits;
        } else {
            ++t.unserved;
        }
    }
    return t;
}

struct BaselineStats {
    double served_bits = 0.0;
    int64_t bcast_demand_rbs = 0;
    int64_t served_users = 0;
    int64_t demand_users = 0;
};

BaselineStats baseline_stats(const Scenario& scn, const LinkCache& link,
                             const DynamicWeights* weights) {
    PlanEvaluator ev(scn, link);
    std::vector<char> removed(scn.user_count(), 0);
    PlanEval eval = ev.evaluate({}, removed, weights);
    BaselineStats s;
    s.bcast_demand_rbs = eval.fallback_rbs;
    s.served_users = eval.fallback_users;
    s.demand_users = eval.demand_users;
    // Served bits re-summed in user-id order so that a plan compared against
    // itself yields exactly 1.0 regardless of admission order.
    for (int u = 0; u < scn.user_count(); ++u) {
        if (eval.per_user_x[u] <= 0) continue;
        const UE& ue = scn.users.users[u];
        int64_t eps_num = 1, eps_den = 1;
        if (weights != nullptr) {
            eps_den = weights->eps_den;
            if (!weights->eps_num.empty()) eps_num = weights->eps_num[ue.item];
        }
        s.served_bits += scn.items[ue.item].service_rate_bps * kFrameSeconds *
                         static_cast<double>(eps_num) / static_cast<double>(eps_den);
    }
    return s;
}

ThroughputReport build_report(const AreaPlan& plan, const Scenario& scn, const LinkCache& link,
                              const DynamicWeights* weights) {
    FrozenTotals t = frozen_totals(plan, scn, link, weights);
    BaselineStats base = baseline_stats(scn, link, weights);

    int eps_den = weights != nullptr ? weights->eps_den : 1;
    ThroughputReport r;
    r.t_bb = static_cast<double>(t.t_bb_num) / eps_den;
    r.t_bu = static_cast<double>(t.t_bu_num) / eps_den;
    r.t_u = static_cast<double>(t.t_u);
    r.t_total = r.t_bb + r.t_bu + r.t_u;
    r.bcast_served_users = t.bcast_users;
    r.fallback_served_users = t.fb_users;
    r.unserved_users = t.unserved;
    r.demand_users = t.demand;
    r.unserved_fraction =
        t.demand > 0 ? static_cast<double>(t.unserved) / static_cast<double>(t.demand) : 0.0;
    r.serving_ratio = base.served_bits > 0.0 ? t.served_bits / base.served_bits : 0.0;
    r.serving_ratio_users =
        base.served_users > 0
            ? static_cast<double>(t.bcast_users + t.fb_users) / static_cast<double>(base.served_users)
            : 0.0;
    int64_t plan_bcast_demand_rbs = t.bcast_rbs + t.fallback_rbs;
    r.rb_gain = plan_bcast_demand_rbs > 0
                    ? static_cast<double>(base.bcast_demand_rbs) /
                          static_cast<double>(plan_bcast_demand_rbs)
                    : std::numeric_limits<double>::quiet_NaN();
    double denom = static_cast<double>(scn.params.radio.rbs_per_frame) * scn.cell_count();
    r.frac_rb_bb = static_cast<double>(t.bcast_rbs) / denom;
    r.frac_rb_bu = static_cast<double>(t.fallback_rbs) / denom;
    r.frac_rb_uu = static_cast<double>(t.unicast_rbs) / denom;
    r.num_areas = static_cast<int>(plan.areas.size());
    r.mean_area_size = plan.mean_area_size();
    return r;
}

} // namespace

ThroughputReport compute_throughput(const AreaPlan& plan, const Scenario& scn,
                                    const LinkCache& link) {
    return build_report(plan, scn, link, nullptr);
}

FrozenThroughput frozen_throughput(const AreaPlan& plan, const Scenario& scn,
                                   const LinkCache& link, const DynamicWeights* weights) {
    FrozenTotals t = frozen_totals(plan, scn, link, weights);
    FrozenThroughput out;
    out.eps_den = weights != nullptr ? weights->eps_den : 1;
    out.t_bb_num = t.t_bb_num;
    out.t_bu_num = t.t_bu_num;
    out.t_u_int = t.t_u;
    out.t_bb = static_cast<double>(t.t_bb_num) / out.eps_den;
    out.t_bu = static_cast<double>(t.t_bu_num) / out.eps_den;
    out.t_u = static_cast<double>(t.t_u);
    return out;
}

ThroughputReport compute_throughput_dynamic(const AreaPlan& plan, const Scenario& scn,
                                            const LinkCache& link,
                                            const DynamicWeights& weights) {
    return build_report(plan, scn, link, &weights);
}

std::string serialize_plan(const AreaPlan& plan, const ThroughputReport& report) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "areas %zu\n", plan.areas.size());
    out += buf;
    for (const MbsfnArea& m : plan.areas) {
        std::snprintf(buf, sizeof(buf), "area %d cells", m.id);
        out += buf;
        for (int c : m.cells) out += " " + std::to_string(c);
        out += "\n";
        for (size_t k = 0; k < m.items.size(); ++k) {
            int64_t served = 0;
            for (int w : m.served[k]) served += w;
            std::snprintf(buf, sizeof(buf), "  item %d budget_rbs %d bits_per_rb %d served %lld\n",
                          m.items[k], m.budget_rbs[k], m.bits_rb[k],
                          static_cast<long long>(served));
            out += buf;
        }
    }
    std::snprintf(buf, sizeof(buf),
                  "metrics t_bb %.6g t_bu %.6g t_u %.6g t_total %.6g serving_ratio %.6g "
                  "rb_gain %.6g unserved_fraction %.6g num_areas %d mean_area_size %.6g\n",
                  report.t_bb, report.t_bu, report.t_u, report.t_total, report.serving_ratio,
                  report.rb_gain, report.unserved_fraction, report.num_areas,
                  report.mean_area_size);
    out += buf;
    return out;
}

} // namespace mbsfn
