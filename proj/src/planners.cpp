#include "mbsfn/planners.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mbsfn {
namespace {

int broadcast_cap(const RadioConfig& radio) { return (radio.rbs_per_frame * 6) / 10; }

// Shared planner context: the interest view the planner optimizes against
// (actual counts or noisy estimates), removal flags, and derived matrices.
// `planning` holds the raw counts; the engine subtracts removed users itself,
// and weight() applies the same subtraction for planner-side decisions.
struct PlannerCtx {
    const Scenario* scn = nullptr;
    const LinkCache* link = nullptr;
    PlannerConfig config;
    InterestSnapshot planning; // w: actual counts, w_est: the planning view
    std::vector<int> eps_num;  // per item, empty = all ones
    int eps_den = 1;
    bool dynamic = false;
    std::vector<char> removed;
    std::vector<int> removed_cnt; // per (cell, item)

    int items() const { return scn->item_count(); }
    int cells() const { return scn->cell_count(); }

    int weight(int c, int i) const {
        return std::max(0, planning.est(c, i) -
                               removed_cnt[static_cast<size_t>(c) * items() + i]);
    }
    int64_t eps_of(int item) const { return eps_num.empty() ? 1 : eps_num[item]; }

    void remove_user(int user) {
        const UE& ue = scn->users.users[user];
        if (removed[user] || ue.is_unicast()) {
            removed[user] = 1;
            return;
        }
        removed[user] = 1;
        ++removed_cnt[static_cast<size_t>(ue.serving_cell) * items() + ue.item];
    }

    DynamicWeights engine_weights() const {
        DynamicWeights w;
        w.counts = &planning;
        w.use_estimates = true;
        w.eps_num = eps_num;
        w.eps_den = eps_den;
        return w;
    }
};

PlannerCtx make_ctx(const Scenario& scn, const LinkCache& link, const PlannerConfig& config,
                    const PlanningInterest* interest) {
    PlannerCtx ctx;
    ctx.scn = &scn;
    ctx.link = &link;
    ctx.config = config;
    ctx.removed.assign(scn.user_count(), 0);
    ctx.removed_cnt.assign(static_cast<size_t>(scn.cell_count()) * scn.item_count(), 0);
    ctx.planning.init(scn.cell_count(), scn.item_count());
    const InterestSnapshot* source =
        interest != nullptr && interest->counts != nullptr ? interest->counts : &scn.interest;
    bool use_est = interest != nullptr && interest->use_estimates;
    for (int c = 0; c < scn.cell_count(); ++c)
        for (int i = 0; i < scn.item_count(); ++i) {
            ctx.planning.at(c, i) = source->at(c, i);
            ctx.planning.est(c, i) = use_est ? source->est(c, i) : source->at(c, i);
        }
    if (interest != nullptr) {
        ctx.eps_num = interest->eps_num;
        ctx.eps_den = interest->eps_den;
        ctx.dynamic = interest->counts != nullptr || !interest->eps_num.empty();
    }
    return ctx;
}

void set_removed(PlannerCtx& ctx, const std::vector<char>& removed) {
    ctx.removed.assign(ctx.scn->user_count(), 0);
    ctx.removed_cnt.assign(static_cast<size_t>(ctx.cells()) * ctx.items(), 0);
    for (int u = 0; u < ctx.scn->user_count(); ++u)
        if (!removed.empty() && removed[u]) ctx.remove_user(u);
}

// Worst (MBSFN-combined) per-RB rate over the non-removed users interested in
// `item` within `cells`; -1 when no such user exists.
int area_rho(const PlannerCtx& ctx, int item, const std::vector<int>& cells) {
    int worst = -1;
    for (int c : cells)
        for (int u : ctx.link->users_of(c, item)) {
            if (ctx.removed[u]) continue;
            int bits = ctx.link->combined_bits(u, cells);
            if (worst < 0 || bits < worst) worst = bits;
        }
    return worst;
}

// Enrich a (item, cells) aggregation into a plan atom; returns false when the
// atom can never be activated (no users left, out-of-service worst user, or a
// budget that exceeds the per-cell broadcast cap on its own).
bool make_atom(const PlannerCtx& ctx, int item, std::vector<int> cells, MbsfnArea* out) {
    int rho = area_rho(ctx, item, cells);
    if (rho <= 0) return false;
    auto budget = rb_demand_per_frame(ctx.scn->items[item].service_rate_bps, rho);
    if (!budget || *budget > broadcast_cap(ctx.scn->params.radio)) return false;
    out->id = -1;
    out->cells = std::move(cells);
    out->items = {item};
    out->budget_rbs = {*budget};
    out->bits_rb = {rho};
    out->served.assign(1, std::vector<int>(out->cells.size(), 0));
    return true;
}

bool atom_order(const MbsfnArea& a, const MbsfnArea& b) {
    if (a.items.front() != b.items.front()) return a.items.front() < b.items.front();
    if (a.cells.front() != b.cells.front()) return a.cells.front() < b.cells.front();
    if (a.items != b.items) return a.items < b.items;
    return a.cells < b.cells;
}

// Incremental plan state for greedy selection. The cached per-cell totals are
// produced by the same PlanEvaluator::eval_cell the full engine uses, so the
// cached path is bit-identical to re-evaluating the whole plan.
class State {
public:
    State(PlannerCtx& ctx, PlanEvaluator& ev)
        : ctx_(&ctx), ev_(&ev), weights_(ctx.engine_weights()) {
        const int C = ctx.cells();
        cov_.assign(static_cast<size_t>(C) * ctx.items(), -1);
        cell_bcast_.assign(C, 0);
        cell_area_count_.assign(C, 0);
        used_.assign(C, std::vector<int>(ctx.scn->params.radio.subframes_per_frame, 0));
        cell_totals_.resize(C);
        for (int c = 0; c < C; ++c) refresh_cell(c);
    }

    int64_t total() const { return t_bb_num_ + t_bu_num_ + t_u_ * ctx_->eps_den; }
    const std::vector<MbsfnArea>& active() const { return active_; }

    // Feasibility under constraints (ii)-(iv) plus the tentative total
    // throughput of active + atom. Returns false when infeasible.
    bool try_atom(const MbsfnArea& atom, int64_t* total_out) {
        const int cap60 = broadcast_cap(ctx_->scn->params.radio);
        int add = atom.total_budget();
        for (int c : atom.cells) {
            if (cell_area_count_[c] + 1 > 8) return false;
            if (cell_bcast_[c] + add > cap60) return false;
        }
        if (!pack_fits(atom)) return false;

        if (!ctx_->config.fast_eval) {
            std::vector<MbsfnArea> areas = active_;
            areas.push_back(atom);
            areas.back().id = static_cast<int>(active_.size());
            PlanEval ev = ev_->evaluate(areas, ctx_->removed, &weights_);
            *total_out = ev.t_total_num();
            return true;
        }

        int64_t bb_delta = atom_bb_gain(atom);
        int64_t delta = bb_delta;
        int next_id = static_cast<int>(active_.size());
        overlay(atom, next_id);
        for (int c : atom.cells) {
            const auto& old_t = cell_totals_[c];
            auto new_t = ev_->eval_cell(c, cell_bcast_[c] + add, cov_, ctx_->removed, &weights_,
                                        nullptr, nullptr, nullptr);
            delta += (new_t.t_bu_num - old_t.t_bu_num) +
                     (new_t.t_u - old_t.t_u) * ctx_->eps_den;
        }
        revert_overlay(atom);
        *total_out = total() + delta;
        return true;
    }

    void commit(MbsfnArea atom) {
        atom.id = static_cast<int>(active_.size());
        t_bb_num_ += atom_bb_gain(atom);
        overlay(atom, atom.id);
        overlay_.clear(); // permanent
        commit_pack(atom);
        int add = atom.total_budget();
        for (int c : atom.cells) {
            cell_bcast_[c] += add;
            cell_area_count_[c] += 1;
            refresh_cell(c);
        }
        active_.push_back(std::move(atom));
    }

private:
    // Broadcast-throughput gain of the pairs the atom would newly cover.
    int64_t atom_bb_gain(const MbsfnArea& atom) const {
        int64_t gain = 0;
        const int items = ctx_->items();
        for (size_t k = 0; k < atom.items.size(); ++k) {
            int item = atom.items[k];
            int64_t eps = ctx_->eps_of(item);
            if (eps == 0) continue;
            int64_t b_rho = static_cast<int64_t>(atom.budget_rbs[k]) * atom.bits_rb[k];
            for (int c : atom.cells) {
                if (cov_[static_cast<size_t>(c) * items + item] >= 0) continue;
                gain += b_rho * ctx_->weight(c, item) * eps;
            }
        }
        return gain;
    }

    bool pack_fits(const MbsfnArea& atom) const {
        const RadioConfig& radio = ctx_->scn->params.radio;
        const int K = radio.mbsfn_capable_subframes;
        const int cap = radio.rbs_per_subframe();
        std::vector<int> lvl(K, 0);
        for (int s = 0; s < K; ++s)
            for (int c : atom.cells) lvl[s] = std::max(lvl[s], used_[c][s]);
        std::vector<int> pending(K, 0);
        for (size_t k = 0; k < atom.items.size(); ++k) {
            int remaining = atom.budget_rbs[k];
            std::vector<int> avail(K), placed(K, 0);
            for (int s = 0; s < K; ++s) avail[s] = cap - lvl[s] - pending[s];
            while (remaining > 0) {
                bool progress = false;
                for (int s = 0; s < K && remaining > 0; ++s)
                    if (placed[s] < avail[s]) {
                        ++placed[s];
                        --remaining;
                        progress = true;
                    }
                if (!progress) return false;
            }
            for (int s = 0; s < K; ++s) pending[s] += placed[s];
        }
        return true;
    }

    void commit_pack(const MbsfnArea& atom) {
        const RadioConfig& radio = ctx_->scn->params.radio;
        const int K = radio.mbsfn_capable_subframes;
        const int cap = radio.rbs_per_subframe();
        for (size_t k = 0; k < atom.items.size(); ++k) {
            int remaining = atom.budget_rbs[k];
            std::vector<int> avail(K), placed(K, 0);
            for (int s = 0; s < K; ++s) {
                int lvl = 0;
                for (int c : atom.cells) lvl = std::max(lvl, used_[c][s]);
                avail[s] = cap - lvl;
            }
            while (remaining > 0) {
                bool progress = false;
                for (int s = 0; s < K && remaining > 0; ++s)
                    if (placed[s] < avail[s]) {
                        ++placed[s];
                        --remaining;
                        progress = true;
                    }
                if (!progress) throw std::logic_error("commit after failed pack check");
            }
            for (int c : atom.cells)
                for (int s = 0; s < K; ++s) used_[c][s] += placed[s];
        }
    }

    void overlay(const MbsfnArea& atom, int id) {
        const int items = ctx_->items();
        for (int c : atom.cells)
            for (int i : atom.items) {
                size_t idx = static_cast<size_t>(c) * items + i;
                if (cov_[idx] < 0) {
                    cov_[idx] = id;
                    overlay_.push_back(idx);
                }
            }
    }

    void revert_overlay(const MbsfnArea&) {
        for (size_t idx : overlay_) cov_[idx] = -1;
        overlay_.clear();
    }

    void refresh_cell(int c) {
        auto fresh = ev_->eval_cell(c, cell_bcast_[c], cov_, ctx_->removed, &weights_, nullptr,
                                    nullptr, nullptr);
        t_bu_num_ += fresh.t_bu_num - cell_totals_[c].t_bu_num;
        t_u_ += fresh.t_u - cell_totals_[c].t_u;
        cell_totals_[c] = fresh;
    }

    PlannerCtx* ctx_;
    PlanEvaluator* ev_;
    DynamicWeights weights_;
    std::vector<MbsfnArea> active_;
    std::vector<int> cov_;
    std::vector<int> cell_bcast_;
    std::vector<int> cell_area_count_;
    std::vector<std::vector<int>> used_;
    std::vector<PlanEvaluator::CellTotals> cell_totals_;
    std::vector<size_t> overlay_;
    int64_t t_bb_num_ = 0, t_bu_num_ = 0, t_u_ = 0;
};

// Hill climbing over a pool of atoms: per round, evaluate every remaining
// atom against the current plan and permanently add the best strictly
// improving one. Ties fall to the pool order (item id, then smallest cell).
std::pair<int64_t, std::vector<MbsfnArea>> greedy_select(PlannerCtx& ctx, PlanEvaluator& ev,
                                                         std::vector<MbsfnArea> pool,
                                                         const std::vector<MbsfnArea>& initial) {
    std::sort(pool.begin(), pool.end(), atom_order);
    State state(ctx, ev);
    for (const MbsfnArea& m : initial) state.commit(m);

    std::vector<char> taken(pool.size(), 0);
    while (true) {
        int64_t base = state.total();
        int64_t best = base;
        int best_idx = -1;
        for (size_t k = 0; k < pool.size(); ++k) {
            if (taken[k]) continue;
            int64_t total = 0;
            if (!state.try_atom(pool[k], &total)) continue;
            if (total > best) {
                best = total;
                best_idx = static_cast<int>(k);
            }
        }
        if (best_idx < 0) break;
        taken[best_idx] = 1;
        state.commit(pool[best_idx]);
    }
    return {state.total(), state.active()};
}

std::vector<MbsfnArea> enrich(const PlannerCtx& ctx, const std::vector<CandidateArea>& cands) {
    std::vector<MbsfnArea> atoms;
    for (const CandidateArea& c : cands) {
        MbsfnArea atom;
        if (make_atom(ctx, c.item, c.cells, &atom)) atoms.push_back(std::move(atom));
    }
    return atoms;
}

std::vector<int> all_items(const Scenario& scn) {
    std::vector<int> items(scn.item_count());
    std::iota(items.begin(), items.end(), 0);
    return items;
}

// Coverage map (lowest area id per (cell,item)) for a finished atom set.
std::vector<int> coverage_of(const PlannerCtx& ctx, const std::vector<MbsfnArea>& areas) {
    std::vector<int> cov(static_cast<size_t>(ctx.cells()) * ctx.items(), -1);
    std::vector<const MbsfnArea*> order;
    for (const MbsfnArea& m : areas) order.push_back(&m);
    std::sort(order.begin(), order.end(),
              [](const MbsfnArea* a, const MbsfnArea* b) { return a->id < b->id; });
    for (const MbsfnArea* m : order)
        for (int c : m->cells)
            for (int i : m->items) {
                int& slot = cov[static_cast<size_t>(c) * ctx.items() + i];
                if (slot < 0) slot = m->id;
            }
    return cov;
}

int64_t evaluate_total(PlannerCtx& ctx, PlanEvaluator& ev, const std::vector<MbsfnArea>& areas) {
    DynamicWeights w = ctx.engine_weights();
    return ev.evaluate(areas, ctx.removed, &w).t_total_num();
}

// ---- Rate Increase -------------------------------------------------------

// Per-user broadcast rate tier under the current plan (-1 if not served).
std::vector<int> user_rates(const PlannerCtx& ctx, const std::vector<MbsfnArea>& areas,
                            const std::vector<int>& cov) {
    std::vector<int> rate(ctx.scn->user_count(), -1);
    std::map<int, const MbsfnArea*> by_id;
    for (const MbsfnArea& m : areas) by_id[m.id] = &m;
    for (const UE& ue : ctx.scn->users.users) {
        if (ue.is_unicast() || ctx.removed[ue.id]) continue;
        int id = cov[static_cast<size_t>(ue.serving_cell) * ctx.items() + ue.item];
        if (id < 0) continue;
        rate[ue.id] = ctx.link->combined_bits(ue.id, by_id.at(id)->cells);
    }
    return rate;
}

std::pair<int64_t, std::vector<MbsfnArea>> rate_increase_impl(PlannerCtx& ctx, PlanEvaluator& ev,
                                                              std::vector<MbsfnArea> areas,
                                                              int64_t total) {
    // The tier list is fixed up-front from the plan entering the stage.
    std::vector<int> tiers;
    {
        auto cov = coverage_of(ctx, areas);
        auto rates = user_rates(ctx, areas, cov);
        for (int r : rates)
            if (r >= 0) tiers.push_back(r);
        std::sort(tiers.begin(), tiers.end());
        tiers.erase(std::unique(tiers.begin(), tiers.end()), tiers.end());
    }

    for (int tier : tiers) {
        auto cov = coverage_of(ctx, areas);
        auto rates = user_rates(ctx, areas, cov);
        std::vector<int> slow_users;
        std::vector<char> affected_area(areas.size() ? areas.size() : 1, 0);
        std::map<int, size_t> area_pos;
        for (size_t k = 0; k < areas.size(); ++k) area_pos[areas[k].id] = k;
        for (const UE& ue : ctx.scn->users.users) {
            if (ue.is_unicast() || rates[ue.id] != tier) continue;
            slow_users.push_back(ue.id);
            int id = cov[static_cast<size_t>(ue.serving_cell) * ctx.items() + ue.item];
            affected_area[area_pos.at(id)] = 1;
        }
        if (slow_users.empty()) continue;

        // Tentatively drop the slow users, re-aggregate the affected areas,
        // and re-run the selection over survivors plus fragments.
        PlannerCtx trial = ctx;
        for (int u : slow_users) trial.remove_user(u);

        std::vector<MbsfnArea> pool;
        std::vector<MbsfnArea> fragments;
        for (size_t k = 0; k < areas.size(); ++k) {
            if (!affected_area[k]) {
                pool.push_back(areas[k]);
                continue;
            }
            const MbsfnArea& m = areas[k];
            std::vector<char> in_area(ctx.cells(), 0);
            for (int c : m.cells) in_area[c] = 1;
            for (int item : m.items) {
                std::vector<char> eligible(ctx.cells(), 0);
                for (int c : m.cells)
                    if (trial.weight(c, item) >= ctx.config.tau) eligible[c] = 1;
                std::vector<char> seen(ctx.cells(), 0);
                for (int start : m.cells) {
                    if (!eligible[start] || seen[start]) continue;
                    std::vector<int> comp;
                    std::deque<int> queue{start};
                    seen[start] = 1;
                    while (!queue.empty()) {
                        int c = queue.front();
                        queue.pop_front();
                        comp.push_back(c);
                        for (int nb : ctx.scn->grid.neighbors_of(c))
                            if (in_area[nb] && eligible[nb] && !seen[nb]) {
                                seen[nb] = 1;
                                queue.push_back(nb);
                            }
                    }
                    std::sort(comp.begin(), comp.end());
                    MbsfnArea frag;
                    if (make_atom(trial, item, std::move(comp), &frag))
                        fragments.push_back(std::move(frag));
                }
            }
        }
        for (MbsfnArea& f : fragments) pool.push_back(std::move(f));

        auto [trial_total, trial_areas] = greedy_select(trial, ev, std::move(pool), {});
        if (trial_total > total) {
            total = trial_total;
            areas = std::move(trial_areas);
            ctx.removed = trial.removed;
            ctx.removed_cnt = trial.removed_cnt;
        }
    }
    return {total, areas};
}

// ---- Area Fusion ---------------------------------------------------------

MbsfnArea merge_areas(const PlannerCtx& ctx, const MbsfnArea& a, const MbsfnArea& b, bool* ok) {
    MbsfnArea merged;
    merged.id = std::min(a.id, b.id);
    std::set_union(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(),
                   std::back_inserter(merged.cells));
    std::set_union(a.items.begin(), a.items.end(), b.items.begin(), b.items.end(),
                   std::back_inserter(merged.items));
    *ok = true;
    for (int item : merged.items) {
        int rho = area_rho(ctx, item, merged.cells);
        auto budget = rho > 0
                          ? rb_demand_per_frame(ctx.scn->items[item].service_rate_bps, rho)
                          : std::nullopt;
        if (rho <= 0 || !budget || *budget > broadcast_cap(ctx.scn->params.radio)) {
            *ok = false;
            return merged;
        }
        merged.bits_rb.push_back(rho);
        merged.budget_rbs.push_back(*budget);
    }
    merged.served.assign(merged.items.size(), std::vector<int>(merged.cells.size(), 0));
    return merged;
}

bool constraints_ok(const PlannerCtx& ctx, const std::vector<MbsfnArea>& areas) {
    AreaPlan probe;
    probe.areas = areas;
    if (!check_constraint_ii(probe, ctx.scn->grid).pass) return false;
    if (!check_constraint_iii(probe, ctx.scn->params.radio.rbs_per_frame).pass) return false;
    return pack_broadcast(areas, ctx.scn->grid, ctx.scn->params.radio).feasible;
}

// Standalone broadcast contribution of each area under the coverage rule,
// used to rank areas when fusion has to truncate.
std::vector<std::pair<int64_t, int>> area_contributions(const PlannerCtx& ctx,
                                                        const std::vector<MbsfnArea>& areas) {
    auto cov = coverage_of(ctx, areas);
    std::vector<std::pair<int64_t, int>> contrib; // (value, area id)
    for (const MbsfnArea& m : areas) {
        int64_t value = 0;
        for (size_t k = 0; k < m.items.size(); ++k) {
            int item = m.items[k];
            int64_t eps = ctx.eps_of(item);
            if (eps == 0) continue;
            int64_t b_rho = static_cast<int64_t>(m.budget_rbs[k]) * m.bits_rb[k];
            for (int c : m.cells)
                if (cov[static_cast<size_t>(c) * ctx.items() + item] == m.id)
                    value += b_rho * ctx.weight(c, item) * eps;
        }
        contrib.emplace_back(value, m.id);
    }
    return contrib;
}

bool constraint_i_ok(const PlannerCtx& ctx, const std::vector<MbsfnArea>& areas) {
    AreaPlan probe;
    probe.areas = areas;
    return check_constraint_i(probe, ctx.scn->grid, ctx.config.constraint_i_mode,
                              ctx.config.max_mbsfn)
        .pass;
}

std::vector<MbsfnArea> truncate_to_limit(const PlannerCtx& ctx, std::vector<MbsfnArea> areas) {
    auto contrib = area_contributions(ctx, areas);
    std::sort(contrib.begin(), contrib.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::map<int, const MbsfnArea*> by_id;
    for (const MbsfnArea& m : areas) by_id[m.id] = &m;

    std::vector<MbsfnArea> kept;
    for (const auto& [value, id] : contrib) {
        std::vector<MbsfnArea> tentative = kept;
        tentative.push_back(*by_id.at(id));
        if (constraint_i_ok(ctx, tentative)) kept = std::move(tentative);
        if (ctx.config.constraint_i_mode == ConstraintIMode::global_limit &&
            static_cast<int>(kept.size()) == ctx.config.max_mbsfn)
            break;
    }
    std::sort(kept.begin(), kept.end(),
              [](const MbsfnArea& a, const MbsfnArea& b) { return a.id < b.id; });
    return kept;
}

std::vector<MbsfnArea> area_fusion_impl(PlannerCtx& ctx, PlanEvaluator& ev,
                                        std::vector<MbsfnArea> areas) {
    // Phase 1: merge fully-overlapping areas into multi-content areas.
    {
        std::map<std::vector<int>, std::vector<size_t>> by_cells;
        for (size_t k = 0; k < areas.size(); ++k) by_cells[areas[k].cells].push_back(k);
        std::vector<MbsfnArea> merged;
        for (const MbsfnArea& m : areas) {
            auto it = by_cells.find(m.cells);
            if (it == by_cells.end()) continue;
            const auto& group = it->second;
            MbsfnArea u = areas[group[0]];
            for (size_t k = 1; k < group.size(); ++k) {
                const MbsfnArea& other = areas[group[k]];
                u.id = std::min(u.id, other.id);
                for (size_t j = 0; j < other.items.size(); ++j) {
                    u.items.push_back(other.items[j]);
                    u.budget_rbs.push_back(other.budget_rbs[j]);
                    u.bits_rb.push_back(other.bits_rb[j]);
                }
            }
            // keep items sorted with budgets in tow
            std::vector<size_t> idx(u.items.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(),
                      [&](size_t a, size_t b) { return u.items[a] < u.items[b]; });
            MbsfnArea sorted = u;
            for (size_t j = 0; j < idx.size(); ++j) {
                sorted.items[j] = u.items[idx[j]];
                sorted.budget_rbs[j] = u.budget_rbs[idx[j]];
                sorted.bits_rb[j] = u.bits_rb[idx[j]];
            }
            sorted.served.assign(sorted.items.size(), std::vector<int>(sorted.cells.size(), 0));
            merged.push_back(std::move(sorted));
            by_cells.erase(it);
        }
        areas = std::move(merged);
    }

    int64_t total = evaluate_total(ctx, ev, areas);

    // Phase 2: while constraint (i) fails, merge partially-overlapping pairs,
    // smallest cell difference first, best throughput within a difference
    // tier, skipping merges that violate capacity or degrade throughput.
    while (!constraint_i_ok(ctx, areas)) {
        struct Pair {
            int diff;
            size_t a, b;
        };
        std::vector<Pair> pairs;
        for (size_t i = 0; i < areas.size(); ++i)
            for (size_t j = i + 1; j < areas.size(); ++j) {
                std::vector<int> inter;
                std::set_intersection(areas[i].cells.begin(), areas[i].cells.end(),
                                      areas[j].cells.begin(), areas[j].cells.end(),
                                      std::back_inserter(inter));
                if (inter.empty()) continue;
                int diff = static_cast<int>(areas[i].cells.size() + areas[j].cells.size() -
                                            2 * inter.size());
                pairs.push_back({diff, i, j});
            }
        std::sort(pairs.begin(), pairs.end(), [&](const Pair& x, const Pair& y) {
            if (x.diff != y.diff) return x.diff < y.diff;
            int ax = std::min(areas[x.a].id, areas[x.b].id);
            int ay = std::min(areas[y.a].id, areas[y.b].id);
            if (ax != ay) return ax < ay;
            return std::max(areas[x.a].id, areas[x.b].id) < std::max(areas[y.a].id, areas[y.b].id);
        });

        bool merged_one = false;
        for (size_t lo = 0; lo < pairs.size() && !merged_one;) {
            size_t hi = lo;
            while (hi < pairs.size() && pairs[hi].diff == pairs[lo].diff) ++hi;
            int64_t best_total = 0;
            int best = -1;
            std::vector<MbsfnArea> best_areas;
            for (size_t p = lo; p < hi; ++p) {
                bool ok = false;
                MbsfnArea candidate = merge_areas(ctx, areas[pairs[p].a], areas[pairs[p].b], &ok);
                if (!ok) continue;
                std::vector<MbsfnArea> tentative;
                for (size_t k = 0; k < areas.size(); ++k)
                    if (k != pairs[p].a && k != pairs[p].b) tentative.push_back(areas[k]);
                tentative.push_back(std::move(candidate));
                if (!constraints_ok(ctx, tentative)) continue;
                int64_t t = evaluate_total(ctx, ev, tentative);
                if (t < total) continue; // degrading merge
                if (best < 0 || t > best_total) {
                    best_total = t;
                    best = static_cast<int>(p);
                    best_areas = std::move(tentative);
                }
            }
            if (best >= 0) {
                areas = std::move(best_areas);
                total = best_total;
                merged_one = true;
            }
            lo = hi;
        }
        if (!merged_one) {
            areas = truncate_to_limit(ctx, areas);
            break;
        }
    }
    return areas;
}

// ---- Finalization --------------------------------------------------------

PlannerResult finalize(PlannerCtx& ctx, std::vector<MbsfnArea> areas,
                       std::vector<StageTrace> traces) {
    std::sort(areas.begin(), areas.end(),
              [](const MbsfnArea& a, const MbsfnArea& b) { return a.id < b.id; });
    for (size_t k = 0; k < areas.size(); ++k) areas[k].id = static_cast<int>(k);

    auto cov = coverage_of(ctx, areas);
    for (MbsfnArea& m : areas) {
        m.served.assign(m.items.size(), std::vector<int>(m.cells.size(), 0));
        for (size_t k = 0; k < m.items.size(); ++k)
            for (size_t j = 0; j < m.cells.size(); ++j) {
                size_t idx = static_cast<size_t>(m.cells[j]) * ctx.items() + m.items[k];
                if (cov[idx] == m.id) m.served[k][j] = ctx.weight(m.cells[j], m.items[k]);
            }
    }

    AreaPlan plan;
    plan.areas = std::move(areas);
    plan.removed = ctx.removed;
    DynamicWeights weights = ctx.engine_weights();
    plan = allocate_subframes(std::move(plan), *ctx.scn, *ctx.link,
                              ctx.dynamic ? &weights : nullptr);

    PlannerResult result;
    result.report = ctx.dynamic
                        ? compute_throughput_dynamic(plan, *ctx.scn, *ctx.link, weights)
                        : compute_throughput(plan, *ctx.scn, *ctx.link);
    result.plan = std::move(plan);
    result.traces = std::move(traces);
    return result;
}

double as_throughput(const PlannerCtx& ctx, int64_t total_num) {
    return static_cast<double>(total_num) / ctx.eps_den;
}

} // namespace

// ---- Public operations ----------------------------------------------------

std::vector<CandidateArea> cell_aggregation(const CellGrid& grid, const InterestSnapshot& counts,
                                            bool use_estimates, const std::vector<int>& items,
                                            int tau) {
    if (tau < 1) throw std::invalid_argument("tau must be >= 1");
    std::vector<CandidateArea> out;
    std::vector<char> eligible(grid.cell_count()), seen(grid.cell_count());
    for (int item : items) {
        std::fill(eligible.begin(), eligible.end(), 0);
        std::fill(seen.begin(), seen.end(), 0);
        for (int c = 0; c < grid.cell_count(); ++c) {
            int w = use_estimates ? counts.est(c, item) : counts.at(c, item);
            eligible[c] = w >= tau;
        }
        for (int start = 0; start < grid.cell_count(); ++start) {
            if (!eligible[start] || seen[start]) continue;
            CandidateArea cand;
            cand.item = item;
            std::deque<int> queue{start};
            seen[start] = 1;
            while (!queue.empty()) {
                int c = queue.front();
                queue.pop_front();
                cand.cells.push_back(c);
                for (int nb : grid.neighbors_of(c))
                    if (eligible[nb] && !seen[nb]) {
                        seen[nb] = 1;
                        queue.push_back(nb);
                    }
            }
            std::sort(cand.cells.begin(), cand.cells.end());
            for (int c : cand.cells)
                cand.interested_count.push_back(use_estimates ? counts.est(c, item)
                                                              : counts.at(c, item));
            out.push_back(std::move(cand));
        }
    }
    return out;
}

std::pair<double, AreaPlan> hill_climbing(const std::vector<CandidateArea>& candidates,
                                          const Scenario& scn, const LinkCache& link,
                                          const PlannerConfig& config, const AreaPlan& initial) {
    PlannerCtx ctx = make_ctx(scn, link, config, nullptr);
    set_removed(ctx, initial.removed);
    PlanEvaluator ev(scn, link);
    auto [total, areas] = greedy_select(ctx, ev, enrich(ctx, candidates), initial.areas);
    PlannerResult res = finalize(ctx, areas, {});
    return {as_throughput(ctx, total), std::move(res.plan)};
}

std::pair<double, AreaPlan> rate_increase(const AreaPlan& plan, double throughput,
                                          const Scenario& scn, const LinkCache& link,
                                          const PlannerConfig& config) {
    PlannerCtx ctx = make_ctx(scn, link, config, nullptr);
    set_removed(ctx, plan.removed);
    PlanEvaluator ev(scn, link);
    int64_t total = static_cast<int64_t>(std::llround(throughput * ctx.eps_den));
    auto [new_total, areas] = rate_increase_impl(ctx, ev, plan.areas, total);
    PlannerResult res = finalize(ctx, areas, {});
    return {as_throughput(ctx, new_total), std::move(res.plan)};
}

AreaPlan area_fusion(const AreaPlan& plan, const Scenario& scn, const LinkCache& link,
                     const PlannerConfig& config) {
    PlannerCtx ctx = make_ctx(scn, link, config, nullptr);
    set_removed(ctx, plan.removed);
    PlanEvaluator ev(scn, link);
    auto areas = area_fusion_impl(ctx, ev, plan.areas);
    return finalize(ctx, areas, {}).plan;
}

PlannerResult scf(const Scenario& scn, const LinkCache& link, const PlannerConfig& config,
                  const PlanningInterest* interest) {
    PlannerCtx ctx = make_ctx(scn, link, config, interest);
    PlanEvaluator ev(scn, link);
    std::vector<StageTrace> traces;

    auto cands = cell_aggregation(scn.grid, ctx.planning, true, all_items(scn), config.tau);
    std::vector<MbsfnArea> atoms = enrich(ctx, cands);
    traces.push_back({"cell_aggregation", static_cast<int>(atoms.size()), 0, 0.0});

    auto [t1, m1] = greedy_select(ctx, ev, atoms, {});
    traces.push_back({"hill_climbing", static_cast<int>(atoms.size()),
                      static_cast<int>(m1.size()), as_throughput(ctx, t1)});

    auto [t2, m2] = rate_increase_impl(ctx, ev, std::move(m1), t1);
    traces.push_back({"rate_increase", static_cast<int>(atoms.size()),
                      static_cast<int>(m2.size()), as_throughput(ctx, t2)});

    auto m3 = area_fusion_impl(ctx, ev, std::move(m2));
    traces.push_back({"area_fusion", static_cast<int>(atoms.size()), static_cast<int>(m3.size()),
                      as_throughput(ctx, evaluate_total(ctx, ev, m3))});

    return finalize(ctx, std::move(m3), std::move(traces));
}

// ---- MCF -------------------------------------------------------------------

namespace {

// Step 1: per cell, a single-cell area with the item subset that maximizes
// cell throughput under the broadcast budget cap.
std::vector<MbsfnArea> mcf_seed_areas(const PlannerCtx& ctx) {
    const Scenario& scn = *ctx.scn;
    const int cap = broadcast_cap(scn.params.radio);
    std::vector<MbsfnArea> areas;
    for (int c = 0; c < scn.cell_count(); ++c) {
        struct Opt {
            int item, rho, budget;
            int64_t value;
        };
        std::vector<Opt> options;
        for (int i = 0; i < scn.item_count(); ++i) {
            if (ctx.weight(c, i) < ctx.config.tau) continue;
            int rho = area_rho(ctx, i, {c});
            if (rho <= 0) continue;
            auto budget = rb_demand_per_frame(scn.items[i].service_rate_bps, rho);
            if (!budget || *budget > cap) continue;
            int64_t value = static_cast<int64_t>(*budget) * rho * ctx.weight(c, i) * ctx.eps_of(i);
            if (value <= 0) continue;
            options.push_back({i, rho, *budget, value});
        }
        std::vector<char> pick(options.size(), 0);
        if (ctx.config.mcf_exhaustive_step1) {
            // Exact 0/1 knapsack over the budget cap.
            std::vector<int64_t> best(cap + 1, 0);
            std::vector<std::vector<char>> choice(options.size(),
                                                  std::vector<char>(cap + 1, 0));
            for (size_t k = 0; k < options.size(); ++k)
                for (int b = cap; b >= options[k].budget; --b) {
                    int64_t v = best[b - options[k].budget] + options[k].value;
                    if (v > best[b]) {
                        best[b] = v;
                        choice[k][b] = 1;
                    }
                }
            int b = cap;
            for (size_t k = options.size(); k-- > 0;)
                if (choice[k][b]) {
                    pick[k] = 1;
                    b -= options[k].budget;
                }
        } else {
            // Density greedy: throughput per RB, then item id.
            std::vector<size_t> order(options.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                int64_t da = options[a].value * options[b].budget;
                int64_t db = options[b].value * options[a].budget;
                if (da != db) return da > db;
                return options[a].item < options[b].item;
            });
            int used = 0;
            for (size_t k : order)
                if (used + options[k].budget <= cap) {
                    pick[k] = 1;
                    used += options[k].budget;
                }
        }
        MbsfnArea m;
        m.id = static_cast<int>(areas.size());
        m.cells = {c};
        for (size_t k = 0; k < options.size(); ++k)
            if (pick[k]) {
                m.items.push_back(options[k].item);
                m.budget_rbs.push_back(options[k].budget);
                m.bits_rb.push_back(options[k].rho);
            }
        if (m.items.empty()) continue;
        m.served.assign(m.items.size(), std::vector<int>(1, 0));
        areas.push_back(std::move(m));
    }
    return areas;
}

// Normalized per-item interest vector of an area's cells.
std::vector<double> interest_vector(const PlannerCtx& ctx, const MbsfnArea& m) {
    std::vector<double> v(ctx.items(), 0.0);
    for (int c : m.cells)
        for (int i = 0; i < ctx.items(); ++i) v[i] += ctx.weight(c, i);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return v;
}

double interest_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(d);
}

// Remove items S from an area, keeping cells; drops to nullopt if empty.
std::optional<MbsfnArea> strip_items(const MbsfnArea& m, const std::vector<int>& strip, int id) {
    MbsfnArea rest;
    rest.id = id;
    rest.cells = m.cells;
    for (size_t k = 0; k < m.items.size(); ++k) {
        if (std::binary_search(strip.begin(), strip.end(), m.items[k])) continue;
        rest.items.push_back(m.items[k]);
        rest.budget_rbs.push_back(m.budget_rbs[k]);
        rest.bits_rb.push_back(m.bits_rb[k]);
    }
    if (rest.items.empty()) return std::nullopt;
    rest.served.assign(rest.items.size(), std::vector<int>(rest.cells.size(), 0));
    return rest;
}

std::vector<MbsfnArea> mcf_merge_phase(PlannerCtx& ctx, PlanEvaluator& ev,
                                       std::vector<MbsfnArea> areas, int64_t* total_io) {
    int64_t total = *total_io;
    int next_id = 0;
    for (const MbsfnArea& m : areas) next_id = std::max(next_id, m.id + 1);

    std::deque<int> pending; // area ids to process, ascending
    for (const MbsfnArea& m : areas) pending.push_back(m.id);

    auto find_pos = [&](int id) -> int {
        for (size_t k = 0; k < areas.size(); ++k)
            if (areas[k].id == id) return static_cast<int>(k);
        return -1;
    };

    while (!pending.empty()) {
        std::sort(pending.begin(), pending.end());
        int id = pending.front();
        pending.pop_front();
        int pos = find_pos(id);
        if (pos < 0) continue;
        const MbsfnArea& m = areas[pos];

        // Most-similar neighboring (overlapping or adjacent) area.
        auto vm = interest_vector(ctx, m);
        int partner = -1;
        double best_d = 0.0;
        for (size_t k = 0; k < areas.size(); ++k) {
            if (static_cast<int>(k) == pos) continue;
            bool overlap = false;
            for (int c : areas[k].cells)
                if (std::binary_search(m.cells.begin(), m.cells.end(), c)) overlap = true;
            bool adjacent = overlap;
            if (!adjacent)
                for (int c : areas[k].cells) {
                    for (int nb : ctx.scn->grid.neighbors_of(c))
                        if (std::binary_search(m.cells.begin(), m.cells.end(), nb)) adjacent = true;
                    if (adjacent) break;
                }
            if (!adjacent) continue;
            double d = interest_distance(vm, interest_vector(ctx, areas[k]));
            if (partner < 0 || d < best_d ||
                (d == best_d && areas[k].id < areas[partner].id)) {
                best_d = d;
                partner = static_cast<int>(k);
            }
        }
        if (partner < 0) continue; // isolated: stays as-is, leaves the pool

        std::vector<int> common;
        std::set_intersection(m.items.begin(), m.items.end(), areas[partner].items.begin(),
                              areas[partner].items.end(), std::back_inserter(common));
        if (common.empty()) continue;

        // Greedy common-subset selection, evaluated with the full objective.
        MbsfnArea base_m = m, base_p = areas[partner];
        std::vector<MbsfnArea> others;
        for (size_t k = 0; k < areas.size(); ++k)
            if (static_cast<int>(k) != pos && static_cast<int>(k) != partner)
                others.push_back(areas[k]);

        std::vector<int> union_cells;
        std::set_union(base_m.cells.begin(), base_m.cells.end(), base_p.cells.begin(),
                       base_p.cells.end(), std::back_inserter(union_cells));

        std::vector<int> subset;
        int64_t best_total = total;
        std::vector<MbsfnArea> best_layout;
        while (true) {
            int pick = -1;
            int64_t pick_total = best_total;
            std::vector<MbsfnArea> pick_layout;
            for (int item : common) {
                if (std::binary_search(subset.begin(), subset.end(), item)) continue;
                std::vector<int> s = subset;
                s.insert(std::lower_bound(s.begin(), s.end(), item), item);

                MbsfnArea fused;
                fused.id = std::min(base_m.id, base_p.id);
                fused.cells = union_cells;
                bool ok = true;
                for (int i : s) {
                    int rho = area_rho(ctx, i, union_cells);
                    auto budget =
                        rho > 0 ? rb_demand_per_frame(ctx.scn->items[i].service_rate_bps, rho)
                                : std::nullopt;
                    if (rho <= 0 || !budget ||
                        *budget > broadcast_cap(ctx.scn->params.radio)) {
                        ok = false;
                        break;
                    }
                    fused.items.push_back(i);
                    fused.budget_rbs.push_back(*budget);
                    fused.bits_rb.push_back(rho);
                }
                if (!ok) continue;
                fused.served.assign(fused.items.size(),
                                    std::vector<int>(fused.cells.size(), 0));

                std::vector<MbsfnArea> tentative = others;
                tentative.push_back(fused);
                int rest_id = next_id;
                auto rest_m = strip_items(base_m, s, base_m.id == fused.id ? rest_id++ : base_m.id);
                auto rest_p = strip_items(base_p, s, base_p.id == fused.id ? rest_id++ : base_p.id);
                if (rest_m) tentative.push_back(*rest_m);
                if (rest_p) tentative.push_back(*rest_p);
                if (!constraints_ok(ctx, tentative)) continue;
                int64_t t = evaluate_total(ctx, ev, tentative);
                if (t > pick_total) {
                    pick_total = t;
                    pick = item;
                    pick_layout = std::move(tentative);
                }
            }
            if (pick < 0) break;
            subset.insert(std::lower_bound(subset.begin(), subset.end(), pick), pick);
            best_total = pick_total;
            best_layout = std::move(pick_layout);
        }

        if (!subset.empty() && best_total > total) {
            // Commit: every area produced by the merge re-enters the pool.
            total = best_total;
            for (const MbsfnArea& a : best_layout) next_id = std::max(next_id, a.id + 1);
            std::vector<int> reprocess;
            for (const MbsfnArea& a : best_layout) {
                bool existed = false;
                for (const MbsfnArea& old : areas)
                    if (old.id == a.id && old.cells == a.cells && old.items == a.items)
                        existed = true;
                if (!existed) reprocess.push_back(a.id);
            }
            areas = std::move(best_layout);
            for (int r : reprocess)
                if (std::find(pending.begin(), pending.end(), r) == pending.end())
                    pending.push_back(r);
        }
        // else: m leaves the pool (already popped).
    }
    *total_io = total;
    return areas;
}

} // namespace

PlannerResult mcf(const Scenario& scn, const LinkCache& link, const PlannerConfig& config,
                  const PlanningInterest* interest) {
    PlannerCtx ctx = make_ctx(scn, link, config, interest);
    PlanEvaluator ev(scn, link);
    std::vector<StageTrace> traces;

    std::vector<MbsfnArea> areas = mcf_seed_areas(ctx);
    int64_t total = evaluate_total(ctx, ev, areas);
    traces.push_back({"mcf_seed", static_cast<int>(areas.size()), static_cast<int>(areas.size()),
                      as_throughput(ctx, total)});

    areas = mcf_merge_phase(ctx, ev, std::move(areas), &total);
    traces.push_back({"mcf_merge", static_cast<int>(areas.size()), static_cast<int>(areas.size()),
                      as_throughput(ctx, total)});

    auto [t3, m3] = rate_increase_impl(ctx, ev, std::move(areas), total);
    traces.push_back({"rate_increase", static_cast<int>(m3.size()), static_cast<int>(m3.size()),
                      as_throughput(ctx, t3)});

    if (!constraint_i_ok(ctx, m3)) m3 = truncate_to_limit(ctx, m3);
    traces.push_back({"mcf_limit", static_cast<int>(m3.size()), static_cast<int>(m3.size()),
                      as_throughput(ctx, evaluate_total(ctx, ev, m3))});

    return finalize(ctx, std::move(m3), std::move(traces));
}

PlannerResult unicast_baseline(const Scenario& scn, const LinkCache& link,
                               const PlannerConfig& config, const PlanningInterest* interest) {
    PlannerCtx ctx = make_ctx(scn, link, config, interest);
    std::vector<StageTrace> traces{{"unicast_baseline", 0, 0, 0.0}};
    return finalize(ctx, {}, std::move(traces));
}

PlannerResult oracle_optimal(const Scenario& scn, const LinkCache& link,
                             const PlannerConfig& config) {
    if (scn.cell_count() > 10)
        throw std::invalid_argument("oracle_optimal is limited to grids of at most 10 cells");
    PlannerCtx ctx = make_ctx(scn, link, config, nullptr);
    PlanEvaluator ev(scn, link);

    auto cands = cell_aggregation(scn.grid, ctx.planning, true, all_items(scn), config.tau);
    std::vector<MbsfnArea> atoms = enrich(ctx, cands);
    std::sort(atoms.begin(), atoms.end(), atom_order);
    if (atoms.size() > 15)
        throw std::invalid_argument("oracle_optimal is limited to 15 candidates");

    int64_t best = -1;
    uint32_t best_mask = 0;
    const uint32_t limit = 1u << atoms.size();
    for (uint32_t mask = 0; mask < limit; ++mask) {
        std::vector<MbsfnArea> subset;
        for (size_t k = 0; k < atoms.size(); ++k)
            if (mask & (1u << k)) {
                subset.push_back(atoms[k]);
                subset.back().id = static_cast<int>(subset.size()) - 1;
            }
        if (!constraints_ok(ctx, subset)) continue;
        if (!constraint_i_ok(ctx, subset)) continue;
        int64_t t = evaluate_total(ctx, ev, subset);
        if (t > best) {
            best = t;
            best_mask = mask;
        }
    }

    std::vector<MbsfnArea> chosen;
    for (size_t k = 0; k < atoms.size(); ++k)
        if (best_mask & (1u << k)) {
            chosen.push_back(atoms[k]);
            chosen.back().id = static_cast<int>(chosen.size()) - 1;
        }
    std::vector<StageTrace> traces{{"oracle", static_cast<int>(atoms.size()),
                                    static_cast<int>(chosen.size()),
                                    as_throughput(ctx, best < 0 ? 0 : best)}};
    return finalize(ctx, std::move(chosen), std::move(traces));
}

PlannerResult run_planner(const std::string& name, const Scenario& scn, const LinkCache& link,
                          const PlannerConfig& config, const PlanningInterest* interest) {
    if (name == "scf") return scf(scn, link, config, interest);
    if (name == "mcf") return mcf(scn, link, config, interest);
    if (name == "unicast") return unicast_baseline(scn, link, config, interest);
    throw std::invalid_argument("unknown planner '" + name + "' (valid: scf, mcf, unicast)");
}

std::vector<std::string> known_planners() { return {"scf", "mcf", "unicast"}; }

} // namespace mbsfn
