#include "mbsfn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "mbsfn/rng.hpp"

namespace mbsfn {

PlannerConfig ExperimentConfig::planner_config(int max_mbsfn_value) const {
    PlannerConfig pc;
    pc.tau = tau;
    pc.max_mbsfn = max_mbsfn_value;
    pc.constraint_i_mode = constraint_i_mode;
    pc.target_serve_fraction = target_serve_fraction;
    pc.fast_eval = fast_eval;
    pc.mcf_exhaustive_step1 = mcf_exhaustive_step1;
    return pc;
}

ScenarioParams scenario_params(const ExperimentConfig& cfg, int zones,
                               InterestDistribution dist, double rate_bps) {
    ScenarioParams p;
    p.cell_count = cfg.grid_cells;
    p.inter_site_distance_m = cfg.inter_site_distance_m;
    p.zones = zones;
    p.users_per_cell = cfg.users_per_cell;
    p.unicast_fraction = cfg.unicast_fraction;
    p.distribution = dist;
    p.exp_parameter = cfg.exp_parameter;
    p.items_per_zone = cfg.items_per_zone;
    p.neighbor_overlap = cfg.neighbor_overlap;
    p.service_rates_bps = {rate_bps};
    p.radio = cfg.radio;
    return p;
}

Scenario mixed_rate_scenario(const ExperimentConfig& cfg, int zones, InterestDistribution dist,
                             uint64_t seed) {
    ScenarioParams p = scenario_params(cfg, zones, dist, 2e6);
    p.radio.validate();

    Scenario scn;
    scn.params = p;
    scn.grid = assign_zones(build_hex_grid(p.cell_count, p.inter_site_distance_m), p.zones);
    auto zone_adj = zone_adjacency(scn.grid);

    // 14 small items per zone with the usual neighbor-overlap structure.
    int small_per_zone = p.items_per_zone - 2;
    int overlap = std::min(p.neighbor_overlap, small_per_zone);
    auto small = build_catalog(zone_adj, small_per_zone, overlap, {1.0},
                               substream(seed, "catalog_stream"));

    int zone_count = scn.grid.zone_count();
    int shift = 1 + zone_count;
    scn.items.clear();
    ContentItem live_event;
    live_event.id = 0;
    live_event.service_rate_bps = 2e6;
    scn.items.push_back(live_event);
    for (int z = 0; z < zone_count; ++z) {
        ContentItem medium;
        medium.id = 1 + z;
        medium.service_rate_bps = 1e6;
        scn.items.push_back(medium);
    }
    Rng rate_rng(substream(seed, "mixed_rates"));
    for (ContentItem item : small.items) {
        item.id += shift;
        // uniform in [192, 500] kb/s, in 100 b/s steps
        item.service_rate_bps = 100.0 * static_cast<double>(rate_rng.uniform_int(1920, 5000));
        scn.items.push_back(item);
    }

    scn.catalog.items_per_zone = p.items_per_zone;
    scn.catalog.neighbor_overlap = overlap;
    scn.catalog.zone_items.assign(zone_count, {});
    for (int z = 0; z < zone_count; ++z) {
        auto& dest = scn.catalog.zone_items[z];
        dest.push_back(0);     // the live event everyone may want
        dest.push_back(1 + z); // the zone's 1 Mb/s item
        for (int it : small.catalog.zone_items[z]) dest.push_back(it + shift);
    }
    for (auto [a, b, n] : small.catalog.achieved_overlap)
        scn.catalog.achieved_overlap.emplace_back(a, b, n + 1); // plus the shared live event

    scn.users = generate_users(scn.grid, p.users_per_cell, seed);
    assign_demand(scn.users, scn.grid, scn.catalog, dist, p.exp_parameter, p.unicast_fraction,
                  seed);
    scn.interest = count_interest(scn.users, scn.grid.cell_count(), scn.item_count());
    return scn;
}

namespace {

void served_fractions_by_class(const AreaPlan& plan, const Scenario& scn, RunRecord* rec) {
    // Classes by service rate: large >= 2 Mb/s, medium >= 1 Mb/s, else small.
    int64_t demand[3] = {0, 0, 0}, served[3] = {0, 0, 0};
    std::vector<int> cov(static_cast<size_t>(scn.cell_count()) * scn.item_count(), -1);
    for (const MbsfnArea& m : plan.areas)
        for (int c : m.cells)
            for (int i : m.items) cov[static_cast<size_t>(c) * scn.item_count() + i] = m.id;
    for (const UE& ue : scn.users.users) {
        if (ue.is_unicast()) continue;
        double rate = scn.items[ue.item].service_rate_bps;
        int k = rate >= 2e6 ? 0 : (rate >= 1e6 ? 1 : 2);
        ++demand[k];
        bool removed = !plan.removed.empty() && plan.removed[ue.id];
        bool covered = cov[static_cast<size_t>(ue.serving_cell) * scn.item_count() + ue.item] >= 0;
        if ((covered && !removed) || plan.fallback_rbs[ue.id] > 0) ++served[k];
    }
    rec->served_frac_large = demand[0] > 0 ? double(served[0]) / demand[0] : -1.0;
    rec->served_frac_medium = demand[1] > 0 ? double(served[1]) / demand[1] : -1.0;
    rec->served_frac_small = demand[2] > 0 ? double(served[2]) / demand[2] : -1.0;
}

RunRecord make_static_record(const ExperimentConfig& cfg, const std::string& planner,
                             uint64_t seed, const Scenario& scn, const LinkCache& link,
                             int max_mbsfn, InterestDistribution dist, double rate) {
    auto start = std::chrono::steady_clock::now();
    PlannerResult res = run_planner(planner, scn, link, cfg.planner_config(max_mbsfn), nullptr);
    RunRecord rec;
    rec.planner = planner;
    rec.seed = seed;
    rec.grid_cells = cfg.grid_cells;
    rec.zones = scn.grid.zone_count();
    rec.distribution = dist;
    rec.service_rate_bps = rate;
    rec.mixed_rates = cfg.mixed_rates;
    rec.max_mbsfn = max_mbsfn;
    rec.constraint_i_mode = cfg.constraint_i_mode;
    rec.report = res.report;
    rec.traces = res.traces;
    rec.plan_dump = serialize_plan(res.plan, res.report);
    if (cfg.mixed_rates) served_fractions_by_class(res.plan, scn, &rec);
    rec.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace

std::vector<RunRecord> run_static(const ExperimentConfig& cfg, uint64_t seed) {
    std::vector<RunRecord> records;
    for (int zones : cfg.zone_counts)
        for (InterestDistribution dist : cfg.distributions) {
            std::vector<double> rates = cfg.mixed_rates ? std::vector<double>{0.0}
                                                        : cfg.service_rates_bps;
            for (double rate : rates) {
                Scenario scn = cfg.mixed_rates
                                   ? mixed_rate_scenario(cfg, zones, dist, seed)
                                   : build_scenario(scenario_params(cfg, zones, dist, rate), seed);
                LinkCache link = build_link_cache(scn);
                for (const std::string& planner : cfg.planners)
                    for (int max_mbsfn : cfg.max_mbsfn)
                        records.push_back(make_static_record(cfg, planner, seed, scn, link,
                                                             max_mbsfn, dist, rate));
            }
        }
    return records;
}

namespace {

// Realized interest counts at one frame: churn noise around the actual count
// for live items, zero for dead ones. Substreams are per (frame, cell, item)
// so draws do not depend on evaluation order.
InterestSnapshot realize_frame(const Scenario& scn, int frame, double sigma0_sq, uint64_t seed,
                               std::vector<int>* live_num) {
    InterestSnapshot snap;
    snap.init(scn.cell_count(), scn.item_count());
    live_num->assign(scn.item_count(), 0);
    for (int i = 0; i < scn.item_count(); ++i) {
        const ContentItem& item = scn.items[i];
        bool live = frame >= item.start_frame && frame < item.start_frame + item.duration_frames;
        if (!live) continue;
        (*live_num)[i] = 1;
        int t_d = item.start_frame + item.duration_frames - frame;
        for (int c = 0; c < scn.cell_count(); ++c) {
            int w = scn.interest.at(c, i);
            if (w == 0) continue;
            snap.at(c, i) = churn_interest(
                w, t_d, sigma0_sq,
                substream(seed, "churn", static_cast<uint64_t>(frame), static_cast<uint64_t>(c),
                          static_cast<uint64_t>(i)));
        }
    }
    snap.w_est = snap.w;
    return snap;
}

RunRecord run_dynamic_point(const ExperimentConfig& cfg, uint64_t seed, const Scenario& scn,
                            const LinkCache& link, const std::string& planner, int max_mbsfn,
                            InterestDistribution dist, double rate, double sigma0_sq) {
    const DynamicConfig& dyn = cfg.dynamic;
    auto start_time = std::chrono::steady_clock::now();

    RunRecord rec;
    rec.planner = planner;
    rec.seed = seed;
    rec.grid_cells = cfg.grid_cells;
    rec.zones = scn.grid.zone_count();
    rec.distribution = dist;
    rec.service_rate_bps = rate;
    rec.mixed_rates = cfg.mixed_rates;
    rec.max_mbsfn = max_mbsfn;
    rec.constraint_i_mode = cfg.constraint_i_mode;
    rec.sigma0_sq = sigma0_sq;

    const int P = dyn.period_frames;
    double sum_bb = 0, sum_bu = 0, sum_u = 0;
    double planned_ratio_sum = 0, planned_unserved_sum = 0, planned_rb_gain_sum = 0;
    double planned_areas_sum = 0, planned_size_sum = 0;
    int windows = 0;

    for (int t0 = 0; t0 < dyn.horizon_frames; t0 += P) {
        // Interest estimates for this window.
        InterestSnapshot est;
        est.init(scn.cell_count(), scn.item_count());
        std::vector<int> eps_num(scn.item_count(), 0);
        for (int i = 0; i < scn.item_count(); ++i) {
            const ContentItem& item = scn.items[i];
            eps_num[i] = live_frames_in_window(item, t0, P);
            int t_s = std::max(0, item.start_frame - t0);
            for (int c = 0; c < scn.cell_count(); ++c) {
                int w = scn.interest.at(c, i);
                est.at(c, i) = w;
                est.est(c, i) = w == 0 ? 0
                                       : estimate_interest(
                                             w, t_s, sigma0_sq,
                                             substream(seed, "estimate",
                                                       static_cast<uint64_t>(t0),
                                                       static_cast<uint64_t>(c),
                                                       static_cast<uint64_t>(i)));
            }
        }

        PlanningInterest interest;
        interest.counts = &est;
        interest.use_estimates = true;
        interest.eps_num = eps_num;
        interest.eps_den = P;
        PlannerResult res =
            run_planner(planner, scn, link, cfg.planner_config(max_mbsfn), &interest);

        WindowRecord window;
        window.window_start = t0;
        window.planned = res.report;

        for (int f = t0; f < t0 + P; ++f) {
            std::vector<int> live_num;
            InterestSnapshot realized = realize_frame(scn, f, sigma0_sq, seed, &live_num);
            DynamicWeights w;
            w.counts = &realized;
            w.use_estimates = false;
            w.eps_num = live_num;
            w.eps_den = 1;
            FrozenThroughput t = frozen_throughput(res.plan, scn, link, &w);
            FrameRecord fr;
            fr.frame = f;
            fr.t_bb = t.t_bb;
            fr.t_bu = t.t_bu;
            fr.t_u = t.t_u;
            fr.t_total = t.t_total();
            window.frames.push_back(fr);
            sum_bb += fr.t_bb;
            sum_bu += fr.t_bu;
            sum_u += fr.t_u;
        }
        planned_ratio_sum += window.planned.serving_ratio;
        planned_unserved_sum += window.planned.unserved_fraction;
        planned_rb_gain_sum += std::isnan(window.planned.rb_gain) ? 0.0 : window.planned.rb_gain;
        planned_areas_sum += window.planned.num_areas;
        planned_size_sum += window.planned.mean_area_size;
        ++windows;
        if (windows == 1) rec.plan_dump = serialize_plan(res.plan, res.report);
        rec.windows.push_back(std::move(window));
    }

    int frames = dyn.horizon_frames;
    rec.report.t_bb = sum_bb / frames;
    rec.report.t_bu = sum_bu / frames;
    rec.report.t_u = sum_u / frames;
    rec.report.t_total = rec.report.t_bb + rec.report.t_bu + rec.report.t_u;
    rec.report.serving_ratio = planned_ratio_sum / windows;
    rec.report.unserved_fraction = planned_unserved_sum / windows;
    rec.report.rb_gain = planned_rb_gain_sum / windows;
    rec.report.num_areas = static_cast<int>(std::llround(planned_areas_sum / windows));
    rec.report.mean_area_size = planned_size_sum / windows;
    rec.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return rec;
}

} // namespace

std::vector<RunRecord> run_dynamic(const ExperimentConfig& cfg, uint64_t seed) {
    if (!cfg.dynamic.enabled)
        throw std::invalid_argument("dynamic.enabled must be true for run_dynamic");
    std::vector<RunRecord> records;
    for (int zones : cfg.zone_counts)
        for (InterestDistribution dist : cfg.distributions) {
            std::vector<double> rates = cfg.mixed_rates ? std::vector<double>{0.0}
                                                        : cfg.service_rates_bps;
            for (double rate : rates) {
                Scenario scn = cfg.mixed_rates
                                   ? mixed_rate_scenario(cfg, zones, dist, seed)
                                   : build_scenario(scenario_params(cfg, zones, dist, rate), seed);
                scn.items = generate_timeline(std::move(scn.items), cfg.dynamic.horizon_frames,
                                              cfg.dynamic.duration_min, cfg.dynamic.duration_max,
                                              substream(seed, "timeline_stream"));
                LinkCache link = build_link_cache(scn);
                for (const std::string& planner : cfg.planners)
                    for (int max_mbsfn : cfg.max_mbsfn)
                        for (double sigma : cfg.dynamic.sigma0_sq)
                            records.push_back(run_dynamic_point(cfg, seed, scn, link, planner,
                                                                max_mbsfn, dist, rate, sigma));
            }
        }
    return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
    std::vector<std::vector<RunRecord>> per_seed(cfg.seeds.size());
    auto work = [&](size_t idx) {
        uint64_t seed = cfg.seeds[idx];
        std::vector<RunRecord> recs;
        if (!cfg.dynamic.enabled) {
            recs = run_static(cfg, seed);
        } else {
            recs = run_dynamic(cfg, seed);
        }
        per_seed[idx] = std::move(recs);
    };

    int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (size_t i = 0; i < cfg.seeds.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                while (true) {
                    size_t i = next.fetch_add(1);
                    if (i >= cfg.seeds.size()) break;
                    work(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    std::vector<RunRecord> merged;
    for (auto& recs : per_seed)
        for (auto& r : recs) merged.push_back(std::move(r));
    return merged;
}

} // namespace mbsfn
