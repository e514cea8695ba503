#include "lpvmor/pipeline.hpp"

#include <chrono>
#include <set>

namespace lpvmor {
namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw Error("config: '" + where + "' must be an object", "config");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw Error("config: unknown key '" + where + "." + key + "'", "config");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error("config: bad value for '" + where + "." + key + "': " + e.what(), "config");
    }
}

// Number, or "auto" mapped to `automatic`.
void read_auto(const json& j, const char* key, double& out, double automatic, const std::string& where)
{
    if (!j.contains(key)) return;
    if (j.at(key).is_string()) {
        if (j.at(key).get<std::string>() != "auto")
            throw Error("config: '" + where + "." + key + "' must be a number or \"auto\"", "config");
        out = automatic;
        return;
    }
    read(j, key, out, where);
}

template <class F>
auto timed(PipelineResult& r, const std::string& stage, F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            r.timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
            auto v = f();
            r.timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return v;
        }
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.what(), stage);
    }
}

json lmi_json(const LmiReport& l)
{
    return json{{"feasible", l.feasible},       {"margin", l.margin},           {"worst", l.worst()},
                {"obs_max", l.obs_max},         {"ctrl_max", l.ctrl_max},       {"obs_min_eig", l.obs_min_eig},
                {"ctrl_min_eig", l.ctrl_min_eig}};
}

} // namespace

PipelineConfig config_from_json(const json& j)
{
    PipelineConfig c;
    if (j.is_null()) return c;
    reject_unknown(j, {"tracking", "smoothing", "modal", "clustering", "gramian", "balred", "validation", "seed",
                       "report_timings"},
                   "config");
    if (j.contains("tracking")) {
        const json& t = j["tracking"];
        reject_unknown(t, {"sampling_time", "tol_int", "multiplicity_threshold", "mac_weighting"}, "tracking");
        read_auto(t, "sampling_time", c.tracking.sampling_time, 0.0, "tracking");
        read(t, "tol_int", c.tracking.tol_int, "tracking");
        read(t, "multiplicity_threshold", c.tracking.multiplicity_threshold, "tracking");
        read(t, "mac_weighting", c.tracking.mac_weighting, "tracking");
    }
    if (j.contains("smoothing")) {
        const json& s = j["smoothing"];
        reject_unknown(s, {"repair_budget"}, "smoothing");
        read(s, "repair_budget", c.repair_budget, "smoothing");
    }
    if (j.contains("modal")) {
        const json& m = j["modal"];
        reject_unknown(m, {"drop_tol", "max_sweep_time", "max_steps"}, "modal");
        read(m, "drop_tol", c.coupling.drop_tol, "modal");
        read(m, "max_sweep_time", c.coupling.max_sweep_time, "modal");
        read(m, "max_steps", c.coupling.max_steps, "modal");
    }
    if (j.contains("clustering")) {
        const json& s = j["clustering"];
        reject_unknown(s, {"cut_threshold", "max_cluster_size", "e2_penalty_weight", "mac_weighted_distance"},
                       "clustering");
        read_auto(s, "cut_threshold", c.clustering.cut_threshold, -1.0, "clustering");
        read(s, "max_cluster_size", c.clustering.max_cluster_size, "clustering");
        read(s, "e2_penalty_weight", c.clustering.e2_penalty_weight, "clustering");
        read(s, "mac_weighted_distance", c.clustering.mac_weighted_distance, "clustering");
    }
    if (j.contains("gramian")) {
        const json& g = j["gramian"];
        reject_unknown(g, {"backend", "margin", "max_iters", "rel_tol", "barrier_max_size"}, "gramian");
        read(g, "backend", c.gramian_backend, "gramian");
        read(g, "margin", c.margin_factor, "gramian");
        read(g, "max_iters", c.refine.max_iters, "gramian");
        read(g, "rel_tol", c.refine.rel_tol, "gramian");
        read(g, "barrier_max_size", c.barrier_max_size, "gramian");
        if (c.gramian_backend != "pointwise" && c.gramian_backend != "barrier")
            throw Error("config: gramian.backend must be \"pointwise\" or \"barrier\"", "config");
    }
    c.refine.margin_factor = c.margin_factor;
    const bool cap_given = j.contains("clustering") && j["clustering"].contains("max_cluster_size");
    if (c.gramian_backend == "barrier" && !cap_given) c.clustering.max_cluster_size = 20;
    if (j.contains("balred")) {
        const json& b = j["balred"];
        reject_unknown(b, {"eta", "orders", "mode"}, "balred");
        read(b, "eta", c.eta, "balred");
        read(b, "orders", c.orders, "balred");
        std::string mode = "truncate";
        read(b, "mode", mode, "balred");
        if (mode != "truncate" && mode != "residualize")
            throw Error("config: balred.mode must be \"truncate\" or \"residualize\"", "config");
        c.residualize = mode == "residualize";
    }
    if (j.contains("validation")) {
        const json& v = j["validation"];
        reject_unknown(v, {"omega_min", "omega_max", "omega_count", "midpoints", "sim_t_end", "sim_dt", "gap_bound"},
                       "validation");
        read(v, "omega_min", c.validation.omega_min, "validation");
        read(v, "omega_max", c.validation.omega_max, "validation");
        read(v, "omega_count", c.validation.omega_count, "validation");
        read(v, "midpoints", c.validation.midpoints, "validation");
        read(v, "sim_t_end", c.validation.sim_t_end, "validation");
        read(v, "sim_dt", c.validation.sim_dt, "validation");
        read(v, "gap_bound", c.validation.gap_bound, "validation");
    }
    read(j, "seed", c.seed, "config");
    read(j, "report_timings", c.report_timings, "config");

    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(std::string("config: ") + what, "config");
    };
    require(c.clustering.max_cluster_size >= 2, "clustering.max_cluster_size must be at least 2");
    require(c.clustering.e2_penalty_weight >= 0.0, "clustering.e2_penalty_weight must be nonnegative");
    require(c.margin_factor >= 0.0, "gramian.margin must be nonnegative");
    require(c.refine.max_iters >= 0, "gramian.max_iters must be nonnegative");
    require(c.barrier_max_size >= 1, "gramian.barrier_max_size must be positive");
    require(c.eta >= 0.0 && c.eta < 1.0, "balred.eta must lie in [0, 1)");
    require(c.repair_budget >= 0.0, "smoothing.repair_budget must be nonnegative");
    require(c.validation.omega_min > 0.0 && c.validation.omega_max > c.validation.omega_min,
            "validation frequency range must satisfy 0 < omega_min < omega_max");
    require(c.validation.omega_count >= 1, "validation.omega_count must be positive");
    require(c.validation.sim_dt > 0.0 && c.validation.sim_t_end > 0.0, "validation simulation times must be positive");
    return c;
}

json config_to_json(const PipelineConfig& c)
{
    json cut = c.clustering.cut_threshold < 0.0 ? json("auto") : json(c.clustering.cut_threshold);
    json ts = c.tracking.sampling_time <= 0.0 ? json("auto") : json(c.tracking.sampling_time);
    return json{
        {"tracking",
         {{"sampling_time", ts},
          {"tol_int", c.tracking.tol_int},
          {"multiplicity_threshold", c.tracking.multiplicity_threshold},
          {"mac_weighting", c.tracking.mac_weighting}}},
        {"smoothing", {{"repair_budget", c.repair_budget}}},
        {"modal",
         {{"drop_tol", c.coupling.drop_tol},
          {"max_sweep_time", c.coupling.max_sweep_time},
          {"max_steps", c.coupling.max_steps}}},
        {"clustering",
         {{"cut_threshold", cut},
          {"max_cluster_size", c.clustering.max_cluster_size},
          {"e2_penalty_weight", c.clustering.e2_penalty_weight},
          {"mac_weighted_distance", c.clustering.mac_weighted_distance}}},
        {"gramian",
         {{"backend", c.gramian_backend},
          {"margin", c.margin_factor},
          {"max_iters", c.refine.max_iters},
          {"rel_tol", c.refine.rel_tol},
          {"barrier_max_size", c.barrier_max_size}}},
        {"balred", {{"eta", c.eta}, {"orders", c.orders}, {"mode", c.residualize ? "residualize" : "truncate"}}},
        {"validation",
         {{"omega_min", c.validation.omega_min},
          {"omega_max", c.validation.omega_max},
          {"omega_count", c.validation.omega_count},
          {"midpoints", c.validation.midpoints},
          {"sim_t_end", c.validation.sim_t_end},
          {"sim_dt", c.validation.sim_dt},
          {"gap_bound", c.validation.gap_bound}}},
        {"seed", c.seed},
        {"report_timings", c.report_timings}};
}

PipelineResult run_pipeline(const GridLpvModel& model, const PipelineConfig& config, Exec exec)
{
    PipelineResult r;
    timed(r, "model", [&] { validate(model); });
    r.grid = timed(r, "decompose", [&] { return decompose_grid(model, exec); });
    r.traj = timed(r, "match", [&] { return match_grid(r.grid, config.tracking, exec); });
    timed(r, "multiplicity", [&] {
        r.h = trajectory_distances(r.traj, config.clustering.mac_weighted_distance, exec);
        r.groups = detect_multiplicity(r.traj, r.h, config.tracking.multiplicity_threshold);
    });
    r.smoothing.repairs =
        timed(r, "smoothing", [&] { return repair_complex_real(r.traj, r.groups, model, config.repair_budget); });

    std::vector<Mat> transforms;
    std::vector<ModalBlock> blocks;
    timed(r, "smoothing", [&] {
        const std::vector<BlockSequence> raw = group_sequences(r.traj, r.groups);
        const std::vector<BlockSequence> smooth = smooth_sequences(raw, choose_start(r.traj), r.smoothing, exec);
        try {
            r.raw_transforms = build_local_transforms(raw, r.groups, r.traj);
            const DerivativeStats before = transform_derivative_stats(model.rho_grid, r.raw_transforms);
            r.smoothing.max_derivative_before = before.max;
            r.smoothing.mean_derivative_before = before.mean;
        } catch (const Error& e) {
            r.smoothing.warnings.push_back(std::string("raw transforms unavailable: ") + e.what());
        }
        transforms = build_local_transforms(smooth, r.groups, r.traj, &blocks);
        const DerivativeStats after = transform_derivative_stats(model.rho_grid, transforms);
        r.smoothing.max_derivative_after = after.max;
        r.smoothing.mean_derivative_after = after.mean;
    });
    r.modal = timed(r, "modal", [&] { return assemble_modal(model, transforms, blocks, exec); });
    r.coupling = timed(r, "coupling", [&] { return coupling_significance(r.modal, model, config.coupling, exec); });

    timed(r, "clustering", [&] {
        for (const auto& b : r.modal.blocks) {
            if (b.mode_class == ModeClass::stable)
                r.stable_trajectories.insert(r.stable_trajectories.end(), b.trajectories.begin(), b.trajectories.end());
            else if (b.mode_class == ModeClass::integrator) r.integrators += static_cast<int>(b.size);
            else r.unstable_states += static_cast<int>(b.size);
        }
        std::vector<std::vector<int>> clusters;
        if (!r.stable_trajectories.empty()) {
            r.cluster_distances = clustering_distances(r.h, r.stable_trajectories, r.traj, r.modal, config.clustering);
            r.dendrogram = hac_complete_link(r.cluster_distances);
            r.cut = cut(r.dendrogram, config.clustering.cut_threshold, config.clustering.max_cluster_size);
            if (r.dendrogram.leaves >= 3) r.cophenetic = cophenetic_coefficient(r.dendrogram, r.cluster_distances);
            for (const auto& leaves : r.cut.clusters) {
                std::vector<int> ids;
                for (int l : leaves) ids.push_back(r.stable_trajectories[static_cast<std::size_t>(l)]);
                std::sort(ids.begin(), ids.end());
                clusters.push_back(std::move(ids));
            }
        }
        r.partition = permute_and_split(r.modal, clusters, exec);
    });

    const std::size_t nc = r.partition.clusters.size();
    r.clusters.resize(nc);
    std::vector<ReducedSubsystem> parts(nc);
    const Exec inner = nc > 1 ? Exec::serial : exec;
    timed(r, "reduction", [&] {
        for_each_index(exec, static_cast<std::ptrdiff_t>(nc), [&](std::ptrdiff_t ci) {
            const auto c = static_cast<std::size_t>(ci);
            ClusterResult& cr = r.clusters[c];
            const Subsystem sub = r.partition.subsystem(c, r.modal.rho, r.modal.rate_bound);
            cr.trajectories = sub.trajectories;
            cr.dimension = static_cast<int>(sub.n_x());
            try {
                cr.init = init_pointwise(sub, inner, config.margin_factor);
                cr.Xo = cr.init.Xo;
                cr.Xc = cr.init.Xc;
                cr.backend = "pointwise";
                if (config.gramian_backend == "barrier" && cr.dimension <= config.barrier_max_size) {
                    RefineResult rr = refine_alternating(sub, cr.init, config.refine, inner);
                    cr.backend = "barrier";
                    cr.Xo = rr.Xo;
                    cr.Xc = rr.Xc;
                    cr.trace_history = rr.trace_history;
                    cr.warnings.insert(cr.warnings.end(), rr.warnings.begin(), rr.warnings.end());
                }
                cr.lmi = verify_lmi(sub, cr.Xo, cr.Xc, lmi_margin(sub, config.margin_factor));
                if (!cr.lmi.feasible) throw Error("Gramians fail verification", "gramian");
            } catch (const Error& e) {
                if (e.stage() != "gramian") throw;
                cr.warnings.push_back(std::string("kept unreduced: ") + e.what());
                parts[c] = passthrough(sub);
                cr.kept = cr.dimension;
                return;
            }
            cr.factors = factorize(cr.Xo, cr.Xc, sub.rho, inner);
            align_factors(cr.factors, inner);
            const int explicit_order = c < config.orders.size() ? config.orders[c] : -1;
            cr.selection = select_order(cr.factors.profile(), config.eta, explicit_order, config.residualize);
            parts[c] = balance_and_truncate(sub, cr.factors, cr.selection, cr.Xo, cr.Xc, inner);
            cr.kept = parts[c].kept;
            cr.reduced = cr.kept < cr.dimension;
            cr.balancing_error = parts[c].balancing_error;
            cr.warnings.insert(cr.warnings.end(), cr.factors.warnings.begin(), cr.factors.warnings.end());
            cr.warnings.insert(cr.warnings.end(), parts[c].warnings.begin(), parts[c].warnings.end());
        });
    });

    timed(r, "reassemble", [&] {
        if (r.partition.preserved_size > 0) parts.push_back(passthrough(r.partition.subsystem(nc, r.modal.rho, r.modal.rate_bound)));
        r.reduced = reassemble(parts, r.modal.rho, r.modal.rate_bound, r.partition.D, r.unstable_states, r.integrators);
        validate(r.reduced);
    });

    for (const auto& w : r.smoothing.warnings) r.warnings.push_back("smoothing: " + w);
    if (!r.coupling.note.empty()) r.warnings.push_back("coupling: " + r.coupling.note);
    for (std::size_t c = 0; c < nc; ++c)
        for (const auto& w : r.clusters[c].warnings) r.warnings.push_back("cluster " + std::to_string(c) + ": " + w);
    return r;
}

json report_json(const PipelineResult& r, const PipelineConfig& config)
{
    json rep;
    rep["config"] = config_to_json(config);

    std::map<std::string, int> census;
    for (auto c : r.traj.mode_class) ++census[to_string(c)];
    json groups = json::array();
    for (const auto& g : r.groups) {
        if (g.members.size() < 2 || (g.kind == GroupKind::complex && g.members.size() == 2)) continue;
        const char* kind = g.kind == GroupKind::real ? "real" : g.kind == GroupKind::complex ? "complex" : "transition";
        groups.push_back(json{{"members", g.members}, {"kind", kind}, {"dimension", g.dimension}});
    }
    rep["tracking"] = json{{"trajectories", r.traj.size()},
                           {"grid_points", r.traj.grid_size()},
                           {"sampling_time", r.traj.sampling_time},
                           {"census", census},
                           {"multiplicity_groups", groups}};

    json repairs = json::array();
    for (const auto& rr : r.smoothing.repairs)
        repairs.push_back(json{{"group", rr.group},
                               {"points", rr.points},
                               {"averaged", rr.averaged},
                               {"max_relative_perturbation", rr.max_relative_perturbation}});
    rep["smoothing"] = json{{"start_point", r.smoothing.start_point},
                            {"max_derivative_before", r.smoothing.max_derivative_before},
                            {"mean_derivative_before", r.smoothing.mean_derivative_before},
                            {"max_derivative_after", r.smoothing.max_derivative_after},
                            {"mean_derivative_after", r.smoothing.mean_derivative_after},
                            {"repairs", repairs},
                            {"warnings", r.smoothing.warnings}};

    double offblock = 0.0;
    for (double v : r.modal.offblock_residual) offblock = std::max(offblock, v);
    rep["modal"] = json{{"offblock_residual", offblock},
                        {"midpoint_residual", r.coupling.midpoint_residual},
                        {"coupling_discrepancy", r.coupling.discrepancy},
                        {"coupling_discrepancies", r.coupling.discrepancies},
                        {"coupling_dropped", r.coupling.drop},
                        {"note", r.coupling.note}};

    json merges = json::array();
    for (const auto& m : r.dendrogram.merges) merges.push_back(json{m.a, m.b, m.height, m.id});
    json sizes = json::array();
    for (const auto& c : r.partition.clusters) sizes.push_back(c.size());
    double e2 = 0.0;
    for (double v : r.partition.e2_norms) e2 = std::max(e2, v);
    rep["clustering"] = json{{"leaves", r.stable_trajectories},
                             {"merges", merges},
                             {"threshold", r.cut.threshold},
                             {"lowered", r.cut.lowered},
                             {"cophenetic", r.cophenetic},
                             {"cluster_sizes", sizes},
                             {"clusters", r.partition.clusters},
                             {"max_e2_norm", e2}};

    json clusters = json::array();
    for (const auto& c : r.clusters) {
        json profile = c.selection.profile;
        clusters.push_back(json{{"trajectories", c.trajectories},
                                {"dimension", c.dimension},
                                {"kept", c.kept},
                                {"backend", c.backend},
                                {"rule", c.selection.rule},
                                {"beta", {c.init.beta_o, c.init.beta_c}},
                                {"gamma", {c.init.gamma_o, c.init.gamma_c}},
                                {"lmi", lmi_json(c.lmi)},
                                {"trace_history", c.trace_history},
                                {"singular_value_profile", profile},
                                {"balancing_error", c.balancing_error},
                                {"warnings", c.warnings}});
    }
    rep["reduction"] = json{{"clusters", clusters},
                            {"n_x", r.modal.n_x()},
                            {"n_red", r.reduced.n_x},
                            {"unstable_states", r.unstable_states},
                            {"integrators", r.integrators}};
    rep["warnings"] = r.warnings;
    if (config.report_timings) rep["timings"] = r.timings;
    return rep;
}

json validation_json(const ValidationReport& v)
{
    return json{{"max_gap", v.max_gap},
                {"rho", v.rho},
                {"pointwise_gap", v.pointwise},
                {"frequencywise_gap", v.frequencywise},
                {"simulation_discrepancy", v.sim_discrepancy},
                {"warnings", v.warnings}};
}

} // namespace lpvmor
