#pragma once

#include <map>
#include <string>
#include <vector>

#include "lpvmor/balred.hpp"
#include "lpvmor/clustering.hpp"
#include "lpvmor/gramian.hpp"
#include "lpvmor/json_io.hpp"
#include "lpvmor/smoothing.hpp"
#include "lpvmor/validation.hpp"

namespace lpvmor {

struct PipelineConfig {
    TrackingConfig tracking;
    double repair_budget = 1e-3;
    CouplingConfig coupling;
    ClusterConfig clustering;
    std::string gramian_backend = "pointwise"; ///< "pointwise" or "barrier"
    double margin_factor = 1e-6;
    int barrier_max_size = 20;
    RefineConfig refine;
    double eta = 1e-2;
    std::vector<int> orders;                   ///< explicit kept order per cluster (-1: threshold rule)
    bool residualize = false;
    ValidationConfig validation;
    std::uint64_t seed = 0;
    bool report_timings = false;
};

/// Parses a configuration object; every key is optional and unknown keys are rejected.
PipelineConfig config_from_json(const json& j);
json config_to_json(const PipelineConfig& c);

struct ClusterResult {
    std::vector<int> trajectories;
    int dimension = 0;
    int kept = 0;
    bool reduced = false;
    std::string backend;
    GramianPair init;
    AffineGramian Xo, Xc;
    LmiReport lmi;
    std::vector<double> trace_history;
    OrderSelection selection;
    BalancingFactors factors;
    double balancing_error = 0.0;
    std::vector<std::string> warnings;
};

struct PipelineResult {
    EigenGrid grid;
    ModeTrajectorySet traj;
    Mat h;
    std::vector<MultiplicityGroup> groups;
    SmoothingReport smoothing;
    std::vector<Mat> raw_transforms;
    ModalForm modal;
    CouplingReport coupling;
    std::vector<int> stable_trajectories;
    Mat cluster_distances;
    Dendrogram dendrogram;
    CutResult cut;
    double cophenetic = 0.0;
    ClusterPartition partition;
    std::vector<ClusterResult> clusters;
    ReducedLpvModel reduced;
    int unstable_states = 0;
    int integrators = 0;
    std::vector<std::string> warnings;
    std::map<std::string, double> timings; ///< seconds per stage
};

/// decompose, integrators, match, multiplicity, repair, smooth, modal, coupling
/// test, stable/unstable split, cluster, Gramians, balance/truncate, reassemble.
/// Errors carry the stage name.
PipelineResult run_pipeline(const GridLpvModel& model, const PipelineConfig& config, Exec exec = Exec::parallel);

json report_json(const PipelineResult& r, const PipelineConfig& config);
json validation_json(const ValidationReport& v);

} // namespace lpvmor
