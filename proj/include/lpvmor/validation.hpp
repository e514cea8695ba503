#pragma once

#include <string>
#include <vector>

#include "lpvmor/model.hpp"
#include "lpvmor/simulation.hpp"

namespace lpvmor {

/// `count` log-spaced frequencies over [lo, hi] rad/s.
std::vector<double> log_frequency_grid(double lo = 1e-3, double hi = 1e3, int count = 400);

/// Grid points and the midpoints between them, increasing.
std::vector<double> gap_rho_samples(const std::vector<double>& grid);

/// C (jw I - A)^{-1} B + D, evaluated through a Hessenberg reduction of A so
/// that each frequency costs O(n^2).
class FrequencyResponse {
public:
    explicit FrequencyResponse(const LtiSnapshot& g);
    /// Throws Error naming w when jw is (numerically) an eigenvalue of A.
    CMat operator()(double w) const;

private:
    CMat h_, b_, c_;
    Mat d_;
};

CMat freq_response(const LtiSnapshot& g, double w);

/// Chordal distance between two frequency-response matrices at one frequency.
double chordal_distance(const CMat& g1, const CMat& g2);

/// max over the frequency grid of the chordal distance.
double nu_gap(const LtiSnapshot& g1, const LtiSnapshot& g2, const std::vector<double>& omega);

/// gap(i, j) = chordal distance at rho_samples[i], omega[j]. The reduced model
/// is frozen at rho-dot = 0.
Mat gap_table(const GridLpvModel& full, const ReducedLpvModel& reduced, const std::vector<double>& omega,
              const std::vector<double>& rho_samples, Exec exec = Exec::parallel);

std::vector<double> pointwise_gap(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                  const std::vector<double>& omega, const std::vector<double>& rho_samples,
                                  Exec exec = Exec::parallel);
std::vector<double> frequencywise_gap(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                      const std::vector<double>& omega, const std::vector<double>& rho_samples,
                                      Exec exec = Exec::parallel);

struct ValidationConfig {
    double omega_min = 1e-3;
    double omega_max = 1e3;
    int omega_count = 400;
    bool midpoints = true;
    double sim_t_end = 20.0;
    double sim_dt = 1e-2;
    double gap_bound = 0.2;
};

struct ValidationReport {
    std::vector<double> omega, rho;
    std::vector<double> pointwise;     ///< max over omega, per rho sample
    std::vector<double> frequencywise; ///< max over rho, per omega
    double max_gap = 0.0;
    std::vector<double> sim_discrepancy; ///< relative L2 output error per scenario
    std::vector<std::string> warnings;
};

/// Gap evaluation plus two simulations (unit step and sine per input) along a
/// sinusoidal rho(t) that respects the rate bound.
ValidationReport validate_models(const GridLpvModel& full, const ReducedLpvModel& reduced,
                                 const ValidationConfig& config = {}, Exec exec = Exec::parallel);

/// Rows "k,rho,re,im" per eigenvalue at each grid point.
std::string pole_map_csv(const GridLpvModel& model);
std::string pole_map_csv(const ReducedLpvModel& model);

std::string pointwise_gap_csv(const ValidationReport& r);
std::string frequencywise_gap_csv(const ValidationReport& r);

} // namespace lpvmor
