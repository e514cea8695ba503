#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpvmor/json_io.hpp"
#include "lpvmor/model.hpp"

namespace lpvmor {

/// Family counts. Pair families contribute two states per count, the repeated
/// complex family four (one pair with multiplicity two), transitions two.
struct BenchmarkSpec {
    int n_x = 80;
    int n_u = 2;
    int n_y = 2;
    double rho_min = 0.0;
    double rho_max = 1.0;
    int n0 = 60;
    int n = 100;
    int degree = 14;
    double rate_bound = 0.1;
    int cohorts = 5;
    double gain_decades = 3.0; ///< per-block input/output gain spread, log-uniform over this many decades

    int real = 19;
    int complex_pairs = 20;
    int constant_real = 4;
    int constant_complex_pairs = 3;
    int repeated_real = 0;           ///< real value with multiplicity two
    int repeated_complex_pairs = 1;  ///< complex pair with multiplicity two
    int integrators = 2;
    int mixed = 2;
    int unstable = 1;
    int transitions = 1;
    double transition_split = 1e-7;

    std::uint64_t seed = 1;

    int family_states() const;
};

void validate(const BenchmarkSpec& spec);
BenchmarkSpec spec_from_json(const json& j);
json spec_to_json(const BenchmarkSpec& spec);

struct GroundTruth {
    std::vector<std::string> labels;       ///< family per trajectory
    std::vector<double> rho0, rho;         ///< fitting grid and final grid
    std::vector<CVec> values0, values;     ///< lambda_i at each grid point
    std::vector<double> drift;             ///< max |eig - lambda| per trajectory on the final grid
    Mat T0, T1;                            ///< T(rho) = T0 + rho T1
    int attempts = 1;
};

json truth_to_json(const GroundTruth& truth);

/// Deterministic for a given seed. Throws Error (stage "benchmark") when the
/// retry budget is exhausted.
std::pair<GridLpvModel, GroundTruth> generate_benchmark(const BenchmarkSpec& spec);

/// Text description of the eigenvalue templates and their ranges.
std::string family_catalog();

} // namespace lpvmor
