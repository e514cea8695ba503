#pragma once

#include <string>
#include <vector>

#include "lpvmor/clustering.hpp"

namespace lpvmor {

/// X(rho) = X0 + rho X1.
struct AffineGramian {
    Mat X0, X1;

    Eigen::Index dim() const { return X0.rows(); }
    Mat evaluate(double rho) const { return X0 + rho * X1; }
    const Mat& derivative() const { return X1; }
};

/// Residual eigenvalues of the observability and controllability inequalities.
/// Entry 2k+s belongs to grid point k and rate vertex s (s = 0 is -delta).
struct LmiReport {
    std::vector<double> obs_max, ctrl_max;
    std::vector<double> obs_min_eig, ctrl_min_eig; ///< smallest eigenvalue of X(rho_k)
    double margin = 0.0;
    bool feasible = false;

    double worst() const;
};

/// factor * max_k ||A(rho_k)||_2.
double lmi_margin(const Subsystem& sub, double factor = 1e-6);

struct GramianPair {
    AffineGramian Xo, Xc;
    double beta_o = 0.0, beta_c = 0.0;   ///< inflation factors (1 + beta)
    double gamma_o = 0.0, gamma_c = 0.0; ///< certificate shifts X0 += gamma P
    std::vector<std::string> warnings;
};

/// Pointwise Lyapunov Gramians at rho-dot = 0, fitted affinely in rho, then
/// inflated (or shifted by a common Lyapunov certificate) until the rate-vertex
/// inequalities hold with margin. Throws Error (stage "gramian") when a vertex
/// matrix is not Hurwitz or no certificate is found.
GramianPair init_pointwise(const Subsystem& sub, Exec exec = Exec::parallel, double margin_factor = 1e-6);

LmiReport verify_lmi(const Subsystem& sub, const AffineGramian& xo, const AffineGramian& xc, double margin);

/// sum_k trace(Xo(rho_k) Xc(rho_k))
double gramian_trace(const Subsystem& sub, const AffineGramian& xo, const AffineGramian& xc);

struct RefineConfig {
    int max_iters = 20;
    double rel_tol = 1e-3;
    double margin_factor = 1e-6;
};

struct RefineResult {
    AffineGramian Xo, Xc;
    LmiReport report;
    std::vector<double> trace_history; ///< initial value, then one entry per half-step
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Alternating trace minimisation with the barrier solver. A half-step is kept
/// only when it lowers the trace and still verifies.
RefineResult refine_alternating(const Subsystem& sub, const GramianPair& init, const RefineConfig& config = {},
                                Exec exec = Exec::parallel);

} // namespace lpvmor
