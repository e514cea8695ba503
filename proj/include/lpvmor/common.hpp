#pragma once

#include <complex>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lpvmor {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Library error. `stage()` names the pipeline stage (may be empty).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::string stage = {})
        : std::runtime_error(what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` distributes independent iterations over OpenMP threads and
/// must produce bit-identical results.
enum class Exec { serial, parallel };

/// Runs f(i) for i in [0, n). Exceptions thrown by any iteration are collected
/// and the one with the lowest index is rethrown, so both policies report the
/// same error.
template <class F>
void for_each_index(Exec exec, std::ptrdiff_t n, F&& f)
{
    if (exec == Exec::serial || n < 2) {
        for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline double spectral_norm(const Mat& a)
{
    if (a.size() == 0) return 0.0;
    return a.operatorNorm();
}

} // namespace lpvmor
