#pragma once

#include "steindiff/diffusion.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace steindiff {

enum class TestFunctionClass { c0, c0_1, indicator_smoothed };

struct TestFunction {
    std::function<double(double)> f;
    TestFunctionClass cls = TestFunctionClass::c0;
    double sup_norm = 1.0;
    std::optional<double> lip_norm;
    /// Characteristic width of the sharpest feature; the residual check
    /// shrinks its difference step below this.
    double scale_hint = std::numeric_limits<double>::infinity();
    std::string name;
};

TestFunction constant_function(double value);
/// f(x) = x clamped to the working range (tail-truncated so it is bounded).
TestFunction identity_function(const DiffusionModel& model);
/// Smooth compactly supported bump of height 1 on [center-w, center+w].
TestFunction bump_function(double center, double half_width);
/// Smoothed version of the Kolmogorov-class indicator 1_{(l,z]}: equals 1
/// below z - w/2, 0 above z + w/2, quintic ramp in between.
TestFunction smoothed_indicator(double z, double width);

/// m_f = int f p by quadrature over the working range.
double mean_of(const TestFunction& f, const TargetDensity& density);

/// Solution of f - m_f = a g'/2 + b g on the model grid; evaluation between
/// nodes refines the cached cumulative integrals locally. Below the target
/// median g is assembled from the lower-tail integral, above it from the
/// upper-tail integral, which keeps both factors of the quotient
/// well-scaled.
class SteinSolution {
public:
    const std::vector<double>& grid() const;
    const std::vector<double>& g() const;
    const std::vector<double>& g_prime() const;
    double m_f() const;

    double norm_g() const;         // sup |g| grid estimate
    double norm_ag_prime() const;  // sup |a g'|
    double norm_g_prime() const;   // sup |g'|

    double eval_g(double x) const;
    /// The two tail representations evaluated independently (they agree up
    /// to quadrature error wherever both are well-scaled).
    double eval_g_lower(double x) const;
    double eval_g_upper(double x) const;

    void export_csv(const std::string& path, const DiffusionModel& model,
                    const TestFunction& f) const;

private:
    friend SteinSolution solve_stein(const TestFunction&, const DiffusionModel&);
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

SteinSolution solve_stein(const TestFunction& f, const DiffusionModel& model);

/// g'(x) = 2 (f(x) - m_f - b(x) g(x)) / a(x); algebraic, no differencing.
double derivative_via_identity(const SteinSolution& sol, const DiffusionModel& model,
                               const TestFunction& f, double x);

/// Max over interior grid nodes of |f - m_f - a g'/2 - b g| with g' replaced
/// by a central difference of g, so the check does not reuse the identity it
/// verifies.
double stein_residual(const SteinSolution& sol, const DiffusionModel& model,
                      const TestFunction& f);

struct NormConstants {
    double c1_hat = 0.0;  // sup |g| / |f|_inf
    double c2_hat = 0.0;  // sup |a g'| / |f|_inf
    double c4_hat = 0.0;  // sup |g'| / (|f|_inf + |f'|_inf)
    std::string c1_argmax, c2_argmax, c4_argmax;
    double inf_a = 0.0;
    bool c2_route = false;  // inf a bounded away from 0
    bool c4_route = false;
};

/// 16 quantile-centered bumps plus 16 smoothed indicators.
std::vector<TestFunction> test_function_library(const DiffusionModel& model);

NormConstants estimate_norm_constants(const DiffusionModel& model, TestFunctionClass cls);

}  // namespace steindiff
