#pragma once

#include "steindiff/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace steindiff {

/// h(x) = x^T Q x + d.x + e. The independent-copy expectation of its
/// gradient is linear in the interpolation weight, so the scalar product is
/// exact under Gauss-Legendre.
struct QuadraticForm {
    Eigen::MatrixXd Q;
    Eigen::VectorXd d;
    double e = 0.0;
};

/// h(x) = scale * exp(sum_i lambda_i x_i^2 + kappa) + offset. Gradient
/// expectations factor into the two one-dimensional Gaussian moments.
struct GaussExpForm {
    double scale = 1.0;
    Eigen::VectorXd lambda;
    double kappa = 0.0;
    double offset = 0.0;
};

/// h(x) = scale * exp(w.x + kappa) + offset.
struct ExpLinearForm {
    double scale = 1.0;
    Eigen::VectorXd w;
    double kappa = 0.0;
    double offset = 0.0;
};

using ClosedFormSpec = std::variant<std::monostate, QuadraticForm, GaussExpForm, ExpLinearForm>;

/// Y = h(N) for a Gaussian vector N with covariance K. Immutable; shareable
/// across threads.
class GaussianFunctional {
public:
    using Evaluator = std::function<double(std::span<const double>)>;
    using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

    /// grad may be empty: a central finite-difference fallback is used.
    GaussianFunctional(int dim, Eigen::MatrixXd covariance, Evaluator h, Gradient grad,
                       ClosedFormSpec closed_form, std::string label);

    int dim() const { return dim_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    bool identity_covariance() const { return identity_cov_; }
    const ClosedFormSpec& closed_form() const { return closed_form_; }
    const std::string& label() const { return label_; }
    bool has_analytic_gradient() const { return static_cast<bool>(grad_); }

    double value(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    void gradient_fd(std::span<const double> x, std::span<double> out) const;

    /// One draw of N ~ N(0, K).
    void sample(Rng& rng, std::span<double> out) const;

    /// max over `points` sampled N of |analytic - fd| / (1 + |analytic|).
    double gradient_mismatch(std::uint64_t seed, int points) const;

private:
    int dim_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd factor_;  // K = factor factor^T
    bool identity_cov_;
    Evaluator h_;
    Gradient grad_;
    ClosedFormSpec closed_form_;
    std::string label_;
};

/// Registry of the named functionals used by the worked examples; the
/// parameter is only meaningful for scaled_log_product (the number of
/// factors N).
GaussianFunctional make_functional(const std::string& name, int n = 0);
std::vector<std::string> functional_registry();

/// count x dim row-major draws with covariance K; deterministic given seed.
std::vector<double> sample_gaussian_vectors(const Eigen::MatrixXd& covariance,
                                            std::int64_t count, std::uint64_t seed);

}  // namespace steindiff
