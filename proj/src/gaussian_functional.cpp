#include "steindiff/gaussian_functional.hpp"

#include <cmath>
#include <stdexcept>

namespace steindiff {

namespace {
constexpr double kFdScale = 6.0554544523933429e-6;  // cbrt(machine epsilon)

Eigen::MatrixXd factorize(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) throw std::invalid_argument("covariance must be square");
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw std::invalid_argument("covariance must be symmetric (max asymmetry " +
                                    std::to_string(asym) + ")");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    // PSD with (numerically) zero eigenvalues: factor through the spectrum.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("covariance factorization failed");
    const auto& vals = eig.eigenvalues();
    if (vals.minCoeff() < -1e-10)
        throw std::invalid_argument("covariance is not positive semi-definite (min eigenvalue " +
                                    std::to_string(vals.minCoeff()) + ")");
    Eigen::VectorXd root = vals.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}
}  // namespace

GaussianFunctional::GaussianFunctional(int dim, Eigen::MatrixXd covariance, Evaluator h,
                                       Gradient grad, ClosedFormSpec closed_form,
                                       std::string label)
    : dim_(dim),
      cov_(std::move(covariance)),
      h_(std::move(h)),
      grad_(std::move(grad)),
      closed_form_(std::move(closed_form)),
      label_(std::move(label)) {
    if (dim_ < 1) throw std::invalid_argument("functional dimension must be >= 1");
    if (cov_.rows() != dim_ || cov_.cols() != dim_)
        throw std::invalid_argument("covariance dimension mismatch");
    if (!h_) throw std::invalid_argument("functional requires an evaluator");
    identity_cov_ = cov_.isIdentity(1e-14);
    factor_ = identity_cov_ ? Eigen::MatrixXd::Identity(dim_, dim_) : factorize(cov_);
}

double GaussianFunctional::value(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("functional value: dimension mismatch");
    return h_(x);
}

void GaussianFunctional::gradient(std::span<const double> x, std::span<double> out) const {
    if (grad_) {
        grad_(x, out);
        return;
    }
    gradient_fd(x, out);
}

void GaussianFunctional::gradient_fd(std::span<const double> x, std::span<double> out) const {
    std::vector<double> pt(x.begin(), x.end());
    for (int i = 0; i < dim_; ++i) {
        const double step = kFdScale * (1.0 + std::abs(pt[i]));
        const double saved = pt[i];
        pt[i] = saved + step;
        const double up = h_(pt);
        pt[i] = saved - step;
        const double down = h_(pt);
        pt[i] = saved;
        out[i] = (up - down) / (2.0 * step);
    }
}

void GaussianFunctional::sample(Rng& rng, std::span<double> out) const {
    if (identity_cov_) {
        rng.normal_fill(out);
        return;
    }
    Eigen::VectorXd z(dim_);
    for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
    Eigen::Map<Eigen::VectorXd>(out.data(), dim_) = factor_ * z;
}

double GaussianFunctional::gradient_mismatch(std::uint64_t seed, int points) const {
    if (!grad_) return 0.0;
    Rng rng(seed);
    std::vector<double> x(dim_), ga(dim_), gf(dim_);
    double worst = 0.0;
    for (int p = 0; p < points; ++p) {
        sample(rng, x);
        grad_(x, ga);
        gradient_fd(x, gf);
        for (int i = 0; i < dim_; ++i)
            worst = std::max(worst, std::abs(ga[i] - gf[i]) / (1.0 + std::abs(ga[i])));
    }
    return worst;
}

namespace {

double sum_squares(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

GaussianFunctional make_gauss_exp(int n, double lambda, double kappa, double offset,
                                  std::string label) {
    GaussExpForm form;
    form.scale = 1.0;
    form.lambda = Eigen::VectorXd::Constant(n, lambda);
    form.kappa = kappa;
    form.offset = offset;
    auto h = [lambda, kappa, offset](std::span<const double> x) {
        return std::exp(lambda * sum_squares(x) + kappa) + offset;
    };
    auto grad = [lambda, kappa](std::span<const double> x, std::span<double> out) {
        const double core = std::exp(lambda * sum_squares(x) + kappa);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * lambda * x[i] * core;
    };
    return GaussianFunctional(n, Eigen::MatrixXd::Identity(n, n), h, grad, form,
                              std::move(label));
}

}  // namespace

GaussianFunctional make_functional(const std::string& name, int n) {
    if (name == "chi_square") {
        QuadraticForm q{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.0};
        return GaussianFunctional(
            1, Eigen::MatrixXd::Identity(1, 1),
            [](std::span<const double> x) { return x[0] * x[0]; },
            [](std::span<const double> x, std::span<double> out) { out[0] = 2.0 * x[0]; }, q,
            "chi_square");
    }
    if (name == "exp_neg_half_sum") return make_gauss_exp(2, -0.5, 0.0, 0.0, name);
    if (name == "exp_neg_sum") return make_gauss_exp(2, -1.0, 0.0, 0.0, name);
    if (name == "exp_quarter_sum_minus_one") return make_gauss_exp(2, 0.25, 0.0, -1.0, name);
    if (name == "exp_single") {
        ExpLinearForm form;
        form.w = Eigen::VectorXd::Ones(1);
        return GaussianFunctional(
            1, Eigen::MatrixXd::Identity(1, 1),
            [](std::span<const double> x) { return std::exp(x[0]); },
            [](std::span<const double> x, std::span<double> out) { out[0] = std::exp(x[0]); },
            form, "exp_single");
    }
    if (name == "product_pairs") {
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
        q(0, 1) = q(1, 0) = 0.5;
        q(2, 3) = q(3, 2) = 0.5;
        QuadraticForm spec{q, Eigen::VectorXd::Zero(4), 0.0};
        return GaussianFunctional(
            4, Eigen::MatrixXd::Identity(4, 4),
            [](std::span<const double> x) { return x[0] * x[1] + x[2] * x[3]; },
            [](std::span<const double> x, std::span<double> out) {
                out[0] = x[1];
                out[1] = x[0];
                out[2] = x[3];
                out[3] = x[2];
            },
            spec, "product_pairs");
    }
    if (name == "half_diff_squares") {
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
        q(0, 0) = q(1, 1) = 0.5;
        q(2, 2) = q(3, 3) = -0.5;
        QuadraticForm spec{q, Eigen::VectorXd::Zero(4), 0.0};
        return GaussianFunctional(
            4, Eigen::MatrixXd::Identity(4, 4),
            [](std::span<const double> x) {
                return 0.5 * (x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3]);
            },
            [](std::span<const double> x, std::span<double> out) {
                out[0] = x[0];
                out[1] = x[1];
                out[2] = -x[2];
                out[3] = -x[3];
            },
            spec, "half_diff_squares");
    }
    if (name == "scaled_log_product") {
        if (n < 1)
            throw std::invalid_argument("scaled_log_product requires a factor count N >= 1");
        const double lambda = -1.0 / std::sqrt(2.0 * n);
        const double kappa = std::sqrt(n / 2.0);
        return make_gauss_exp(n, lambda, kappa, 0.0,
                              "scaled_log_product(" + std::to_string(n) + ")");
    }
    throw std::invalid_argument("unknown functional: " + name);
}

std::vector<std::string> functional_registry() {
    return {"chi_square",    "exp_neg_half_sum",  "exp_neg_sum", "exp_quarter_sum_minus_one",
            "exp_single",    "product_pairs",     "half_diff_squares", "scaled_log_product"};
}

std::vector<double> sample_gaussian_vectors(const Eigen::MatrixXd& covariance, std::int64_t count,
                                            std::uint64_t seed) {
    const int n = static_cast<int>(covariance.rows());
    GaussianFunctional probe(
        n, covariance, [](std::span<const double> x) { return x[0]; }, nullptr, std::monostate{},
        "sampler");
    std::vector<double> out(static_cast<std::size_t>(count) * n);
    Rng rng(seed);
    for (std::int64_t i = 0; i < count; ++i)
        probe.sample(rng, std::span<double>(out.data() + i * n, n));
    return out;
}

}  // namespace steindiff
