#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surfkern/surrogate.hpp"

namespace surfkern {

struct NoiseModel {
    std::vector<double> sigma;  // km/s, one per output channel

    static NoiseModel uniform(std::size_t channels = kOutputCount, double sigma = 0.01);
    /// Throws ConfigError unless every sigma is positive and finite.
    void validate() const;
};

struct InversionConfig {
    std::size_t max_iterations = 50;
    double initial_damping = 10.0;
    double damping_down = 3.0;
    double damping_up = 3.0;
    std::size_t max_retries = 8;
    double tolerance = 1e-4;  // relative misfit decrease that counts as converged
    double vs_min = kVsMin;
    double vs_max = kVsMax;
    double step_cap = 0.3;  // km/s per layer and iteration

    /// Throws ConfigError.
    void validate() const;
};

struct InversionResult {
    std::vector<double> initial_model;
    std::vector<double> model;
    std::vector<std::vector<double>> iterates;  // accepted models, starting with the initial one
    std::vector<double> misfit;                 // chi-square per accepted iterate
    std::vector<double> posterior_sigma;        // unscaled unless a scale was supplied
    double fisher_min_eigenvalue = 0.0;
    double fisher_max_eigenvalue = 0.0;
    double fisher_condition = 0.0;
    double sigma_scale = 1.0;
    std::size_t iterations = 0;
    std::size_t observed = 0;
    bool converged = false;
    std::string stop_reason;
    std::vector<double> initial_prediction;
    std::vector<double> final_prediction;
};

/// Σ over observed channels of ((pred - obs) / sigma)^2.
double chi_square_misfit(std::span<const double> pred, std::span<const double> obs,
                         std::span<const std::uint8_t> mask, const NoiseModel& noise);

/// δm = (Jᵀ Σ⁻¹ J + λ I)⁻¹ Jᵀ Σ⁻¹ r, with every component clipped to ±step_cap.
/// `sigma` holds one entry per row of J. Throws NumericalError when the solve
/// is not finite.
Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& residual,
                                  const Eigen::VectorXd& sigma, double lambda,
                                  double step_cap = std::numeric_limits<double>::infinity());

/// Jᵀ Σ⁻¹ J.
Eigen::MatrixXd fisher_information(const Eigen::MatrixXd& J, const Eigen::VectorXd& sigma);

/// Default ridge used by posterior_sigma: 1e-3 · trace(F) / n.
double default_ridge(const Eigen::MatrixXd& F);

/// s · sqrt(diag((F + ridge I)⁻¹)). Throws NumericalError if the solve fails.
Eigen::VectorXd posterior_sigma(const Eigen::MatrixXd& F, double ridge, double scale = 1.0);
Eigen::VectorXd posterior_sigma(const Eigen::MatrixXd& F);

/// Levenberg-Marquardt on the surrogate. `observed` and `mask` follow the
/// surrogate output layout (Rayleigh periods, then Love). Not converging is
/// reported in the result rather than thrown.
InversionResult invert(const SurrogateCheckpoint& ckpt, std::span<const double> observed,
                       std::span<const std::uint8_t> mask, std::span<const double> m0,
                       const NoiseModel& noise, const InversionConfig& cfg = {});

/// Median over samples and layers of |m̂ - m_true| / σ. Needs at least 20
/// results (DomainError otherwise).
double calibrate_sigma_scale(std::span<const InversionResult> results,
                             std::span<const std::vector<double>> truths);

/// Fraction of layers with |m̂ - m_true| <= k · scale · σ.
double sigma_coverage(std::span<const InversionResult> results,
                      std::span<const std::vector<double>> truths, double scale, double k = 2.0);

double rms_difference(std::span<const double> a, std::span<const double> b);

std::string inversion_result_to_json(const InversionResult& result);
InversionResult inversion_result_from_json(const std::string& text);

}  // namespace surfkern
