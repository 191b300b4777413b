#include "surfkern/inversion.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "surfkern/errors.hpp"

namespace surfkern {

NoiseModel NoiseModel::uniform(std::size_t channels, double sigma) {
    return NoiseModel{std::vector<double>(channels, sigma)};
}

void NoiseModel::validate() const {
    if (sigma.empty()) throw ConfigError("noise model has no channels");
    for (double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("noise sigma must be positive");
    }
}

void InversionConfig::validate() const {
    if (!(initial_damping > 0.0)) throw ConfigError("initial damping must be positive");
    if (!(damping_down > 1.0) || !(damping_up > 1.0)) {
        throw ConfigError("damping factors must exceed 1");
    }
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(step_cap > 0.0)) throw ConfigError("step cap must be positive");
    if (!(vs_min >= kVsMin) || !(vs_max <= kVsMax) || !(vs_min < vs_max)) {
        throw ConfigError("Vs bounds must lie within [0.5, 6.0] km/s");
    }
}

double chi_square_misfit(std::span<const double> pred, std::span<const double> obs,
                         std::span<const std::uint8_t> mask, const NoiseModel& noise) {
    if (pred.size() != obs.size() || mask.size() != obs.size() || noise.sigma.size() != obs.size()) {
        throw ShapeError("misfit inputs differ in length");
    }
    double chi = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!mask[i]) continue;
        const double r = (pred[i] - obs[i]) / noise.sigma[i];
        chi += r * r;
    }
    return chi;
}

Eigen::VectorXd gauss_newton_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& residual,
                                  const Eigen::VectorXd& sigma, double lambda, double step_cap) {
    if (J.rows() != residual.size() || J.rows() != sigma.size()) {
        throw ShapeError("Jacobian, residual and sigma rows differ");
    }
    if (!(lambda > 0.0)) throw DomainError("damping must be positive");
    const Eigen::VectorXd w = sigma.array().square().inverse();
    Eigen::MatrixXd A = J.transpose() * w.asDiagonal() * J;
    A.diagonal().array() += lambda;
    const Eigen::VectorXd b = J.transpose() * (w.asDiagonal() * residual);
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("damped normal matrix is not positive definite");
    Eigen::VectorXd dm = llt.solve(b);
    if (!dm.allFinite()) throw NumericalError("non-finite Gauss-Newton step");
    return dm.cwiseMax(-step_cap).cwiseMin(step_cap);
}

Eigen::MatrixXd fisher_information(const Eigen::MatrixXd& J, const Eigen::VectorXd& sigma) {
    if (J.rows() != sigma.size()) throw ShapeError("Jacobian and sigma rows differ");
    const Eigen::VectorXd w = sigma.array().square().inverse();
    Eigen::MatrixXd F = J.transpose() * w.asDiagonal() * J;
    return 0.5 * (F + F.transpose());
}

double default_ridge(const Eigen::MatrixXd& F) {
    return 1e-3 * F.trace() / static_cast<double>(F.rows());
}

Eigen::VectorXd posterior_sigma(const Eigen::MatrixXd& F, double ridge, double scale) {
    if (F.rows() != F.cols()) throw ShapeError("Fisher matrix must be square");
    if (!(ridge > 0.0)) throw DomainError("ridge must be positive");
    if (!(scale > 0.0)) throw DomainError("sigma scale must be positive");
    Eigen::MatrixXd A = F;
    A.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("regularized Fisher matrix is singular");
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(F.rows(), F.cols()));
    const Eigen::VectorXd diag = cov.diagonal();
    if (!diag.allFinite() || (diag.array() <= 0.0).any()) {
        throw NumericalError("posterior variance is not positive");
    }
    return scale * diag.cwiseSqrt();
}

Eigen::VectorXd posterior_sigma(const Eigen::MatrixXd& F) {
    return posterior_sigma(F, default_ridge(F));
}

namespace {

struct Observed {
    std::vector<Eigen::Index> rows;
    Eigen::VectorXd sigma;
};

Observed observed_rows(std::span<const std::uint8_t> mask, const NoiseModel& noise) {
    Observed o;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) o.rows.push_back(static_cast<Eigen::Index>(i));
    }
    o.sigma.resize(static_cast<Eigen::Index>(o.rows.size()));
    for (std::size_t k = 0; k < o.rows.size(); ++k) {
        o.sigma[static_cast<Eigen::Index>(k)] = noise.sigma[static_cast<std::size_t>(o.rows[k])];
    }
    return o;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

InversionResult invert(const SurrogateCheckpoint& ckpt, std::span<const double> observed,
                       std::span<const std::uint8_t> mask, std::span<const double> m0,
                       const NoiseModel& noise, const InversionConfig& cfg) {
    cfg.validate();
    noise.validate();
    if (observed.size() != ckpt.output_size() || mask.size() != observed.size() ||
        noise.sigma.size() != observed.size()) {
        throw ShapeError("observations do not match the surrogate outputs");
    }
    if (m0.size() != ckpt.input_size()) throw ShapeError("starting model does not match the surrogate inputs");
    for (double v : m0) {
        if (!(v >= cfg.vs_min && v <= cfg.vs_max)) throw DomainError("starting model outside the Vs bounds");
    }
    const Observed obs_rows = observed_rows(mask, noise);
    if (obs_rows.rows.empty()) throw DomainError("no observed channels");

    InversionResult res;
    res.observed = obs_rows.rows.size();
    res.initial_model.assign(m0.begin(), m0.end());
    std::vector<double> m = res.initial_model;
    std::vector<double> pred = to_std(forward(ckpt, m));
    res.initial_prediction = pred;
    double chi = chi_square_misfit(pred, observed, mask, noise);
    res.iterates.push_back(m);
    res.misfit.push_back(chi);

    const auto n_obs = static_cast<Eigen::Index>(obs_rows.rows.size());
    auto observed_jacobian = [&](const std::vector<double>& model) {
        const Eigen::MatrixXd full = surrogate_jacobian(ckpt, model);
        Eigen::MatrixXd J(n_obs, full.cols());
        for (Eigen::Index k = 0; k < n_obs; ++k) J.row(k) = full.row(obs_rows.rows[static_cast<std::size_t>(k)]);
        return J;
    };

    double lambda = cfg.initial_damping;
    res.stop_reason = "iteration limit";
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        if (chi == 0.0) {
            res.converged = true;
            res.stop_reason = "exact fit";
            break;
        }
        const Eigen::MatrixXd J = observed_jacobian(m);
        Eigen::VectorXd r(n_obs);
        for (Eigen::Index k = 0; k < n_obs; ++k) {
            const auto i = static_cast<std::size_t>(obs_rows.rows[static_cast<std::size_t>(k)]);
            r[k] = observed[i] - pred[i];
        }
        bool accepted = false;
        std::vector<double> trial(m.size());
        std::vector<double> trial_pred;
        double trial_chi = chi;
        for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
            const Eigen::VectorXd dm = gauss_newton_step(J, r, obs_rows.sigma, lambda, cfg.step_cap);
            for (std::size_t i = 0; i < m.size(); ++i) {
                trial[i] = std::clamp(m[i] + dm[static_cast<Eigen::Index>(i)], cfg.vs_min, cfg.vs_max);
            }
            trial_pred = to_std(forward(ckpt, trial));
            trial_chi = chi_square_misfit(trial_pred, observed, mask, noise);
            if (trial_chi < chi) {
                accepted = true;
                lambda /= cfg.damping_down;
                break;
            }
            lambda *= cfg.damping_up;
        }
        if (!accepted) {
            res.converged = true;
            res.stop_reason = "no decrease after damping retries";
            break;
        }
        const double rel = (chi - trial_chi) / chi;
        m = trial;
        pred = std::move(trial_pred);
        chi = trial_chi;
        res.iterates.push_back(m);
        res.misfit.push_back(chi);
        ++res.iterations;
        if (rel < cfg.tolerance) {
            res.converged = true;
            res.stop_reason = "relative misfit decrease below tolerance";
            break;
        }
    }
    res.model = m;
    res.final_prediction = pred;

    const Eigen::MatrixXd F = fisher_information(observed_jacobian(m), obs_rows.sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(F, Eigen::EigenvaluesOnly);
    res.fisher_min_eigenvalue = eig.eigenvalues().minCoeff();
    res.fisher_max_eigenvalue = eig.eigenvalues().maxCoeff();
    res.fisher_condition = res.fisher_min_eigenvalue > 0.0
                               ? res.fisher_max_eigenvalue / res.fisher_min_eigenvalue
                               : std::numeric_limits<double>::infinity();
    res.posterior_sigma = to_std(posterior_sigma(F));
    return res;
}

double calibrate_sigma_scale(std::span<const InversionResult> results,
                             std::span<const std::vector<double>> truths) {
    if (results.size() != truths.size()) throw ShapeError("one true model per result is required");
    if (results.size() < 20) throw DomainError("calibration needs at least 20 inversion results");
    std::vector<double> ratios;
    for (std::size_t s = 0; s < results.size(); ++s) {
        const auto& r = results[s];
        if (truths[s].size() != r.model.size() || r.posterior_sigma.size() != r.model.size()) {
            throw ShapeError("model, truth and sigma lengths differ");
        }
        for (std::size_t i = 0; i < r.model.size(); ++i) {
            ratios.push_back(std::abs(r.model[i] - truths[s][i]) / r.posterior_sigma[i]);
        }
    }
    return quantile(ratios, 0.5);
}

double sigma_coverage(std::span<const InversionResult> results,
                      std::span<const std::vector<double>> truths, double scale, double k) {
    if (results.size() != truths.size()) throw ShapeError("one true model per result is required");
    std::size_t inside = 0, total = 0;
    for (std::size_t s = 0; s < results.size(); ++s) {
        const auto& r = results[s];
        for (std::size_t i = 0; i < r.model.size(); ++i) {
            inside += std::abs(r.model[i] - truths[s].at(i)) <= k * scale * r.posterior_sigma.at(i);
            ++total;
        }
    }
    if (total == 0) throw DomainError("no layers to cover");
    return static_cast<double>(inside) / static_cast<double>(total);
}

double rms_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("RMS needs equal, non-empty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

std::string inversion_result_to_json(const InversionResult& r) {
    nlohmann::json j;
    j["initial_model"] = r.initial_model;
    j["model"] = r.model;
    j["iterates"] = r.iterates;
    j["misfit"] = r.misfit;
    j["posterior_sigma"] = r.posterior_sigma;
    j["sigma_scale"] = r.sigma_scale;
    j["fisher"] = {{"min_eigenvalue", r.fisher_min_eigenvalue},
                   {"max_eigenvalue", r.fisher_max_eigenvalue},
                   {"condition", std::isfinite(r.fisher_condition) ? nlohmann::json(r.fisher_condition)
                                                                   : nlohmann::json(nullptr)}};
    j["iterations"] = r.iterations;
    j["observed"] = r.observed;
    j["converged"] = r.converged;
    j["stop_reason"] = r.stop_reason;
    j["initial_prediction"] = r.initial_prediction;
    j["final_prediction"] = r.final_prediction;
    return j.dump(1) + "\n";
}

InversionResult inversion_result_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        InversionResult r;
        j.at("initial_model").get_to(r.initial_model);
        j.at("model").get_to(r.model);
        j.at("iterates").get_to(r.iterates);
        j.at("misfit").get_to(r.misfit);
        j.at("posterior_sigma").get_to(r.posterior_sigma);
        j.at("sigma_scale").get_to(r.sigma_scale);
        const auto& f = j.at("fisher");
        f.at("min_eigenvalue").get_to(r.fisher_min_eigenvalue);
        f.at("max_eigenvalue").get_to(r.fisher_max_eigenvalue);
        r.fisher_condition = f.at("condition").is_null() ? std::numeric_limits<double>::infinity()
                                                         : f.at("condition").get<double>();
        j.at("iterations").get_to(r.iterations);
        j.at("observed").get_to(r.observed);
        j.at("converged").get_to(r.converged);
        j.at("stop_reason").get_to(r.stop_reason);
        j.at("initial_prediction").get_to(r.initial_prediction);
        j.at("final_prediction").get_to(r.final_prediction);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("malformed inversion result: ") + e.what());
    }
}

}  // namespace surfkern
