#include "isac/validate.hpp"

#include "isac/crb.hpp"

#include <cmath>

namespace isac {

namespace {

std::uint64_t draw_seed(Rng& rng) { return static_cast<std::uint64_t>(rng.uniform() * 9007199254740992.0); }

void check_common(const Scenario& s, int l, const TransmitSolution& tx, const CVec& phi, int trials, int min_trials)
{
    if (l < 0 || l >= s.L())
        throw ParameterError("IRS index out of range");
    if (phi.size() != s.N())
        throw ParameterError("phase vector must have N entries");
    if (trials < min_trials)
        throw ParameterError("need at least " + std::to_string(min_trials) + " trials");
    if (tx.total_covariance().rows() != s.M())
        throw ParameterError("transmit solution does not match the scenario");
    if (s.config.dwell_symbols < s.M())
        throw ParameterError("need T >= M to synthesize the waveform");
}

// Concentrated log-likelihood up to constants: |a_s^H P a*|^2 / (a^T K a*).
struct Likelihood {
    const SystemConfig& cfg;
    CMat P;  // Y (F X)^H
    CMat K;  // (F X)(F X)^H

    double operator()(double theta) const
    {
        const CVec a = steering_vector(theta, cfg.num_irs_elements, cfg.reflect_spacing, cfg.wavelength);
        const CVec as = steering_vector(theta, cfg.num_irs_sensors, cfg.sensor_spacing, cfg.wavelength);
        const CVec ac = a.conjugate();
        const double den = ac.dot(K * ac).real();
        if (!(den > 0.0))
            return 0.0;
        return std::norm(as.dot(P * ac)) / den;
    }
};

double golden_max(const Likelihood& f, double lo, double hi, double tol)
{
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

MleResult mle_point(const Scenario& s, int l, const TransmitSolution& tx, const CVec& phi, int trials, Rng& rng,
                    const MleOptions& opts)
{
    check_common(s, l, tx, phi, trials, 100);
    if (!(opts.grid_step_deg > 0.0) || !(opts.search_lo_deg < opts.search_hi_deg) || opts.search_lo_deg <= -90.0 ||
        opts.search_hi_deg >= 90.0)
        throw ParameterError("MLE search range must lie inside (-90, 90) degrees with a positive step");
    const auto& cfg = s.config;
    const int T = cfg.dwell_symbols;
    const double theta = s.target_doa[l];
    const CMat Rx = tx.total_covariance();
    const CMat F = phi.asDiagonal() * s.bs_irs[l];
    const CMat E = target_response(cfg, theta);
    const double sigma = std::sqrt(cfg.sense_noise_power);

    const double deg = kPi / 180.0;
    const int points = static_cast<int>(std::floor((opts.search_hi_deg - opts.search_lo_deg) / opts.grid_step_deg)) + 1;
    const double step = opts.grid_step_deg * deg;
    const double lo = opts.search_lo_deg * deg;
    const double hi = lo + (points - 1) * step;

    const std::uint64_t base = draw_seed(rng);
    double sum = 0.0, sum2 = 0.0, bias = 0.0;
    MleResult out;
    out.trials = trials;
    for (int t = 0; t < trials; ++t) {
        Rng tr = Rng::stream(base, "mle_trial", {t});
        const CMat X = waveform_with_covariance(Rx, T, tr);
        const CMat FX = F * X;
        const CMat Y = s.target_coeff[l] * E * FX + sigma * tr.cn_matrix(cfg.num_irs_sensors, T);
        const Likelihood f{cfg, Y * FX.adjoint(), FX * FX.adjoint()};

        int best = 0;
        double fbest = -1.0;
        for (int g = 0; g < points; ++g) {
            const double v = f(lo + g * step);
            if (v > fbest) {
                fbest = v;
                best = g;
            }
        }
        if (best == 0 || best == points - 1)
            ++out.boundary_hits;
        const double centre = lo + best * step;
        const double est = golden_max(f, std::max(lo, centre - step), std::min(hi, centre + step), opts.refine_tol);
        const double e = est - theta;
        bias += e;
        sum += e * e;
        sum2 += e * e * e * e;
    }
    out.mse = sum / trials;
    out.mean_bias = bias / trials;
    const double var = std::max(sum2 / trials - out.mse * out.mse, 0.0);
    out.mse_se = std::sqrt(var / trials);
    return out;
}

LsResult ls_extended(const Scenario& s, int l, const TransmitSolution& tx, const CVec& phi, int trials, Rng& rng)
{
    check_common(s, l, tx, phi, trials, 2);
    const auto& cfg = s.config;
    const int T = cfg.dwell_symbols;
    const CMat Rx = tx.total_covariance();
    const CMat F = phi.asDiagonal() * s.bs_irs[l];
    const CMat& Etrue = s.extended_response[l];
    const double sigma = std::sqrt(cfg.sense_noise_power);

    const std::uint64_t base = draw_seed(rng);
    double sum = 0.0, sum2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng tr = Rng::stream(base, "ls_trial", {t});
        const CMat X = waveform_with_covariance(Rx, T, tr);
        const CMat FX = F * X;
        const CMat Y = Etrue * FX + sigma * tr.cn_matrix(cfg.num_irs_sensors, T);
        const Eigen::LDLT<CMat> gram(FX * FX.adjoint());
        if (gram.info() != Eigen::Success || !gram.isPositive())
            throw ParameterError("reflected waveform is rank deficient; the response is not identifiable");
        const CMat Ehat = gram.solve(FX * Y.adjoint()).adjoint();
        const double e = (Ehat - Etrue).squaredNorm();
        sum += e;
        sum2 += e * e;
    }
    LsResult out;
    out.trials = trials;
    out.error_trace = sum / trials;
    out.se = std::sqrt(std::max(sum2 / trials - out.error_trace * out.error_trace, 0.0) / (trials - 1.0));
    return out;
}

}  // namespace isac
