#include "isac/crb.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <limits>

namespace isac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RVec index_vector(int n, double weight)
{
    RVec d(n);
    for (int i = 0; i < n; ++i)
        d(i) = weight * i;
    return d;
}

void check_inputs(const Scenario& s, int l, const CMat& Rx)
{
    if (l < 0 || l >= s.L())
        throw ParameterError("IRS index out of range");
    if (Rx.rows() != s.M() || Rx.cols() != s.M())
        throw ParameterError("Rx must be M x M");
    const CMat h = hermitian_part(Rx, 1e-9);
    const double scale = std::max(h.trace().real(), std::numeric_limits<double>::min());
    if (min_eigenvalue(h) < -1e-9 * scale)
        throw ParameterError("Rx is not positive semidefinite");
}

void check_phases(const Scenario& s, const CVec& phi)
{
    if (phi.size() != s.N())
        throw ParameterError("phase vector must have N entries");
    for (Eigen::Index n = 0; n < phi.size(); ++n)
        if (std::abs(std::abs(phi(n)) - 1.0) > 1e-9)
            throw ParameterError("reflection coefficients must have unit modulus");
}

}  // namespace

CMat target_response(const SystemConfig& cfg, double theta)
{
    const CVec a = steering_vector(theta, cfg.num_irs_elements, cfg.reflect_spacing, cfg.wavelength);
    const CVec as = steering_vector(theta, cfg.num_irs_sensors, cfg.sensor_spacing, cfg.wavelength);
    return as * a.transpose();
}

CMat target_response_derivative(const SystemConfig& cfg, double theta)
{
    const CMat E = target_response(cfg, theta);
    const RVec dns = index_vector(cfg.num_irs_sensors, cfg.sensor_spacing);
    const RVec dn = index_vector(cfg.num_irs_elements, cfg.reflect_spacing);
    const cplx k(0.0, 2.0 * kPi * std::cos(theta) / cfg.wavelength);
    return k * (dns.asDiagonal() * E + E * dn.asDiagonal());
}

SensingDerived sensing_derived(const Scenario& s, int l, const CMat& Rx, double theta)
{
    const auto& cfg = s.config;
    SensingDerived d;
    d.theta = theta;
    d.a = steering_vector(theta, s.N(), cfg.reflect_spacing, cfg.wavelength);
    d.a_s = steering_vector(theta, s.Ns(), cfg.sensor_spacing, cfg.wavelength);
    d.d_n = index_vector(s.N(), cfg.reflect_spacing / cfg.sensor_spacing);
    d.d_ns = index_vector(s.Ns(), 1.0);
    d.B = d.a.asDiagonal() * s.bs_irs[l];
    d.U = d.B * Rx * d.B.adjoint();
    d.E = d.a_s * d.a.transpose();
    d.E_dot = target_response_derivative(cfg, theta);
    return d;
}

PointFim point_fim(const Scenario& s, int l, const CMat& Rx, const CVec& phi, std::optional<double> theta)
{
    check_inputs(s, l, Rx);
    check_phases(s, phi);
    const double th = theta.value_or(s.target_doa[l]);
    const auto& cfg = s.config;
    const CMat E = target_response(cfg, th);
    const CMat Ed = target_response_derivative(cfg, th);
    const CMat F = phi.asDiagonal() * s.bs_irs[l];
    const CMat Q = F * Rx * F.adjoint();
    const cplx beta = s.target_coeff[l];
    const double c = 2.0 * cfg.dwell_symbols / cfg.sense_noise_power;

    PointFim fim;
    fim.J(0, 0) = c * std::norm(beta) * (Ed * Q * Ed.adjoint()).trace().real();
    const cplx cross = std::conj(beta) * (E * Q * Ed.adjoint()).trace();
    fim.J(0, 1) = fim.J(1, 0) = c * cross.real();
    fim.J(0, 2) = fim.J(2, 0) = c * (cross * cplx(0.0, 1.0)).real();
    const double bb = c * (E * Q * E.adjoint()).trace().real();
    fim.J(1, 1) = fim.J(2, 2) = bb;
    return fim;
}

PointForms point_forms(const CMat& U, const RVec& d_n, const CVec& phi)
{
    const CVec pc = phi.conjugate();
    const CVec dpc = d_n.asDiagonal() * pc;
    PointForms f;
    f.s = pc.dot(U * pc).real();
    f.u = pc.dot(U * dpc);
    f.v = dpc.dot(U * dpc).real();
    return f;
}

double point_denominator(const PointForms& f, int Ns)
{
    if (!(f.s > 0.0))
        return 0.0;
    const double c1 = (Ns - 1.0) * Ns * (Ns + 1.0) / 12.0;
    const double lead = c1 * f.s + Ns * f.v;
    const double den = lead - Ns * std::norm(f.u) / f.s;
    return den > 1e-12 * lead ? den : 0.0;
}

double point_prefactor(const Scenario& s, int l, double theta)
{
    const auto& cfg = s.config;
    const double c = std::cos(theta);
    return cfg.sense_noise_power * cfg.wavelength * cfg.wavelength /
           (8.0 * cfg.dwell_symbols * std::norm(s.target_coeff[l]) * kPi * kPi * cfg.sensor_spacing *
            cfg.sensor_spacing * c * c);
}

CrbRoutes point_crb_routes(const Scenario& s, int l, const CMat& Rx, const CVec& phi, std::optional<double> theta)
{
    const double th = theta.value_or(s.target_doa[l]);
    const PointFim fim = point_fim(s, l, Rx, phi, th);
    CrbRoutes r;

    const double bb = fim.J(1, 1);
    if (bb > 0.0) {
        const double schur = fim.J(0, 0) - fim.theta_beta().squaredNorm() / bb;
        r.schur = schur > 1e-12 * fim.J(0, 0) ? 1.0 / schur : kInf;
    } else {
        r.schur = kInf;
    }

    const SensingDerived d = sensing_derived(s, l, Rx, th);
    const double den = point_denominator(point_forms(d.U, d.d_n, phi), s.Ns());
    r.closed = den > 0.0 ? point_prefactor(s, l, th) / den : kInf;

    // Diagonal equilibration: the angle and gain entries differ by |beta|^2.
    const RVec diag = fim.J.diagonal();
    if ((diag.array() > 0.0).all()) {
        const RVec scale = diag.cwiseSqrt().cwiseInverse();
        const RMat Jn = scale.asDiagonal() * fim.J * scale.asDiagonal();
        Eigen::FullPivLU<RMat> lu(Jn);
        lu.setThreshold(1e-12);
        r.inverse = lu.isInvertible() ? lu.inverse()(0, 0) * scale(0) * scale(0) : kInf;
        if (!(r.inverse > 0.0))
            r.inverse = kInf;
    } else {
        r.inverse = kInf;
    }
    return r;
}

double point_crb(const Scenario& s, int l, const CMat& Rx, const CVec& phi, std::optional<double> theta)
{
    check_inputs(s, l, Rx);
    check_phases(s, phi);
    const double th = theta.value_or(s.target_doa[l]);
    const SensingDerived d = sensing_derived(s, l, Rx, th);
    const double den = point_denominator(point_forms(d.U, d.d_n, phi), s.Ns());
    return den > 0.0 ? point_prefactor(s, l, th) / den : kInf;
}

double extended_crb(const Scenario& s, int l, const CMat& Rx)
{
    check_inputs(s, l, Rx);
    const CMat& G = s.bs_irs[l];
    const CMat K = G * Rx * G.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (K + K.adjoint()), Eigen::EigenvaluesOnly);
    const RVec ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (!(top > 0.0) || ev.minCoeff() < 1e-10 * top)
        return kInf;
    const auto& cfg = s.config;
    return cfg.num_irs_sensors * cfg.sense_noise_power / cfg.dwell_symbols * ev.cwiseInverse().sum();
}

CMat waveform_with_covariance(const CMat& Rx, int T, Rng& rng)
{
    const auto M = static_cast<int>(Rx.rows());
    if (T < M)
        throw ParameterError("waveform_with_covariance: need T >= M");
    Eigen::HouseholderQR<CMat> qr(rng.cn_matrix(T, M));
    const CMat Q = qr.householderQ() * CMat::Identity(T, M);
    return std::sqrt(static_cast<double>(T)) * psd_sqrt(Rx) * Q.adjoint();
}

PointFim fim_finite_difference(const Scenario& s, int l, const CMat& Rx, const CVec& phi, double step)
{
    if (!(step >= 1e-8 && step <= 1e-4))
        throw ParameterError("fim_finite_difference: step must lie in [1e-8, 1e-4]");
    check_inputs(s, l, Rx);
    check_phases(s, phi);
    const auto& cfg = s.config;
    Rng rng(0x5eed);
    const CMat X = waveform_with_covariance(Rx, cfg.dwell_symbols, rng);
    const CMat F = phi.asDiagonal() * s.bs_irs[l] * X;
    const double theta = s.target_doa[l];
    const cplx beta = s.target_coeff[l];

    auto eta = [&](double th, cplx b) -> CVec {
        const CMat Y = b * target_response(cfg, th) * F;
        return Eigen::Map<const CVec>(Y.data(), Y.size());
    };

    const double hb = step * std::abs(beta);
    std::vector<CVec> grads;
    grads.push_back((eta(theta + step, beta) - eta(theta - step, beta)) / (2.0 * step));
    grads.push_back((eta(theta, beta + hb) - eta(theta, beta - hb)) / (2.0 * hb));
    grads.push_back((eta(theta, beta + cplx(0.0, hb)) - eta(theta, beta - cplx(0.0, hb))) / (2.0 * hb));

    PointFim fim;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            fim.J(i, j) = 2.0 / cfg.sense_noise_power * grads[i].dot(grads[j]).real();
    return fim;
}

CrbReport crb_report(const Scenario& s, const CMat& Rx, const std::vector<CVec>& phases, TargetModel variant)
{
    if (static_cast<int>(phases.size()) != s.L())
        throw ParameterError("crb_report: need one phase vector per IRS");
    CrbReport rep;
    rep.variant = variant;
    for (int l = 0; l < s.L(); ++l) {
        const double v = variant == TargetModel::Point ? point_crb(s, l, Rx, phases[l]) : extended_crb(s, l, Rx);
        rep.per_irs.push_back(v);
        if (std::isfinite(v))
            rep.status.push_back(CrbStatus::Finite);
        else
            rep.status.push_back(variant == TargetModel::Point ? CrbStatus::Infinite : CrbStatus::Unbounded);
        if (l == 0 || v > rep.max_crb) {
            rep.max_crb = v;
            rep.worst = l;
        }
    }
    return rep;
}

CrbReport crb_report(const Scenario& s, const TransmitSolution& tx, const ReflectSolution& reflect,
                     TargetModel variant)
{
    return crb_report(s, tx.total_covariance(), reflect.phases, variant);
}

}  // namespace isac
