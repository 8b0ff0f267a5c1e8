#pragma once

#include "isac/scenario.hpp"
#include "isac/solution.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isac {

/// 3x3 Fisher information for xi = [theta, Re beta, Im beta].
struct PointFim {
    RMat J = RMat::Zero(3, 3);

    double theta_theta() const { return J(0, 0); }
    Eigen::RowVector2d theta_beta() const { return J.block<1, 2>(0, 1); }
    Eigen::Matrix2d beta_beta() const { return J.block<2, 2>(1, 1); }
};

/// Intermediate matrices of the point-target model at angle theta.
struct SensingDerived {
    double theta = 0.0;
    CVec a;       // reflect-side steering, N
    CVec a_s;     // sensor-side steering, Ns
    RVec d_n;     // (d / d_s) * (0..N-1)
    RVec d_ns;    // 0..Ns-1
    CMat B;       // diag(a) G, N x M
    CMat U;       // B Rx B^H
    CMat E;       // a_s a^T, Ns x N
    CMat E_dot;   // dE / dtheta
};

SensingDerived sensing_derived(const Scenario& s, int l, const CMat& Rx, double theta);

/// E(theta) = a_s(theta) a(theta)^T for IRS geometry of `s`.
CMat target_response(const SystemConfig& cfg, double theta);
CMat target_response_derivative(const SystemConfig& cfg, double theta);

/// Closed-form FIM. `theta` defaults to the scenario's true DoA.
PointFim point_fim(const Scenario& s, int l, const CMat& Rx, const CVec& phi,
                   std::optional<double> theta = std::nullopt);

/// Three independent evaluations of the DoA bound.
struct CrbRoutes {
    double schur = 0.0;     // 1 / (J_tt - J_tb J_bb^-1 J_bt)
    double closed = 0.0;    // phi-form with U and the index matrices
    double inverse = 0.0;   // [J^-1]_{1,1} by direct 3x3 inversion
};

CrbRoutes point_crb_routes(const Scenario& s, int l, const CMat& Rx, const CVec& phi,
                           std::optional<double> theta = std::nullopt);

/// Quadratic forms s = phi^T U phi*, u = phi^T U D phi*, v = phi^T D U D phi*.
struct PointForms {
    double s = 0.0;
    cplx u{0.0, 0.0};
    double v = 0.0;
};
PointForms point_forms(const CMat& U, const RVec& d_n, const CVec& phi);

/// Bracketed denominator c1 s + Ns v - Ns |u|^2 / s, and the prefactor in front of it.
double point_denominator(const PointForms& f, int Ns);
double point_prefactor(const Scenario& s, int l, double theta);

/// Returns +inf when the information about theta is singular.
double point_crb(const Scenario& s, int l, const CMat& Rx, const CVec& phi,
                 std::optional<double> theta = std::nullopt);

/// (Ns sigma_s^2 / T) tr((G Rx G^H)^-1); +inf when G Rx G^H is rank deficient.
double extended_crb(const Scenario& s, int l, const CMat& Rx);

/// Deterministic M x T waveform whose sample covariance X X^H / T equals Rx. Needs T >= M.
CMat waveform_with_covariance(const CMat& Rx, int T, Rng& rng);

/// FIM assembled from central differences of vec(beta E(theta) Phi G X).
PointFim fim_finite_difference(const Scenario& s, int l, const CMat& Rx, const CVec& phi, double step);

enum class CrbStatus { Finite, Infinite, Unbounded };

struct CrbReport {
    TargetModel variant = TargetModel::Point;
    std::vector<double> per_irs;
    std::vector<CrbStatus> status;
    double max_crb = 0.0;
    int worst = 0;  // lowest index attaining max_crb
};

CrbReport crb_report(const Scenario& s, const CMat& Rx, const std::vector<CVec>& phases, TargetModel variant);
CrbReport crb_report(const Scenario& s, const TransmitSolution& tx, const ReflectSolution& reflect,
                     TargetModel variant);

}  // namespace isac
