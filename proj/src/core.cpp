#include "isac/core.hpp"

#include <Eigen/Eigenvalues>

namespace isac {

CMat hermitian_part(const CMat& h, double tol)
{
    if (h.rows() != h.cols())
        throw ParameterError("hermitian_part: matrix is not square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (asym > tol * scale)
        throw ParameterError("matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");
    return 0.5 * (h + h.adjoint());
}

double min_eigenvalue(const CMat& h)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

CMat psd_sqrt(const CMat& h)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
    RVec ev = es.eigenvalues();
    // eigenvalues at rounding level are treated as zero
    const double floor = 1e-14 * h.rows() * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    ev = (ev.array() > floor).select(ev, 0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CVec unit_phases(const CVec& v)
{
    CVec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out(i) = v(i) == cplx(0.0, 0.0) ? cplx(1.0, 0.0) : std::polar(1.0, std::arg(v(i)));
    return out;
}

}  // namespace isac
