#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isac {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// ---------------------------------------------------------------------------
// Errors. Everything thrown by the library derives from isac::Error.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Coincident positions or an angle outside the identifiable cone.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// The optimization problem has no feasible point. `binding` lists the
/// users (l, k) whose constraints cannot be met.
class InfeasibleError : public Error {
public:
    struct User {
        int l;
        int k;
        double standalone_sinr;  // best single-user SINR under full power
    };
    InfeasibleError(const std::string& what, std::vector<User> binding)
        : Error(what), binding_(std::move(binding)) {}
    const std::vector<User>& binding() const { return binding_; }

private:
    std::vector<User> binding_;
};

/// The conic solver could not produce a certified answer.
class SolverError : public Error {
public:
    using Error::Error;
};

/// A user that must be served received no signal power in the relaxed solution.
class ExtractionError : public Error {
public:
    ExtractionError(const std::string& what, int l, int k) : Error(what), l_(l), k_(k) {}
    int l() const { return l_; }
    int k() const { return k_; }

private:
    int l_;
    int k_;
};

// ---------------------------------------------------------------------------
// Random streams. One seed, independent streams keyed by (module, l, k).

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Derived stream; the same (seed, label, ids) always gives the same draws.
    static Rng stream(std::uint64_t seed, std::string_view label, std::initializer_list<std::int64_t> ids = {})
    {
        std::uint64_t h = splitmix64(seed ^ hash_label(label));
        for (auto id : ids)
            h = splitmix64(h ^ static_cast<std::uint64_t>(id + 0x51ed27));
        return Rng(h);
    }

    double uniform(double lo = 0.0, double hi = 1.0)
    {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    /// Circularly-symmetric complex Gaussian with unit variance.
    cplx cn()
    {
        const double a = normal();
        const double b = normal();
        constexpr double r = 0.70710678118654752440;
        return {a * r, b * r};
    }

    CVec cn_vector(int n)
    {
        CVec v(n);
        for (int i = 0; i < n; ++i)
            v(i) = cn();
        return v;
    }

    CMat cn_matrix(int rows, int cols)
    {
        CMat m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i)
                m(i, j) = cn();
        return m;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Small linear-algebra helpers shared across modules.

/// (H + H^H)/2 after checking the asymmetry is below `tol` (relative to max |H|).
CMat hermitian_part(const CMat& h, double tol = 1e-10);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMat& h);

/// PSD square root; negative and rounding-level eigenvalues are clipped to zero.
CMat psd_sqrt(const CMat& h);

/// Phase-only vector exp(j arg(v)); arg(0) is taken as 0.
CVec unit_phases(const CVec& v);

}  // namespace isac
