#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace glocal {

using Vector = std::vector<double>;

/// Raised when a caller breaks a documented precondition of an operation.
class ContractViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Raised by the factorization when a pivot is not positive.
class SingularMatrixError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw std::invalid_argument(what);
}

namespace vec {

inline double norm_inf(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

inline double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double sum(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y)
{
    require(x.size() == y.size(), "axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += a * x[i];
}

inline Vector sub(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), "sub: size mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] - b[i];
    return out;
}

} // namespace vec

enum class NormKind
{
    inf,
    two
};

inline double norm(std::span<const double> v, NormKind kind)
{
    return kind == NormKind::inf ? vec::norm_inf(v) : vec::norm2(v);
}

} // namespace glocal
