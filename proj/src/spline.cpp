#include "spo2/spline.hpp"

#include <cmath>

#include "spo2/common.hpp"

namespace spo2 {

namespace {

// Symmetric positive definite banded solve (Cholesky), bandwidth kd.
// band[r][j] holds A(j, j+r) for r = 0..kd.
void banded_cholesky_solve(std::vector<std::vector<double>>& band, std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    const int kd = static_cast<int>(band.size()) - 1;
    // factorize A = L D L^T in place
    for (int j = 0; j < n; ++j) {
        double d = band[0][j];
        for (int k = std::max(0, j - kd); k < j; ++k) {
            const double ljk = band[j - k][k];
            d -= ljk * ljk * band[0][k];
        }
        if (d <= 0) throw Error(ErrorCode::ConfigError, "spline system not positive definite");
        band[0][j] = d;
        for (int i = j + 1; i <= std::min(n - 1, j + kd); ++i) {
            double s = band[i - j][j];
            for (int k = std::max({0, i - kd, j - kd}); k < j; ++k)
                s -= band[i - k][k] * band[j - k][k] * band[0][k];
            band[i - j][j] = s / d;
        }
    }
    // forward: L z = b
    for (int i = 0; i < n; ++i)
        for (int k = std::max(0, i - kd); k < i; ++k) x[i] -= band[i - k][k] * x[k];
    // diagonal
    for (int i = 0; i < n; ++i) x[i] /= band[0][i];
    // back: L^T x = z
    for (int i = n - 1; i >= 0; --i)
        for (int k = i + 1; k <= std::min(n - 1, i + kd); ++k) x[i] -= band[k - i][i] * x[k];
}

}  // namespace

CubicSmoothingSpline::CubicSmoothingSpline(std::vector<double> knots, const std::vector<double>& values,
                                           double lambda) {
    const int n = static_cast<int>(knots.size());
    if (n < 4 || values.size() != knots.size())
        throw Error(ErrorCode::TooFewKnots, "cubic spline needs >= 4 knots");
    for (int i = 1; i < n; ++i)
        if (knots[i] <= knots[i - 1]) throw Error(ErrorCode::ConfigError, "knots must be strictly increasing");
    if (lambda < 0) throw Error(ErrorCode::ConfigError, "lambda must be >= 0");

    t_ = std::move(knots);
    std::vector<double> h(n - 1);
    for (int i = 0; i < n - 1; ++i) h[i] = t_[i + 1] - t_[i];

    // Green-Silverman: solve (R + lambda Q^T Q) gamma = Q^T y, fitted = y - lambda Q gamma.
    // Q is n x (n-2) second-difference, R is (n-2) tridiagonal; the system is
    // pentadiagonal SPD.
    const int m = n - 2;
    std::vector<double> qty(m);
    for (int j = 0; j < m; ++j) {
        const double a = 1.0 / h[j], b = -(1.0 / h[j] + 1.0 / h[j + 1]), c = 1.0 / h[j + 1];
        qty[j] = a * values[j] + b * values[j + 1] + c * values[j + 2];
    }

    std::vector<std::vector<double>> band(3, std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j) {
        band[0][j] = (h[j] + h[j + 1]) / 3.0;
        if (j + 1 < m) band[1][j] = h[j + 1] / 6.0;
    }
    if (lambda > 0) {
        // Q^T Q: rows j,k overlap when |j-k| <= 2
        auto qcol = [&](int j, int i) -> double {
            if (i == j) return 1.0 / h[j];
            if (i == j + 1) return -(1.0 / h[j] + 1.0 / h[j + 1]);
            if (i == j + 2) return 1.0 / h[j + 1];
            return 0.0;
        };
        for (int j = 0; j < m; ++j) {
            for (int r = 0; r <= 2 && j + r < m; ++r) {
                double dot = 0.0;
                for (int i = j; i <= j + r + 2; ++i) dot += qcol(j, i) * qcol(j + r, i);
                band[r][j] += lambda * dot;
            }
        }
    }

    std::vector<double> gamma = qty;
    banded_cholesky_solve(band, gamma);

    fitted_ = values;
    if (lambda > 0) {
        for (int j = 0; j < m; ++j) {
            const double a = 1.0 / h[j], b = -(1.0 / h[j] + 1.0 / h[j + 1]), c = 1.0 / h[j + 1];
            fitted_[j] -= lambda * a * gamma[j];
            fitted_[j + 1] -= lambda * b * gamma[j];
            fitted_[j + 2] -= lambda * c * gamma[j];
        }
    }

    second_deriv_.assign(n, 0.0);
    for (int j = 0; j < m; ++j) second_deriv_[j + 1] = gamma[j];
}

double CubicSmoothingSpline::operator()(double t) const {
    const int n = static_cast<int>(t_.size());
    // clamp to the knot span; callers interpolate within it
    if (t <= t_.front()) return fitted_.front();
    if (t >= t_.back()) return fitted_.back();
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (t_[mid] <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double h = t_[hi] - t_[lo];
    const double a = (t_[hi] - t) / h;
    const double b = (t - t_[lo]) / h;
    return a * fitted_[lo] + b * fitted_[hi] +
           ((a * a * a - a) * second_deriv_[lo] + (b * b * b - b) * second_deriv_[hi]) * h * h / 6.0;
}

}  // namespace spo2
