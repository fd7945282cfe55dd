#ifndef SPO2_SPLINE_HPP
#define SPO2_SPLINE_HPP

#include <vector>

namespace spo2 {

// Natural cubic smoothing spline (Reinsch / Green-Silverman). Minimizes
//   sum_i (y_i - g(t_i))^2 + lambda * integral g''(t)^2 dt
// over natural cubic splines; lambda = 0 interpolates the knots exactly.
class CubicSmoothingSpline {
public:
    CubicSmoothingSpline(std::vector<double> knots, const std::vector<double>& values, double lambda = 0.0);

    double operator()(double t) const;

    const std::vector<double>& fitted_values() const { return fitted_; }

private:
    std::vector<double> t_;
    std::vector<double> fitted_;
    std::vector<double> second_deriv_;  // natural: zero at both ends
};

}  // namespace spo2

#endif
