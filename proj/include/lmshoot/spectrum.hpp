#pragma once

#include "lmshoot/integrator.hpp"
#include "lmshoot/model.hpp"

#include <vector>

namespace lmshoot {

/// k-th radial Neumann eigenvalue of the Laplacian on the ball.
struct EigenResult {
    int k = 1;
    double lambda = 0.0;          ///< 1 / length^2
    double angle_residual = 0.0;  ///< |theta_lambda(R) - (k-1) pi|
};

/// Prufer angle at r = R for -(r^{N-1} u')' = lambda r^{N-1} u, u'(0) = 0:
///   theta' = sin^2(theta) / r^{N-1} + lambda r^{N-1} cos^2(theta),  theta(0) = 0,
/// started at r_start from theta = lambda r_start^N / N. Strictly increasing in lambda.
double pruefer_angle_at_R(double lambda, const ProblemConfig& config,
                          const IntegratorSettings& settings);

/// Angle sampled on `samples + 1` equally spaced radii in [0, R].
std::vector<double> pruefer_angle_profile(double lambda, const ProblemConfig& config,
                                          const IntegratorSettings& settings, int samples);

/// lambda_1 = 0 exactly; for k >= 2 brackets by doubling from (pi N / R)^2 and bisects
/// theta_lambda(R) = (k-1) pi to relative width 1e-10. Throws NumericalError if the
/// bracket is not found within 60 doublings.
EigenResult eigenvalue(int k, const ProblemConfig& config, const IntegratorSettings& settings);

/// Convenience: lambda_1 .. lambda_k.
std::vector<EigenResult> eigenvalues(int k_max, const ProblemConfig& config,
                                     const IntegratorSettings& settings);

}  // namespace lmshoot
