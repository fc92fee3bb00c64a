#include "lmshoot/spectrum.hpp"

#include "lmshoot/errors.hpp"

#include <numbers>
#include <string>

namespace lmshoot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxDoublings = 60;
constexpr double kBisectionRelWidth = 1e-10;

template <typename Observer>
double integrate_pruefer(double lambda, const ProblemConfig& config,
                         const IntegratorSettings& settings, Observer&& on_step) {
    const int n = config.dimension;
    const double radius = config.radius;
    const double r_start = settings.resolved_r_start(radius);
    auto rhs = [&](double r, const State<1>& y) -> State<1> {
        const double w = radial_weight(r, n);
        const double s = std::sin(y[0]);
        const double c = std::cos(y[0]);
        return {s * s / w + lambda * w * c * c};
    };
    StepControl ctl;
    ctl.rtol = settings.rtol;
    ctl.atol = settings.atol;
    ctl.max_steps = settings.max_steps;
    State<1> end{};
    const State<1> start{lambda * radial_weight(r_start, n) * r_start / n};
    integrate_dopri5<1>(rhs, r_start, start, radius, ctl, [&](const AcceptedStep<1>& step) {
        on_step(step);
        end = step.y1;
    });
    return end[0];
}

void check_inputs(double lambda, const ProblemConfig& config, const IntegratorSettings& settings) {
    config.validate();
    settings.validate(config.radius);
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ValidationError("lambda must be finite and >= 0, got " + std::to_string(lambda));
    }
}

}  // namespace

double pruefer_angle_at_R(double lambda, const ProblemConfig& config,
                          const IntegratorSettings& settings) {
    check_inputs(lambda, config, settings);
    if (lambda == 0.0) return 0.0;
    return integrate_pruefer(lambda, config, settings, [](const AcceptedStep<1>&) {});
}

std::vector<double> pruefer_angle_profile(double lambda, const ProblemConfig& config,
                                          const IntegratorSettings& settings, int samples) {
    check_inputs(lambda, config, settings);
    if (samples < 1) throw ValidationError("samples must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(samples) + 1, 0.0);
    if (lambda == 0.0) return out;
    const double radius = config.radius;
    const double r_start = settings.resolved_r_start(radius);
    const int n = config.dimension;
    std::size_t next = 1;
    auto node = [&](std::size_t i) { return radius * static_cast<double>(i) / samples; };
    while (next < out.size() && node(next) < r_start) {
        out[next] = lambda * radial_weight(node(next), n) * node(next) / n;
        ++next;
    }
    integrate_pruefer(lambda, config, settings, [&](const AcceptedStep<1>& step) {
        while (next < out.size() && (node(next) <= step.x1 || next + 1 == out.size())) {
            if (next + 1 == out.size() && step.x1 < radius) break;
            out[next] = node(next) >= step.x1 ? step.y1[0] : step.interpolate(node(next))[0];
            ++next;
        }
    });
    return out;
}

EigenResult eigenvalue(int k, const ProblemConfig& config, const IntegratorSettings& settings) {
    if (k < 1) throw ValidationError("eigenvalue index k must be >= 1");
    check_inputs(0.0, config, settings);
    EigenResult res;
    res.k = k;
    if (k == 1) return res;

    const double target = (k - 1) * kPi;
    auto angle = [&](double lambda) { return pruefer_angle_at_R(lambda, config, settings); };
    const double window = kPi * config.dimension / config.radius;
    double lo = 0.0;
    double hi = window * window;
    int doublings = 0;
    while (angle(hi) <= target) {
        if (++doublings > kMaxDoublings) {
            throw NumericalError("eigenvalue bracket not found for k = " + std::to_string(k));
        }
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > kBisectionRelWidth * hi) {
        const double mid = 0.5 * (lo + hi);
        (angle(mid) <= target ? lo : hi) = mid;
    }
    res.lambda = 0.5 * (lo + hi);
    res.angle_residual = std::abs(angle(res.lambda) - target);
    return res;
}

std::vector<EigenResult> eigenvalues(int k_max, const ProblemConfig& config,
                                     const IntegratorSettings& settings) {
    std::vector<EigenResult> out;
    for (int k = 1; k <= k_max; ++k) out.push_back(eigenvalue(k, config, settings));
    return out;
}

}  // namespace lmshoot
