#include "loopflow/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "loopflow/friction.hpp"
#include "loopflow/solver.hpp"

namespace loopflow {

namespace {

constexpr double kFeasibilityTolerance = 1e-6 / kSecondsPerHour;
constexpr double kMinDerivativeSum = 1e-30;
constexpr double kStallTolerance = 1e-15;  // m

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double dF_ddiameter_gas(double relative_density, double length, double flow, double diameter) {
    if (!(diameter > 0.0)) throw std::domain_error("dF_ddiameter_gas: diameter must be positive");
    if (flow <= 0.0) return 0.0;
    return -4.82 * 4810.0 * std::pow(flow, 1.82) * length * relative_density / std::pow(diameter, 5.82);
}

double dF_ddiameter_water(double lambda, double length, double flow, double diameter, double density) {
    if (!(diameter > 0.0)) throw std::domain_error("dF_ddiameter_water: diameter must be positive");
    return -5.0 * 8.0 * density * lambda * length * flow * flow /
           (std::numbers::pi * std::numbers::pi * std::pow(diameter, 6));
}

std::string to_string(SizingTermination t) {
    switch (t) {
        case SizingTermination::converged: return "converged";
        case SizingTermination::max_iterations: return "max-iterations";
        case SizingTermination::infeasible: return "infeasible";
    }
    return "unknown";
}

VelocityBand classify_gas_velocity(double velocity) {
    if (velocity < 10.0) return VelocityBand::below;
    if (velocity > 15.0) return VelocityBand::above;
    return VelocityBand::within;
}

std::string to_string(VelocityBand band) {
    switch (band) {
        case VelocityBand::below: return "below";
        case VelocityBand::within: return "within";
        case VelocityBand::above: return "above";
    }
    return "unknown";
}

double SizingReport::final_max_residual() const {
    double m = 0.0;
    if (!loop_residuals.empty())
        for (double r : loop_residuals.back()) m = std::max(m, r);
    return m;
}

SizingReport optimize_diameters(const Network& net, const LoopBasis& basis, const SizingConfig& config) {
    if (auto violations = validate(net); !violations.empty()) throw ValidationError(std::move(violations));
    if (config.max_iterations < 1) throw std::invalid_argument("optimize_diameters: max_iterations must be at least 1");
    if (config.fixed_flows.flows.size() != net.pipe_count())
        throw std::invalid_argument("optimize_diameters: fixed flow vector size mismatch");
    if (max_node_imbalance(net, config.fixed_flows) > kFeasibilityTolerance)
        throw std::invalid_argument("optimize_diameters: fixed flows violate node balances");
    if (basis.signs.cols() != static_cast<Eigen::Index>(net.pipe_count()))
        throw std::invalid_argument("optimize_diameters: loop basis does not match the network");

    const std::size_t np = net.pipe_count();
    std::vector<DiameterBounds> bounds(np, config.bounds);
    for (const auto& [id, b] : config.pipe_bounds) {
        auto idx = net.pipe_index(id);
        if (!idx) throw std::invalid_argument("optimize_diameters: bounds given for unknown pipe " + std::to_string(id.value));
        bounds[*idx] = b;
    }
    for (const auto& b : bounds)
        if (!(b.lower > 0.0) || !(b.lower < b.upper))
            throw std::invalid_argument("optimize_diameters: bounds must satisfy 0 < lower < upper");

    const auto model = make_fluid_model(net.fluid());
    const auto& q = config.fixed_flows.flows;

    SizingReport report;
    report.residual_tolerance = config.residual_tolerance.value_or(default_residual_tolerance(net.fluid().kind));

    std::vector<bool> in_loop(np, false);
    for (Eigen::Index l = 0; l < basis.signs.rows(); ++l)
        for (Eigen::Index p = 0; p < basis.signs.cols(); ++p)
            if (basis.signs(l, p) != 0) in_loop[static_cast<std::size_t>(p)] = true;
    for (std::size_t p = 0; p < np; ++p)
        if (!in_loop[p]) report.unconstrained_pipes.push_back(net.pipes()[p].id);

    std::vector<double> d(np);
    for (std::size_t p = 0; p < np; ++p) {
        d[p] = net.pipes()[p].diameter;
        if (in_loop[p]) d[p] = std::clamp(d[p], bounds[p].lower, bounds[p].upper);
    }

    auto residuals = [&](const std::vector<double>& diam) {
        std::vector<double> sums(basis.size(), 0.0);
        for (Eigen::Index l = 0; l < basis.signs.rows(); ++l) {
            double s = 0.0;
            for (Eigen::Index p = 0; p < basis.signs.cols(); ++p) {
                const int sign = basis.signs(l, p);
                if (sign == 0) continue;
                const auto pi = static_cast<std::size_t>(p);
                Pipe pipe = net.pipes()[pi];
                pipe.diameter = diam[pi];
                s += sign * sign_of(q[pi]) * model->evaluate(pipe, q[pi]).F;
            }
            sums[static_cast<std::size_t>(l)] = s;
        }
        return sums;
    };
    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    auto abs_all = [](std::vector<double> v) {
        for (double& x : v) x = std::abs(x);
        return v;
    };

    std::vector<double> sums = residuals(d);
    report.diameter_trace.push_back(d);
    report.loop_residuals.push_back(abs_all(sums));

    bool stalled = false;
    if (max_abs(sums) <= report.residual_tolerance) {
        report.termination = SizingTermination::converged;
    } else {
        for (int k = 0; k < config.max_iterations; ++k) {
            std::vector<double> slope(np, 0.0);  // |dF/dd| per pipe
            for (std::size_t p = 0; p < np; ++p) {
                if (!in_loop[p]) continue;
                Pipe pipe = net.pipes()[p];
                pipe.diameter = d[p];
                slope[p] = std::abs(model->dF_ddiameter(pipe, q[p]));
            }
            std::vector<double> change(np, 0.0);
            for (Eigen::Index l = 0; l < basis.signs.rows(); ++l) {
                double denom = 0.0;
                for (Eigen::Index p = 0; p < basis.signs.cols(); ++p)
                    if (basis.signs(l, p) != 0) denom += slope[static_cast<std::size_t>(p)];
                if (denom < kMinDerivativeSum) continue;
                // F falls as the diameter grows, so a positive loop sum is
                // reduced by widening the pipes that contribute positively.
                const double delta = sums[static_cast<std::size_t>(l)] / denom;
                for (Eigen::Index p = 0; p < basis.signs.cols(); ++p) {
                    const int sign = basis.signs(l, p);
                    if (sign == 0) continue;
                    const auto pi = static_cast<std::size_t>(p);
                    change[pi] += sign * sign_of(q[pi]) * delta;
                }
            }
            double moved = 0.0;
            for (std::size_t p = 0; p < np; ++p) {
                if (!in_loop[p]) continue;
                const double cap = config.max_relative_step * d[p];
                const double step = std::clamp(change[p], -cap, cap);
                const double next = std::clamp(d[p] + step, bounds[p].lower, bounds[p].upper);
                moved = std::max(moved, std::abs(next - d[p]));
                d[p] = next;
            }
            sums = residuals(d);
            report.diameter_trace.push_back(d);
            report.loop_residuals.push_back(abs_all(sums));
            if (max_abs(sums) <= report.residual_tolerance) {
                report.termination = SizingTermination::converged;
                break;
            }
            if (moved < kStallTolerance) {
                stalled = true;
                break;
            }
        }
    }

    for (std::size_t p = 0; p < np; ++p) {
        if (!in_loop[p]) continue;
        if (d[p] <= bounds[p].lower || d[p] >= bounds[p].upper) report.pipes_at_bound.push_back(net.pipes()[p].id);
    }
    if (report.termination != SizingTermination::converged && (stalled || !report.pipes_at_bound.empty()))
        report.termination = SizingTermination::infeasible;

    report.diameters = d;
    report.velocities.resize(np);
    for (std::size_t p = 0; p < np; ++p) report.velocities[p] = velocity(net.fluid(), std::abs(q[p]), d[p]);
    return report;
}

}  // namespace loopflow
