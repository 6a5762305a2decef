#include "loopflow/friction.hpp"

#include <cmath>
#include <numbers>

#include "loopflow/sizing.hpp"

namespace loopflow {

namespace {

constexpr double kRenouardCoefficient = 4810.0;
constexpr double kRenouardFlowExponent = 1.82;
constexpr double kRenouardDiameterExponent = 4.82;

constexpr int kColebrookMaxIterations = 100;
constexpr double kColebrookTolerance = 1e-12;

void require_positive_diameter(double diameter, const char* fn) {
    if (!(diameter > 0.0)) throw std::domain_error(std::string(fn) + ": diameter must be positive");
}

}  // namespace

double renouard_F(double relative_density, double length, double flow, double diameter) {
    require_positive_diameter(diameter, "renouard_F");
    if (flow <= 0.0) return 0.0;
    return kRenouardCoefficient * relative_density * length * std::pow(flow, kRenouardFlowExponent) /
           std::pow(diameter, kRenouardDiameterExponent);
}

double renouard_dF(double relative_density, double length, double flow, double diameter) {
    require_positive_diameter(diameter, "renouard_dF");
    if (flow <= 0.0) return 0.0;
    return kRenouardFlowExponent * kRenouardCoefficient * relative_density * length *
           std::pow(flow, kRenouardFlowExponent - 1.0) / std::pow(diameter, kRenouardDiameterExponent);
}

double reynolds(double density, double viscosity, double flow, double diameter) {
    require_positive_diameter(diameter, "reynolds");
    if (!(viscosity > 0.0)) throw std::domain_error("reynolds: viscosity must be positive");
    return 4.0 * density * flow / (std::numbers::pi * diameter * viscosity);
}

double colebrook_residual(double lambda, double reynolds, double relative_roughness) {
    const double x = 1.0 / std::sqrt(lambda);
    return x + 2.0 * std::log10(2.51 * x / reynolds + relative_roughness / 3.71);
}

double colebrook_lambda(double reynolds, double relative_roughness) {
    if (!(reynolds > 0.0)) throw std::domain_error("colebrook_lambda: Reynolds number must be positive");
    if (relative_roughness < 0.0) throw std::domain_error("colebrook_lambda: negative relative roughness");
    // smooth-pipe starting point
    double x = 1.8 * std::log10(reynolds / 6.9);
    if (!(x > 0.0)) x = 1.0;
    for (int i = 0; i < kColebrookMaxIterations; ++i) {
        const double next = -2.0 * std::log10(2.51 * x / reynolds + relative_roughness / 3.71);
        if (!std::isfinite(next) || next <= 0.0) break;
        if (std::abs(next - x) <= kColebrookTolerance * std::max(1.0, std::abs(next))) return 1.0 / (next * next);
        x = next;
    }
    throw ColebrookError("colebrook_lambda: no convergence at Re = " + std::to_string(reynolds));
}

double friction_factor(double reynolds, double relative_roughness) {
    if (reynolds <= 0.0) return 0.0;
    if (reynolds < kLaminarReynolds) return 64.0 / reynolds;
    if (reynolds >= kTurbulentReynolds) return colebrook_lambda(reynolds, relative_roughness);
    const double t = (reynolds - kLaminarReynolds) / (kTurbulentReynolds - kLaminarReynolds);
    return (1.0 - t) * 64.0 / reynolds + t * colebrook_lambda(reynolds, relative_roughness);
}

double darcy_weisbach_F(double lambda, double length, double flow, double diameter, double density) {
    require_positive_diameter(diameter, "darcy_weisbach_F");
    return lambda * length / std::pow(diameter, 5) * 8.0 * flow * flow / (std::numbers::pi * std::numbers::pi) *
           density;
}

double darcy_weisbach_dF(double lambda, double length, double flow, double diameter, double density) {
    require_positive_diameter(diameter, "darcy_weisbach_dF");
    return lambda * length / std::pow(diameter, 5) * 16.0 * flow / (std::numbers::pi * std::numbers::pi) * density;
}

double velocity(const FluidSpec& fluid, double flow, double diameter) {
    require_positive_diameter(diameter, "velocity");
    return 4.0 * fluid.pressure_ratio() * flow / (diameter * diameter * std::numbers::pi);
}

PipeEval GasModel::evaluate(const Pipe& pipe, double flow) const {
    const double q = std::abs(flow);
    return {renouard_F(relative_density_, pipe.length, q, pipe.diameter),
            renouard_dF(relative_density_, pipe.length, q, pipe.diameter), 0.0, 0.0};
}

double GasModel::dF_ddiameter(const Pipe& pipe, double flow) const {
    return dF_ddiameter_gas(relative_density_, pipe.length, std::abs(flow), pipe.diameter);
}

PipeEval WaterModel::evaluate(const Pipe& pipe, double flow) const {
    const double q = std::abs(flow);
    PipeEval e;
    e.reynolds = reynolds(density_, viscosity_, q, pipe.diameter);
    e.lambda = friction_factor(e.reynolds, pipe.roughness / pipe.diameter);
    e.F = darcy_weisbach_F(e.lambda, pipe.length, q, pipe.diameter, density_);
    e.dF_dQ = darcy_weisbach_dF(e.lambda, pipe.length, q, pipe.diameter, density_);
    return e;
}

double WaterModel::dF_ddiameter(const Pipe& pipe, double flow) const {
    const double q = std::abs(flow);
    const double re = reynolds(density_, viscosity_, q, pipe.diameter);
    const double lambda = friction_factor(re, pipe.roughness / pipe.diameter);
    return dF_ddiameter_water(lambda, pipe.length, q, pipe.diameter, density_);
}

std::unique_ptr<FluidModel> make_fluid_model(const FluidSpec& fluid) {
    if (fluid.kind == FluidKind::gas) return std::make_unique<GasModel>(fluid.relative_density);
    return std::make_unique<WaterModel>(fluid.density, fluid.viscosity);
}

}  // namespace loopflow
