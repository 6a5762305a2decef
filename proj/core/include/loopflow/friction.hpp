#pragma once

#include <memory>
#include <stdexcept>

#include "loopflow/network.hpp"

namespace loopflow {

// All functions here take flow magnitudes (m^3/s, >= 0); the solvers apply
// direction signs. Invalid geometry raises std::domain_error.

/// Renouard pseudo-pressure drop p1^2 - p2^2 for distribution gas, Pa^2.
double renouard_F(double relative_density, double length, double flow, double diameter);
/// dF/dQ of renouard_F, Pa^2*s/m^3. Equals 1.82 F / Q for Q > 0.
double renouard_dF(double relative_density, double length, double flow, double diameter);

double reynolds(double density, double viscosity, double flow, double diameter);

class ColebrookError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Darcy friction factor from the implicit Colebrook-White relation, solved
/// by fixed-point iteration on x = 1/sqrt(lambda). Intended for Re >= 4000;
/// throws ColebrookError if the iteration does not settle.
double colebrook_lambda(double reynolds, double relative_roughness);

/// Residual of the Colebrook-White relation in 1/sqrt(lambda) space.
double colebrook_residual(double lambda, double reynolds, double relative_roughness);

inline constexpr double kLaminarReynolds = 2300.0;
inline constexpr double kTurbulentReynolds = 4000.0;

/// Friction factor over all regimes: 64/Re below 2300, Colebrook-White from
/// 4000 up, and a linear blend of the two in between. Zero at Re = 0.
double friction_factor(double reynolds, double relative_roughness);

/// Darcy-Weisbach pressure drop, Pa.
double darcy_weisbach_F(double lambda, double length, double flow, double diameter, double density);
/// dF/dQ with lambda held fixed, Pa*s/m^3. Equals 2 F / Q for Q > 0.
double darcy_weisbach_dF(double lambda, double length, double flow, double diameter, double density);

/// Mean velocity, m/s. For gas `flow` is at normal conditions and is scaled
/// by p_n / p_a; for water the ratio is 1.
double velocity(const FluidSpec& fluid, double flow, double diameter);

struct PipeEval {
    double F = 0.0;        // Pa^2 (gas) or Pa (water)
    double dF_dQ = 0.0;    // Pa^2*s/m^3 or Pa*s/m^3
    double lambda = 0.0;   // water only
    double reynolds = 0.0; // water only
};

/// Pressure-function evaluator for one fluid.
class FluidModel {
public:
    virtual ~FluidModel() = default;

    /// F and dF/dQ at flow magnitude |flow|, for the pipe's current diameter.
    virtual PipeEval evaluate(const Pipe& pipe, double flow) const = 0;
    /// dF/d(diameter) at fixed flow magnitude (water: lambda frozen).
    virtual double dF_ddiameter(const Pipe& pipe, double flow) const = 0;

    virtual FluidKind kind() const = 0;
};

class GasModel final : public FluidModel {
public:
    explicit GasModel(double relative_density) : relative_density_(relative_density) {}
    PipeEval evaluate(const Pipe& pipe, double flow) const override;
    double dF_ddiameter(const Pipe& pipe, double flow) const override;
    FluidKind kind() const override { return FluidKind::gas; }

private:
    double relative_density_;
};

class WaterModel final : public FluidModel {
public:
    WaterModel(double density, double viscosity) : density_(density), viscosity_(viscosity) {}
    PipeEval evaluate(const Pipe& pipe, double flow) const override;
    double dF_ddiameter(const Pipe& pipe, double flow) const override;
    FluidKind kind() const override { return FluidKind::water; }

private:
    double density_;
    double viscosity_;
};

std::unique_ptr<FluidModel> make_fluid_model(const FluidSpec& fluid);

}  // namespace loopflow
