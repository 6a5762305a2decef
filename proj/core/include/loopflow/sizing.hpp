#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loopflow/network.hpp"
#include "loopflow/topology.hpp"

namespace loopflow {

/// dF/d(diameter) of the Renouard relation at fixed flow, Pa^2/m (<= 0).
double dF_ddiameter_gas(double relative_density, double length, double flow, double diameter);
/// dF/d(diameter) of Darcy-Weisbach at fixed flow and friction factor, Pa/m (<= 0).
double dF_ddiameter_water(double lambda, double length, double flow, double diameter, double density);

struct DiameterBounds {
    double lower = 0.01;  // m
    double upper = 2.0;   // m
};

struct SizingConfig {
    DiameterBounds bounds;                          // applies to pipes without an override
    std::map<PipeId, DiameterBounds> pipe_bounds;
    std::optional<double> residual_tolerance;       // fluid default if unset
    int max_iterations = 200;
    double max_relative_step = 0.5;                 // per-iteration cap on |change| / diameter
    FlowState fixed_flows;
};

enum class SizingTermination { converged, max_iterations, infeasible };
std::string to_string(SizingTermination t);

enum class VelocityBand { below, within, above };
/// Advisory classification against the 10-15 m/s band recommended for gas.
VelocityBand classify_gas_velocity(double velocity);
std::string to_string(VelocityBand band);

struct SizingReport {
    std::vector<double> diameters;                    // m, pipe order
    std::vector<std::vector<double>> diameter_trace;  // per iteration, initial first
    std::vector<std::vector<double>> loop_residuals;  // |sum F| per loop, per iteration
    SizingTermination termination = SizingTermination::max_iterations;
    std::vector<PipeId> unconstrained_pipes;          // in no loop; left at input diameter
    std::vector<PipeId> pipes_at_bound;               // clamped at exit
    std::vector<double> velocities;                   // m/s with the final diameters
    double residual_tolerance = 0.0;

    int iteration_count() const { return static_cast<int>(diameter_trace.size()) - 1; }
    double final_max_residual() const;
};

/// Inverse problem: flows are held at config.fixed_flows and diameters are
/// corrected loop by loop (Hardy Cross style) until every loop balances.
/// Each loop's correction is sum F / sum |dF/dd| and is applied to member
/// pipes with sign s * sign(Q); shared pipes collect every loop's share.
/// Diameters are clamped to their bounds after each step.
///
/// Throws ValidationError for an invalid network and std::invalid_argument
/// for bad bounds or flows that violate node balances.
SizingReport optimize_diameters(const Network& net, const LoopBasis& basis, const SizingConfig& config);

}  // namespace loopflow
