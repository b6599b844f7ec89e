#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowlab/field_model.hpp"

namespace flowlab {

struct IntegratorOptions {
  double blow_up_radius = 1e6;  // particles beyond this are frozen and flagged
  int substeps = 1;             // RK4 sub-intervals per stored grid interval
  bool track_logs = true;       // integrate log-Jacobian and log-density too
};

// Particle trajectories with log J X(t,x) and log u_t(X(t,x)) along each
// path. log_density(t) = -int_0^t div_gamma b_tau(X(tau, x)) dtau, so the
// transported density at X(t,x) is exp(log_density). Frozen (dead) particles
// keep their last valid state for all later grid nodes.
struct FlowTrajectoryBatch {
  int dim = 0;
  std::vector<double> time_grid;
  std::vector<double> positions;     // [particle][time][coordinate]
  std::vector<double> log_jacobian;  // [particle][time]
  std::vector<double> log_density;   // [particle][time]
  std::vector<std::uint8_t> alive;
  std::vector<long> frozen_at;       // grid index at freeze, -1 otherwise

  std::size_t particles() const { return alive.size(); }
  std::size_t nodes() const { return time_grid.size(); }
  std::span<const double> position(std::size_t k, std::size_t ti) const;
  double logj(std::size_t k, std::size_t ti) const;
  double logu(std::size_t k, std::size_t ti) const;
  std::size_t dead_count() const;
};

std::vector<double> uniform_grid(double t0, double t1, int steps);

// RK4 on dX/dt = b_t(X) with the two log-scalars advanced by the same
// stages. initial is flat [particle][coordinate]; the grid may start at any
// time s (flows from intermediate times just pass a grid on [s, T]).
FlowTrajectoryBatch integrate_flow(const FieldSpec& f, std::span<const double> initial,
                                   std::span<const double> time_grid,
                                   IntegratorOptions opts = {});
// Same, with count i.i.d. gamma samples (sub-seeded stream "flow.particles").
FlowTrajectoryBatch integrate_flow(const FieldSpec& f, std::size_t count, std::uint64_t seed,
                                   std::span<const double> time_grid,
                                   IntegratorOptions opts = {});

FlowTrajectoryBatch flow_from_time(const FieldSpec& f, double s,
                                   std::span<const double> initial,
                                   std::span<const double> grid_from_s,
                                   IntegratorOptions opts = {});

struct DensityEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t dead_count = 0;  // dead particles contribute frozen values
};
// Estimates int u_t^r dgamma through the pullback identity
// int (u_t o X)^{r-1} dgamma; valid when the batch started from gamma samples.
DensityEstimate density_lr_norm(const FlowTrajectoryBatch& batch, double r,
                                std::size_t t_index);

struct ExpBound {
  double value = 0.0;  // +inf when the guard trips
  double arg_time = 0.0;
  bool overflow = false;
  double overflow_time = 0.0;
  Vec overflow_point;
};
// max over time_nodes of int exp(T r [div_gamma b_t]^-) dgamma.
ExpBound divergence_exp_bound(const FieldSpec& f, double r, const QuadratureScheme& quad,
                              std::span<const double> time_nodes);

struct DensityBoundReport {
  double r = 0.0;
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> std_error;
  double rhs = 0.0;
  bool rhs_finite = true;
  std::vector<double> margin;  // rhs - lhs per node
  bool pass = false;
  std::size_t dead_count = 0;
};
DensityBoundReport check_density_bound(const FieldSpec& f, double r, std::size_t particles,
                                       std::span<const double> time_grid,
                                       const QuadratureScheme& quad, std::uint64_t seed,
                                       IntegratorOptions opts = {});

// MC estimate of int |X^s(t, X^r(s, x)) - X^r(t, x)| dgamma. Every segment
// is integrated with steps_per_segment uniform RK4 steps of its own, so the
// chained and the direct routes do not share step sequences.
double semigroup_discrepancy(const FieldSpec& f, double r, double s, double t,
                             std::size_t particles, std::uint64_t seed,
                             int steps_per_segment = 32, IntegratorOptions opts = {});

struct RotatedFlowResult {
  FlowTrajectoryBatch batch;             // X(t,x) = Q_t Y(t,x)
  std::vector<double> duhamel_residual;  // per node: mean |X - Q_t x - int Q_{t-s} b_s(X) ds|
};
// Solves dX = L X + b_t(X) through the transform Y = Q_{-t} X.
RotatedFlowResult rotated_flow_solve(const FieldSpec& f, const RotationGroup& g,
                                     std::span<const double> initial,
                                     std::span<const double> time_grid,
                                     IntegratorOptions opts = {});

// Normative CSV schema: particle_id, t, x_1..x_N, log_jacobian, log_density, alive.
void export_trajectories_csv(const FlowTrajectoryBatch& batch, std::ostream& os);
void export_trajectories_csv(const FlowTrajectoryBatch& batch, const std::string& path);

}  // namespace flowlab
