#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/beams.hpp"
#include "beamlab/io.hpp"
#include "beamlab/linearization.hpp"

namespace beamlab {

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Null covector at p with spatial direction dir (normalized), future pointing.
Vec null_covector(const WarpedMetric& g, const Vec& p, const Vec& dir);

struct RiccatiCheck {
  double drift = 0.0;  // at the working step
  double coarse_drift = 0.0, fine_drift = 0.0;
  double halving_order = 0.0;      // log2(coarse / fine)
  double flat_deviation = -1.0;    // max |H - closed form|, flat metrics only
  double min_imag_eig = 0.0;
  double symmetry_defect = 0.0;
  double seconds = 0.0;
  nlohmann::json to_json() const;
};

// Riccati invariants along the geodesic through p with covector xi.  The halving order is
// read at coarse steps because the drift is at round-off for the working step.
RiccatiCheck riccati_check(const WarpedMetric& g, const Vec& p, const Vec& xi, const CMat& H0, double step = 1e-3,
                           double coarse_step = 0.02);

// Interaction-sum table over (r0, varsigma) with the 3 / (4 b^2) target.
CsvTable covector_table(const std::vector<double>& r0s, const std::vector<double>& varsigmas);

struct SlopeStudy {
  int order = 2;
  std::vector<double> rho, norm;
  double slope = 0.0;
  double target = 0.0;
  double seconds = 0.0;
  CsvTable csv() const;
};

// -((N + 1) / 2 - 1)
double residual_slope_target(int order);

struct SlopeOptions {
  double delta = 0.6;
  double window = 0.1;  // tau half-window of the residual integral
  int tau_points = 9;
  double points_per_width = 4.0;
  bool core_only = true;
};

// ||Box_g u_rho||_{L2} for H0 = iI beams through p along xi.
SlopeStudy residual_slope_study(const WarpedMetric& g, const Vec& p, const Vec& xi, int order,
                                const std::vector<double>& rhos, const SlopeOptions& opt = {});

struct OrderStudy {
  std::vector<int> cells;
  std::vector<double> error;
  double order = 0.0;  // from the two finest grids
  double seconds = 0.0;
  CsvTable csv(const std::string& schema) const;
};

// u = cos(pi x^1) ... cos(pi x^n) cos(omega t) with the forcing Box_g u; max error at t = T.
OrderStudy manufactured_study(const WarpedMetric& g, const std::vector<int>& cells, double horizon = 0.5,
                              double omega = 2.0);

// Defect of <f, v> = <u, h> (u forward from f, v backward from h) under the face-midpoint pairing.
OrderStudy reciprocity_study(const WarpedMetric& g, const std::vector<int>& cells, double horizon = 1.0);

// Smooth boundary pulse on one face centred at (t0, s0) in (time, first face coordinate).
NeumannSource pulse_source(const SpacetimeGrid& grid, int face, double t0, double s0, double width2 = 0.01);

struct PicardStudy {
  double scale = 0.0;  // amplitude applied to the source shape
  std::vector<double> distances, ratios;
  int iterations = 0;
  double max_ratio = 0.0;
  bool geometric = false;  // every distance below max_ratio times the previous one, over >= 5 steps
  double seconds = 0.0;
  CsvTable csv() const;
};

// Runs the Picard iteration at `fraction` of the smallness threshold for ratio 0.5.
PicardStudy picard_study(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                         const NeumannSource& shape, double fraction = 0.5, int min_iterations = 6);

struct LinearizationCheck {
  double relative_difference = 0.0;  // ||FD - cascade||_2 / ||cascade||_2 on the boundary trace
  double max_node_ratio = 0.0;
  double seconds = 0.0;
  nlohmann::json to_json() const;
};

LinearizationCheck linearization_check(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                                       const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                                       double eps = 1e-3, int workers = 0);

}  // namespace beamlab
