#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/wave_solver.hpp"

namespace beamlab {

using MultiIndex = std::vector<int>;

int total_order(const MultiIndex& b);
double multi_factorial(const MultiIndex& b);

// Product of one-dimensional central rules, one per parameter.
struct EpsilonStencil {
  struct Node {
    std::vector<double> eps;  // parameter values
    double weight = 0.0;
  };
  MultiIndex orders;
  std::vector<double> steps;
  std::vector<Node> nodes;

  int total_order() const { return beamlab::total_order(orders); }
  // sum_nodes w * p(eps)
  double apply(const std::function<double(const std::vector<double>&)>& p) const;
  EpsilonStencil halved() const;
  nlohmann::json to_json() const;
};

// Central rule of order-2 accuracy for the n-th derivative: nodes -ceil(n/2)..ceil(n/2)
// (zero dropped for odd n), weights from the Vandermonde system.
std::vector<std::pair<int, double>> central_rule(int n);

EpsilonStencil make_stencil(const MultiIndex& orders, const std::vector<double>& steps);
EpsilonStencil make_stencil(const MultiIndex& orders, double step);

struct MixedDerivativeOptions {
  SemilinearOptions solver;
  int workers = 0;
  int max_order = 6;
  double max_ratio = 0.5;       // smallness: contraction ratio bound at every node
  bool halving_check = false;   // repeat with eps/2 and compare
  double halving_tolerance = 0.2;
};

struct MixedDerivativeResult {
  BoundaryTrace trace;
  std::vector<double> node_ratios;
  double halving_disagreement = -1.0;  // relative L2 difference, when checked
};

// Approximates d^beta/d eps^beta of Lambda(sum eps_i f_i) at 0.
MixedDerivativeResult mixed_derivative_ndmap(const WarpedMetric& g, const SpacetimeGrid& grid,
                                             const NonlinearityProfile& H, const std::vector<NeumannSource>& sources,
                                             const EpsilonStencil& stencil, const MixedDerivativeOptions& opt = {});

// One summand of the forcing of U_beta: coefficient * h_k * prod U_{factors}.
struct ForcingTerm {
  int k = 2;
  std::vector<MultiIndex> factors;
  double coefficient = 0.0;
};

// Forcing recipe of U_beta = d^beta u at eps = 0, from formal differentiation of
// Box u + sum_k h_k u^k = 0 with u = sum_gamma U_gamma eps^gamma / gamma!.
std::vector<ForcingTerm> forcing_recipe(const MultiIndex& beta, int max_k);
nlohmann::json recipe_to_json(const MultiIndex& beta, const std::vector<ForcingTerm>& recipe);

struct CascadeTerm {
  MultiIndex index;
  FieldSolution field;
  std::vector<ForcingTerm> recipe;
  std::vector<double> forcing;  // full spacetime field (zero off the supports)
};

// All terms U_gamma for 0 < gamma <= beta, ordered by total order.
struct CascadeSeries {
  std::vector<CascadeTerm> terms;
  const CascadeTerm& at(const MultiIndex& gamma) const;
  const CascadeTerm* find(const MultiIndex& gamma) const;
};

// Maximum total order supported by the cascade.
constexpr int kMaxCascadeOrder = 6;

CascadeSeries cascade_series(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                             const std::vector<NeumannSource>& sources, const MultiIndex& beta, int workers = 1);
CascadeTerm cascade_solve(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                          const std::vector<NeumannSource>& sources, const MultiIndex& beta);

// Forcing of U_beta assembled from lower terms of a series (the top term may be absent).
std::vector<double> assemble_forcing(const SpacetimeGrid& grid, const std::vector<SampledCoefficient>& Hs,
                                     const CascadeSeries& series, const MultiIndex& beta,
                                     const std::vector<ForcingTerm>& recipe);

// -int F_beta[H_known] v0 dV: the part of <d^beta Lambda, f0> carried by the known coefficients.
double known_correction(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H_known,
                        const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                        const std::vector<double>& v0);

// Order-3 identity with known h2 (profile holding h2 only).
double correction_term(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& h2,
                       const std::vector<NeumannSource>& sources, const std::vector<double>& v0);

// Order N >= 4 identity; `known` holds h_2 .. h_{N-1} at indices 2 .. N-1.
double higher_correction_term(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& known,
                              const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                              const std::vector<double>& v0);

}  // namespace beamlab
