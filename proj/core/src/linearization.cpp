#include "beamlab/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "beamlab/error.hpp"
#include "beamlab/parallel.hpp"

namespace beamlab {

int total_order(const MultiIndex& b) {
  int s = 0;
  for (int v : b) s += v;
  return s;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::string index_string(const MultiIndex& b) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < b.size(); ++i) os << (i ? "," : "") << b[i];
  os << ')';
  return os.str();
}

// nonzero gamma <= beta, sorted by total order then lexicographically
std::vector<MultiIndex> sub_indices(const MultiIndex& beta) {
  std::vector<MultiIndex> out;
  MultiIndex g(beta.size(), 0);
  while (true) {
    if (total_order(g) > 0) out.push_back(g);
    size_t i = 0;
    while (i < g.size() && g[i] == beta[i]) g[i++] = 0;
    if (i == g.size()) break;
    ++g[i];
  }
  std::stable_sort(out.begin(), out.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const int ta = total_order(a), tb = total_order(b);
    return ta != tb ? ta < tb : a < b;
  });
  return out;
}

}  // namespace

double multi_factorial(const MultiIndex& b) {
  double f = 1.0;
  for (int v : b) f *= factorial(v);
  return f;
}

std::vector<std::pair<int, double>> central_rule(int n) {
  if (n < 0) throw DomainError("central_rule: negative order");
  if (n == 0) return {{0, 1.0}};
  std::vector<int> x;
  if (n % 2 == 0) {
    for (int j = -n / 2; j <= n / 2; ++j) x.push_back(j);
  } else {
    const int p = (n + 1) / 2;
    for (int j = -p; j <= p; ++j)
      if (j != 0) x.push_back(j);
  }
  const int m = static_cast<int>(x.size());
  Eigen::MatrixXd V(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int q = 0; q < m; ++q)
    for (int j = 0; j < m; ++j) V(q, j) = std::pow(static_cast<double>(x[j]), q);
  rhs[n] = factorial(n);
  const Eigen::VectorXd w = V.fullPivLu().solve(rhs);
  std::vector<std::pair<int, double>> out;
  for (int j = 0; j < m; ++j) out.emplace_back(x[j], w[j]);
  return out;
}

EpsilonStencil make_stencil(const MultiIndex& orders, const std::vector<double>& steps) {
  if (orders.empty() || orders.size() != steps.size()) throw DomainError("make_stencil: orders and steps differ in size");
  for (size_t i = 0; i < orders.size(); ++i)
    if (orders[i] < 0 || !(steps[i] > 0.0)) throw DomainError("make_stencil: invalid order or step");
  EpsilonStencil st;
  st.orders = orders;
  st.steps = steps;
  std::vector<std::vector<std::pair<int, double>>> rules;
  for (int n : orders) rules.push_back(central_rule(n));
  std::vector<size_t> pos(orders.size(), 0);
  while (true) {
    EpsilonStencil::Node node;
    node.weight = 1.0;
    for (size_t i = 0; i < orders.size(); ++i) {
      const auto& [x, w] = rules[i][pos[i]];
      node.eps.push_back(x * steps[i]);
      node.weight *= w / std::pow(steps[i], orders[i]);
    }
    st.nodes.push_back(std::move(node));
    size_t i = 0;
    while (i < pos.size() && ++pos[i] == rules[i].size()) pos[i++] = 0;
    if (i == pos.size()) break;
  }
  return st;
}

EpsilonStencil make_stencil(const MultiIndex& orders, double step) {
  return make_stencil(orders, std::vector<double>(orders.size(), step));
}

double EpsilonStencil::apply(const std::function<double(const std::vector<double>&)>& p) const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.weight * p(n.eps);
  return s;
}

EpsilonStencil EpsilonStencil::halved() const {
  std::vector<double> h = steps;
  for (auto& v : h) v *= 0.5;
  return make_stencil(orders, h);
}

nlohmann::json EpsilonStencil::to_json() const {
  nlohmann::json j;
  j["orders"] = orders;
  j["steps"] = steps;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes) j["nodes"].push_back({{"eps", n.eps}, {"weight", n.weight}});
  return j;
}

MixedDerivativeResult mixed_derivative_ndmap(const WarpedMetric& g, const SpacetimeGrid& grid,
                                             const NonlinearityProfile& H, const std::vector<NeumannSource>& sources,
                                             const EpsilonStencil& stencil, const MixedDerivativeOptions& opt) {
  const int N = stencil.total_order();
  if (sources.size() != stencil.orders.size()) throw DomainError("mixed_derivative_ndmap: one source per parameter");
  if (N > opt.max_order) throw DomainError("mixed_derivative_ndmap: order exceeds the configured maximum");
  for (const auto& f : sources)
    if (f.values.size() != grid.boundary_size()) throw DomainError("mixed_derivative_ndmap: source/grid mismatch");
  const auto Hs = sample_nonlinearity(grid, H);
  SemilinearOptions sopt = opt.solver;
  // iterate j is exact through order j + 1 in eps
  sopt.min_iterations = std::max(sopt.min_iterations, N + 1);

  const size_t nn = stencil.nodes.size();
  std::vector<BoundaryTrace> traces(nn);
  std::vector<double> ratios(nn, 0.0);
  parallel_for(
      nn,
      [&](size_t q) {
        const auto& node = stencil.nodes[q];
        NeumannSource f = NeumannSource::zero(grid);
        bool any = false;
        for (size_t i = 0; i < sources.size(); ++i) {
          if (node.eps[i] == 0.0) continue;
          any = true;
          for (size_t p = 0; p < f.values.size(); ++p) f.values[p] += node.eps[i] * sources[i].values[p];
        }
        if (!any) {
          traces[q].values.assign(grid.boundary_size(), 0.0);
          return;
        }
        const auto r = solve_semilinear(g, grid, Hs, f, sopt);
        ratios[q] = r.max_ratio();
        traces[q] = r.solution.trace;
      },
      opt.workers);

  MixedDerivativeResult res;
  res.node_ratios = ratios;
  for (size_t q = 0; q < nn; ++q)
    if (ratios[q] > opt.max_ratio) {
      std::ostringstream os;
      os << "mixed_derivative_ndmap: stencil node " << q << " outside the smallness threshold (ratio " << ratios[q]
         << ")";
      throw DomainError(os.str());
    }
  res.trace.values.assign(grid.boundary_size(), 0.0);
  for (size_t q = 0; q < nn; ++q) {
    const double w = stencil.nodes[q].weight;
    const auto& t = traces[q].values;
    for (size_t p = 0; p < t.size(); ++p) res.trace.values[p] += w * t[p];
  }

  if (opt.halving_check) {
    MixedDerivativeOptions o2 = opt;
    o2.halving_check = false;
    const auto half = mixed_derivative_ndmap(g, grid, H, sources, stencil.halved(), o2);
    double num = 0.0, den = 0.0;
    for (size_t p = 0; p < half.trace.values.size(); ++p) {
      const double d = half.trace.values[p] - res.trace.values[p];
      num += d * d;
      den += half.trace.values[p] * half.trace.values[p];
    }
    res.halving_disagreement = den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? 1.0 : 0.0);
    if (res.halving_disagreement > opt.halving_tolerance) {
      std::ostringstream os;
      os << "mixed_derivative_ndmap: step too large, halving changes the result by " << res.halving_disagreement;
      throw NumericalError(os.str());
    }
    res.trace = half.trace;
  }
  return res;
}

std::vector<ForcingTerm> forcing_recipe(const MultiIndex& beta, int max_k) {
  const int n = total_order(beta);
  std::vector<ForcingTerm> out;
  if (n < 2) return out;
  const auto parts = sub_indices(beta);
  const double bfac = multi_factorial(beta);
  for (int k = 2; k <= std::min(max_k, n); ++k) {
    // nondecreasing selections from `parts` of length k summing to beta
    std::vector<size_t> sel;
    MultiIndex acc(beta.size(), 0);
    std::function<void(size_t)> rec = [&](size_t start) {
      if (static_cast<int>(sel.size()) == k) {
        if (acc != beta) return;
        ForcingTerm t;
        t.k = k;
        double denom = 1.0;
        size_t run = 1;
        for (size_t j = 0; j < sel.size(); ++j) {
          t.factors.push_back(parts[sel[j]]);
          denom *= multi_factorial(parts[sel[j]]);
          if (j > 0 && sel[j] == sel[j - 1])
            denom *= static_cast<double>(++run);
          else
            run = 1;
        }
        t.coefficient = -bfac * factorial(k) / denom;
        out.push_back(std::move(t));
        return;
      }
      for (size_t j = start; j < parts.size(); ++j) {
        bool fits = true;
        for (size_t i = 0; i < beta.size(); ++i)
          if (acc[i] + parts[j][i] > beta[i]) fits = false;
        if (!fits) continue;
        // remaining slots need at least one unit each
        if (total_order(acc) + total_order(parts[j]) + static_cast<int>(k - sel.size() - 1) > n) continue;
        for (size_t i = 0; i < beta.size(); ++i) acc[i] += parts[j][i];
        sel.push_back(j);
        rec(j);
        sel.pop_back();
        for (size_t i = 0; i < beta.size(); ++i) acc[i] -= parts[j][i];
      }
    };
    rec(0);
  }
  return out;
}

nlohmann::json recipe_to_json(const MultiIndex& beta, const std::vector<ForcingTerm>& recipe) {
  nlohmann::json j;
  j["index"] = beta;
  j["equation"] = "Box U + F = 0 with F = -sum coefficient * h_k * prod U_factor";
  j["terms"] = nlohmann::json::array();
  for (const auto& t : recipe) {
    std::vector<std::string> f;
    for (const auto& g : t.factors) f.push_back("U" + index_string(g));
    j["terms"].push_back({{"k", t.k}, {"coefficient", t.coefficient}, {"factors", f}});
  }
  return j;
}

const CascadeTerm* CascadeSeries::find(const MultiIndex& gamma) const {
  for (const auto& t : terms)
    if (t.index == gamma) return &t;
  return nullptr;
}

const CascadeTerm& CascadeSeries::at(const MultiIndex& gamma) const {
  const auto* t = find(gamma);
  if (!t) throw DomainError("cascade: missing term " + index_string(gamma));
  return *t;
}

std::vector<double> assemble_forcing(const SpacetimeGrid& grid, const std::vector<SampledCoefficient>& Hs,
                                     const CascadeSeries& series, const MultiIndex& beta,
                                     const std::vector<ForcingTerm>& recipe) {
  (void)beta;
  std::vector<double> F(grid.field_size(), 0.0);
  for (const auto& t : recipe) {
    if (t.k >= static_cast<int>(Hs.size()) || Hs[t.k].index.empty()) continue;
    std::vector<const std::vector<double>*> fac;
    for (const auto& gmi : t.factors) fac.push_back(&series.at(gmi).field.u);
    const auto& h = Hs[t.k];
    for (size_t q = 0; q < h.index.size(); ++q) {
      const size_t i = h.index[q];
      double p = t.coefficient * h.value[q];
      for (const auto* u : fac) p *= (*u)[i];
      // F here is the right-hand side of Box U = F
      F[i] += p;
    }
  }
  return F;
}

namespace {

CascadeSeries build_series(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<SampledCoefficient>& Hs,
                           int max_k, const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                           bool include_top, int workers) {
  if (beta.size() != sources.size()) throw DomainError("cascade: one source per parameter");
  const int n = total_order(beta);
  if (n > kMaxCascadeOrder) throw DomainError("cascade: unsupported multi-index " + index_string(beta));
  for (int v : beta)
    if (v < 0) throw DomainError("cascade: negative index");
  CascadeSeries s;
  const auto idx = sub_indices(beta);
  // first order terms in parallel
  std::vector<MultiIndex> first;
  for (const auto& gmi : idx)
    if (total_order(gmi) == 1) first.push_back(gmi);
  std::vector<FieldSolution> lin(first.size());
  parallel_for(
      first.size(),
      [&](size_t q) {
        const size_t i = std::find(first[q].begin(), first[q].end(), 1) - first[q].begin();
        lin[q] = solve_linear(g, grid, nullptr, sources[i]);
      },
      workers);
  for (size_t q = 0; q < first.size(); ++q) {
    CascadeTerm t;
    t.index = first[q];
    t.field = std::move(lin[q]);
    s.terms.push_back(std::move(t));
  }
  for (const auto& gmi : idx) {
    if (total_order(gmi) < 2) continue;
    if (!include_top && gmi == beta) continue;
    CascadeTerm t;
    t.index = gmi;
    t.recipe = forcing_recipe(gmi, max_k);
    t.forcing = assemble_forcing(grid, Hs, s, gmi, t.recipe);
    const bool zero = std::all_of(t.forcing.begin(), t.forcing.end(), [](double v) { return v == 0.0; });
    if (zero) {
      t.field.u.assign(grid.field_size(), 0.0);
      t.field.trace.values.assign(grid.boundary_size(), 0.0);
    } else {
      t.field = solve_linear(g, grid, &t.forcing, NeumannSource::zero(grid));
    }
    s.terms.push_back(std::move(t));
  }
  return s;
}

}  // namespace

CascadeSeries cascade_series(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                             const std::vector<NeumannSource>& sources, const MultiIndex& beta, int workers) {
  return build_series(g, grid, sample_nonlinearity(grid, H), H.max_order(), sources, beta, true, workers);
}

CascadeTerm cascade_solve(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                          const std::vector<NeumannSource>& sources, const MultiIndex& beta) {
  auto s = cascade_series(g, grid, H, sources, beta);
  return s.at(beta);
}

double known_correction(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H_known,
                        const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                        const std::vector<double>& v0) {
  if (v0.size() != grid.field_size()) throw DomainError("known_correction: v0 does not match the grid");
  if (H_known.empty()) return 0.0;
  const auto Hs = sample_nonlinearity(grid, H_known);
  const auto s = build_series(g, grid, Hs, H_known.max_order(), sources, beta, false, 1);
  const auto recipe = forcing_recipe(beta, H_known.max_order());
  const auto F = assemble_forcing(grid, Hs, s, beta, recipe);
  return -volume_pairing(g, grid, F, v0);
}

double correction_term(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& h2,
                       const std::vector<NeumannSource>& sources, const std::vector<double>& v0) {
  if (sources.size() != 3) throw DomainError("correction_term: three sources required");
  for (int k = 0; k <= h2.max_order(); ++k)
    if (k != 2 && !h2.h[k].empty()) throw DomainError("correction_term: profile must hold h2 only");
  return known_correction(g, grid, h2, sources, {1, 1, 1}, v0);
}

double higher_correction_term(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& known,
                              const std::vector<NeumannSource>& sources, const MultiIndex& beta,
                              const std::vector<double>& v0) {
  const int N = total_order(beta);
  if (N < 4) throw DomainError("higher_correction_term: order must be at least 4");
  if (known.max_order() < N - 1) throw DomainError("higher_correction_term: missing lower coefficients");
  NonlinearityProfile lower = known;
  lower.h.resize(N);
  return known_correction(g, grid, lower, sources, beta, v0);
}

}  // namespace beamlab
