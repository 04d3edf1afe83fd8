#pragma once

#include "dnlslab/parametrix.hpp"

#include <json.hpp>

namespace dnls {

// ---------------------------------------------------------------------------
// Quadratic derivative nonlinearity:
// B((u,ubar),(grad u, grad ubar)) = sum coeff * u^{(conj_u)} * d_axis u^{(conj_grad)}
// ---------------------------------------------------------------------------
struct NonlinTerm {
    cd coeff{0, 0};
    bool conj_u = false;
    bool conj_grad = false;
    int axis = 0;
};

struct Nonlinearity {
    std::vector<NonlinTerm> terms;

    void validate(int dim) const;
    std::vector<NonlinTerm> b0_terms() const; // conj_grad == false
    std::vector<NonlinTerm> b1_terms() const; // conj_grad == true
    bool empty() const { return terms.empty(); }
};

struct PipelineConfig {
    double s = 2.0;        // regularity, enforced > n/2 + 1
    double sigma = 0.4;    // ball exponent, 0 < sigma < s - n/2
    double C_scale = 1.0;  // eps = e^{-C M}, doubled until the symbol is admissible
    double tol = 1e-6;
    int max_outer = 12;
    int inner_max_iter = 16;
    int rescaled_steps = 64;          // time steps of the rescaled unit-interval solve
    std::size_t max_points = 1u << 22; // memory budget for the rescaled grid
    int classify_budget = 48;

    void validate(int dim) const;
};

// u0^eps(x) = eps u0(eps x) on the torus of side L/eps (eps a power of two;
// band-limited resample, L^inf scales by eps exactly).
Field rescale(const Field& u0, double eps, std::size_t max_points = 1u << 22);
// inverse: coarse-grid restriction of (1/eps) u(x/eps)
Field unscale(const Field& u, double eps, const GridSpec& target);

std::pair<Field, Field> split_low_high(const Field& u);

// N(low) = B((low,lowbar),(grad low, grad lowbar)) + Delta low
Field forcing_N(const Field& low, const Nonlinearity& B);

// A1 v = B((v,vbar),(grad low, grad lowbar)) + B1((low,lowbar), grad vbar)
SpacetimeField linear_term_A1(const SpacetimeField& v, const Field& low, const Nonlinearity& B);

// framewise B((u,ubar),(grad v, grad vbar)); bilinear in (u, v)
SpacetimeField bilinear_B(const SpacetimeField& u, const SpacetimeField& v,
                          const Nonlinearity& B);
Field bilinear_B(const Field& u, const Field& v, const Nonlinearity& B);

// symbol of the frozen low-frequency operator A v = B0((low, lowbar), grad v):
// c_k = i * sum of B0 coefficients times the (conjugated) low field, c0 = 0.
FirstOrderSymbol symbol_from_low_freq(const std::vector<Field>& b,
                                      const std::vector<Field>& conj_part);
FirstOrderSymbol symbol_for_nonlinearity(const Field& low, const Nonlinearity& B, int steps);

struct LargeDataResult {
    SpacetimeField u;      // frames on [0, T], original variables
    double T = 0.0;        // = eps^2
    double eps = 0.0;
    nlohmann::json diagnostics;
};

// The rescale/split/freeze/contract pipeline of the large-data solver.
LargeDataResult solve_large_data(const Field& u0, const Nonlinearity& B,
                                 const PipelineConfig& cfg);

// Independent oracle: integrating-factor method of lines with RK4 on the
// nonlinearity (2/3-rule dealiasing). If richardson_err is given, the solver
// repeats with halved steps and reports the final-frame difference.
SpacetimeField reference_solve(const Field& u0, const Nonlinearity& B, double T, int steps,
                               double* richardson_err = nullptr);

} // namespace dnls
