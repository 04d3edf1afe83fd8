#pragma once

#include "dnlslab/hamilton.hpp"
#include "dnlslab/spaces.hpp"

#include <json.hpp>

namespace dnls {

// ---------------------------------------------------------------------------
// LinearProblem: i v_t - Delta v - a(t,x,D) v = f, v(0) = g.
// ---------------------------------------------------------------------------
struct LinearProblem {
    FirstOrderSymbol a;
    Field g;
    SpacetimeField f; // empty() means zero forcing

    LinearProblem(FirstOrderSymbol a_, Field g_, SpacetimeField f_);
    static LinearProblem homogeneous(FirstOrderSymbol a_, Field g_, int steps);

    bool zero_forcing() const { return zero_forcing_; }
    const GridSpec& grid() const { return g.spec(); }

private:
    bool zero_forcing_ = false;
};

struct AssembleOptions {
    double mass_threshold = 1e-12; // relative data mass below which a piece is skipped
    int ray_substeps = 4;
};

// Duhamel approximate solution for a single phase-space piece (x0, cube ic):
// weight e^{-i int a(ray)} times the free evolution, plus the weighted
// trapezoid Duhamel integral; u(0) equals the localized datum exactly.
SpacetimeField local_solution(const LinearProblem& p, const IVec& x0, const IVec& ic,
                              const AssembleOptions& opts = {});

// sum of local solutions over all (x0, xi0) with non-negligible data mass
SpacetimeField assemble(const LinearProblem& p, const AssembleOptions& opts = {});

// L_a u = i d_t u - Delta u - a(t,x,D) u; d_t by 4th-order differences of the
// pullback (spectral in space).
SpacetimeField apply_operator(const FirstOrderSymbol& a, const SpacetimeField& u);

// L_a u - f
SpacetimeField residual(const LinearProblem& p, const SpacetimeField& u);

struct SolveDiagnostics {
    std::vector<double> residual_l2;     // per Picard step, L^2_{t,x}
    std::vector<Bracket> residual_y;     // per Picard step (optional tracking)
    int iterations = 0;
    double contraction_ratio = 0.0;      // last ||r_{k+1}|| / ||r_k||
    std::vector<double> ratios;
    double symbol_m = 0.0;
    double symbol_delta = 0.0;
    bool admissible = true;
    bool converged = false;

    nlohmann::json to_json() const;
};

struct PicardOptions {
    AssembleOptions assemble;
    bool track_y_brackets = true;
    int classify_budget = 48;
    double y_s = 0.0; // order used for the tracked Y brackets
};

class PicardError : public std::runtime_error {
public:
    PicardError(const std::string& what, SolveDiagnostics diag)
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    SolveDiagnostics diagnostics;
};

// u^0 = assemble(p); u^{k+1} = u^k + assemble(a, 0, f - L_a u^k) until the
// L^2_{t,x} residual drops below tol * (data scale). Throws PicardError with
// diagnostics on non-convergence.
std::pair<SpacetimeField, SolveDiagnostics> picard_solve(const LinearProblem& p, double tol,
                                                         int max_iter,
                                                         const PicardOptions& opts = {});

} // namespace dnls
