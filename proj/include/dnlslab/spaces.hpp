#pragma once

#include "dnlslab/grid.hpp"
#include "dnlslab/variation.hpp"

#include <json.hpp>

namespace dnls {

// ---------------------------------------------------------------------------
// DirectionSet: unit vectors for the decay-norm suprema.
// ---------------------------------------------------------------------------
struct DirectionSet {
    std::vector<DVec> dirs;

    static DirectionSet standard(int dim, int count = 16);
    void validate() const;
};

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

// sampling profile for the discretized suprema (reported as lower bounds)
struct DecayProfile {
    double base_spacing_factor = 0.25; // sub-lattice spacing = factor * lambda
    int max_bases_per_axis = 128;
    double mass_threshold = 1e-12;
};

// profile for the phase-space tiling of X/Y norms
struct TileProfile {
    double cube_mass_threshold = 1e-12;
    double tile_mass_threshold = 1e-12;
};

// ---------------------------------------------------------------------------
// Decay norms on data
// ---------------------------------------------------------------------------

// ||u||_{D-L^2_lambda}: sup over x0 (lambda/4 sub-lattice) and omega of the
// l^1-in-k sum of unit-tile L^2 norms at scale lambda.
double dl2_lambda(const Field& u, double lambda, const DirectionSet& dirs,
                  const DecayProfile& profile = {});

// ||u||^2_{D-H^s} = sum_lambda lambda^{2s} ||u_lambda||^2_{D-L^2_lambda}
double dhs_norm(const Field& u, double s, const DirectionSet& dirs = DirectionSet{},
                const DecayProfile& profile = {});

// ---------------------------------------------------------------------------
// X / Y norms
// ---------------------------------------------------------------------------

// ||u||^2_X for a frequency-cube-localized input: pull back along the free
// flow, tile with phi_{x0}, score tiles with V^2 (zero-prepended), l^2 in x0.
double x_block_norm(const SpacetimeField& u_cubepiece, const IVec& ic,
                    const TileProfile& profile = {});

// transport-flow variant (Prop eqwp gauge): pull back along L_{xi0} instead.
double x_block_norm_transport(const SpacetimeField& u_cubepiece, const IVec& ic,
                              const TileProfile& profile = {});

// ||u||^2_{X^s} = sum over cubes <xi0>^{2s} ||u_{xi0}||^2_X
double xs_norm(const SpacetimeField& u, double s, const TileProfile& profile = {});

// X_lambda norm of a frequency-lambda-localized function (== X^0 norm)
double x_lambda_norm(const SpacetimeField& u_lambda, const TileProfile& profile = {});

// ||u||_{D-X_lambda}: sup over x0, omega of the l^1-in-k sum of X_lambda norms
// of chi-windowed pieces, chi the bump generator at scale lambda.
double dx_lambda_norm(const SpacetimeField& u_lambda, double lambda, const DirectionSet& dirs,
                      const DecayProfile& profile = {}, const TileProfile& tiles = {});

// Y^s bracket: same tiling pipeline, tiles scored with [du2_lower, du2_upper].
Bracket y_bracket(const SpacetimeField& f, double s, const TileProfile& profile = {});

// duality pairing int_0^1 int u conj(f) dx dt
cd duality_pair(const SpacetimeField& u, const SpacetimeField& f);

// ---------------------------------------------------------------------------
// NormReport
// ---------------------------------------------------------------------------

struct NormReport {
    std::string name;
    Bracket value{};              // point values have lo == hi
    nlohmann::json params;        // lambda, s, sigma, ...
    nlohmann::json grid;          // grid metadata
    bool proxy_assumption = false; // set for Y brackets (du2 upper proxy)

    nlohmann::json to_json() const;
    static NormReport point(std::string name, double v, nlohmann::json params,
                            const GridSpec& g);
    static NormReport bracket(std::string name, Bracket v, nlohmann::json params,
                              const GridSpec& g);
};

nlohmann::json grid_metadata(const GridSpec& g);

} // namespace dnls
