#pragma once

#include "dnlslab/dnls.hpp"
#include "dnlslab/spaces.hpp"

#include <json.hpp>
#include <ostream>

namespace dnls {

// ---------------------------------------------------------------------------
// EstimateSweep: per-point LHS/RHS/ratio rows with a JSON summary.
// CSV schema: estimate,lambda,mu,eps,sigma,seed,lhs,rhs,ratio
// ---------------------------------------------------------------------------
struct SweepRow {
    double lambda = 0, mu = 0, eps = 0, sigma = 0;
    std::uint64_t seed = 0;
    double lhs = 0, rhs = 0, ratio = 0;
};

struct EstimateSweep {
    std::string id;
    std::vector<SweepRow> rows;
    nlohmann::json summary;

    void to_csv(std::ostream& os) const;
    std::string csv() const;
    double max_ratio() const;
    void finalize(); // validates rows (finite, >= 0) and fills common summary fields
};

// ---------------------------------------------------------------------------
// Step packets: u(t) = alpha(t) P(t) u0 with u0 a frequency-cube packet and
// alpha a step process on the frame grid. X norms factor exactly through the
// pullback, and trilinear integrals evaluate in closed form by mode pairing.
// ---------------------------------------------------------------------------
struct StepPacket {
    Field u0;
    std::vector<cd> alpha; // M+1 samples; value on [t_m, t_{m+1}) is alpha[m]
    IVec ic{0, 0};
};

StepPacket make_step_packet(const GridSpec& g, Rng& rng, const IVec& ic, const DVec& center,
                            double width, int jumps);
// materialized frames (tests and small-grid cross-checks)
SpacetimeField packet_field(const StepPacket& p);
// exact X^s norm of the packet (Delta-gauge definition, pullback factorized)
double packet_x_norm(const StepPacket& p, double s = 0.0,
                     double piece_threshold = 1e-10);
// D-X_lambda evaluated in the transport gauge (Prop eqwp) on the packet's own
// frequency cube, with time-subsampled V^2 (a documented lower bound)
double packet_dx_norm(const StepPacket& p, double lambda, const DirectionSet& dirs,
                      int time_subsample = 4);
// exact space-time integral of f1 f2 f3 with optional conjugations
// (int_0^1 int u^(c1) v^(c2) w^(c3) dx dt; exact in x on the grid band,
// exact in t for step amplitudes)
cd packet_trilinear(const StepPacket& f1, bool conj1, const StepPacket& f2, bool conj2,
                    const StepPacket& f3, bool conj3);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class ConjPattern {
    HighLowHigh, // case 1: u_mu v_lambda conj(w_lambda), log-weighted bound
    ConjLow,     // case 2: conj(u_mu) v_lambda w_lambda, eps-free bound
    Plain        // case 3: u_mu v_lambda w_lambda
};

EstimateSweep sweep_bilinear(const std::vector<double>& lambdas, const std::vector<double>& mus,
                             int trials, ConjPattern pattern, const GridSpec& grid,
                             std::uint64_t seed);

EstimateSweep sweep_highhigh(const std::vector<double>& lambdas, const std::vector<double>& mus,
                             int trials, const GridSpec& grid, std::uint64_t seed);

// Eq. a2 envelope with f = 0: ratio xs_norm(solution)/dhs_norm(g) against e^M
EstimateSweep sweep_linear_estimate(const std::vector<double>& gammas, double s, int trials,
                                    const GridSpec& grid, std::uint64_t seed);

// Prop low1/low3 scaling laws plus the Lemma la ray-integral bound
EstimateSweep sweep_scaling(const std::vector<double>& eps_set, double s, int trials,
                            const GridSpec& base_grid, std::uint64_t seed);

EstimateSweep sweep_modulation(const std::vector<double>& sigmas, int trials,
                               const GridSpec& grid, std::uint64_t seed);

EstimateSweep sweep_strichartz(int trials, const GridSpec& grid, std::uint64_t seed,
                               bool include_box = true);

// random multi-cube field with step modulations (shared by several sweeps)
SpacetimeField random_modulated_field(const GridSpec& g, Rng& rng, int cubes, double kmax,
                                      int jumps);

} // namespace dnls
