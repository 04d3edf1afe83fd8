#pragma once

#include "dnlslab/grid.hpp"
#include "dnlslab/variation.hpp"

#include <json.hpp>
#include <optional>

namespace dnls {

// ---------------------------------------------------------------------------
// Tubes of the lattice T_{xi0}: Q = {(t,x): |x - (x_Q + 2 t xi0)| <= 1}.
// Pure integer-lattice geometry, independent of any grid.
// ---------------------------------------------------------------------------
struct Tube {
    IVec xi;  // frequency (velocity/2)
    IVec base; // x_Q
};

// time window within [0,1] in which two unit tubes (relative base offset d,
// relative velocity 2w) stay within distance 2 of each other; empty => {1,0}
std::array<double, 2> tube_overlap_window(const DVec& d, const DVec& w, int dim);

// N = max_{H,P} |{(Q,R): Q,R in H, P cap Q cap R nonempty}| by brute-force
// enumeration over lattice tubes with bases in [-box, box]^n; H are slabs
// generated by xi-tubes thickened along eta (normalized to the origin tube by
// lattice translation invariance).
long tube_triples(const IVec& xi, const IVec& eta, int box);

// ---------------------------------------------------------------------------
// PacketSet: Prop rep decomposition data for one frequency cube.
// u_{xi0}(t,x) = sum_j e^{ix.xi0} e^{it xi0^2} sum_Q a_Q^j(t) chi^j(x-x_Q-2t xi0)
// ---------------------------------------------------------------------------
struct PacketEntry {
    IVec x0;
    int j = 0;
    std::vector<cd> amplitude; // M+1 samples of a_Q^j
};

struct PacketSet {
    GridSpec spec;
    IVec ic{0, 0}; // frequency-cube index (center = ic * cube_spacing)
    int J = 0;
    std::vector<PacketEntry> entries;
    std::optional<SpacetimeField> residual; // reconstruction is lossless when kept

    // sum_Q ||a_Q^j||_{V^2}^2 per profile index (tail decay of Prop rep)
    std::vector<double> coefficient_tail() const;

    nlohmann::json to_json() const;
};

// Project the gauge-pulled-back tiles onto the first J truncated-Hermite
// profiles framewise; the residual is carried explicitly.
PacketSet decompose(const SpacetimeField& u, const IVec& ic, int J,
                    double tile_mass_threshold = 1e-12);

SpacetimeField reconstruct(const PacketSet& p);
// reconstruction without the residual (truncation error measurements)
SpacetimeField reconstruct_truncated(const PacketSet& p, int J);

} // namespace dnls
