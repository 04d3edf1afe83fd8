#pragma once

#include "dnlslab/grid.hpp"
#include "dnlslab/spaces.hpp"
#include "dnlslab/variation.hpp"

#include <json.hpp>

namespace dnls {

// ---------------------------------------------------------------------------
// Sparse spectral expansion of a field, for exact off-grid evaluation along
// rays (trigonometric interpolation; cheap when the field is low-frequency).
// ---------------------------------------------------------------------------
struct SparseModes {
    std::vector<DVec> k;
    std::vector<cd> coef;

    static SparseModes from_field(const Field& u, double rel_threshold = 1e-14);
    cd eval(const DVec& x) const;
    SparseModes derivative(const IVec& alpha) const; // multiply by (ik)^alpha
};

// coefficient field, constant in time (1 frame) or frame-sampled (M+1 frames)
class CoefficientField {
public:
    CoefficientField() = default;
    explicit CoefficientField(Field constant) : frames_{std::move(constant)} {}
    explicit CoefficientField(std::vector<Field> frames);

    bool is_static() const { return frames_.size() == 1; }
    int frame_count() const { return static_cast<int>(frames_.size()); }
    const Field& at_frame(int m) const { return frames_[is_static() ? 0 : m]; }
    const GridSpec& spec() const { return frames_[0].spec(); }
    bool empty() const { return frames_.empty(); }

private:
    std::vector<Field> frames_;
};

// ---------------------------------------------------------------------------
// FirstOrderSymbol: a(t,x,xi) = sum_k c_k(t,x) xi_k + c0(t,x),
// Kohn-Nirenberg quantized (differentiate, then multiply), D = -i d/dx.
// ---------------------------------------------------------------------------
class FirstOrderSymbol {
public:
    FirstOrderSymbol() = default;
    FirstOrderSymbol(const GridSpec& spec, std::vector<CoefficientField> c, CoefficientField c0);

    static FirstOrderSymbol zero(const GridSpec& spec);
    static FirstOrderSymbol from_static(const GridSpec& spec, std::vector<Field> c, Field c0);

    const GridSpec& spec() const { return spec_; }
    const CoefficientField& c(int axis) const { return c_[axis]; }
    const CoefficientField& c0() const { return c0_; }
    bool is_static() const;
    bool is_zero() const { return zero_; }

    FirstOrderSymbol scaled(cd factor) const;

private:
    GridSpec spec_;
    std::vector<CoefficientField> c_;
    CoefficientField c0_;
    bool zero_ = false;
};

struct SymbolClassReport {
    double M = 0.0;
    double delta = 0.0;
    bool admissible = true;
    double threshold = 0.5;
    nlohmann::json to_json() const;
};

struct RayQuadrature {
    int nodes = 0;         // 0: auto = max(64, ceil(4|xi|))
    int oversample = 1;    // multiplies the auto node count
};

// integral over [0,1] of |d_x^alpha d_xi^beta a(t, x + 2 t xi, xi)| along the
// bicharacteristic ray x(t) = x + 2 t xi (composite Simpson).
double ray_integral(const FirstOrderSymbol& a, const DVec& x, const DVec& xi,
                    const IVec& alpha = {0, 0}, const IVec& beta = {0, 0},
                    const RayQuadrature& quad = {});

// C_M classification: M from order-(0,0) ray integrals, delta from orders with
// 1 <= |alpha|+|beta| <= 2, over a low-discrepancy (x, xi) sample with local
// refinement around the max. Both are lower bounds of the true suprema.
SymbolClassReport classify(const FirstOrderSymbol& a, int sample_budget,
                           double admissible_threshold = 0.5);

// Mizohata functional: sup over x0, omega, R' <= R of |Re int_0^{R'} b.omega dr|.
double mizohata(const std::vector<Field>& b, const DirectionSet& dirs, double R);

// a(t,x,D) u at frame m: sum_k c_k(t_m) (D_k u) + c0(t_m) u, spectral D_k.
Field apply_symbol(const FirstOrderSymbol& a, const Field& u, int frame = 0);

struct RayExponential {
    TimeSeries weight;   // e^{int_0^t a(s, x0+2s xi0, xi0) ds} on the time grid
    double w11 = 0.0;    // discrete total variation of the weight
    double v2 = 0.0;     // v2_norm of the weight samples
    double ray_m = 0.0;  // ray_integral of |a| along the same ray
};

RayExponential ray_exponential(const FirstOrderSymbol& a, const DVec& x0, const DVec& xi0);

// cumulative integrals I_m = int_0^{t_m} a(s, x0+2s xi0, xi0) ds on the frame
// grid (composite Simpson with substep refinement); shared by ray_exponential
// and the parametrix weights.
std::vector<cd> ray_cumulative_integral(const FirstOrderSymbol& a, const DVec& x0,
                                        const DVec& xi0, int substeps = 4);

} // namespace dnls
