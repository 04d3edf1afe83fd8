#pragma once

#include "dnlslab/common.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace dnls {

using IVec = std::array<int, 2>;    // lattice vector, [1] unused in 1-d
using DVec = std::array<double, 2>; // point / frequency, [1] unused in 1-d

inline IVec ivec(int a, int b = 0) { return {a, b}; }
inline DVec dvec(double a, double b = 0.0) { return {a, b}; }

// ---------------------------------------------------------------------------
// GridSpec: periodic n-dim grid, n in {1,2}, on [0,L)^n with time grid
// t_m = m/M on [0,1]. L must be a positive integer so the integer-translate
// bump partition wraps exactly; the frequency-cube lattice spacing
// dxi = round(L/2pi) * 2pi/L is the closest DFT-commensurable scale to 1.
// ---------------------------------------------------------------------------
struct GridSpec {
    int dim = 1;
    int points = 4096;   // per axis, power of two
    double length = 402; // torus side L (integer-valued)
    int steps = 512;     // time steps M; frames = M+1

    void validate() const;

    std::size_t size() const {
        std::size_t s = static_cast<std::size_t>(points);
        return dim == 2 ? s * s : s;
    }
    double h() const { return length / points; }
    double cell_volume() const { return dim == 2 ? h() * h() : h(); }
    double dk() const { return kTwoPi / length; }
    double nyquist() const { return kPi * points / length; }
    double dt() const { return 1.0 / steps; }
    double time(int m) const { return static_cast<double>(m) / steps; }

    // frequency-cube lattice spacing (≈1, exactly on the DFT lattice)
    int cube_kappa() const {
        const int k = static_cast<int>(std::llround(length / kTwoPi));
        return k > 0 ? k : 1;
    }
    double cube_spacing() const { return cube_kappa() * dk(); }
    int max_cube_index() const {
        return static_cast<int>(std::floor(nyquist() / cube_spacing())) + 2;
    }

    // signed frequency bin of flat index along one axis
    int bin(int i) const { return i < points / 2 ? i : i - points; }

    std::size_t index(const IVec& i) const {
        return dim == 2 ? static_cast<std::size_t>(i[1]) * points + i[0]
                        : static_cast<std::size_t>(i[0]);
    }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && points == o.points && length == o.length && steps == o.steps;
    }

    static GridSpec default_1d() { return GridSpec{1, 4096, 402.0, 512}; }
    static GridSpec default_2d() { return GridSpec{2, 256, 25.0, 256}; }
};

// ---------------------------------------------------------------------------
// Field: complex samples on the spatial grid, x-fastest ordering.
// ---------------------------------------------------------------------------
class Field {
public:
    Field() = default;
    explicit Field(const GridSpec& spec) : spec_(spec), v_(spec.size(), cd(0.0, 0.0)) {
        spec_.validate();
    }
    Field(const GridSpec& spec, std::vector<cd> values);

    const GridSpec& spec() const { return spec_; }
    const std::vector<cd>& values() const { return v_; }
    std::vector<cd>& values() { return v_; }
    cd operator[](std::size_t i) const { return v_[i]; }
    cd& operator[](std::size_t i) { return v_[i]; }
    std::size_t size() const { return v_.size(); }

    double l2_norm() const;     // continuum-normalized: sqrt(h^n sum |u|^2)
    double linf_norm() const;
    double lq_norm(double q) const;
    cd inner(const Field& other) const; // h^n sum conj(other) * this

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(cd c);

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(cd c, Field a) { return a *= c; }

    void check_finite(const char* what) const;

private:
    GridSpec spec_;
    std::vector<cd> v_;
};

// ---------------------------------------------------------------------------
// SpacetimeField: M+1 frames at t_m = m/M.
// ---------------------------------------------------------------------------
class SpacetimeField {
public:
    SpacetimeField() = default;
    explicit SpacetimeField(const GridSpec& spec)
        : spec_(spec), frames_(spec.steps + 1, Field(spec)) {}
    SpacetimeField(const GridSpec& spec, std::vector<Field> frames);

    const GridSpec& spec() const { return spec_; }
    int frame_count() const { return static_cast<int>(frames_.size()); }
    const Field& frame(int m) const { return frames_[m]; }
    Field& frame(int m) { return frames_[m]; }
    const std::vector<Field>& frames() const { return frames_; }

    double l2_norm() const; // trapezoid in t of squared spatial L2 norms

    SpacetimeField& operator+=(const SpacetimeField& o);
    SpacetimeField& operator-=(const SpacetimeField& o);
    SpacetimeField& operator*=(cd c);
    friend SpacetimeField operator+(SpacetimeField a, const SpacetimeField& b) { return a += b; }
    friend SpacetimeField operator-(SpacetimeField a, const SpacetimeField& b) { return a -= b; }

private:
    GridSpec spec_;
    std::vector<Field> frames_;
};

// ---------------------------------------------------------------------------
// BumpSystem: cubic cardinal B-spline, C^2, support [-2,2], integer translates
// sum to 1. Used for both the physical and the frequency partition of unity.
// ---------------------------------------------------------------------------
struct BumpSystem {
    static double eval1d(double x);
    // tensor product over active dims
    static double eval(const DVec& y, int dim) {
        double v = eval1d(y[0]);
        if (dim == 2) v *= eval1d(y[1]);
        return v;
    }
    static constexpr double support_radius = 2.0;
};

// ---------------------------------------------------------------------------
// Spectral operators
// ---------------------------------------------------------------------------

Field fft_forward(const Field& u);
Field fft_inverse(const Field& u);

// m(k) applied on the frequency lattice; exact on the discrete lattice.
Field apply_multiplier(const Field& u, const std::function<cd(const DVec&)>& m);

// Littlewood-Paley dyadic piece; lambda a power of two >= 1. Pieces telescope
// to the identity up to the dyadic block containing the Nyquist frequency.
Field lp_piece(const Field& u, double lambda);
double lp_lambda_max(const GridSpec& spec);
std::vector<double> lp_lambdas(const GridSpec& spec);
// scalar LP weight, for oracles: weight of piece lambda at frequency kabs
double lp_weight(double kabs, double lambda);

// unit frequency-cube piece centered at xi0 = ic * cube_spacing
Field cube_piece(const Field& u, const IVec& ic);
DVec cube_center(const GridSpec& spec, const IVec& ic);
// cube indices carrying at least `rel_threshold` of the total spectral mass
std::vector<IVec> cubes_with_mass(const Field& u, double rel_threshold = 1e-12);

// pointwise multiply by the translated bump phi(x - x0), x0 integer lattice
Field spatial_bump(const Field& u, const IVec& x0);
std::vector<IVec> bumps_with_mass(const Field& u, double rel_threshold = 1e-12);

// free Schroedinger flow of i u_t - Delta u = 0: multiplier e^{+i t |k|^2}
Field free_propagate(const Field& u, double t);

// frame m -> free_propagate(frame m, -t_m), and its inverse
SpacetimeField pullback(const SpacetimeField& u);
SpacetimeField pushforward(const SpacetimeField& u);

enum class ModulationMode { Low, High };

// Conjugated modulation cutoff: pull back, filter s_{<sigma}(D_t) framewise in
// time (smooth even reflection of [0,1]), push forward.
SpacetimeField modulation_filter(const SpacetimeField& u, double sigma, ModulationMode mode,
                                 double coarse_factor = 4.0);

// Mixed space-time Lebesgue norm L^p_t L^q_x (trapezoid in t, exact in x).
double lpq_norm(const SpacetimeField& u, double p, double q);

// space-time quadrature of u * conj(f) (trapezoid in t)
cd spacetime_pair(const SpacetimeField& u, const SpacetimeField& f);

// ---------------------------------------------------------------------------
// Data generators (shared by tests and the verify sweeps)
// ---------------------------------------------------------------------------

// e^{i k.x} with k = (2pi/L) * bins
Field plane_wave(const GridSpec& spec, const IVec& bins);
// periodized gaussian exp(-|x-c|^2 / (2 w^2))
Field gaussian_bump(const GridSpec& spec, const DVec& center, double width);
// random field with spectrum supported in |k| <= kmax, unit L2 norm
Field random_band_limited(const GridSpec& spec, Rng& rng, double kmax);
// random field supported in the frequency cube at ic, unit L2 norm,
// spatially concentrated in a ball of radius `spatial_width` around `center`
Field random_cube_packet(const GridSpec& spec, Rng& rng, const IVec& ic, const DVec& center,
                         double spatial_width);

// ---------------------------------------------------------------------------
// DNF1 file format
// ---------------------------------------------------------------------------

void write_dnf1(const std::filesystem::path& path, const Field& u);
void write_dnf1(const std::filesystem::path& path, const SpacetimeField& u);
SpacetimeField read_dnf1(const std::filesystem::path& path);

} // namespace dnls
