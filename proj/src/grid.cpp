#include "dnlslab/grid.hpp"
#include "dnlslab/fft.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "DNF1 writer assumes a little-endian host");

namespace dnls {

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

void GridSpec::validate() const {
    if (dim != 1 && dim != 2) throw std::invalid_argument("GridSpec: dim must be 1 or 2");
    if (!is_pow2(points) || points < 8)
        throw std::invalid_argument("GridSpec: points_per_axis must be a power of two >= 8");
    if (!(length > 0)) throw std::invalid_argument("GridSpec: domain_length must be positive");
    if (std::abs(length - std::llround(length)) > 1e-9)
        throw std::invalid_argument("GridSpec: domain_length must be integer-valued "
                                    "(integer-translate partitions must wrap exactly)");
    if (dk() > 1.0 + 1e-12)
        throw std::invalid_argument("GridSpec: frequency lattice spacing 2pi/L must be <= 1");
    if (steps < 0) throw std::invalid_argument("GridSpec: time_steps must be >= 0");
}

// ---------------------------------------------------------------------------
// Field
// ---------------------------------------------------------------------------

Field::Field(const GridSpec& spec, std::vector<cd> values) : spec_(spec), v_(std::move(values)) {
    spec_.validate();
    if (v_.size() != spec_.size())
        throw std::invalid_argument("Field: value count must equal points_per_axis^dim");
}

void Field::check_finite(const char* what) const {
    for (const cd& z : v_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

double Field::l2_norm() const {
    double s = 0;
    for (const cd& z : v_) s += std::norm(z);
    return std::sqrt(s * spec_.cell_volume());
}

double Field::linf_norm() const {
    double s = 0;
    for (const cd& z : v_) s = std::max(s, std::abs(z));
    return s;
}

double Field::lq_norm(double q) const {
    if (q == std::numeric_limits<double>::infinity()) return linf_norm();
    double s = 0;
    for (const cd& z : v_) s += std::pow(std::abs(z), q);
    return std::pow(s * spec_.cell_volume(), 1.0 / q);
}

cd Field::inner(const Field& other) const {
    if (!(spec_ == other.spec_)) throw std::invalid_argument("Field::inner: mismatched grids");
    cd s(0, 0);
    for (std::size_t i = 0; i < v_.size(); ++i) s += std::conj(other.v_[i]) * v_[i];
    return s * spec_.cell_volume();
}

Field& Field::operator+=(const Field& o) {
    if (!(spec_ == o.spec_)) throw std::invalid_argument("Field: mismatched grids");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    if (!(spec_ == o.spec_)) throw std::invalid_argument("Field: mismatched grids");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
}

Field& Field::operator*=(cd c) {
    for (auto& z : v_) z *= c;
    return *this;
}

// ---------------------------------------------------------------------------
// SpacetimeField
// ---------------------------------------------------------------------------

SpacetimeField::SpacetimeField(const GridSpec& spec, std::vector<Field> frames)
    : spec_(spec), frames_(std::move(frames)) {
    spec_.validate();
    if (static_cast<int>(frames_.size()) != spec_.steps + 1)
        throw std::invalid_argument("SpacetimeField: need M+1 frames");
    for (const Field& f : frames_)
        if (!(f.spec() == spec_))
            throw std::invalid_argument("SpacetimeField: all frames must share one GridSpec");
}

double SpacetimeField::l2_norm() const {
    if (frames_.size() == 1) return frames_[0].l2_norm();
    const double dt = spec_.dt();
    double s = 0;
    for (std::size_t m = 0; m < frames_.size(); ++m) {
        const double w = (m == 0 || m + 1 == frames_.size()) ? 0.5 : 1.0;
        const double nm = frames_[m].l2_norm();
        s += w * dt * nm * nm;
    }
    return std::sqrt(s);
}

SpacetimeField& SpacetimeField::operator+=(const SpacetimeField& o) {
    if (!(spec_ == o.spec_)) throw std::invalid_argument("SpacetimeField: mismatched grids");
    for (std::size_t m = 0; m < frames_.size(); ++m) frames_[m] += o.frames_[m];
    return *this;
}

SpacetimeField& SpacetimeField::operator-=(const SpacetimeField& o) {
    if (!(spec_ == o.spec_)) throw std::invalid_argument("SpacetimeField: mismatched grids");
    for (std::size_t m = 0; m < frames_.size(); ++m) frames_[m] -= o.frames_[m];
    return *this;
}

SpacetimeField& SpacetimeField::operator*=(cd c) {
    for (auto& f : frames_) f *= c;
    return *this;
}

// ---------------------------------------------------------------------------
// BumpSystem: cardinal cubic B-spline
// ---------------------------------------------------------------------------

double BumpSystem::eval1d(double x) {
    const double a = std::abs(x);
    if (a >= 2.0) return 0.0;
    if (a <= 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
    const double t = 2.0 - a;
    return t * t * t / 6.0;
}

// ---------------------------------------------------------------------------
// Spectral operators
// ---------------------------------------------------------------------------

Field fft_forward(const Field& u) {
    Field out = u;
    fft::forward(out.values(), u.spec().dim, u.spec().points);
    return out;
}

Field fft_inverse(const Field& u) {
    Field out = u;
    fft::inverse(out.values(), u.spec().dim, u.spec().points);
    return out;
}

namespace {

template <class Fn>
Field multiplier_impl(const Field& u, Fn&& m, const char* what) {
    const GridSpec& g = u.spec();
    Field hat = fft_forward(u);
    const int n = g.points;
    const double dk = g.dk();
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            const DVec k{g.bin(i) * dk, 0.0};
            const cd w = m(k);
            if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
                throw std::invalid_argument(std::string(what) + ": non-finite multiplier value");
            hat[i] *= w;
        }
    } else {
        std::size_t idx = 0;
        for (int j = 0; j < n; ++j) {
            const double k1 = g.bin(j) * dk;
            for (int i = 0; i < n; ++i, ++idx) {
                const DVec k{g.bin(i) * dk, k1};
                const cd w = m(k);
                if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
                    throw std::invalid_argument(std::string(what) +
                                                ": non-finite multiplier value");
                hat[idx] *= w;
            }
        }
    }
    fft::inverse(hat.values(), g.dim, g.points);
    return hat;
}

} // namespace

Field apply_multiplier(const Field& u, const std::function<cd(const DVec&)>& m) {
    return multiplier_impl(u, m, "apply_multiplier");
}

double lp_weight(double kabs, double lambda) {
    if (lambda == 1.0) return radial_cutoff(kabs);
    return radial_cutoff(kabs / lambda) - radial_cutoff(2.0 * kabs / lambda);
}

double lp_lambda_max(const GridSpec& spec) {
    const double kmax = spec.nyquist() * std::sqrt(static_cast<double>(spec.dim));
    double lambda = 1.0;
    while (lambda < kmax) lambda *= 2.0;
    return lambda;
}

std::vector<double> lp_lambdas(const GridSpec& spec) {
    std::vector<double> out;
    for (double l = 1.0; l <= lp_lambda_max(spec); l *= 2.0) out.push_back(l);
    return out;
}

Field lp_piece(const Field& u, double lambda) {
    if (lambda < 1.0 || std::abs(std::log2(lambda) - std::round(std::log2(lambda))) > 1e-12)
        throw std::invalid_argument("lp_piece: lambda must be a dyadic >= 1");
    if (lambda > lp_lambda_max(u.spec()))
        throw std::invalid_argument("lp_piece: lambda above grid Nyquist");
    return multiplier_impl(
        u,
        [lambda](const DVec& k) {
            return cd(lp_weight(std::hypot(k[0], k[1]), lambda), 0.0);
        },
        "lp_piece");
}

DVec cube_center(const GridSpec& spec, const IVec& ic) {
    const double d = spec.cube_spacing();
    return {ic[0] * d, spec.dim == 2 ? ic[1] * d : 0.0};
}

Field cube_piece(const Field& u, const IVec& ic) {
    const GridSpec& g = u.spec();
    const int icmax = g.max_cube_index();
    for (int d = 0; d < g.dim; ++d)
        if (std::abs(ic[d]) > icmax)
            throw std::invalid_argument("cube_piece: cube center above Nyquist");
    const double dxi = g.cube_spacing();
    const DVec c = cube_center(g, ic);
    return multiplier_impl(
        u,
        [&](const DVec& k) {
            double w = BumpSystem::eval1d((k[0] - c[0]) / dxi);
            if (g.dim == 2) w *= BumpSystem::eval1d((k[1] - c[1]) / dxi);
            return cd(w, 0.0);
        },
        "cube_piece");
}

std::vector<IVec> cubes_with_mass(const Field& u, double rel_threshold) {
    const GridSpec& g = u.spec();
    Field hat = fft_forward(u);
    const double dxi = g.cube_spacing();
    std::map<std::pair<int, int>, double> mass;
    double total = 0;
    const int n = g.points;
    std::size_t idx = 0;
    const int rows = g.dim == 2 ? n : 1;
    for (int j = 0; j < rows; ++j) {
        const double k1 = g.dim == 2 ? g.bin(j) * g.dk() : 0.0;
        for (int i = 0; i < n; ++i, ++idx) {
            const double m2 = std::norm(hat[idx]);
            if (m2 == 0.0) continue;
            total += m2;
            const double k0 = g.bin(i) * g.dk();
            const int c0lo = static_cast<int>(std::ceil(k0 / dxi - 2.0));
            const int c0hi = static_cast<int>(std::floor(k0 / dxi + 2.0));
            if (g.dim == 1) {
                for (int c0 = c0lo; c0 <= c0hi; ++c0) mass[{c0, 0}] += m2;
            } else {
                const int c1lo = static_cast<int>(std::ceil(k1 / dxi - 2.0));
                const int c1hi = static_cast<int>(std::floor(k1 / dxi + 2.0));
                for (int c1 = c1lo; c1 <= c1hi; ++c1)
                    for (int c0 = c0lo; c0 <= c0hi; ++c0) mass[{c0, c1}] += m2;
            }
        }
    }
    std::vector<IVec> out;
    for (const auto& [key, m] : mass)
        if (m >= rel_threshold * total && total > 0) out.push_back({key.first, key.second});
    return out;
}

Field spatial_bump(const Field& u, const IVec& x0) {
    const GridSpec& g = u.spec();
    Field out(g);
    const double h = g.h();
    const double L = g.length;
    const int lo = static_cast<int>(std::ceil((-BumpSystem::support_radius) / h));
    const int hi = static_cast<int>(std::floor(BumpSystem::support_radius / h));
    // iterate only over the support box around x0, with periodic wrap
    if (g.dim == 1) {
        for (int o = lo; o <= hi; ++o) {
            int i = static_cast<int>(std::llround(x0[0] / h)) + o;
            const double y = i * h - x0[0];
            i = ((i % g.points) + g.points) % g.points;
            out[i] = u[i] * BumpSystem::eval1d(y);
        }
    } else {
        for (int o1 = lo; o1 <= hi; ++o1) {
            int i1 = static_cast<int>(std::llround(x0[1] / h)) + o1;
            const double y1 = i1 * h - x0[1];
            i1 = ((i1 % g.points) + g.points) % g.points;
            const double w1 = BumpSystem::eval1d(y1);
            if (w1 == 0.0) continue;
            for (int o0 = lo; o0 <= hi; ++o0) {
                int i0 = static_cast<int>(std::llround(x0[0] / h)) + o0;
                const double y0 = i0 * h - x0[0];
                i0 = ((i0 % g.points) + g.points) % g.points;
                const std::size_t idx = static_cast<std::size_t>(i1) * g.points + i0;
                out[idx] = u[idx] * (w1 * BumpSystem::eval1d(y0));
            }
        }
    }
    (void)L;
    return out;
}

std::vector<IVec> bumps_with_mass(const Field& u, double rel_threshold) {
    const GridSpec& g = u.spec();
    const int L = static_cast<int>(std::llround(g.length));
    const double h = g.h();
    std::map<std::pair<int, int>, double> mass;
    double total = 0;
    const int n = g.points;
    std::size_t idx = 0;
    const int rows = g.dim == 2 ? n : 1;
    for (int j = 0; j < rows; ++j) {
        const double x1 = j * h;
        for (int i = 0; i < n; ++i, ++idx) {
            const double m2 = std::norm(u[idx]);
            if (m2 == 0.0) continue;
            total += m2;
            const double x0 = i * h;
            const int a0lo = static_cast<int>(std::ceil(x0 - 2.0));
            const int a0hi = static_cast<int>(std::floor(x0 + 2.0));
            for (int a0 = a0lo; a0 <= a0hi; ++a0) {
                const int w0 = ((a0 % L) + L) % L;
                if (g.dim == 1) {
                    mass[{w0, 0}] += m2;
                } else {
                    const int a1lo = static_cast<int>(std::ceil(x1 - 2.0));
                    const int a1hi = static_cast<int>(std::floor(x1 + 2.0));
                    for (int a1 = a1lo; a1 <= a1hi; ++a1)
                        mass[{w0, ((a1 % L) + L) % L}] += m2;
                }
            }
        }
    }
    std::vector<IVec> out;
    for (const auto& [key, m] : mass)
        if (m >= rel_threshold * total && total > 0) out.push_back({key.first, key.second});
    return out;
}

Field free_propagate(const Field& u, double t) {
    if (t == 0.0) return u;
    return multiplier_impl(
        u,
        [t](const DVec& k) {
            const double k2 = k[0] * k[0] + k[1] * k[1];
            return std::polar(1.0, t * k2);
        },
        "free_propagate");
}

SpacetimeField pullback(const SpacetimeField& u) {
    std::vector<Field> frames(u.frames().begin(), u.frames().end());
    parallel_for(frames.size(), [&](std::size_t m) {
        frames[m] = free_propagate(u.frame(static_cast<int>(m)), -u.spec().time(static_cast<int>(m)));
    });
    return SpacetimeField(u.spec(), std::move(frames));
}

SpacetimeField pushforward(const SpacetimeField& u) {
    std::vector<Field> frames(u.frames().begin(), u.frames().end());
    parallel_for(frames.size(), [&](std::size_t m) {
        frames[m] = free_propagate(u.frame(static_cast<int>(m)), u.spec().time(static_cast<int>(m)));
    });
    return SpacetimeField(u.spec(), std::move(frames));
}

SpacetimeField modulation_filter(const SpacetimeField& u, double sigma, ModulationMode mode,
                                 double coarse_factor) {
    const GridSpec& g = u.spec();
    const int M = g.steps;
    if (M < 2) throw std::invalid_argument("modulation_filter: need time_steps >= 2");
    if (!(sigma > 0)) throw std::invalid_argument("modulation_filter: sigma must be positive");
    if (sigma < kTwoPi / M * coarse_factor)
        throw std::runtime_error("unresolvable modulation");

    SpacetimeField v = pullback(u);
    const int R = 2 * M; // even reflection of [0,1]
    // time frequency of reflected-series bin b: omega = pi * b (period 2)
    std::vector<double> smul(R);
    for (int b = 0; b < R; ++b) {
        const int sb = b < R / 2 ? b : b - R;
        smul[b] = radial_cutoff(2.0 * std::abs(kPi * sb) / sigma);
    }
    const std::size_t npts = g.size();
    std::vector<Field> low_frames(M + 1, Field(g));
    const int nchunks = ThreadPool::instance().threads() * 4;
    const std::size_t chunk = (npts + nchunks - 1) / nchunks;
    parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t c) {
        std::vector<cd> series(R);
        const std::size_t beg = c * chunk, end = std::min(npts, beg + chunk);
        for (std::size_t p = beg; p < end; ++p) {
            for (int m = 0; m <= M; ++m) series[m] = v.frame(m)[p];
            for (int m = 1; m < M; ++m) series[2 * M - m] = v.frame(m)[p];
            fft::forward_1d(series);
            for (int b = 0; b < R; ++b) series[b] *= smul[b];
            fft::inverse_1d(series);
            for (int m = 0; m <= M; ++m) low_frames[m][p] = series[m];
        }
    });
    SpacetimeField low = pushforward(SpacetimeField(g, std::move(low_frames)));
    if (mode == ModulationMode::Low) return low;
    SpacetimeField high = u;
    high -= low;
    return high;
}

double lpq_norm(const SpacetimeField& u, double p, double q) {
    if (p < 1 || q < 1) throw std::invalid_argument("lpq_norm: need p,q >= 1");
    const int M = u.spec().steps;
    std::vector<double> sq(u.frame_count());
    parallel_for(sq.size(), [&](std::size_t m) { sq[m] = u.frame(static_cast<int>(m)).lq_norm(q); });
    if (p == std::numeric_limits<double>::infinity())
        return *std::max_element(sq.begin(), sq.end());
    if (M == 0) return sq[0];
    const double dt = u.spec().dt();
    double s = 0;
    for (int m = 0; m <= M; ++m) {
        const double w = (m == 0 || m == M) ? 0.5 : 1.0;
        s += w * dt * std::pow(sq[m], p);
    }
    return std::pow(s, 1.0 / p);
}

cd spacetime_pair(const SpacetimeField& u, const SpacetimeField& f) {
    if (!(u.spec() == f.spec()))
        throw std::invalid_argument("spacetime_pair: mismatched grids");
    const int M = u.spec().steps;
    std::vector<cd> per_frame(u.frame_count());
    parallel_for(per_frame.size(), [&](std::size_t m) {
        per_frame[m] = u.frame(static_cast<int>(m)).inner(f.frame(static_cast<int>(m)));
    });
    if (M == 0) return per_frame[0];
    cd s(0, 0);
    const double dt = u.spec().dt();
    for (int m = 0; m <= M; ++m) s += ((m == 0 || m == M) ? 0.5 : 1.0) * dt * per_frame[m];
    return s;
}

// ---------------------------------------------------------------------------
// Data generators
// ---------------------------------------------------------------------------

Field plane_wave(const GridSpec& spec, const IVec& bins) {
    Field out(spec);
    const double dk = spec.dk();
    const int n = spec.points;
    const double h = spec.h();
    if (spec.dim == 1) {
        for (int i = 0; i < n; ++i) out[i] = std::polar(1.0, bins[0] * dk * i * h);
    } else {
        std::size_t idx = 0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i, ++idx)
                out[idx] = std::polar(1.0, dk * (bins[0] * i + bins[1] * j) * h);
    }
    return out;
}

Field gaussian_bump(const GridSpec& spec, const DVec& center, double width) {
    Field out(spec);
    const double h = spec.h();
    const double L = spec.length;
    const int images = std::max(1, static_cast<int>(std::ceil(8.0 * width / L)) + 1);
    const int n = spec.points;
    auto g1 = [&](double x, double c) {
        double s = 0;
        for (int j = -images; j <= images; ++j) {
            const double d = x - c + j * L;
            s += std::exp(-d * d / (2.0 * width * width));
        }
        return s;
    };
    if (spec.dim == 1) {
        for (int i = 0; i < n; ++i) out[i] = g1(i * h, center[0]);
    } else {
        std::size_t idx = 0;
        for (int j = 0; j < n; ++j) {
            const double w1 = g1(j * h, center[1]);
            for (int i = 0; i < n; ++i, ++idx) out[idx] = w1 * g1(i * h, center[0]);
        }
    }
    return out;
}

Field random_band_limited(const GridSpec& spec, Rng& rng, double kmax) {
    Field hat(spec);
    const int n = spec.points;
    const double dk = spec.dk();
    const int rows = spec.dim == 2 ? n : 1;
    std::size_t idx = 0;
    for (int j = 0; j < rows; ++j) {
        const double k1 = spec.dim == 2 ? spec.bin(j) * dk : 0.0;
        for (int i = 0; i < n; ++i, ++idx) {
            const double k0 = spec.bin(i) * dk;
            if (k0 * k0 + k1 * k1 <= kmax * kmax) hat[idx] = complex_gaussian(rng);
        }
    }
    fft::inverse(hat.values(), spec.dim, spec.points);
    const double nr = hat.l2_norm();
    if (nr > 0) hat *= cd(1.0 / nr, 0);
    return hat;
}

Field random_cube_packet(const GridSpec& spec, Rng& rng, const IVec& ic, const DVec& center,
                         double spatial_width) {
    Field env = gaussian_bump(spec, center, spatial_width);
    // a couple of random low modes for variety
    Field mod(spec);
    const double dk = spec.dk();
    const double h = spec.h();
    const int n = spec.points;
    const cd a0 = complex_gaussian(rng), a1 = complex_gaussian(rng);
    std::size_t idx = 0;
    const int rows = spec.dim == 2 ? n : 1;
    const DVec c = cube_center(spec, ic);
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < n; ++i, ++idx) {
            const double x0 = i * h, x1 = spec.dim == 2 ? j * h : 0.0;
            const cd carrier = std::polar(1.0, c[0] * x0 + c[1] * x1);
            mod[idx] = env[idx] * carrier * (a0 + a1 * std::polar(1.0, dk * (x0 + x1)));
        }
    Field out = cube_piece(mod, ic);
    const double nr = out.l2_norm();
    if (nr > 0) out *= cd(1.0 / nr, 0);
    return out;
}

// ---------------------------------------------------------------------------
// DNF1
// ---------------------------------------------------------------------------

namespace {

void write_dnf1_impl(const std::filesystem::path& path, const GridSpec& g,
                     const std::vector<Field>& frames, int header_steps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_dnf1: cannot open " + path.string());
    char header[128];
    std::snprintf(header, sizeof(header), "DNF1 dim=%d n=%d L=%.17g M=%d\n", g.dim, g.points,
                  g.length, header_steps);
    os << header;
    for (const Field& f : frames) {
        for (const cd& z : f.values()) {
            const double re = z.real(), im = z.imag();
            os.write(reinterpret_cast<const char*>(&re), sizeof(double));
            os.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    }
    if (!os) throw std::runtime_error("write_dnf1: write failed for " + path.string());
}

} // namespace

void write_dnf1(const std::filesystem::path& path, const Field& u) {
    write_dnf1_impl(path, u.spec(), {u}, 0);
}

void write_dnf1(const std::filesystem::path& path, const SpacetimeField& u) {
    write_dnf1_impl(path, u.spec(), u.frames(), u.spec().steps);
}

SpacetimeField read_dnf1(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_dnf1: cannot open " + path.string());
    std::string header;
    std::getline(is, header);
    int dim = 0, n = 0, M = -1;
    double L = 0;
    if (std::sscanf(header.c_str(), "DNF1 dim=%d n=%d L=%lg M=%d", &dim, &n, &L, &M) != 4)
        throw std::runtime_error("read_dnf1: malformed header in " + path.string());
    GridSpec g{dim, n, L, M};
    g.validate();
    std::vector<Field> frames;
    frames.reserve(M + 1);
    for (int m = 0; m <= M; ++m) {
        std::vector<cd> vals(g.size());
        for (auto& z : vals) {
            double re, im;
            is.read(reinterpret_cast<char*>(&re), sizeof(double));
            is.read(reinterpret_cast<char*>(&im), sizeof(double));
            if (!is) throw std::runtime_error("read_dnf1: truncated payload in " + path.string());
            z = cd(re, im);
        }
        frames.emplace_back(g, std::move(vals));
    }
    return SpacetimeField(g, std::move(frames));
}

} // namespace dnls
