#include "dnlslab/spaces.hpp"
#include "dnlslab/fft.hpp"

#include <algorithm>
#include <map>

namespace dnls {

// ---------------------------------------------------------------------------
// DirectionSet
// ---------------------------------------------------------------------------

DirectionSet DirectionSet::standard(int dim, int count) {
    DirectionSet d;
    if (dim == 1) {
        d.dirs = {DVec{1.0, 0.0}, DVec{-1.0, 0.0}};
    } else {
        for (int j = 0; j < count; ++j) {
            const double th = kTwoPi * j / count;
            d.dirs.push_back(DVec{std::cos(th), std::sin(th)});
        }
    }
    return d;
}

void DirectionSet::validate() const {
    if (dirs.empty()) throw std::invalid_argument("DirectionSet: empty");
    for (const DVec& w : dirs)
        if (std::abs(std::hypot(w[0], w[1]) - 1.0) > 1e-12)
            throw std::invalid_argument("DirectionSet: non-unit direction");
}

namespace {

DirectionSet default_dirs(const DirectionSet& dirs, int dim) {
    if (!dirs.dirs.empty()) {
        dirs.validate();
        return dirs;
    }
    return DirectionSet::standard(dim);
}

double min_image(double d, double L) { return d - L * std::round(d / L); }

struct MassPoint {
    DVec x;
    double m2; // |u|^2 * cell volume
};

struct MassCloud {
    std::vector<MassPoint> pts;
    DVec anchor{0, 0}; // location of the max
    DVec lo{0, 0}, hi{0, 0}; // min-image box around anchor
    double total = 0;
};

MassCloud mass_cloud(const Field& u, double rel_threshold) {
    const GridSpec& g = u.spec();
    const double cv = g.cell_volume();
    const double h = g.h();
    double peak = 0;
    std::size_t peak_idx = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m = std::norm(u[i]);
        if (m > peak) { peak = m; peak_idx = i; }
    }
    MassCloud c;
    if (peak == 0) return c;
    const int n = g.points;
    c.anchor = {static_cast<double>(peak_idx % n) * h,
                g.dim == 2 ? static_cast<double>(peak_idx / n) * h : 0.0};
    const double thr = rel_threshold * peak;
    c.lo = {0, 0};
    c.hi = {0, 0};
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m = std::norm(u[i]);
        if (m <= thr) continue;
        const DVec x{static_cast<double>(i % n) * h,
                     g.dim == 2 ? static_cast<double>(i / n) * h : 0.0};
        c.pts.push_back({x, m * cv});
        c.total += m * cv;
        for (int d = 0; d < g.dim; ++d) {
            const double rel = min_image(x[d] - c.anchor[d], g.length);
            c.lo[d] = std::min(c.lo[d], rel);
            c.hi[d] = std::max(c.hi[d], rel);
        }
    }
    return c;
}

// sub-lattice of base points covering the cloud's box expanded by `margin`;
// steps are exactly `spacing` (anchored at the requested phase) so that the
// sampled sup is translation-consistent across inputs
std::vector<DVec> base_lattice(const MassCloud& c, const GridSpec& g, double spacing,
                               double margin, int max_per_axis) {
    std::vector<DVec> bases;
    if (c.pts.empty()) return bases;
    std::array<std::vector<double>, 2> axes;
    for (int d = 0; d < g.dim; ++d) {
        double lo = c.lo[d] - margin, hi = c.hi[d] + margin;
        const double span = std::min(hi - lo, g.length);
        double step = spacing;
        int count = static_cast<int>(std::floor(span / step)) + 1;
        if (count > max_per_axis) {
            count = max_per_axis;
            step = span / (count - 1);
        }
        // align the lattice phase to multiples of `spacing` from the origin
        const double start = std::floor((c.anchor[d] + lo) / spacing) * spacing;
        for (int i = 0; i < count; ++i) axes[d].push_back(start + i * step);
    }
    if (g.dim == 1) {
        for (double x : axes[0]) bases.push_back({x, 0.0});
    } else {
        for (double x1 : axes[1])
            for (double x0 : axes[0]) bases.push_back({x0, x1});
    }
    bases.push_back(c.anchor);
    return bases;
}

} // namespace

// ---------------------------------------------------------------------------
// D-L^2_lambda and D-H^s
// ---------------------------------------------------------------------------

double dl2_lambda(const Field& u, double lambda, const DirectionSet& dirs_in,
                  const DecayProfile& profile) {
    const GridSpec& g = u.spec();
    if (lambda > g.length / 2.0) {
        // tiles at or beyond the domain scale: the decay structure saturates
        // on the torus and the l1-in-k sum reduces to a single tile
        return u.l2_norm();
    }
    const DirectionSet dirs = default_dirs(dirs_in, g.dim);
    const MassCloud cloud = mass_cloud(u, profile.mass_threshold * profile.mass_threshold);
    if (cloud.pts.empty()) return 0.0;

    const std::vector<DVec> bases =
        base_lattice(cloud, g, profile.base_spacing_factor * lambda, lambda,
                     profile.max_bases_per_axis);
    const int koff = static_cast<int>(std::ceil(g.length / lambda)) + 2;

    std::vector<double> per_base(bases.size(), 0.0);
    parallel_for(bases.size(), [&](std::size_t bi) {
        const DVec x0 = bases[bi];
        std::vector<double> acc(2 * koff + 1);
        double best = 0;
        for (const DVec& w : dirs.dirs) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const MassPoint& p : cloud.pts) {
                DVec y{min_image(p.x[0] - x0[0], g.length) / lambda,
                       g.dim == 2 ? min_image(p.x[1] - x0[1], g.length) / lambda : 0.0};
                const double t = y[0] * w[0] + y[1] * w[1];
                // nearest tile along the ray (the tiles partition the sausage)
                const int k = static_cast<int>(std::llround(t));
                if (std::abs(k) > koff) continue;
                const double d0 = y[0] - k * w[0];
                const double d1 = y[1] - k * w[1];
                if (d0 * d0 + d1 * d1 < 1.0) acc[k + koff] += p.m2;
            }
            double s = 0;
            for (double a : acc) s += std::sqrt(a);
            best = std::max(best, s);
        }
        per_base[bi] = best;
    });
    return *std::max_element(per_base.begin(), per_base.end());
}

double dhs_norm(const Field& u, double s, const DirectionSet& dirs_in,
                const DecayProfile& profile) {
    const GridSpec& g = u.spec();
    const DirectionSet dirs = default_dirs(dirs_in, g.dim);
    const std::vector<double> lambdas = lp_lambdas(g);
    std::vector<double> terms(lambdas.size(), 0.0);
    parallel_for(lambdas.size(), [&](std::size_t li) {
        const double lambda = lambdas[li];
        Field piece = lp_piece(u, lambda);
        if (piece.l2_norm() < 1e-300) return;
        const double v = dl2_lambda(piece, lambda, dirs, profile);
        terms[li] = std::pow(lambda, 2.0 * s) * v * v;
    });
    double sum = 0;
    for (double t : terms) sum += t;
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Tiling machinery shared by X / Y norms
// ---------------------------------------------------------------------------

namespace {

struct Tile {
    IVec x0;
    std::vector<std::size_t> idx;
    std::vector<double> weight;
};

std::vector<Tile> make_tiles(const GridSpec& g, const std::vector<IVec>& bases) {
    std::vector<Tile> tiles(bases.size());
    const double h = g.h();
    const int lo = static_cast<int>(std::ceil(-BumpSystem::support_radius / h));
    const int hi = static_cast<int>(std::floor(BumpSystem::support_radius / h));
    for (std::size_t b = 0; b < bases.size(); ++b) {
        Tile& t = tiles[b];
        t.x0 = bases[b];
        if (g.dim == 1) {
            const int ic = static_cast<int>(std::llround(t.x0[0] / h));
            for (int o = lo; o <= hi; ++o) {
                const double w = BumpSystem::eval1d((ic + o) * h - t.x0[0]);
                if (w == 0.0) continue;
                t.idx.push_back(static_cast<std::size_t>((((ic + o) % g.points) + g.points) %
                                                         g.points));
                t.weight.push_back(w);
            }
        } else {
            const int ic0 = static_cast<int>(std::llround(t.x0[0] / h));
            const int ic1 = static_cast<int>(std::llround(t.x0[1] / h));
            for (int o1 = lo; o1 <= hi; ++o1) {
                const double w1 = BumpSystem::eval1d((ic1 + o1) * h - t.x0[1]);
                if (w1 == 0.0) continue;
                const int i1 = (((ic1 + o1) % g.points) + g.points) % g.points;
                for (int o0 = lo; o0 <= hi; ++o0) {
                    const double w0 = BumpSystem::eval1d((ic0 + o0) * h - t.x0[0]);
                    if (w0 == 0.0) continue;
                    const int i0 = (((ic0 + o0) % g.points) + g.points) % g.points;
                    t.idx.push_back(static_cast<std::size_t>(i1) * g.points + i0);
                    t.weight.push_back(w0 * w1);
                }
            }
        }
    }
    return tiles;
}

Field aggregate_mass(const std::vector<Field>& frames, const GridSpec& g) {
    Field agg(g);
    for (const Field& f : frames)
        for (std::size_t i = 0; i < agg.size(); ++i)
            agg[i] += std::norm(f[i]);
    for (std::size_t i = 0; i < agg.size(); ++i) agg[i] = std::sqrt(agg[i].real());
    return agg;
}

TimeSeries tile_series(const std::vector<Field>& frames, const Tile& t, const GridSpec& g) {
    const int n = static_cast<int>(frames.size());
    std::vector<double> times(n);
    std::vector<std::vector<cd>> samples(n);
    for (int m = 0; m < n; ++m) {
        times[m] = n > 1 ? static_cast<double>(m) / (n - 1) : 0.0;
        samples[m].resize(t.idx.size());
        const Field& f = frames[m];
        for (std::size_t p = 0; p < t.idx.size(); ++p)
            samples[m][p] = f[t.idx[p]] * t.weight[p];
    }
    return TimeSeries(std::move(times), std::move(samples), g.cell_volume());
}

// pullback frames of the cube piece at ic, straight from per-frame spectra
std::vector<Field> cube_pullback_frames(const std::vector<Field>& hat_frames, const GridSpec& g,
                                        const IVec& ic) {
    const double dxi = g.cube_spacing();
    const DVec c = cube_center(g, ic);
    std::vector<Field> out(hat_frames.size(), Field(g));
    parallel_for(hat_frames.size(), [&](std::size_t m) {
        const double t = hat_frames.size() > 1
                             ? static_cast<double>(m) / (hat_frames.size() - 1)
                             : 0.0;
        Field piece(g);
        const int n = g.points;
        const double dk = g.dk();
        std::size_t idx = 0;
        const int rows = g.dim == 2 ? n : 1;
        for (int j = 0; j < rows; ++j) {
            const double k1 = g.dim == 2 ? g.bin(j) * dk : 0.0;
            const double w1 = g.dim == 2 ? BumpSystem::eval1d((k1 - c[1]) / dxi) : 1.0;
            for (int i = 0; i < n; ++i, ++idx) {
                const double k0 = g.bin(i) * dk;
                const double w = w1 * BumpSystem::eval1d((k0 - c[0]) / dxi);
                if (w == 0.0) { piece[idx] = 0.0; continue; }
                piece[idx] = hat_frames[m][idx] * w *
                             std::polar(1.0, -t * (k0 * k0 + k1 * k1));
            }
        }
        fft::inverse(piece.values(), g.dim, g.points);
        out[m] = std::move(piece);
    });
    return out;
}

double block_norm_from_pullback(const std::vector<Field>& pulled, const GridSpec& g,
                                const TileProfile& profile) {
    Field agg = aggregate_mass(pulled, g);
    const std::vector<IVec> bases = bumps_with_mass(agg, profile.tile_mass_threshold);
    const std::vector<Tile> tiles = make_tiles(g, bases);
    std::vector<double> vals(tiles.size(), 0.0);
    parallel_for(tiles.size(), [&](std::size_t ti) {
        const TimeSeries s = tile_series(pulled, tiles[ti], g).with_zero_prepended();
        vals[ti] = v2_norm(s);
    });
    double sum = 0;
    for (double v : vals) sum += v * v;
    return std::sqrt(sum);
}

std::vector<Field> frame_spectra(const SpacetimeField& u) {
    std::vector<Field> hat(u.frames().begin(), u.frames().end());
    parallel_for(hat.size(), [&](std::size_t m) {
        fft::forward(hat[m].values(), u.spec().dim, u.spec().points);
    });
    return hat;
}

std::vector<IVec> cubes_with_spacetime_mass(const std::vector<Field>& hat_frames,
                                            const GridSpec& g, double thr) {
    const double dxi = g.cube_spacing();
    std::map<std::pair<int, int>, double> mass;
    double total = 0;
    const int n = g.points;
    const int rows = g.dim == 2 ? n : 1;
    std::size_t idx = 0;
    for (int j = 0; j < rows; ++j) {
        const double k1 = g.dim == 2 ? g.bin(j) * g.dk() : 0.0;
        for (int i = 0; i < n; ++i, ++idx) {
            double m2 = 0;
            for (const Field& hf : hat_frames) m2 += std::norm(hf[idx]);
            if (m2 == 0.0) continue;
            total += m2;
            const double k0 = g.bin(i) * g.dk();
            const int c0lo = static_cast<int>(std::ceil(k0 / dxi - 2.0));
            const int c0hi = static_cast<int>(std::floor(k0 / dxi + 2.0));
            const int c1lo = g.dim == 2 ? static_cast<int>(std::ceil(k1 / dxi - 2.0)) : 0;
            const int c1hi = g.dim == 2 ? static_cast<int>(std::floor(k1 / dxi + 2.0)) : 0;
            for (int c1 = c1lo; c1 <= c1hi; ++c1)
                for (int c0 = c0lo; c0 <= c0hi; ++c0) mass[{c0, c1}] += m2;
        }
    }
    std::vector<IVec> out;
    for (const auto& [key, m] : mass)
        if (total > 0 && m >= thr * total) out.push_back({key.first, key.second});
    return out;
}

} // namespace

double x_block_norm(const SpacetimeField& u, const IVec& ic, const TileProfile& profile) {
    (void)ic; // the input is the cube piece already; ic only documents intent
    SpacetimeField v = pullback(u);
    return block_norm_from_pullback(v.frames(), u.spec(), profile);
}

double x_block_norm_transport(const SpacetimeField& u, const IVec& ic,
                              const TileProfile& profile) {
    // pull back along the L_{xi0} transport flow (Prop eqwp gauge): the input is
    // translated by 2t*xi0 with the accompanying scalar phase; the t-independent
    // modulation e^{-ix.xi0} drops out of the V^2 increments.
    const GridSpec& g = u.spec();
    const DVec c = cube_center(g, ic);
    const double c2 = c[0] * c[0] + c[1] * c[1];
    std::vector<Field> moved(u.frames().begin(), u.frames().end());
    parallel_for(moved.size(), [&](std::size_t m) {
        const double t = g.steps > 0 ? g.time(static_cast<int>(m)) : 0.0;
        moved[m] = apply_multiplier(u.frame(static_cast<int>(m)), [&](const DVec& k) {
            return std::polar(1.0, 2.0 * t * (c[0] * k[0] + c[1] * k[1]) - 3.0 * t * c2);
        });
    });
    return block_norm_from_pullback(moved, g, profile);
}

double xs_norm(const SpacetimeField& u, double s, const TileProfile& profile) {
    const GridSpec& g = u.spec();
    const std::vector<Field> hat = frame_spectra(u);
    const std::vector<IVec> cubes = cubes_with_spacetime_mass(hat, g, profile.cube_mass_threshold);
    double sum = 0;
    for (const IVec& ic : cubes) {
        const std::vector<Field> pulled = cube_pullback_frames(hat, g, ic);
        const double block = block_norm_from_pullback(pulled, g, profile);
        const DVec c = cube_center(g, ic);
        const double jap = 1.0 + c[0] * c[0] + c[1] * c[1];
        sum += std::pow(jap, s) * block * block;
    }
    return std::sqrt(sum);
}

double x_lambda_norm(const SpacetimeField& u_lambda, const TileProfile& profile) {
    return xs_norm(u_lambda, 0.0, profile);
}

double dx_lambda_norm(const SpacetimeField& u, double lambda, const DirectionSet& dirs_in,
                      const DecayProfile& profile, const TileProfile& tiles) {
    const GridSpec& g = u.spec();
    if (lambda > g.length)
        throw std::invalid_argument("dx_lambda_norm: tile scale exceeds the domain");
    const DirectionSet dirs = default_dirs(dirs_in, g.dim);

    Field agg = aggregate_mass(u.frames(), g);
    const MassCloud cloud = mass_cloud(agg, profile.mass_threshold * profile.mass_threshold);
    if (cloud.pts.empty()) return 0.0;
    const std::vector<DVec> bases = base_lattice(
        cloud, g, profile.base_spacing_factor * lambda, lambda, profile.max_bases_per_axis);

    // window reach along the ray, in units of lambda
    double reach = 0;
    for (int d = 0; d < g.dim; ++d)
        reach = std::max(reach, std::max(std::abs(cloud.lo[d]), std::abs(cloud.hi[d])));
    const int kmax = static_cast<int>(std::ceil(reach / lambda + BumpSystem::support_radius)) + 1;

    struct Job { DVec x0; DVec w; };
    std::vector<Job> jobs;
    for (const DVec& x0 : bases)
        for (const DVec& w : dirs.dirs) jobs.push_back({x0, w});

    std::vector<double> vals(jobs.size(), 0.0);
    const double agg_total = agg.l2_norm();
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
        const Job& job = jobs[ji];
        double sum_k = 0;
        for (int k = -kmax; k <= kmax; ++k) {
            // window chi(lambda^{-1}(x - x0) - k w)
            Field win(g);
            const double h = g.h();
            const int n = g.points;
            double win_mass = 0;
            std::size_t idx = 0;
            const int rows = g.dim == 2 ? n : 1;
            for (int j = 0; j < rows; ++j) {
                const double y1 = g.dim == 2
                    ? min_image(j * h - job.x0[1], g.length) / lambda - k * job.w[1] : 0.0;
                const double w1 = g.dim == 2 ? BumpSystem::eval1d(y1) : 1.0;
                for (int i = 0; i < n; ++i, ++idx) {
                    if (w1 == 0.0) { win[idx] = 0; continue; }
                    const double y0 = min_image(i * h - job.x0[0], g.length) / lambda -
                                      k * job.w[0];
                    const double wv = w1 * BumpSystem::eval1d(y0);
                    win[idx] = wv;
                    if (wv != 0.0) win_mass += wv * wv * std::norm(agg[idx]);
                }
            }
            if (std::sqrt(win_mass * g.cell_volume()) < profile.mass_threshold * agg_total)
                continue;
            std::vector<Field> wf(u.frames().begin(), u.frames().end());
            for (auto& f : wf)
                for (std::size_t p = 0; p < f.size(); ++p) f[p] *= win[p];
            sum_k += xs_norm(SpacetimeField(g, std::move(wf)), 0.0, tiles);
        }
        vals[ji] = sum_k;
    }
    return *std::max_element(vals.begin(), vals.end());
}

Bracket y_bracket(const SpacetimeField& f, double s, const TileProfile& profile) {
    const GridSpec& g = f.spec();
    const std::vector<Field> hat = frame_spectra(f);
    const std::vector<IVec> cubes = cubes_with_spacetime_mass(hat, g, profile.cube_mass_threshold);
    double lo2 = 0, hi2 = 0;
    for (const IVec& ic : cubes) {
        const std::vector<Field> pulled = cube_pullback_frames(hat, g, ic);
        Field agg = aggregate_mass(pulled, g);
        const std::vector<IVec> bases = bumps_with_mass(agg, profile.tile_mass_threshold);
        const std::vector<Tile> tiles = make_tiles(g, bases);
        std::vector<Du2Bracket> brs(tiles.size());
        parallel_for(tiles.size(), [&](std::size_t ti) {
            brs[ti] = du2_bracket(tile_series(pulled, tiles[ti], g));
        });
        const DVec c = cube_center(g, ic);
        const double w = std::pow(1.0 + c[0] * c[0] + c[1] * c[1], s);
        for (const Du2Bracket& b : brs) {
            lo2 += w * b.lo * b.lo;
            hi2 += w * b.hi * b.hi;
        }
    }
    return Bracket{std::sqrt(lo2), std::sqrt(hi2)};
}

cd duality_pair(const SpacetimeField& u, const SpacetimeField& f) {
    return spacetime_pair(u, f);
}

// ---------------------------------------------------------------------------
// NormReport
// ---------------------------------------------------------------------------

nlohmann::json grid_metadata(const GridSpec& g) {
    return nlohmann::json{{"dim", g.dim}, {"points", g.points}, {"L", g.length},
                          {"M", g.steps}};
}

nlohmann::json NormReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    if (value.lo == value.hi)
        j["value"] = value.lo;
    else
        j["value"] = {value.lo, value.hi};
    j["params"] = params;
    j["grid"] = grid;
    if (proxy_assumption) j["proxy_assumption"] = true;
    return j;
}

NormReport NormReport::point(std::string name, double v, nlohmann::json params,
                             const GridSpec& g) {
    return NormReport{std::move(name), Bracket{v, v}, std::move(params), grid_metadata(g), false};
}

NormReport NormReport::bracket(std::string name, Bracket v, nlohmann::json params,
                               const GridSpec& g) {
    if (v.lo > v.hi + 1e-12)
        throw std::invalid_argument("NormReport: bracket with lo > hi");
    return NormReport{std::move(name), v, std::move(params), grid_metadata(g), true};
}

} // namespace dnls
