#include "dnlslab/wavepackets.hpp"

#include <algorithm>
#include <map>

namespace dnls {

// ---------------------------------------------------------------------------
// Tube geometry
// ---------------------------------------------------------------------------

std::array<double, 2> tube_overlap_window(const DVec& d, const DVec& w, int dim) {
    const double w2 = w[0] * w[0] + (dim == 2 ? w[1] * w[1] : 0.0);
    const double d2 = d[0] * d[0] + (dim == 2 ? d[1] * d[1] : 0.0);
    const double dw = d[0] * w[0] + (dim == 2 ? d[1] * w[1] : 0.0);
    if (w2 < 1e-30) return d2 <= 4.0 ? std::array<double, 2>{0.0, 1.0}
                                     : std::array<double, 2>{1.0, 0.0};
    // |d + 2tw|^2 <= 4
    const double a = 4.0 * w2, b = 4.0 * dw, c = d2 - 4.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0) return {1.0, 0.0};
    const double sq = std::sqrt(disc);
    double t0 = (-b - sq) / (2.0 * a), t1 = (-b + sq) / (2.0 * a);
    t0 = std::max(t0, 0.0);
    t1 = std::min(t1, 1.0);
    return {t0, t1};
}

namespace {

double dist_point_segment(const DVec& p, const DVec& a, const DVec& b) {
    const DVec ab{b[0] - a[0], b[1] - a[1]};
    const DVec ap{p[0] - a[0], p[1] - a[1]};
    const double ab2 = ab[0] * ab[0] + ab[1] * ab[1];
    double t = ab2 > 0 ? (ap[0] * ab[0] + ap[1] * ab[1]) / ab2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p[0] - (a[0] + t * ab[0]);
    const double dy = p[1] - (a[1] + t * ab[1]);
    return std::hypot(dx, dy);
}

// radius of the smallest ball enclosing three points (2-d)
double seb_radius(const DVec& a, const DVec& b, const DVec& c) {
    auto dist = [](const DVec& u, const DVec& v) {
        return std::hypot(u[0] - v[0], u[1] - v[1]);
    };
    const DVec* pts[3] = {&a, &b, &c};
    double best = std::numeric_limits<double>::infinity();
    // pairwise midpoints
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const DVec mid{(pts[i]->at(0) + pts[j]->at(0)) / 2,
                           (pts[i]->at(1) + pts[j]->at(1)) / 2};
            const double r = dist(*pts[i], *pts[j]) / 2;
            const int k = 3 - i - j;
            if (dist(mid, *pts[k]) <= r + 1e-12) best = std::min(best, r);
        }
    if (std::isfinite(best)) return best;
    // circumcenter
    const double d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if (std::abs(d) < 1e-14) {
        // collinear: span of the farthest pair
        double r = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) r = std::max(r, dist(*pts[i], *pts[j]) / 2);
        return r;
    }
    const double a2 = a[0] * a[0] + a[1] * a[1];
    const double b2 = b[0] * b[0] + b[1] * b[1];
    const double c2 = c[0] * c[0] + c[1] * c[1];
    const DVec cc{(a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
                  (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d};
    return dist(cc, a);
}

} // namespace

long tube_triples(const IVec& xi, const IVec& eta, int box) {
    auto mag = [](const IVec& v) { return std::hypot((double)v[0], (double)v[1]); };
    const double axi = mag(xi), aeta = mag(eta);
    if (aeta < 1.0) throw std::invalid_argument("tube_triples: need |eta| >= 1");
    if (axi < aeta) throw std::invalid_argument("tube_triples: need |xi| >= |eta|");
    if (box < 1) throw std::invalid_argument("tube_triples: box too small to contain any tube");

    const DVec dxi{(double)xi[0], (double)xi[1]};
    const DVec deta{(double)eta[0], (double)eta[1]};
    const DVec dzeta{dxi[0] + deta[0], dxi[1] + deta[1]};

    // slab H generated by the origin xi-tube, thickened along eta; by lattice
    // translation invariance the (H, P) max can be searched with H fixed here.
    const DVec segA{-2.0 * deta[0], -2.0 * deta[1]};
    const DVec segB{2.0 * deta[0], 2.0 * deta[1]};

    const int rq = std::min<int>(box, static_cast<int>(std::ceil(2.0 * aeta + 4.0)));
    const int rp = std::min<int>(box, static_cast<int>(std::ceil(4.0 * aeta + 6.0)));

    std::vector<IVec> q_in_h, r_in_h;
    for (int y = -rq; y <= rq; ++y)
        for (int x = -rq; x <= rq; ++x) {
            const DVec b{(double)x, (double)y};
            if (dist_point_segment(b, segA, segB) <= 2.0) q_in_h.push_back({x, y});
            const DVec b1{b[0] + 2.0 * deta[0], b[1] + 2.0 * deta[1]};
            if (dist_point_segment(b, segA, segB) <= 2.0 &&
                dist_point_segment(b1, segA, segB) <= 2.0)
                r_in_h.push_back({x, y});
        }

    std::vector<IVec> p_bases;
    for (int y = -rp; y <= rp; ++y)
        for (int x = -rp; x <= rp; ++x) p_bases.push_back({x, y});

    const double tstep = 1.0 / (8.0 * std::max(1.0, axi));
    std::vector<long> counts(p_bases.size(), 0);
    parallel_for(p_bases.size(), [&](std::size_t pi) {
        const DVec p{(double)p_bases[pi][0], (double)p_bases[pi][1]};
        // candidate Q: window of P against Q nonempty
        std::vector<std::pair<IVec, std::array<double, 2>>> qs, rs;
        for (const IVec& q : q_in_h) {
            const DVec d{p[0] - q[0], p[1] - q[1]};
            const DVec w{deta[0] - dxi[0], deta[1] - dxi[1]};
            const auto win = tube_overlap_window(d, w, 2);
            if (win[0] <= win[1]) qs.push_back({q, win});
        }
        for (const IVec& r : r_in_h) {
            const DVec d{p[0] - r[0], p[1] - r[1]};
            const DVec w{-dxi[0], -dxi[1]};
            const auto win = tube_overlap_window(d, w, 2);
            if (win[0] <= win[1]) rs.push_back({r, win});
        }
        long cnt = 0;
        for (const auto& [q, winq] : qs)
            for (const auto& [r, winr] : rs) {
                const DVec dqr{(double)(q[0] - r[0]), (double)(q[1] - r[1])};
                const auto winqr = tube_overlap_window(dqr, {-deta[0], -deta[1]}, 2);
                const double lo = std::max({winq[0], winr[0], winqr[0]});
                const double hi = std::min({winq[1], winr[1], winqr[1]});
                if (lo > hi) continue;
                bool found = false;
                const int nsamp = std::max(2, static_cast<int>(std::ceil((hi - lo) / tstep)));
                for (int sidx = 0; sidx <= nsamp && !found; ++sidx) {
                    const double t = lo + (hi - lo) * sidx / nsamp;
                    const DVec cp{p[0] + 2 * t * deta[0], p[1] + 2 * t * deta[1]};
                    const DVec cq{q[0] + 2 * t * dxi[0], q[1] + 2 * t * dxi[1]};
                    const DVec cr{r[0] + 2 * t * dzeta[0], r[1] + 2 * t * dzeta[1]};
                    if (seb_radius(cp, cq, cr) <= 1.0) found = true;
                }
                if (found) ++cnt;
            }
        counts[pi] = cnt;
    });
    return *std::max_element(counts.begin(), counts.end());
}

// ---------------------------------------------------------------------------
// Gauge transform along the L_{xi0} flow
// ---------------------------------------------------------------------------

namespace {

// v0_m = e^{-i x.xi0} e^{-3 i t |xi0|^2} T_{2 t xi0} u_m; the inverse applies
// the factors in the opposite order (pointwise phase and translation do not
// commute).
std::vector<Field> to_gauge(const SpacetimeField& u, const DVec& c, bool inverse) {
    const GridSpec& g = u.spec();
    const double c2 = c[0] * c[0] + c[1] * c[1];
    std::vector<Field> out(u.frames().begin(), u.frames().end());
    parallel_for(out.size(), [&](std::size_t m) {
        const double t = g.steps > 0 ? g.time(static_cast<int>(m)) : 0.0;
        const double sgn = inverse ? -1.0 : 1.0;
        auto translate = [&](const Field& f) {
            return apply_multiplier(f, [&](const DVec& k) {
                return std::polar(1.0, sgn * 2.0 * t * (c[0] * k[0] + c[1] * k[1]));
            });
        };
        auto phase = [&](Field f) {
            const double h = g.h();
            const int n = g.points;
            std::size_t idx = 0;
            const int rows = g.dim == 2 ? n : 1;
            for (int j = 0; j < rows; ++j)
                for (int i = 0; i < n; ++i, ++idx) {
                    const double xc = c[0] * (i * h) + (g.dim == 2 ? c[1] * (j * h) : 0.0);
                    f[idx] *= std::polar(1.0, sgn * (-xc - 3.0 * t * c2));
                }
            return f;
        };
        const Field& in = u.frame(static_cast<int>(m));
        out[m] = inverse ? translate(phase(in)) : phase(translate(in));
    });
    return out;
}

struct TileGeometry {
    IVec x0;
    std::vector<std::size_t> idx;
    std::vector<double> bump;          // phi_{x0} values
    std::vector<DVec> offset;          // y = x - x0 (min-image)
};

std::vector<TileGeometry> tile_geometry(const GridSpec& g, const std::vector<IVec>& bases) {
    std::vector<TileGeometry> tiles(bases.size());
    const double h = g.h();
    const int lo = static_cast<int>(std::ceil(-BumpSystem::support_radius / h));
    const int hi = static_cast<int>(std::floor(BumpSystem::support_radius / h));
    for (std::size_t b = 0; b < bases.size(); ++b) {
        TileGeometry& t = tiles[b];
        t.x0 = bases[b];
        const int ic0 = static_cast<int>(std::llround(t.x0[0] / h));
        const int ic1 = g.dim == 2 ? static_cast<int>(std::llround(t.x0[1] / h)) : 0;
        const int lo1 = g.dim == 2 ? lo : 0, hi1 = g.dim == 2 ? hi : 0;
        for (int o1 = lo1; o1 <= hi1; ++o1) {
            const double y1 = g.dim == 2 ? (ic1 + o1) * h - t.x0[1] : 0.0;
            const double w1 = g.dim == 2 ? BumpSystem::eval1d(y1) : 1.0;
            if (w1 == 0.0) continue;
            const int i1 = g.dim == 2 ? (((ic1 + o1) % g.points) + g.points) % g.points : 0;
            for (int o0 = lo; o0 <= hi; ++o0) {
                const double y0 = (ic0 + o0) * h - t.x0[0];
                const double w0 = BumpSystem::eval1d(y0);
                if (w0 == 0.0) continue;
                const int i0 = (((ic0 + o0) % g.points) + g.points) % g.points;
                t.idx.push_back(g.dim == 2 ? static_cast<std::size_t>(i1) * g.points + i0
                                           : static_cast<std::size_t>(i0));
                t.bump.push_back(w0 * w1);
                t.offset.push_back({y0, y1});
            }
        }
    }
    return tiles;
}

double hermite1d(int q, double x) {
    const double h0 = std::pow(kPi, -0.25) * std::exp(-x * x / 2.0);
    if (q == 0) return h0;
    double hm = h0, hc = std::sqrt(2.0) * x * h0;
    for (int n = 1; n < q; ++n) {
        const double hn = std::sqrt(2.0 / (n + 1.0)) * x * hc - std::sqrt(n / (n + 1.0)) * hm;
        hm = hc;
        hc = hn;
    }
    return hc;
}

// truncated-Hermite profile basis on the tile's offset grid, ordered by total
// degree, Gram-Schmidt orthonormalized in the grid L^2 inner product.
std::vector<std::vector<double>> profile_basis(const TileGeometry& tile, int J, int dim,
                                               double cellvol) {
    std::vector<std::array<int, 2>> degrees;
    if (dim == 1) {
        for (int q = 0; q < J; ++q) degrees.push_back({q, 0});
    } else {
        for (int total = 0; static_cast<int>(degrees.size()) < J; ++total)
            for (int q0 = total; q0 >= 0 && static_cast<int>(degrees.size()) < J; --q0)
                degrees.push_back({q0, total - q0});
    }
    const std::size_t P = tile.idx.size();
    std::vector<std::vector<double>> basis;
    for (const auto& dg : degrees) {
        std::vector<double> v(P);
        for (std::size_t p = 0; p < P; ++p) {
            const DVec& y = tile.offset[p];
            double val = hermite1d(dg[0], y[0]);
            if (dim == 2) val *= hermite1d(dg[1], y[1]);
            val *= radial_cutoff(std::hypot(y[0], y[1]));
            v[p] = val;
        }
        // modified Gram-Schmidt against the accepted profiles
        double pre = 0;
        for (double x : v) pre += x * x;
        pre = std::sqrt(pre * cellvol);
        for (const auto& q : basis) {
            double dot = 0;
            for (std::size_t p = 0; p < P; ++p) dot += q[p] * v[p];
            dot *= cellvol;
            for (std::size_t p = 0; p < P; ++p) v[p] -= dot * q[p];
        }
        double post = 0;
        for (double x : v) post += x * x;
        post = std::sqrt(post * cellvol);
        if (post < 1e-8 * std::max(pre, 1e-30)) {
            basis.emplace_back(P, 0.0); // degenerate on this grid: dead slot
            continue;
        }
        for (auto& x : v) x /= post;
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<Field> reconstruct_gauge(const PacketSet& p, int Jmax) {
    const GridSpec& g = p.spec;
    std::vector<Field> v0(g.steps + 1, Field(g));
    // group entries by tile so each profile basis is built once
    std::map<std::pair<int, int>, std::vector<const PacketEntry*>> by_tile;
    for (const PacketEntry& e : p.entries)
        if (e.j < Jmax) by_tile[{e.x0[0], e.x0[1]}].push_back(&e);
    for (const auto& [key, list] : by_tile) {
        const std::vector<TileGeometry> tg =
            tile_geometry(g, {IVec{key.first, key.second}});
        const auto basis = profile_basis(tg[0], p.J, g.dim, g.cell_volume());
        for (const PacketEntry* e : list) {
            const auto& chi = basis[e->j];
            for (int m = 0; m <= g.steps; ++m) {
                const cd a = e->amplitude[m];
                if (a == cd(0, 0)) continue;
                Field& f = v0[m];
                for (std::size_t q = 0; q < tg[0].idx.size(); ++q)
                    f[tg[0].idx[q]] += a * chi[q];
            }
        }
    }
    return v0;
}

} // namespace

PacketSet decompose(const SpacetimeField& u, const IVec& ic, int J,
                    double tile_mass_threshold) {
    if (J < 1) throw std::invalid_argument("decompose: need J >= 1");
    const GridSpec& g = u.spec();
    const DVec c = cube_center(g, ic);

    PacketSet out;
    out.spec = g;
    out.ic = ic;
    out.J = J;

    const std::vector<Field> v0 = to_gauge(u, c, false);

    Field agg(g);
    for (const Field& f : v0)
        for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += std::norm(f[i]);
    for (std::size_t i = 0; i < agg.size(); ++i) agg[i] = std::sqrt(agg[i].real());
    const std::vector<IVec> bases = bumps_with_mass(agg, tile_mass_threshold);
    const std::vector<TileGeometry> tiles = tile_geometry(g, bases);

    const double cv = g.cell_volume();
    for (const TileGeometry& tile : tiles) {
        const auto basis = profile_basis(tile, J, g.dim, cv);
        std::vector<PacketEntry> local(J);
        for (int j = 0; j < J; ++j) {
            local[j].x0 = tile.x0;
            local[j].j = j;
            local[j].amplitude.assign(g.steps + 1, cd(0, 0));
        }
        for (int m = 0; m <= g.steps; ++m) {
            const Field& f = v0[m];
            for (int j = 0; j < J; ++j) {
                const auto& chi = basis[j];
                cd a(0, 0);
                for (std::size_t q = 0; q < tile.idx.size(); ++q)
                    a += f[tile.idx[q]] * tile.bump[q] * chi[q];
                local[j].amplitude[m] = a * cv;
            }
        }
        for (int j = 0; j < J; ++j) {
            double peak = 0;
            for (cd a : local[j].amplitude) peak = std::max(peak, std::abs(a));
            if (peak > 1e-300) out.entries.push_back(std::move(local[j]));
        }
    }

    // residual: exact by construction when carried along
    const std::vector<Field> v0_rec = reconstruct_gauge(out, J);
    std::vector<Field> rec = to_gauge(SpacetimeField(g, v0_rec), c, true);
    SpacetimeField res = u;
    res -= SpacetimeField(g, std::move(rec));
    out.residual = std::move(res);
    return out;
}

SpacetimeField reconstruct(const PacketSet& p) {
    const std::vector<Field> v0 = reconstruct_gauge(p, p.J);
    SpacetimeField rec(p.spec,
                       to_gauge(SpacetimeField(p.spec, v0), cube_center(p.spec, p.ic), true));
    if (p.residual) rec += *p.residual;
    return rec;
}

SpacetimeField reconstruct_truncated(const PacketSet& p, int J) {
    const std::vector<Field> v0 = reconstruct_gauge(p, J);
    return SpacetimeField(p.spec,
                          to_gauge(SpacetimeField(p.spec, v0), cube_center(p.spec, p.ic), true));
}

std::vector<double> PacketSet::coefficient_tail() const {
    std::vector<double> tail(J, 0.0);
    for (const PacketEntry& e : entries) {
        const double v = v2_norm(
            TimeSeries::scalars_uniform(e.amplitude).with_zero_prepended());
        tail[e.j] += v * v;
    }
    return tail;
}

nlohmann::json PacketSet::to_json() const {
    nlohmann::json j;
    j["cube"] = {ic[0], ic[1]};
    j["J"] = J;
    j["grid"] = {{"dim", spec.dim}, {"points", spec.points}, {"L", spec.length},
                 {"M", spec.steps}};
    nlohmann::json ents = nlohmann::json::array();
    for (const PacketEntry& e : entries) {
        nlohmann::json ej;
        ej["x0"] = {e.x0[0], e.x0[1]};
        ej["j"] = e.j;
        nlohmann::json amps = nlohmann::json::array();
        for (cd a : e.amplitude) amps.push_back({a.real(), a.imag()});
        ej["a"] = std::move(amps);
        ents.push_back(std::move(ej));
    }
    j["entries"] = std::move(ents);
    j["has_residual"] = residual.has_value();
    return j;
}

} // namespace dnls
