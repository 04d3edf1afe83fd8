#include <doctest.h>

#include "dnlslab/parametrix.hpp"

using namespace dnls;

namespace {

Field constant_field(const GridSpec& g, cd v) {
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = v;
    return f;
}

SpacetimeField free_orbit(const Field& datum) {
    const GridSpec& g = datum.spec();
    std::vector<Field> frames;
    for (int m = 0; m <= g.steps; ++m) frames.push_back(free_propagate(datum, g.time(m)));
    return SpacetimeField(g, frames);
}

double rel_l2(const SpacetimeField& a, const SpacetimeField& b) {
    SpacetimeField d = a;
    d -= b;
    const double nb = b.l2_norm();
    return nb > 0 ? d.l2_norm() / nb : d.l2_norm();
}

// wide, low-frequency, imaginary first-order coefficient: small delta at
// tunable M (the Prop low2 mechanism)
FirstOrderSymbol wide_symbol(const GridSpec& g, double gamma) {
    Field c1(g);
    const double W = g.length / 8.0;
    for (int i = 0; i < g.points; ++i) {
        const double x = i * g.h() - g.length / 2.0;
        c1[i] = cd(0, gamma * radial_cutoff(std::abs(x) / W));
    }
    return FirstOrderSymbol::from_static(g, {c1}, Field(g));
}

} // namespace

TEST_CASE("local solution: free case, zero case, constant symbols") {
    const GridSpec g{1, 256, 16.0, 32};
    Rng rng = make_rng(71);
    Field datum = random_band_limited(g, rng, 3.0);
    const IVec ic{1, 0}, x0{8, 0};

    // a = 0, f = 0: exactly the free evolution of the localized datum
    LinearProblem p0(FirstOrderSymbol::zero(g), datum, SpacetimeField(g));
    SpacetimeField loc = local_solution(p0, x0, ic);
    SpacetimeField expect = free_orbit(spatial_bump(cube_piece(datum, ic), x0));
    CHECK(rel_l2(loc, expect) < 1e-12);

    // g = 0, f = 0
    LinearProblem pz(FirstOrderSymbol::zero(g), Field(g), SpacetimeField(g));
    CHECK(local_solution(pz, x0, ic).l2_norm() == 0.0);

    // purely imaginary constant c0 = i r: weight e^{rt} times the free orbit
    const double r = 0.6;
    FirstOrderSymbol ai =
        FirstOrderSymbol::from_static(g, {Field(g)}, constant_field(g, cd(0, r)));
    LinearProblem pi_(ai, datum, SpacetimeField(g));
    SpacetimeField li = local_solution(pi_, x0, ic);
    double err = 0, ref = 0;
    for (int m = 0; m <= g.steps; ++m) {
        Field want = expect.frame(m);
        want *= std::exp(cd(r * g.time(m), 0));
        Field d = li.frame(m);
        d -= want;
        err = std::max(err, d.l2_norm());
        ref = std::max(ref, want.l2_norm());
    }
    CHECK(err < 1e-10 * ref);

    // real constant c0 = r: unitary phase weight e^{-i r t}
    FirstOrderSymbol ar =
        FirstOrderSymbol::from_static(g, {Field(g)}, constant_field(g, cd(r, 0)));
    LinearProblem pr(ar, datum, SpacetimeField(g));
    SpacetimeField lr = local_solution(pr, x0, ic);
    for (int m : {0, g.steps / 2, g.steps}) {
        Field want = expect.frame(m);
        want *= std::exp(cd(0, -r * g.time(m)));
        Field d = lr.frame(m);
        d -= want;
        CHECK(d.l2_norm() < 1e-10 * (want.l2_norm() + 1e-300));
    }
}

TEST_CASE("residual: free solutions and manufactured solutions") {
    const GridSpec g{1, 256, 16.0, 256};
    Rng rng = make_rng(72);
    Field datum = random_band_limited(g, rng, 2.0);

    // exact free solution: residual at the roundoff floor
    SpacetimeField orbit = free_orbit(datum);
    LinearProblem p0(FirstOrderSymbol::zero(g), datum, SpacetimeField(g));
    CHECK(residual(p0, orbit).l2_norm() < 1e-10 * orbit.l2_norm());

    // manufactured solution u* = e^{i omega t} P(t) g with symbol a:
    // L_a u* = -omega u* - a(x,D) u*  (time derivative is analytic)
    const double omega = kPi;
    FirstOrderSymbol a = wide_symbol(g, 0.4);
    std::vector<Field> su(g.steps + 1, Field(g));
    std::vector<Field> sf(g.steps + 1, Field(g));
    for (int m = 0; m <= g.steps; ++m) {
        Field um = free_propagate(datum, g.time(m));
        um *= std::polar(1.0, omega * g.time(m));
        Field fm = um;
        fm *= cd(-omega, 0);
        fm -= apply_symbol(a, um, m);
        su[m] = std::move(um);
        sf[m] = std::move(fm);
    }
    SpacetimeField ustar(g, su), fstar(g, sf);
    LinearProblem pm(a, ustar.frame(0), fstar);
    const double res = residual(pm, ustar).l2_norm();
    MESSAGE("manufactured residual ", res / ustar.l2_norm());
    CHECK(res < 1e-8 * ustar.l2_norm());
}

TEST_CASE("assemble: exact for a = 0, matches the local-solution sum") {
    const GridSpec g{1, 256, 16.0, 64};
    Rng rng = make_rng(73);
    Field datum = random_cube_packet(g, rng, {1, 0}, {8.0, 0}, 1.4);
    // low-frequency smooth forcing
    std::vector<Field> ff(g.steps + 1);
    Field fbase = random_cube_packet(g, rng, {0, 0}, {7.0, 0}, 1.4);
    for (int m = 0; m <= g.steps; ++m) {
        ff[m] = fbase;
        ff[m] *= cd(std::cos(kTwoPi * g.time(m)), 0.3);
    }
    LinearProblem p(FirstOrderSymbol::zero(g), datum, SpacetimeField(g, ff));
    SpacetimeField u = assemble(p);

    // initial value equals the datum to partition accuracy
    Field d0 = u.frame(0);
    d0 -= datum;
    CHECK(d0.l2_norm() < 1e-10 * datum.l2_norm());

    // residual at quadrature accuracy, halving M quarters it (trapezoid)
    const double r1 = residual(p, u).l2_norm();
    const GridSpec g2{1, 256, 16.0, 128};
    std::vector<Field> ff2(g2.steps + 1);
    for (int m = 0; m <= g2.steps; ++m) {
        ff2[m] = Field(g2, fbase.values());
        ff2[m] *= cd(std::cos(kTwoPi * g2.time(m)), 0.3);
    }
    LinearProblem p2(FirstOrderSymbol::zero(g2), Field(g2, datum.values()),
                     SpacetimeField(g2, ff2));
    const double r2 = residual(p2, assemble(p2)).l2_norm();
    MESSAGE("assemble a=0 residuals ", r1, " -> ", r2, " (ratio ", r1 / r2, ")");
    CHECK(r1 / r2 > 2.5);
    CHECK(r1 / r2 < 6.0);
    CHECK(r1 < 2e-2 * (datum.l2_norm() + p.f.l2_norm()));

    // assemble equals the sum of local solutions over (x0, cube)
    const GridSpec gs{1, 128, 16.0, 24};
    Field small = random_cube_packet(gs, rng, {1, 0}, {8.0, 0}, 1.0);
    FirstOrderSymbol a = wide_symbol(gs, 0.3);
    std::vector<Field> sf(gs.steps + 1);
    Field sfb = random_cube_packet(gs, rng, {0, 0}, {8.0, 0}, 1.0);
    for (int m = 0; m <= gs.steps; ++m) {
        sf[m] = sfb;
        sf[m] *= cd(std::sin(kPi * gs.time(m)), 0.2);
    }
    LinearProblem psmall(a, small, SpacetimeField(gs, sf));
    SpacetimeField direct = assemble(psmall);
    SpacetimeField summed(gs);
    for (int icx = -4; icx <= 4; ++icx)
        for (int x0 = 0; x0 < 16; ++x0) {
            const Field gloc = spatial_bump(cube_piece(small, {icx, 0}), {x0, 0});
            const Field floc = spatial_bump(cube_piece(sfb, {icx, 0}), {x0, 0});
            if (gloc.l2_norm() + floc.l2_norm() <
                1e-12 * (small.l2_norm() + sfb.l2_norm()))
                continue;
            summed += local_solution(psmall, {x0, 0}, {icx, 0});
        }
    CHECK(rel_l2(direct, summed) < 1e-9);
}

TEST_CASE("assemble residual scales linearly with delta") {
    // the residual law carries e^M; keeping M << 1 across the family makes the
    // log-log slope against delta read 1
    const GridSpec g{1, 512, 32.0, 48};
    Rng rng = make_rng(74);
    Field datum = random_cube_packet(g, rng, {2, 0}, {16.0, 0}, 1.2);
    std::vector<double> eps{1.0, 0.5, 0.25}, res, deltas;
    for (double e : eps) {
        FirstOrderSymbol a = wide_symbol(g, 0.05).scaled(cd(e, 0));
        const SymbolClassReport rep = classify(a, 24);
        LinearProblem p(a, datum, SpacetimeField(g));
        res.push_back(residual(p, assemble(p)).l2_norm());
        deltas.push_back(rep.delta);
    }
    const double slope = fit_loglog(deltas, res).slope;
    MESSAGE("residual vs delta slope ", slope);
    CHECK(std::abs(slope - 1.0) < 0.2);
}

TEST_CASE("picard: a = 0 in one step; constant-coefficient oracle") {
    const GridSpec g{1, 256, 16.0, 64};
    Rng rng = make_rng(75);
    Field datum = random_cube_packet(g, rng, {1, 0}, {8.0, 0}, 1.4);
    LinearProblem p0(FirstOrderSymbol::zero(g), datum, SpacetimeField(g));
    PicardOptions opts;
    opts.track_y_brackets = false;
    auto [u0, d0] = picard_solve(p0, 1e-6, 4, opts);
    CHECK(d0.converged);
    CHECK(d0.iterations <= 1);

    // constant first-order symbol: exact Fourier-multiplier solution
    // e^{i t (|k|^2 - a(k))}, a(k) = c1 k + c0
    const GridSpec gc{1, 256, 16.0, 512};
    Field datc = random_cube_packet(gc, rng, {0, 0}, {8.0, 0}, 1.4);
    const double c1 = 0.05, c0 = 0.2;
    FirstOrderSymbol ac = FirstOrderSymbol::from_static(
        gc, {constant_field(gc, c1)}, constant_field(gc, c0));
    LinearProblem pc(ac, datc, SpacetimeField(gc));
    auto [uc, dc] = picard_solve(pc, 1e-8, 8, opts);
    CHECK(dc.converged);
    CHECK(dc.iterations <= 8);
    SpacetimeField oracle(gc);
    for (int m = 0; m <= gc.steps; ++m) {
        oracle.frame(m) = apply_multiplier(datc, [&](const DVec& k) {
            return std::polar(1.0, gc.time(m) * (k[0] * k[0] - (c1 * k[0] + c0)));
        });
    }
    const double err = rel_l2(uc, oracle);
    MESSAGE("constant-coefficient oracle error ", err, " iterations ", dc.iterations);
    CHECK(err < 1e-6);

    // init condition exact
    Field di = uc.frame(0);
    di -= datc;
    CHECK(di.l2_norm() < 1e-10 * datc.l2_norm());
}

TEST_CASE("picard: linearity and contraction diagnostics") {
    const GridSpec g{1, 512, 32.0, 32};
    Rng rng = make_rng(76);
    FirstOrderSymbol a = wide_symbol(g, 0.1);
    Field g1 = random_cube_packet(g, rng, {1, 0}, {16.0, 0}, 1.2);
    Field g2 = random_cube_packet(g, rng, {2, 0}, {17.0, 0}, 1.2);
    PicardOptions opts;
    opts.track_y_brackets = false;
    // the trapezoid Duhamel quadrature leaves a residual floor ~(k^2 dt)^2, so
    // the tolerance must sit above it at this M
    const double tol = 1e-5;
    auto [u1, d1] = picard_solve(LinearProblem(a, g1, SpacetimeField(g)), tol, 12, opts);
    auto [u2, d2] = picard_solve(LinearProblem(a, g2, SpacetimeField(g)), tol, 12, opts);
    Field gsum = g1;
    gsum += g2;
    auto [usum, dsum] = picard_solve(LinearProblem(a, gsum, SpacetimeField(g)), tol, 12, opts);
    SpacetimeField lin = u1;
    lin += u2;
    CHECK(rel_l2(usum, lin) < 1e-4);

    // measured contraction: every recorded ratio below 1
    for (double r : d1.ratios) CHECK(r < 1.0);
    CHECK(!d1.residual_l2.empty());
    CHECK(d1.converged);

    // diagnostics serialize
    const auto js = d1.to_json();
    CHECK(js["converged"] == true);
}

TEST_CASE("picard frequency leakage decays away from the data cube") {
    const GridSpec g{1, 256, 16.0, 32};
    Rng rng = make_rng(77);
    Field datum = random_cube_packet(g, rng, {0, 0}, {8.0, 0}, 1.2);
    FirstOrderSymbol a = wide_symbol(g, 0.5);
    LinearProblem p(a, datum, SpacetimeField(g));
    SpacetimeField u0 = assemble(p);
    SpacetimeField r = residual(p, u0);
    // spectral residual mass per cube distance
    std::vector<double> dist, mass;
    for (int icx = 1; icx <= 6; ++icx) {
        double m2 = 0;
        for (int m = 0; m <= g.steps; ++m) {
            const double nm = cube_piece(r.frame(m), {icx, 0}).l2_norm();
            m2 += nm * nm;
        }
        if (m2 > 0) {
            dist.push_back(1.0 + icx * g.cube_spacing());
            mass.push_back(std::sqrt(m2));
        }
    }
    const double slope = fit_loglog(dist, mass).slope;
    MESSAGE("leakage slope ", slope);
    CHECK(slope <= -2.0);
}

TEST_CASE("picard throws with diagnostics on non-convergence") {
    const GridSpec g{1, 128, 16.0, 16};
    Rng rng = make_rng(78);
    Field datum = random_cube_packet(g, rng, {1, 0}, {8.0, 0}, 1.2);
    // grossly inadmissible symbol
    Field c1(g);
    for (int i = 0; i < g.points; ++i)
        c1[i] = cd(0, 3.0 * std::sin(kTwoPi * i / g.points));
    FirstOrderSymbol bad = FirstOrderSymbol::from_static(g, {c1}, Field(g));
    LinearProblem p(bad, datum, SpacetimeField(g));
    PicardOptions opts;
    opts.track_y_brackets = false;
    try {
        picard_solve(p, 1e-12, 2, opts);
        CHECK(false);
    } catch (const PicardError& e) {
        CHECK(!e.diagnostics.residual_l2.empty());
        CHECK(!e.diagnostics.converged);
    }
}
