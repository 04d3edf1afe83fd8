#include <doctest.h>

#include "dnlslab/dnls.hpp"

using namespace dnls;

namespace {

double rel_l2(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    const double nb = b.l2_norm();
    return nb > 0 ? d.l2_norm() / nb : d.l2_norm();
}

Nonlinearity u_dx_u() {
    Nonlinearity B;
    B.terms.push_back({cd(1, 0), false, false, 0});
    return B;
}

} // namespace

TEST_CASE("rescale: identity, plane waves, inverse") {
    const GridSpec g{1, 256, 16.0, 8};
    Rng rng = make_rng(81);
    Field u = random_band_limited(g, rng, 4.0);
    CHECK(rel_l2(rescale(u, 1.0), u) == 0.0);
    CHECK_THROWS(rescale(u, 0.3));          // not a power of two
    CHECK_THROWS(rescale(u, 0.0));
    CHECK_THROWS(rescale(u, 1.0 / 1024, 1u << 12)); // memory budget

    // plane wave: eps e^{i eps k x} on the doubled torus
    const int bin = 6;
    Field pw = plane_wave(g, {bin, 0});
    Field r = rescale(pw, 0.5);
    REQUIRE(r.spec().points == 512);
    REQUIRE(r.spec().length == 32.0);
    const double k = bin * g.dk();
    double err = 0;
    for (int i = 0; i < r.spec().points; ++i) {
        const cd expect = 0.5 * std::polar(1.0, 0.5 * k * (i * r.spec().h()));
        err = std::max(err, std::abs(r[i] - expect));
    }
    CHECK(err < 1e-12);
    // L-infinity scales exactly by eps
    CHECK(r.linf_norm() == doctest::Approx(0.5 * pw.linf_norm()).epsilon(1e-12));

    // unscale inverts rescale for band-limited data
    Field back = unscale(rescale(u, 0.25), 0.25, g);
    CHECK(rel_l2(back, u) < 1e-12);
}

TEST_CASE("split low/high") {
    const GridSpec g{1, 256, 16.0, 8};
    Rng rng = make_rng(82);
    Field u = random_band_limited(g, rng, 6.0);
    auto [low, high] = split_low_high(u);
    Field sum = low;
    sum += high;
    CHECK(rel_l2(sum, u) < 1e-12);

    Field pure_low = random_band_limited(g, rng, 0.9);
    auto [l2, h2] = split_low_high(pure_low);
    CHECK(rel_l2(l2, pure_low) < 1e-12);
    CHECK(h2.l2_norm() < 1e-12);
}

TEST_CASE("forcing N and the A1 term") {
    const GridSpec g{1, 256, 16.0, 8};
    CHECK(forcing_N(Field(g), u_dx_u()).l2_norm() == 0.0);

    // B = 0: N(low) = Laplacian; plane-wave eigenfunction
    const int bin = 2;
    Field pw = plane_wave(g, {bin, 0});
    const double k = bin * g.dk();
    Field n0 = forcing_N(pw, Nonlinearity{});
    Field expect = pw;
    expect *= cd(-k * k, 0);
    CHECK(rel_l2(n0, expect) < 1e-12);

    // A1 zeros
    Rng rng = make_rng(83);
    Field low = random_band_limited(g, rng, 0.9);
    SpacetimeField v(g);
    CHECK(linear_term_A1(v, low, u_dx_u()).l2_norm() == 0.0);
    CHECK(linear_term_A1(SpacetimeField(g), Field(g), u_dx_u()).l2_norm() == 0.0);
}

TEST_CASE("bilinear B: plane waves and finite differences") {
    const GridSpec g{1, 256, 16.0, 4};
    const int bin = 3;
    Field pw = plane_wave(g, {bin, 0});
    const double k = bin * g.dk();
    // u d1 u on e^{ikx}: i k e^{2ikx}
    Field out = bilinear_B(pw, pw, u_dx_u());
    Field expect = plane_wave(g, {2 * bin, 0});
    expect *= cd(0, k);
    CHECK(rel_l2(out, expect) < 1e-12);

    // either argument zero
    CHECK(bilinear_B(Field(g), pw, u_dx_u()).l2_norm() == 0.0);
    CHECK(bilinear_B(pw, Field(g), u_dx_u()).l2_norm() == 0.0);

    // finite-difference gradient oracle on a fine grid, with conjugations
    const GridSpec gf{1, 32768, 16.0, 4};
    Rng rng = make_rng(84);
    Field u = random_band_limited(gf, rng, 1.5);
    Field v = random_band_limited(gf, rng, 1.5);
    Nonlinearity B;
    B.terms.push_back({cd(0.5, 0.2), false, false, 0});
    B.terms.push_back({cd(-0.3, 0.1), true, true, 0});
    Field lib = bilinear_B(u, v, B);
    const double h = gf.h();
    double err2 = 0, ref2 = 0;
    for (int i = 0; i < gf.points; ++i) {
        const int ip = (i + 1) % gf.points, im = (i - 1 + gf.points) % gf.points;
        const cd dv = (v[ip] - v[im]) / (2.0 * h);
        const cd fd = cd(0.5, 0.2) * u[i] * dv + cd(-0.3, 0.1) * std::conj(u[i] * dv);
        err2 += std::norm(lib[i] - fd);
        ref2 += std::norm(fd);
    }
    CHECK(std::sqrt(err2 / ref2) < 1e-6);
}

TEST_CASE("symbol from the low-frequency part matches the operator") {
    const GridSpec g{1, 256, 16.0, 8};
    // u == 1, B0 = u d1 v: the gradient-form coefficient is 1, the
    // Kohn-Nirenberg coefficient is i (D = -i d/dx)
    Field one(g);
    for (std::size_t i = 0; i < one.size(); ++i) one[i] = 1.0;
    FirstOrderSymbol a = symbol_for_nonlinearity(one, u_dx_u(), g.steps);
    CHECK(std::abs(a.c(0).at_frame(0)[7] - cd(0, 1)) < 1e-14);

    // apply_symbol(symbol_from_low_freq(...)) == B0(low, grad v) exactly
    Rng rng = make_rng(85);
    Field low = random_band_limited(g, rng, 0.9);
    Nonlinearity B;
    B.terms.push_back({cd(0.7, -0.4), false, false, 0});
    B.terms.push_back({cd(0.2, 0.1), true, false, 0});
    FirstOrderSymbol ab = symbol_for_nonlinearity(low, B, g.steps);
    Field v = random_band_limited(g, rng, 4.0);
    Field via_symbol = apply_symbol(ab, v);
    // direct B0(low, grad v)
    Field dv = apply_multiplier(v, [](const DVec& k) { return cd(0, k[0]); });
    Field direct(g);
    for (std::size_t i = 0; i < direct.size(); ++i)
        direct[i] = cd(0.7, -0.4) * low[i] * dv[i] + cd(0.2, 0.1) * std::conj(low[i]) * dv[i];
    CHECK(rel_l2(via_symbol, direct) < 1e-12);

    // gaussian-bump low part: coefficient equals i times the bump pointwise
    Field bump = gaussian_bump(g, {8.0, 0}, 1.5);
    Field bump_low = lp_piece(bump, 1.0);
    FirstOrderSymbol ag = symbol_for_nonlinearity(bump_low, u_dx_u(), g.steps);
    for (std::size_t i = 0; i < bump_low.size(); i += 37)
        CHECK(std::abs(ag.c(0).at_frame(0)[i] - cd(0, 1) * bump_low[i]) < 1e-13);
}

TEST_CASE("reference solve: free flow, first-order forcing balance, order 4") {
    const GridSpec g{1, 256, 16.0, 32};
    Rng rng = make_rng(86);
    Field u0 = random_band_limited(g, rng, 4.0);

    // B = 0: exact free flow
    SpacetimeField free_run = reference_solve(u0, Nonlinearity{}, 1.0, 32);
    Field expect = free_propagate(u0, 1.0);
    CHECK(rel_l2(free_run.frame(32), Field(free_run.spec(), expect.values())) < 1e-10);

    // blow-up guard trips on an absurd nonlinearity
    Nonlinearity big;
    big.terms.push_back({cd(4e3, 0), false, false, 0});
    Field large = u0;
    large *= cd(30.0, 0);
    CHECK_THROWS(reference_solve(large, big, 1.0, 16));

    // manufactured first-order balance: B = c ubar d1 u makes the quadratic
    // term constant in x for a plane-wave datum; for small amplitude A the
    // zero mode grows like -i gamma t with gamma = i c k |A|^2 + O(A^4 t^2)
    const GridSpec gm{1, 128, 16.0, 8};
    const int bin = 5;
    const double k = bin * gm.dk();
    const double A = 5e-3;
    Field pw = plane_wave(gm, {bin, 0});
    pw *= cd(A, 0);
    Nonlinearity Bc;
    const cd c(0.8, 0);
    Bc.terms.push_back({c, true, false, 0});
    const double T = 0.1;
    SpacetimeField run = reference_solve(pw, Bc, T, 64);
    const cd gamma = c * cd(0, k) * A * A; // ubar d1 u = i k |A|^2
    // u(T) ~ A e^{ikx} e^{i k^2 T} - i gamma T
    Field want = free_propagate(pw, T);
    for (std::size_t i = 0; i < want.size(); ++i) want[i] += cd(0, -1) * gamma * T;
    CHECK(rel_l2(run.frame(64), Field(run.spec(), want.values())) < 1e-6);

    // Richardson self-convergence at order 4
    Nonlinearity B = u_dx_u();
    Field u0r = random_band_limited(gm, rng, 3.0);
    SpacetimeField fine = reference_solve(u0r, B, 0.5, 64);
    SpacetimeField mid = reference_solve(u0r, B, 0.5, 32);
    SpacetimeField coarse = reference_solve(u0r, B, 0.5, 16);
    Field e1 = Field(fine.spec(), mid.frame(32).values());
    e1 -= fine.frame(64);
    Field e2 = Field(fine.spec(), coarse.frame(16).values());
    e2 -= fine.frame(64);
    const double order = std::log2(e2.l2_norm() / e1.l2_norm());
    MESSAGE("reference RK4 measured order ", order);
    CHECK(order > 3.7);
    CHECK(order < 4.5);

    // built-in Richardson reporting
    double rich = 0;
    reference_solve(u0r, B, 0.5, 64, &rich);
    CHECK(rich > 0);
    CHECK(rich < 1e-4);
}

TEST_CASE("solve_large_data: zero data, free case, oracle agreement") {
    const GridSpec g{1, 256, 16.0, 48};
    PipelineConfig cfg;
    cfg.s = 1.75;
    cfg.sigma = 0.4;
    cfg.tol = 1e-5;
    cfg.rescaled_steps = 48;

    // invalid configs rejected
    PipelineConfig bad = cfg;
    bad.s = 1.2;
    CHECK_THROWS(solve_large_data(Field(g), Nonlinearity{}, bad));
    bad = cfg;
    bad.sigma = 3.0;
    CHECK_THROWS(solve_large_data(Field(g), Nonlinearity{}, bad));

    // zero data
    LargeDataResult z = solve_large_data(Field(g), u_dx_u(), cfg);
    CHECK(z.u.l2_norm() == 0.0);

    // B = 0: matches the free flow at T = eps^2. The datum is scaled to a
    // modest decay norm so eps stays at 1/2 and the rescaled grid small.
    Rng rng = make_rng(87);
    Field u0 = random_band_limited(g, rng, 3.0);
    u0 *= cd(0.25, 0);
    LargeDataResult fr = solve_large_data(u0, Nonlinearity{}, cfg);
    Field expect = free_propagate(u0, fr.T);
    const double err_free = rel_l2(fr.u.frame(fr.u.spec().steps), expect);
    MESSAGE("B=0 final-frame error ", err_free, " at T=", fr.T);
    CHECK(err_free < 1e-4);

    // quadratic derivative nonlinearity vs the independent oracle
    LargeDataResult res = solve_large_data(u0, u_dx_u(), cfg);
    SpacetimeField ref = reference_solve(u0, u_dx_u(), res.T, 128);
    const double err = rel_l2(res.u.frame(res.u.spec().steps),
                              Field(res.u.spec(), ref.frame(128).values()));
    MESSAGE("two-method agreement ", err, " at T=", res.T, " eps=", res.eps);
    CHECK(err < 1e-3);
    // measured outer contraction below 1/2
    for (const auto& r : res.diagnostics["outer_ratios"]) CHECK(r.get<double>() < 0.5);
}
