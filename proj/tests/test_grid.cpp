#include <doctest.h>
#include <fstream>

#include "dnlslab/grid.hpp"

#include <filesystem>

using namespace dnls;

namespace {

const GridSpec small1d{1, 256, 16.0, 16};

double rel_err(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    const double nb = b.l2_norm();
    return nb > 0 ? d.l2_norm() / nb : d.l2_norm();
}

// independent evaluation of the dyadic generator profile (test-local oracle)
double oracle_theta(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double u = r - 1.0;
    return 1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}
double oracle_lp_weight(double kabs, double lambda) {
    if (lambda == 1.0) return oracle_theta(kabs);
    return oracle_theta(kabs / lambda) - oracle_theta(2.0 * kabs / lambda);
}
// cardinal cubic B-spline (test-local oracle)
double oracle_b3(double x) {
    const double a = std::abs(x);
    if (a >= 2.0) return 0.0;
    if (a <= 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
    return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
}

} // namespace

TEST_CASE("gridspec validation") {
    CHECK_THROWS(GridSpec{1, 100, 16.0, 8}.validate());  // not a power of two
    CHECK_THROWS(GridSpec{3, 256, 16.0, 8}.validate());  // dim
    CHECK_THROWS(GridSpec{1, 256, 16.5, 8}.validate());  // non-integer L
    CHECK_THROWS(GridSpec{1, 256, 4.0, 8}.validate());   // dk > 1
    CHECK_NOTHROW(small1d.validate());
    CHECK_NOTHROW(GridSpec::default_1d().validate());
    CHECK_NOTHROW(GridSpec::default_2d().validate());
}

TEST_CASE("apply_multiplier identity and eigenfunctions") {
    Rng rng = make_rng(11);
    Field u = random_band_limited(small1d, rng, 6.0);
    Field id = apply_multiplier(u, [](const DVec&) { return cd(1, 0); });
    CHECK(rel_err(id, u) < 1e-12);

    const IVec bins{5, 0};
    Field pw = plane_wave(small1d, bins);
    const double k = 5 * small1d.dk();
    Field mpw = apply_multiplier(pw, [](const DVec& kk) { return cd(kk[0] * kk[0] + 1.0, 0); });
    Field expect = pw;
    expect *= cd(k * k + 1.0, 0);
    CHECK(rel_err(mpw, expect) < 1e-12);

    CHECK_THROWS_AS(apply_multiplier(u,
                                     [](const DVec& kk) {
                                         return cd(kk[0] == 0.0 ? 1.0 / 0.0 : 1.0, 0);
                                     }),
                    std::invalid_argument);
}

TEST_CASE("apply_multiplier commutes with grid translation") {
    Rng rng = make_rng(12);
    Field u = random_band_limited(small1d, rng, 8.0);
    auto m = [](const DVec& k) { return cd(std::cos(k[0]), 0.1 * k[0]); };
    const int shift = 7;
    auto translate = [&](const Field& f) {
        Field out(small1d);
        for (int i = 0; i < small1d.points; ++i)
            out[i] = f[(i + shift) % small1d.points];
        return out;
    };
    CHECK(rel_err(translate(apply_multiplier(u, m)), apply_multiplier(translate(u), m)) < 1e-12);
}

TEST_CASE("lp pieces: capture, boundary split, reconstruction") {
    // |k| = 0.5: entirely in the lambda = 1 piece
    const int b = static_cast<int>(std::llround(0.5 / small1d.dk()));
    Field pw = plane_wave(small1d, {b, 0});
    CHECK(rel_err(lp_piece(pw, 1.0), pw) < 1e-10);
    CHECK(lp_piece(pw, 4.0).l2_norm() < 1e-12 * pw.l2_norm());

    // |k| exactly dyadic: weights of the two straddling pieces sum to 1
    const double kb = 4.0;
    const double w4 = oracle_lp_weight(kb, 4.0), w8 = oracle_lp_weight(kb, 8.0);
    CHECK(w4 + w8 == doctest::Approx(1.0).epsilon(1e-14));
    const int bb = static_cast<int>(std::llround(kb / small1d.dk()));
    Field pwb = plane_wave(small1d, {bb, 0});
    const double kexact = bb * small1d.dk();
    Field p4 = lp_piece(pwb, 4.0);
    Field e4 = pwb;
    e4 *= cd(oracle_lp_weight(kexact, 4.0), 0);
    CHECK(rel_err(p4, e4) < 1e-10);

    // reconstruction on random data
    Rng rng = make_rng(13);
    Field u = random_band_limited(small1d, rng, 0.9 * small1d.nyquist());
    Field sum(small1d);
    for (double lambda : lp_lambdas(small1d)) sum += lp_piece(u, lambda);
    CHECK(rel_err(sum, u) < 1e-10);

    CHECK_THROWS(lp_piece(u, 2.0 * lp_lambda_max(small1d)));
    CHECK_THROWS(lp_piece(u, 3.0));
}

TEST_CASE("cube pieces: weights and reconstruction") {
    const GridSpec g = small1d;
    const IVec ic{3, 0};
    const DVec c = cube_center(g, ic);
    const int bin = static_cast<int>(std::llround(c[0] / g.dk()));
    Field pw = plane_wave(g, {bin, 0});
    // center hit: weight equals the generator bump at offset 0 (B3(0) = 2/3)
    Field piece = cube_piece(pw, ic);
    Field expect = pw;
    expect *= cd(oracle_b3((bin * g.dk() - c[0]) / g.cube_spacing()), 0);
    CHECK(rel_err(piece, expect) < 1e-10);
    CHECK(std::abs(oracle_b3(0.0) - 2.0 / 3.0) < 1e-15);

    // far cube: disjoint support
    CHECK(cube_piece(pw, {10, 0}).l2_norm() < 1e-12);

    // reconstruction
    Rng rng = make_rng(14);
    Field u = random_band_limited(g, rng, 6.0);
    Field sum(g);
    const int icmax = static_cast<int>(std::ceil(7.0 / g.cube_spacing())) + 2;
    for (int i = -icmax; i <= icmax; ++i) sum += cube_piece(u, {i, 0});
    CHECK(rel_err(sum, u) < 1e-10);
}

TEST_CASE("spatial bumps: partition and locality") {
    const GridSpec g = small1d;
    Rng rng = make_rng(15);
    Field u = random_band_limited(g, rng, 5.0);
    Field sum(g);
    for (int x0 = 0; x0 < static_cast<int>(g.length); ++x0) sum += spatial_bump(u, {x0, 0});
    CHECK(rel_err(sum, u) < 1e-10);

    // delta-like u at x0: scaled by the generator at offset 0, killed far away
    Field delta(g);
    const int i0 = static_cast<int>(std::llround(5.0 / g.h()));
    delta[i0] = 1.0;
    Field at = spatial_bump(delta, {5, 0});
    CHECK(std::abs(at[i0] - cd(oracle_b3(0.0), 0)) < 1e-14);
    CHECK(spatial_bump(delta, {12, 0}).l2_norm() == 0.0);

    // half-integer overlap weights
    Field delta2(g);
    const int ih = static_cast<int>(std::llround(5.5 / g.h()));
    delta2[ih] = 1.0;
    Field a5 = spatial_bump(delta2, {5, 0});
    CHECK(std::abs(a5[ih] - cd(oracle_b3(0.5), 0)) < 1e-14);
}

TEST_CASE("free propagation: exactness, mass, composition, gaussian") {
    const GridSpec g = small1d;
    Rng rng = make_rng(16);
    Field u = random_band_limited(g, rng, 8.0);
    CHECK(rel_err(free_propagate(u, 0.0), u) == 0.0);

    const IVec bins{9, 0};
    const double k = 9 * g.dk();
    Field pw = plane_wave(g, bins);
    Field prop = free_propagate(pw, 0.37);
    Field expect = pw;
    expect *= std::polar(1.0, 0.37 * k * k);
    CHECK(rel_err(prop, expect) < 1e-12);

    CHECK(std::abs(free_propagate(u, 0.73).l2_norm() - u.l2_norm()) < 1e-12 * u.l2_norm());
    CHECK(rel_err(free_propagate(free_propagate(u, 0.3), 0.45), free_propagate(u, 0.75)) <
          1e-12);

    // closed-form gaussian evolution, n = 1
    const GridSpec gg{1, 4096, 128.0, 8};
    Field g0(gg);
    const double s0 = 1.0;
    for (int i = 0; i < gg.points; ++i) {
        const double x = i * gg.h() - 64.0;
        g0[i] = std::exp(-x * x / (2.0 * s0 * s0));
    }
    const double t = 1.0;
    Field evolved = free_propagate(g0, t);
    Field closed(gg);
    const cd denom = cd(s0 * s0, -2.0 * t);
    for (int i = 0; i < gg.points; ++i) {
        const double x = i * gg.h() - 64.0;
        closed[i] = s0 / std::sqrt(denom) * std::exp(-x * x / (2.0 * denom));
    }
    CHECK(rel_err(evolved, closed) < 1e-6);
}

TEST_CASE("pullback and pushforward") {
    const GridSpec g{1, 256, 16.0, 12};
    Rng rng = make_rng(17);
    Field datum = random_band_limited(g, rng, 6.0);
    std::vector<Field> frames;
    for (int m = 0; m <= g.steps; ++m) frames.push_back(free_propagate(datum, g.time(m)));
    SpacetimeField orbit(g, frames);
    SpacetimeField pulled = pullback(orbit);
    for (int m = 0; m <= g.steps; ++m) CHECK(rel_err(pulled.frame(m), datum) < 1e-12);
    SpacetimeField back = pushforward(pulled);
    for (int m = 0; m <= g.steps; ++m) CHECK(rel_err(back.frame(m), orbit.frame(m)) < 1e-12);
}

TEST_CASE("modulation filter: free orbits, cosine modulation, reconstruction") {
    const GridSpec g{1, 128, 16.0, 64};
    Rng rng = make_rng(18);
    Field datum = random_band_limited(g, rng, 4.0);

    std::vector<Field> orbit;
    for (int m = 0; m <= g.steps; ++m) orbit.push_back(free_propagate(datum, g.time(m)));
    SpacetimeField u(g, orbit);
    SpacetimeField low = modulation_filter(u, 1.0, ModulationMode::Low);
    SpacetimeField high = modulation_filter(u, 1.0, ModulationMode::High);
    CHECK(high.l2_norm() < 1e-6 * u.l2_norm());
    SpacetimeField rec = low;
    rec += high;
    SpacetimeField diff = rec;
    diff -= u;
    CHECK(diff.l2_norm() < 1e-8 * u.l2_norm());

    // cosine modulation at omega: high part at sigma = 4 omega is negligible,
    // at sigma = omega/4 it carries most of the oscillating mass
    const double omega = 8.0 * kPi;
    std::vector<Field> modv;
    for (int m = 0; m <= g.steps; ++m) {
        Field f = datum;
        f *= cd(std::cos(omega * g.time(m)), 0);
        modv.push_back(free_propagate(f, g.time(m)));
    }
    SpacetimeField um(g, modv);
    SpacetimeField hi4 = modulation_filter(um, 4.0 * omega, ModulationMode::High);
    CHECK(hi4.l2_norm() < 1e-3 * um.l2_norm());
    SpacetimeField hiq = modulation_filter(um, omega / 4.0, ModulationMode::High);
    CHECK(hiq.l2_norm() > 0.5 * um.l2_norm());

    CHECK_THROWS_WITH(modulation_filter(u, 1e-4, ModulationMode::Low),
                      "unresolvable modulation");
}

TEST_CASE("lpq norms") {
    const GridSpec g{1, 256, 16.0, 8};
    SpacetimeField c(g);
    for (int m = 0; m <= g.steps; ++m)
        for (std::size_t i = 0; i < c.frame(m).size(); ++i) c.frame(m)[i] = cd(0, 2.0);
    // constant: |c| L^{n/q}
    CHECK(lpq_norm(c, 4.0, 2.0) == doctest::Approx(2.0 * std::sqrt(16.0)).epsilon(1e-12));
    CHECK(lpq_norm(c, 3.0, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(2.0).epsilon(1e-12));

    Rng rng = make_rng(19);
    std::vector<Field> frames;
    for (int m = 0; m <= g.steps; ++m) frames.push_back(random_band_limited(g, rng, 5.0));
    SpacetimeField u(g, frames);
    // p = q = 2 matches the weighted l2 of samples
    double direct = 0;
    for (int m = 0; m <= g.steps; ++m) {
        const double w = (m == 0 || m == g.steps) ? 0.5 : 1.0;
        const double n2 = u.frame(m).l2_norm();
        direct += w * g.dt() * n2 * n2;
    }
    CHECK(lpq_norm(u, 2.0, 2.0) == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));

    // indicator-like bump: direct quadrature oracle
    SpacetimeField ind(g);
    for (int m = 0; m <= g.steps; ++m)
        for (int i = 0; i < 32; ++i) ind.frame(m)[i] = 3.0;
    const double vol = 32 * g.h();
    CHECK(lpq_norm(ind, 5.0, 3.0) ==
          doctest::Approx(3.0 * std::pow(vol, 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("dnf1 round trip") {
    const GridSpec g{1, 128, 16.0, 4};
    Rng rng = make_rng(20);
    std::vector<Field> frames;
    for (int m = 0; m <= g.steps; ++m) frames.push_back(random_band_limited(g, rng, 5.0));
    SpacetimeField u(g, frames);
    const auto path = std::filesystem::temp_directory_path() / "dnls_test_roundtrip.dnf1";
    write_dnf1(path, u);
    SpacetimeField r = read_dnf1(path);
    REQUIRE(r.spec() == g);
    bool identical = true;
    for (int m = 0; m <= g.steps && identical; ++m)
        for (std::size_t i = 0; i < r.frame(m).size(); ++i)
            if (r.frame(m)[i] != u.frame(m)[i]) { identical = false; break; }
    CHECK(identical);
    std::filesystem::remove(path);

    // field variant (M = 0) and malformed header
    write_dnf1(path, u.frame(0));
    SpacetimeField f0 = read_dnf1(path);
    CHECK(f0.frame_count() == 1);
    CHECK(f0.frame(0)[5] == u.frame(0)[5]);
    std::filesystem::remove(path);
    {
        std::ofstream bad(path);
        bad << "DNFX nope\n";
    }
    CHECK_THROWS(read_dnf1(path));
    std::filesystem::remove(path);
}
