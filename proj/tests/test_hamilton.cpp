#include <doctest.h>

#include "dnlslab/hamilton.hpp"

using namespace dnls;

namespace {

const GridSpec g1{1, 512, 32.0, 16};

Field constant_field(const GridSpec& g, cd v) {
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = v;
    return f;
}

} // namespace

TEST_CASE("ray integral: zero, constants, gaussian closed form") {
    CHECK(ray_integral(FirstOrderSymbol::zero(g1), {1.0, 0}, {4.0, 0}) == 0.0);

    // constant c: integrand |c xi| is constant along every ray
    const double cval = 0.7;
    FirstOrderSymbol a = FirstOrderSymbol::from_static(g1, {constant_field(g1, cval)}, Field(g1));
    CHECK(ray_integral(a, {3.0, 0}, {5.0, 0}) == doctest::Approx(cval * 5.0).epsilon(1e-12));
    CHECK(ray_integral(a, {3.0, 0}, {-5.0, 0}) == doctest::Approx(cval * 5.0).epsilon(1e-12));

    // c1(x) = exp(-x^2) (periodized), large xi: integral -> sqrt(pi)/2
    const GridSpec gg{1, 4096, 64.0, 8};
    Field c1(gg);
    for (int i = 0; i < gg.points; ++i) {
        const double x = i * gg.h() - 32.0;
        c1[i] = std::exp(-x * x);
    }
    FirstOrderSymbol ag = FirstOrderSymbol::from_static(gg, {c1}, Field(gg));
    const double xi = 20.0;
    // ray from x0 = 12 covers [12, 52] around the bump at 32
    RayQuadrature quad;
    quad.nodes = 8192;
    const double val = ray_integral(ag, {12.0, 0}, {xi, 0}, {0, 0}, {0, 0}, quad);
    const double expect = std::sqrt(kPi) / 2.0 *
                          (std::erf(20.0) - std::erf(-20.0)) / 2.0;
    CHECK(std::abs(val - expect) < 1e-6);

    // derivative orders: d_xi of a first-order symbol returns the coefficient
    const double dval = ray_integral(a, {3.0, 0}, {5.0, 0}, {0, 0}, {1, 0});
    CHECK(dval == doctest::Approx(cval).epsilon(1e-12));
    CHECK(ray_integral(a, {3.0, 0}, {5.0, 0}, {1, 0}, {0, 0}) < 1e-12); // constant in x
    CHECK_THROWS(ray_integral(a, {0, 0}, {1, 0}, {2, 0}, {1, 0}));      // order 3
}

TEST_CASE("ray integral translation invariance") {
    const GridSpec g{1, 512, 32.0, 8};
    Rng rng = make_rng(51);
    Field c1 = random_band_limited(g, rng, 1.0);
    FirstOrderSymbol a = FirstOrderSymbol::from_static(g, {c1}, Field(g));
    // translate the symbol and the ray base point together (grid vector shift)
    const double shift = 5.0;
    Field c1s = apply_multiplier(c1, [&](const DVec& k) {
        return std::polar(1.0, k[0] * shift);
    });
    FirstOrderSymbol as = FirstOrderSymbol::from_static(g, {c1s}, Field(g));
    for (double xi : {1.5, 4.0, -3.0}) {
        const double v1 = ray_integral(a, {9.0, 0}, {xi, 0});
        const double v2 = ray_integral(as, {9.0 - shift, 0}, {xi, 0});
        CHECK(v1 == doctest::Approx(v2).epsilon(1e-10));
    }
}

TEST_CASE("classify: zero, constants, linear scaling") {
    SymbolClassReport z = classify(FirstOrderSymbol::zero(g1), 8);
    CHECK(z.M == 0.0);
    CHECK(z.delta == 0.0);
    CHECK(z.admissible);

    // constant coefficient: M grows with |c xi| over sampled xi; the only
    // surviving derivative is the xi one, whose ray integral is exactly |c|
    const double cval = 0.002;
    FirstOrderSymbol a = FirstOrderSymbol::from_static(g1, {constant_field(g1, cval)}, Field(g1));
    SymbolClassReport rep = classify(a, 64);
    CHECK(rep.delta == doctest::Approx(cval).epsilon(1e-10));
    CHECK(rep.admissible); // delta e^M = 0.002 e^{0.1} << 0.5
    CHECK(rep.M >= cval * 0.5 * g1.nyquist());
    CHECK(rep.M <= cval * g1.nyquist() * 1.01);

    // a smooth non-constant symbol scales linearly in eps
    Rng rng = make_rng(52);
    Field c1 = random_band_limited(g1, rng, 0.8);
    FirstOrderSymbol base = FirstOrderSymbol::from_static(g1, {c1}, Field(g1));
    std::vector<double> eps{1.0, 0.5, 0.25, 0.125}, ms, ds;
    for (double e : eps) {
        SymbolClassReport r = classify(base.scaled(cd(e, 0)), 32);
        ms.push_back(r.M);
        ds.push_back(r.delta);
    }
    CHECK(std::abs(fit_loglog(eps, ms).slope - 1.0) < 0.02);
    CHECK(std::abs(fit_loglog(eps, ds).slope - 1.0) < 0.02);
}

TEST_CASE("mizohata functional") {
    // zero field
    CHECK(mizohata({Field(g1)}, DirectionSet{}, 8.0) == 0.0);

    // gradient of a compactly supported potential: max - min of the potential
    const GridSpec g{1, 4096, 64.0, 8};
    Field psi = gaussian_bump(g, {32.0, 0}, 1.5);
    Field grad = apply_multiplier(psi, [](const DVec& k) { return cd(0, k[0]); });
    const double val = mizohata({grad}, DirectionSet{}, 32.0);
    double pmax = -1e300, pmin = 1e300;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        pmax = std::max(pmax, psi[i].real());
        pmin = std::min(pmin, psi[i].real());
    }
    CHECK(std::abs(val - (pmax - pmin)) < 1e-6);

    // purely imaginary field: killed by the real part
    Field imag = psi;
    imag *= cd(0, 1);
    CHECK(mizohata({imag}, DirectionSet{}, 16.0) < 1e-12);

    CHECK_THROWS(mizohata({psi}, DirectionSet{}, 100.0)); // R > L/2
}

TEST_CASE("apply_symbol: spectral quantization") {
    const GridSpec g = g1;
    // c = (1): plane wave eigenvector with eigenvalue k1
    FirstOrderSymbol a = FirstOrderSymbol::from_static(g, {constant_field(g, 1.0)}, Field(g));
    const int bin = 11;
    Field pw = plane_wave(g, {bin, 0});
    Field out = apply_symbol(a, pw);
    Field expect = pw;
    expect *= cd(bin * g.dk(), 0);
    Field diff = out;
    diff -= expect;
    CHECK(diff.l2_norm() < 1e-12 * expect.l2_norm());

    // c0-only symbol: pointwise product
    Rng rng = make_rng(53);
    Field c0 = random_band_limited(g, rng, 1.0);
    FirstOrderSymbol a0 = FirstOrderSymbol::from_static(g, {Field(g)}, c0);
    Field u = random_band_limited(g, rng, 3.0);
    Field prod = apply_symbol(a0, u);
    for (std::size_t i = 0; i < u.size(); i += 97)
        CHECK(std::abs(prod[i] - c0[i] * u[i]) < 1e-12);

    // finite-difference oracle at a fine grid
    const GridSpec gf{1, 32768, 16.0, 8};
    Field cf = random_band_limited(gf, rng, 1.0);
    Field uf = random_band_limited(gf, rng, 1.5);
    FirstOrderSymbol af = FirstOrderSymbol::from_static(gf, {cf}, Field(gf));
    Field spec_val = apply_symbol(af, uf);
    const double h = gf.h();
    double err2 = 0, ref2 = 0;
    for (int i = 0; i < gf.points; ++i) {
        const int ip = (i + 1) % gf.points, im = (i - 1 + gf.points) % gf.points;
        const cd du = (uf[ip] - uf[im]) / (2.0 * h);
        const cd fd = cf[i] * cd(0, -1) * du; // D = -i d/dx
        err2 += std::norm(spec_val[i] - fd);
        ref2 += std::norm(fd);
    }
    CHECK(std::sqrt(err2 / ref2) < 1e-6);

    // linearity in u and in a
    Field u2 = random_band_limited(gf, rng, 1.5);
    Field sum_u = uf;
    sum_u += u2;
    Field lhs = apply_symbol(af, sum_u);
    Field rhs = apply_symbol(af, uf);
    rhs += apply_symbol(af, u2);
    Field dl = lhs;
    dl -= rhs;
    CHECK(dl.l2_norm() < 5e-12 * rhs.l2_norm());
}

TEST_CASE("ray exponential: constants and bounds") {
    const GridSpec g{1, 256, 16.0, 32};
    // a = 0: constant weight 1
    RayExponential z = ray_exponential(FirstOrderSymbol::zero(g), {1.0, 0}, {2.0, 0});
    CHECK(z.v2 == 0.0);
    CHECK(z.w11 == 0.0);
    CHECK(std::abs(z.weight.sample(0)[0] - cd(1, 0)) < 1e-14);

    // purely imaginary constant c0 = i c: |weight| = 1
    FirstOrderSymbol ai =
        FirstOrderSymbol::from_static(g, {Field(g)}, constant_field(g, cd(0, 0.8)));
    RayExponential wi = ray_exponential(ai, {0.0, 0}, {1.0, 0});
    for (int m = 0; m <= g.steps; ++m)
        CHECK(std::abs(std::abs(wi.weight.sample(m)[0]) - 1.0) < 1e-12);

    // real constant r: weight e^{rt}, discrete W11 = e^r - 1
    const double r = 0.9;
    FirstOrderSymbol ar =
        FirstOrderSymbol::from_static(g, {Field(g)}, constant_field(g, cd(r, 0)));
    RayExponential wr = ray_exponential(ar, {0.0, 0}, {1.0, 0});
    CHECK(std::abs(wr.weight.sample(g.steps)[0] - std::exp(cd(r, 0))) < 1e-10);
    CHECK(wr.w11 == doctest::Approx(std::exp(r) - 1.0).epsilon(1e-10));
    CHECK(wr.ray_m == doctest::Approx(r).epsilon(1e-12));

    // V2 of the weight never exceeds e^{M(ray)} (Eq v2int analogue)
    Rng rng = make_rng(54);
    for (int trial = 0; trial < 10; ++trial) {
        Field c1 = random_band_limited(g, rng, 1.0);
        c1 *= cd(0.4, 0.3);
        FirstOrderSymbol a = FirstOrderSymbol::from_static(g, {c1}, Field(g));
        const DVec x0{uniform(rng, 0.0, 16.0), 0};
        const DVec xi{uniform(rng, -6.0, 6.0), 0};
        RayExponential w = ray_exponential(a, x0, xi);
        CHECK(w.v2 <= std::exp(w.ray_m) * (1.0 + 1e-6));
        CHECK(w.w11 <= std::exp(w.ray_m) * (1.0 + 1e-6));
    }
}

TEST_CASE("symbol classify report serializes") {
    SymbolClassReport rep;
    rep.M = 1.5;
    rep.delta = 0.01;
    rep.admissible = true;
    const auto j = rep.to_json();
    CHECK(j["M"] == 1.5);
    CHECK(j["admissible"] == true);
}
