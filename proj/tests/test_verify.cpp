#include <doctest.h>

#include "dnlslab/spaces.hpp"
#include "dnlslab/verify.hpp"

using namespace dnls;

TEST_CASE("step packets: materialization matches the closed forms") {
    const GridSpec g{1, 256, 16.0, 64};
    Rng rng = make_rng(91);
    const StepPacket p = make_step_packet(g, rng, {2, 0}, {8.0, 0}, 1.2, 3);

    // X^s norm factorization against the grid implementation
    const SpacetimeField u = packet_field(p);
    const double fast = packet_x_norm(p, 0.5);
    const double grid = xs_norm(u, 0.5);
    CHECK(fast == doctest::Approx(grid).epsilon(1e-9));

    // trilinear integral against the grid quadrature for constant amplitudes
    StepPacket c1 = make_step_packet(g, rng, {1, 0}, {8.0, 0}, 1.2, 0);
    StepPacket c2 = make_step_packet(g, rng, {2, 0}, {8.5, 0}, 1.2, 0);
    StepPacket c3 = make_step_packet(g, rng, {3, 0}, {7.5, 0}, 1.2, 0);
    std::fill(c1.alpha.begin(), c1.alpha.end(), cd(0.9, 0.1));
    std::fill(c2.alpha.begin(), c2.alpha.end(), cd(0.4, -0.3));
    std::fill(c3.alpha.begin(), c3.alpha.end(), cd(1.1, 0.0));
    const cd fast3 = packet_trilinear(c1, false, c2, false, c3, true);
    // grid route: trapezoid-in-time quadrature of the pointwise product
    const SpacetimeField f1 = packet_field(c1), f2 = packet_field(c2), f3 = packet_field(c3);
    cd grid3(0, 0);
    for (int m = 0; m <= g.steps; ++m) {
        cd fr(0, 0);
        for (std::size_t i = 0; i < f1.frame(m).size(); ++i)
            fr += f1.frame(m)[i] * f2.frame(m)[i] * std::conj(f3.frame(m)[i]);
        fr *= g.cell_volume();
        grid3 += ((m == 0 || m == g.steps) ? 0.5 : 1.0) * g.dt() * fr;
    }
    // the packet route integrates the oscillatory phases exactly; the grid
    // route is trapezoid, so compare at a few-permille tolerance
    CHECK(std::abs(fast3 - grid3) < 5e-3 * std::abs(grid3));

    // momentum conservation: disjoint frequency supports integrate to zero
    StepPacket far = make_step_packet(g, rng, {9, 0}, {8.0, 0}, 1.2, 0);
    const cd zero3 = packet_trilinear(c1, false, c2, false, far, true);
    CHECK(std::abs(zero3) < 1e-12);
}

TEST_CASE("packet dx norm stays within the eqwp constants of the full route") {
    const GridSpec g{1, 256, 16.0, 32};
    Rng rng = make_rng(92);
    const StepPacket p = make_step_packet(g, rng, {2, 0}, {8.0, 0}, 0.8, 2);
    const double fast = packet_dx_norm(p, 2.0, DirectionSet{}, 2);
    const SpacetimeField u = packet_field(p);
    DecayProfile prof;
    prof.base_spacing_factor = 0.5;
    const double full = dx_lambda_norm(u, 2.0, DirectionSet{}, prof);
    MESSAGE("packet dx ", fast, " vs full ", full);
    CHECK(fast > 0.15 * full);
    CHECK(fast < 4.0 * full);
}

TEST_CASE("sweeps are deterministic and finite") {
    const GridSpec g{1, 256, 16.0, 32};
    EstimateSweep a = sweep_strichartz(3, g, 7, false);
    EstimateSweep b = sweep_strichartz(3, g, 7, false);
    CHECK(a.csv() == b.csv());
    CHECK(a.rows.size() == 3);
    CHECK(a.max_ratio() > 0);

    EstimateSweep m1 = sweep_modulation({8.0, 32.0}, 2, g, 3);
    EstimateSweep m2 = sweep_modulation({8.0, 32.0}, 2, g, 3);
    CHECK(m1.csv() == m2.csv());
    CHECK(m1.summary.contains("slope"));

    // csv schema
    const std::string csv = a.csv();
    CHECK(csv.rfind("estimate,lambda,mu,eps,sigma,seed,lhs,rhs,ratio\n", 0) == 0);
}

TEST_CASE("modulation sweep measures the -1/2 slope") {
    const GridSpec g{1, 256, 16.0, 128};
    EstimateSweep sweep = sweep_modulation({4.0, 16.0, 64.0, 256.0}, 4, g, 11);
    const double slope = sweep.summary["slope"].get<double>();
    MESSAGE("modulation slope ", slope);
    CHECK(std::abs(slope + 0.5) < 0.1);
}

TEST_CASE("strichartz sweep ratios are bounded and stable under refinement") {
    const GridSpec g{1, 256, 16.0, 32};
    EstimateSweep base = sweep_strichartz(6, g, 13, false);
    const double r1 = base.max_ratio();
    const GridSpec g2{1, 512, 16.0, 32};
    EstimateSweep fine = sweep_strichartz(6, g2, 13, false);
    const double r2 = fine.max_ratio();
    MESSAGE("strichartz max ratios ", r1, " -> ", r2);
    CHECK(r1 > 0);
    CHECK(std::abs(r2 - r1) <= 0.25 * r1);
    // the box-localized variant runs and stays finite
    EstimateSweep boxed = sweep_strichartz(2, g, 13, true);
    CHECK(boxed.max_ratio() > 0);
}

TEST_CASE("bilinear sweep runs on a small 1-d configuration") {
    const GridSpec g{1, 256, 16.0, 64};
    EstimateSweep hlh = sweep_bilinear({8.0}, {2.0}, 3, ConjPattern::HighLowHigh, g, 17);
    CHECK(hlh.rows.size() == 3);
    CHECK(hlh.max_ratio() > 0);
    EstimateSweep c2 = sweep_bilinear({8.0}, {2.0}, 3, ConjPattern::ConjLow, g, 17);
    CHECK(c2.max_ratio() > 0);
    EstimateSweep hh = sweep_highhigh({8.0}, {2.0}, 3, g, 17);
    CHECK(hh.max_ratio() > 0);
    // determinism across runs
    EstimateSweep again = sweep_bilinear({8.0}, {2.0}, 3, ConjPattern::HighLowHigh, g, 17);
    CHECK(again.csv() == hlh.csv());
}

TEST_CASE("scaling sweep recovers the rescaling exponents") {
    const GridSpec g{1, 4096, 32.0, 8};
    const double s = 1.75; // n/2 + 1.25
    EstimateSweep sweep =
        sweep_scaling({0.25, 0.125, 0.0625, 0.03125, 0.015625}, s, 1, g, 19);
    const double si2 = sweep.summary["slope_i2"].get<double>();
    const double shigh = sweep.summary["slope_uhigh"].get<double>();
    const double sa6 = sweep.summary["slope_a6"].get<double>();
    MESSAGE("slopes i2=", si2, " uhigh=", shigh, " a6=", sa6);
    CHECK(std::abs(si2 - 1.0) < 0.1);
    CHECK(std::abs(shigh - (s - 0.5)) < 0.1);
    // min(eps, eps^{s-n/2}) as a value: exponent max(1, s-n/2) = 1.25 here
    CHECK(std::abs(sa6 - 1.25) < 0.1);
    // Lemma la row: ray integral bounded by the decay norm
    bool found = false;
    for (const SweepRow& r : sweep.rows)
        if (r.sigma == -1) {
            found = true;
            CHECK(r.ratio < 4.0);
        }
    CHECK(found);
}

TEST_CASE("linear estimate sweep stays under the e^M envelope") {
    const GridSpec g{1, 1024, 32.0, 32};
    EstimateSweep sweep = sweep_linear_estimate({0.0, 0.1, 0.2}, 1.75, 1, g, 23);
    CHECK(sweep.rows.size() == 3);
    const double C = sweep.summary["envelope_C"].get<double>();
    MESSAGE("envelope C ", C);
    for (const SweepRow& r : sweep.rows) {
        CHECK(std::log(std::max(r.ratio, 1e-300)) <= r.lambda + C + 1e-9);
        CHECK(r.ratio > 0);
    }
}
