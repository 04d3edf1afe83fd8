#include "dnlslab/dnls.hpp"
#include "dnlslab/fft.hpp"

#include <algorithm>
#include <iostream>

namespace dnls {

void Nonlinearity::validate(int dim) const {
    for (const NonlinTerm& t : terms) {
        if (t.axis < 0 || t.axis >= dim)
            throw std::invalid_argument("Nonlinearity: grad_axis out of range");
        if (!std::isfinite(t.coeff.real()) || !std::isfinite(t.coeff.imag()))
            throw std::invalid_argument("Nonlinearity: non-finite coefficient");
    }
}

std::vector<NonlinTerm> Nonlinearity::b0_terms() const {
    std::vector<NonlinTerm> out;
    for (const NonlinTerm& t : terms)
        if (!t.conj_grad) out.push_back(t);
    return out;
}

std::vector<NonlinTerm> Nonlinearity::b1_terms() const {
    std::vector<NonlinTerm> out;
    for (const NonlinTerm& t : terms)
        if (t.conj_grad) out.push_back(t);
    return out;
}

void PipelineConfig::validate(int dim) const {
    const double n2 = dim / 2.0;
    if (!(s > n2 + 1.0))
        throw std::invalid_argument("PipelineConfig: need s > n/2 + 1");
    if (!(sigma > 0.0 && sigma < s - n2))
        throw std::invalid_argument("PipelineConfig: need 0 < sigma < s - n/2");
    if (!(C_scale > 0) || !(tol > 0) || max_outer < 1 || rescaled_steps < 4)
        throw std::invalid_argument("PipelineConfig: invalid solver parameters");
}

// ---------------------------------------------------------------------------
// rescale / unscale (power-of-two eps, spectral resampling)
// ---------------------------------------------------------------------------

namespace {

int pow2_exponent(double eps) {
    const double j = -std::log2(eps);
    const int ji = static_cast<int>(std::llround(j));
    if (std::abs(j - ji) > 1e-9 || ji < 0)
        throw std::invalid_argument("rescale: eps must be a power of two in (0, 1]");
    return ji;
}

// place the centered n-bin spectrum into a centered n2-bin spectrum
Field respread_spectrum(const Field& hat, const GridSpec& target) {
    const GridSpec& src = hat.spec();
    Field out(target);
    const int n = src.points, n2 = target.points;
    const int half = std::min(n, n2) / 2;
    auto wrap = [](int b, int size) { return ((b % size) + size) % size; };
    if (src.dim == 1) {
        for (int b = -half; b < half; ++b) out[wrap(b, n2)] = hat[wrap(b, n)];
    } else {
        for (int b1 = -half; b1 < half; ++b1)
            for (int b0 = -half; b0 < half; ++b0)
                out[static_cast<std::size_t>(wrap(b1, n2)) * n2 + wrap(b0, n2)] =
                    hat[static_cast<std::size_t>(wrap(b1, n)) * n + wrap(b0, n)];
    }
    return out;
}

} // namespace

Field rescale(const Field& u0, double eps, std::size_t max_points) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("rescale: need 0 < eps <= 1");
    if (eps == 1.0) return u0;
    const int j = pow2_exponent(eps);
    const GridSpec& g = u0.spec();
    GridSpec fine = g;
    fine.points = g.points << j;
    fine.length = g.length * (1 << j);
    if (fine.size() > max_points)
        throw std::invalid_argument(
            "rescale: target grid exceeds the memory budget; use a smaller L or larger eps");
    fine.validate();
    Field hat = fft_forward(u0);
    Field out = respread_spectrum(hat, fine);
    const double scale = static_cast<double>(fine.size()) / static_cast<double>(g.size());
    out *= eps * scale;
    fft::inverse(out.values(), fine.dim, fine.points);
    return out;
}

Field unscale(const Field& u, double eps, const GridSpec& target) {
    if (eps == 1.0) return Field(target, u.values());
    const int j = pow2_exponent(eps);
    const GridSpec& fine = u.spec();
    if (fine.points != target.points << j)
        throw std::invalid_argument("unscale: grid sizes inconsistent with eps");
    Field hat = fft_forward(u);
    Field out = respread_spectrum(hat, target);
    const double scale = static_cast<double>(target.size()) / static_cast<double>(fine.size());
    out *= scale / eps;
    fft::inverse(out.values(), target.dim, target.points);
    return out;
}

std::pair<Field, Field> split_low_high(const Field& u) {
    Field low = lp_piece(u, 1.0);
    Field high = u;
    high -= low;
    return {std::move(low), std::move(high)};
}

// ---------------------------------------------------------------------------
// nonlinearity evaluation
// ---------------------------------------------------------------------------

namespace {

Field spectral_gradient(const Field& u, int axis) {
    return apply_multiplier(u, [axis](const DVec& k) { return cd(0.0, k[axis]); });
}

Field laplacian(const Field& u) {
    return apply_multiplier(
        u, [](const DVec& k) { return cd(-(k[0] * k[0] + k[1] * k[1]), 0.0); });
}

} // namespace

Field bilinear_B(const Field& u, const Field& v, const Nonlinearity& B) {
    const GridSpec& g = u.spec();
    B.validate(g.dim);
    Field out(g);
    std::array<Field, 2> grads;
    std::array<bool, 2> have{false, false};
    for (const NonlinTerm& t : B.terms) {
        if (!have[t.axis]) {
            grads[t.axis] = spectral_gradient(v, t.axis);
            have[t.axis] = true;
        }
        const Field& dv = grads[t.axis];
        for (std::size_t i = 0; i < out.size(); ++i) {
            const cd uf = t.conj_u ? std::conj(u[i]) : u[i];
            const cd gf = t.conj_grad ? std::conj(dv[i]) : dv[i];
            out[i] += t.coeff * uf * gf;
        }
    }
    return out;
}

SpacetimeField bilinear_B(const SpacetimeField& u, const SpacetimeField& v,
                          const Nonlinearity& B) {
    if (!(u.spec() == v.spec())) throw std::invalid_argument("bilinear_B: mismatched grids");
    std::vector<Field> frames(u.frame_count(), Field(u.spec()));
    parallel_for(frames.size(), [&](std::size_t m) {
        frames[m] = bilinear_B(u.frame(static_cast<int>(m)), v.frame(static_cast<int>(m)), B);
    });
    return SpacetimeField(u.spec(), std::move(frames));
}

Field forcing_N(const Field& low, const Nonlinearity& B) {
    Field out = bilinear_B(low, low, B);
    out += laplacian(low);
    return out;
}

SpacetimeField linear_term_A1(const SpacetimeField& v, const Field& low,
                              const Nonlinearity& B) {
    const GridSpec& g = v.spec();
    B.validate(g.dim);
    // gradients of the (frozen) low part, once
    std::array<Field, 2> dlow;
    for (int d = 0; d < g.dim; ++d) dlow[d] = spectral_gradient(low, d);
    const std::vector<NonlinTerm> b1 = B.b1_terms();

    std::vector<Field> frames(v.frame_count(), Field(g));
    parallel_for(frames.size(), [&](std::size_t mi) {
        const Field& vm = v.frame(static_cast<int>(mi));
        Field out(g);
        // B((v, vbar), (grad low, grad lowbar))
        for (const NonlinTerm& t : B.terms) {
            const Field& dl = dlow[t.axis];
            for (std::size_t i = 0; i < out.size(); ++i) {
                const cd uf = t.conj_u ? std::conj(vm[i]) : vm[i];
                const cd gf = t.conj_grad ? std::conj(dl[i]) : dl[i];
                out[i] += t.coeff * uf * gf;
            }
        }
        // B1((low, lowbar), grad vbar)
        if (!b1.empty()) {
            std::array<Field, 2> dv;
            std::array<bool, 2> have{false, false};
            for (const NonlinTerm& t : b1) {
                if (!have[t.axis]) {
                    dv[t.axis] = spectral_gradient(vm, t.axis);
                    have[t.axis] = true;
                }
                const Field& dvf = dv[t.axis];
                for (std::size_t i = 0; i < out.size(); ++i) {
                    const cd uf = t.conj_u ? std::conj(low[i]) : low[i];
                    out[i] += t.coeff * uf * std::conj(dvf[i]);
                }
            }
        }
        frames[mi] = std::move(out);
    });
    return SpacetimeField(g, std::move(frames));
}

// ---------------------------------------------------------------------------
// frozen low-frequency symbol
// ---------------------------------------------------------------------------

FirstOrderSymbol symbol_from_low_freq(const std::vector<Field>& b,
                                      const std::vector<Field>& conj_part) {
    if (b.empty() || b.size() != conj_part.size())
        throw std::invalid_argument("symbol_from_low_freq: need matched coefficient vectors");
    const GridSpec& g = b[0].spec();
    // inputs are expected frequency-supported in |k| <~ 1 (support of the
    // lambda = 1 block reaches |k| = 2)
    for (const Field* f : {&b[0], &conj_part[0]}) {
        Field hipart = apply_multiplier(*f, [](const DVec& k) {
            return cd(std::hypot(k[0], k[1]) > 2.0 ? 1.0 : 0.0, 0.0);
        });
        const double hi = hipart.l2_norm(), tot = f->l2_norm();
        if (tot > 0 && hi > 1e-9 * tot)
            std::cerr << "symbol_from_low_freq: warning, input has frequency mass above 1\n";
    }
    std::vector<Field> c;
    for (std::size_t d = 0; d < b.size(); ++d) {
        Field cf = b[d];
        cf += conj_part[d];
        cf *= cd(0, 1); // D = -i d/dx: matching grad-form coefficients picks up an i
        c.push_back(std::move(cf));
    }
    return FirstOrderSymbol::from_static(g, std::move(c), Field(g));
}

FirstOrderSymbol symbol_for_nonlinearity(const Field& low, const Nonlinearity& B, int steps) {
    GridSpec gs = low.spec();
    gs.steps = steps;
    const Field low_g(gs, low.values());
    std::vector<Field> b(gs.dim, Field(gs)), conj_part(gs.dim, Field(gs));
    bool any = false;
    for (const NonlinTerm& t : B.b0_terms()) {
        any = true;
        Field& target = t.conj_u ? conj_part[t.axis] : b[t.axis];
        for (std::size_t i = 0; i < target.size(); ++i)
            target[i] += t.coeff * (t.conj_u ? std::conj(low_g[i]) : low_g[i]);
    }
    if (!any) return FirstOrderSymbol::zero(gs);
    return symbol_from_low_freq(b, conj_part);
}

// ---------------------------------------------------------------------------
// reference oracle: integrating factor + RK4, 2/3-rule dealiasing
// ---------------------------------------------------------------------------

namespace {

Field dealias(const Field& u) {
    const int n = u.spec().points;
    const int cut = n / 3;
    return apply_multiplier(u, [&](const DVec& k) {
        const double dk = u.spec().dk();
        const double b0 = std::abs(k[0]) / dk;
        const double b1 = std::abs(k[1]) / dk;
        return (b0 > cut || b1 > cut) ? cd(0, 0) : cd(1, 0);
    });
}

SpacetimeField reference_solve_impl(const Field& u0, const Nonlinearity& B, double T,
                                    int steps) {
    const GridSpec& g = u0.spec();
    B.validate(g.dim);
    const double dt = T / steps;
    const double bail = 1e6 * std::max(u0.l2_norm(), 1e-30);

    // w(t) = P(-t) u(t), w' = -i P(-t) NL(P(t) w)
    auto rhs = [&](const Field& w, double t) {
        const Field u = free_propagate(w, t);
        const Field nl = dealias(bilinear_B(dealias(u), dealias(u), B));
        Field out = free_propagate(nl, -t);
        out *= cd(0, -1);
        return out;
    };

    GridSpec out = g;
    out.steps = steps;
    std::vector<Field> frames;
    frames.reserve(steps + 1);
    Field w = u0;
    frames.push_back(Field(out, u0.values()));
    for (int m = 0; m < steps; ++m) {
        const double t = m * dt;
        const Field k1 = rhs(w, t);
        Field w2 = w; { Field tmp = k1; tmp *= 0.5 * dt; w2 += tmp; }
        const Field k2 = rhs(w2, t + 0.5 * dt);
        Field w3 = w; { Field tmp = k2; tmp *= 0.5 * dt; w3 += tmp; }
        const Field k3 = rhs(w3, t + 0.5 * dt);
        Field w4 = w; { Field tmp = k3; tmp *= dt; w4 += tmp; }
        const Field k4 = rhs(w4, t + dt);
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        const Field u = free_propagate(w, t + dt);
        if (u.l2_norm() > bail) throw std::runtime_error("reference_solve: blow-up detected");
        frames.push_back(Field(out, u.values()));
    }
    return SpacetimeField(out, std::move(frames));
}

} // namespace

SpacetimeField reference_solve(const Field& u0, const Nonlinearity& B, double T, int steps,
                               double* richardson_err) {
    if (steps < 2 || !(T > 0)) throw std::invalid_argument("reference_solve: bad T or steps");
    SpacetimeField fine = reference_solve_impl(u0, B, T, steps);
    if (richardson_err) {
        const SpacetimeField coarse = reference_solve_impl(u0, B, T, steps / 2);
        Field diff = fine.frame(steps);
        diff -= Field(fine.spec(), coarse.frame(steps / 2).values());
        *richardson_err = diff.l2_norm();
    }
    return fine;
}

// ---------------------------------------------------------------------------
// solve_large_data
// ---------------------------------------------------------------------------

LargeDataResult solve_large_data(const Field& u0, const Nonlinearity& B,
                                 const PipelineConfig& cfg) {
    const GridSpec& g0 = u0.spec();
    cfg.validate(g0.dim);
    B.validate(g0.dim);

    LargeDataResult result;
    nlohmann::json& diag = result.diagnostics;

    const double M_norm = dhs_norm(u0, cfg.s);
    diag["M"] = M_norm;

    // zero data: nothing to solve
    if (u0.l2_norm() == 0.0) {
        GridSpec gs = g0;
        gs.steps = cfg.rescaled_steps;
        result.u = SpacetimeField(gs);
        result.T = 1.0;
        result.eps = 1.0;
        diag["eps"] = 1.0;
        diag["outer_ratios"] = nlohmann::json::array();
        return result;
    }

    double C = cfg.C_scale;
    double eps = 0;
    Field low(g0), high(g0);
    FirstOrderSymbol a;
    SymbolClassReport rep;
    Field u_eps(g0);
    bool admissible = false;
    for (int attempt = 0; attempt < 6 && !admissible; ++attempt) {
        const double eps_raw = std::exp(-C * M_norm);
        eps = std::pow(2.0, -std::max(1.0, std::ceil(-std::log2(std::min(eps_raw, 0.5)))));
        u_eps = rescale(u0, eps, cfg.max_points);
        GridSpec ge = u_eps.spec();
        ge.steps = cfg.rescaled_steps;
        u_eps = Field(ge, u_eps.values());
        std::tie(low, high) = split_low_high(u_eps);
        a = symbol_for_nonlinearity(low, B, cfg.rescaled_steps);
        if (a.is_zero()) {
            admissible = true;
            rep = SymbolClassReport{};
        } else {
            rep = classify(a, cfg.classify_budget);
            admissible = rep.admissible;
        }
        diag["attempts"].push_back({{"C", C}, {"eps", eps}, {"M_sym", rep.M},
                                    {"delta", rep.delta}, {"admissible", admissible}});
        if (!admissible) C *= 2.0;
    }
    if (!admissible)
        throw std::runtime_error("solve_large_data: symbol not admissible; increase C_scale");
    diag["eps"] = eps;
    diag["C"] = C;
    diag["symbol"] = rep.to_json();

    const GridSpec ge = low.spec().dim == 1
        ? GridSpec{1, low.spec().points, low.spec().length, cfg.rescaled_steps}
        : GridSpec{2, low.spec().points, low.spec().length, cfg.rescaled_steps};
    const Field low_e(ge, low.values());
    const Field high_e(ge, high.values());
    const Field Nf = forcing_N(low_e, B);

    const double ball = std::pow(eps, cfg.sigma);
    diag["ball"] = ball;

    PicardOptions popts;
    popts.track_y_brackets = false;
    popts.classify_budget = cfg.classify_budget;

    SpacetimeField v(ge); // v = 0 start
    double prev_dist = -1.0;
    std::vector<double> dists, ratios, ball_norms;
    bool converged = false;
    for (int k = 0; k < cfg.max_outer; ++k) {
        // rhs = B(v, grad v) + A1 v + N(low)
        SpacetimeField rhs = bilinear_B(v, v, B);
        rhs += linear_term_A1(v, low_e, B);
        for (int m = 0; m <= ge.steps; ++m) rhs.frame(m) += Nf;
        LinearProblem lp(a, high_e, std::move(rhs));
        auto [v_new, pdiag] = picard_solve(lp, cfg.tol * 0.1, cfg.inner_max_iter, popts);

        SpacetimeField dv = v_new;
        dv -= v;
        const double dist = xs_norm(dv, cfg.s);
        dists.push_back(dist);
        if (prev_dist > 0) ratios.push_back(dist / prev_dist);
        const double vn = xs_norm(v_new, cfg.s);
        ball_norms.push_back(vn);
        v = std::move(v_new);
        if (vn > ball * 4.0) {
            diag["outer_dists"] = dists;
            diag["outer_ratios"] = ratios;
            diag["ball_norms"] = ball_norms;
            throw std::runtime_error("solve_large_data: iterate escaped the contraction ball");
        }
        if (dist <= cfg.tol * std::max(ball, 1e-14) || (prev_dist >= 0 && dist == 0.0)) {
            converged = true;
            break;
        }
        prev_dist = dist;
    }
    diag["outer_dists"] = dists;
    diag["outer_ratios"] = ratios;
    diag["ball_norms"] = ball_norms;
    if (!converged)
        throw std::runtime_error("solve_large_data: outer iteration did not converge");

    // u = low + v, unscaled back to [0, eps^2]
    GridSpec gout = g0;
    gout.steps = ge.steps;
    std::vector<Field> frames(ge.steps + 1, Field(gout));
    parallel_for(frames.size(), [&](std::size_t m) {
        Field sum = v.frame(static_cast<int>(m));
        sum += low_e;
        Field coarse = unscale(Field(low.spec(), sum.values()), eps, g0);
        frames[m] = Field(gout, coarse.values());
    });
    result.u = SpacetimeField(gout, std::move(frames));
    result.T = eps * eps;
    result.eps = eps;
    diag["T"] = result.T;
    return result;
}

} // namespace dnls
