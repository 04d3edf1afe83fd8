#include "dnlslab/parametrix.hpp"
#include "dnlslab/fft.hpp"

#include <algorithm>
#include <iostream>

namespace dnls {

LinearProblem::LinearProblem(FirstOrderSymbol a_, Field g_, SpacetimeField f_)
    : a(std::move(a_)), g(std::move(g_)), f(std::move(f_)) {
    if (!(a.spec() == g.spec()) || !(f.spec() == g.spec()))
        throw std::invalid_argument("LinearProblem: components must share one GridSpec");
    zero_forcing_ = true;
    for (const Field& fr : f.frames())
        for (const cd& z : fr.values())
            if (z != cd(0, 0)) { zero_forcing_ = false; return; }
}

LinearProblem LinearProblem::homogeneous(FirstOrderSymbol a_, Field g_, int steps) {
    GridSpec gs = g_.spec();
    gs.steps = steps;
    if (!a_.is_zero() && !(a_.spec() == gs))
        throw std::invalid_argument("LinearProblem: symbol grid must carry the solve steps");
    return LinearProblem(a_.is_zero() ? FirstOrderSymbol::zero(gs) : std::move(a_),
                         Field(gs, g_.values()), SpacetimeField(gs));
}

// ---------------------------------------------------------------------------
// local_solution
// ---------------------------------------------------------------------------

namespace {

// multiplier e^{+ i t |k|^2} applied in spectral space
void free_phase_inplace(Field& hat, double t) {
    const GridSpec& g = hat.spec();
    const int n = g.points;
    const double dk = g.dk();
    std::size_t idx = 0;
    const int rows = g.dim == 2 ? n : 1;
    for (int j = 0; j < rows; ++j) {
        const double k1 = g.dim == 2 ? g.bin(j) * dk : 0.0;
        for (int i = 0; i < n; ++i, ++idx) {
            const double k0 = g.bin(i) * dk;
            hat[idx] *= std::polar(1.0, t * (k0 * k0 + k1 * k1));
        }
    }
}

} // namespace

SpacetimeField local_solution(const LinearProblem& p, const IVec& x0, const IVec& ic,
                              const AssembleOptions& opts) {
    const GridSpec& g = p.grid();
    const int M = g.steps;
    const double dt = g.dt();
    const DVec c = cube_center(g, ic);
    const DVec x0d{static_cast<double>(x0[0]), static_cast<double>(x0[1])};

    const Field g_loc = spatial_bump(cube_piece(p.g, ic), x0);
    const std::vector<cd> cum = ray_cumulative_integral(p.a, x0d, c, opts.ray_substeps);
    std::vector<cd> w(M + 1), winv(M + 1);
    for (int m = 0; m <= M; ++m) {
        w[m] = std::exp(cd(0, -1) * cum[m]);
        winv[m] = std::exp(cd(0, 1) * cum[m]);
    }

    Field ghat = fft_forward(g_loc);
    std::vector<Field> frames(M + 1, Field(g));

    if (p.zero_forcing()) {
        parallel_for(static_cast<std::size_t>(M + 1), [&](std::size_t m) {
            Field hat = ghat;
            free_phase_inplace(hat, g.time(static_cast<int>(m)));
            hat *= w[m];
            fft::inverse(hat.values(), g.dim, g.points);
            frames[m] = std::move(hat);
        });
        return SpacetimeField(g, std::move(frames));
    }

    // cumulative trapezoid of q_s = e^{-i t_s |k|^2} (1/w_s) fhat_loc(s)
    Field H(g);          // running Duhamel accumulator
    Field q_prev(g);
    for (int m = 0; m <= M; ++m) {
        Field f_loc = spatial_bump(cube_piece(p.f.frame(m), ic), x0);
        Field q = fft_forward(f_loc);
        free_phase_inplace(q, -g.time(m));
        q *= winv[m];
        if (m > 0) {
            for (std::size_t i = 0; i < H.size(); ++i)
                H[i] += 0.5 * dt * (q_prev[i] + q[i]);
        }
        Field hat = ghat;
        // u_m = w_m P(t_m) (ghat - i H_m)
        for (std::size_t i = 0; i < hat.size(); ++i)
            hat[i] = w[m] * (hat[i] + cd(0, -1) * H[i]);
        free_phase_inplace(hat, g.time(m));
        fft::inverse(hat.values(), g.dim, g.points);
        frames[m] = std::move(hat);
        q_prev = std::move(q);
    }
    return SpacetimeField(g, std::move(frames));
}

// ---------------------------------------------------------------------------
// assemble
// ---------------------------------------------------------------------------

SpacetimeField assemble(const LinearProblem& p, const AssembleOptions& opts) {
    const GridSpec& g = p.grid();
    const int M = g.steps;
    const double dt = g.dt();

    const double data_scale = p.g.l2_norm() + (p.zero_forcing() ? 0.0 : p.f.l2_norm());
    if (data_scale == 0.0) return SpacetimeField(g);

    // cube set: union of datum and (subsampled) forcing spectral mass
    const double energy_thr = opts.mass_threshold * opts.mass_threshold;
    std::vector<IVec> cubes = cubes_with_mass(p.g, energy_thr);
    auto add_cubes = [&](const Field& f) {
        for (const IVec& ic : cubes_with_mass(f, energy_thr))
            if (std::find_if(cubes.begin(), cubes.end(), [&](const IVec& c) {
                    return c[0] == ic[0] && c[1] == ic[1];
                }) == cubes.end())
                cubes.push_back(ic);
    };
    if (!p.zero_forcing())
        for (int m = 0; m <= M; m += std::max(1, M / 8)) add_cubes(p.f.frame(m));

    std::vector<Field> total_hat(M + 1, Field(g)); // accumulated spectra of u_m
    std::mutex total_mtx;

    parallel_for(cubes.size(), [&](std::size_t cidx) {
        const IVec ic = cubes[cidx];
        const DVec c = cube_center(g, ic);
        const Field g_ic = cube_piece(p.g, ic);
        std::vector<Field> f_ic;
        Field f_agg(g);
        if (!p.zero_forcing()) {
            f_ic.reserve(M + 1);
            for (int m = 0; m <= M; ++m) {
                f_ic.push_back(cube_piece(p.f.frame(m), ic));
                for (std::size_t i = 0; i < f_agg.size(); ++i)
                    f_agg[i] += std::norm(f_ic.back()[i]);
            }
            for (std::size_t i = 0; i < f_agg.size(); ++i)
                f_agg[i] = std::sqrt(f_agg[i].real() / (M + 1));
        }

        // tile bases with mass from either datum or forcing
        Field presence = g_ic;
        for (std::size_t i = 0; i < presence.size(); ++i)
            presence[i] = std::abs(presence[i]) + std::abs(f_agg[i]);
        const std::vector<IVec> bases = bumps_with_mass(presence, 1e-24);
        if (bases.empty()) return;

        // per-base ray weights; bases below the relative-mass threshold are skipped
        std::vector<IVec> kept;
        std::vector<std::vector<cd>> wA, wB;
        for (const IVec& base : bases) {
            double mass = spatial_bump(g_ic, base).l2_norm();
            if (!p.zero_forcing()) mass += spatial_bump(f_agg, base).l2_norm();
            if (mass < opts.mass_threshold * data_scale) continue;
            const DVec xb{static_cast<double>(base[0]), static_cast<double>(base[1])};
            const std::vector<cd> cum = ray_cumulative_integral(p.a, xb, c, opts.ray_substeps);
            std::vector<cd> A(M + 1), Binv(M + 1);
            for (int m = 0; m <= M; ++m) {
                A[m] = std::exp(cd(0, -1) * cum[m]);
                Binv[m] = std::exp(cd(0, 1) * cum[m]);
            }
            kept.push_back(base);
            wA.push_back(std::move(A));
            wB.push_back(std::move(Binv));
        }
        const std::size_t B = kept.size();
        if (B == 0) return;

        // precomputed bump supports per kept base
        struct Support { std::vector<std::size_t> idx; std::vector<double> w; };
        std::vector<Support> sup(B);
        {
            const double h = g.h();
            const int lo = static_cast<int>(std::ceil(-BumpSystem::support_radius / h));
            const int hi = static_cast<int>(std::floor(BumpSystem::support_radius / h));
            for (std::size_t b = 0; b < B; ++b) {
                const int base0 = static_cast<int>(std::llround(kept[b][0] / h));
                const int base1 = g.dim == 2 ? static_cast<int>(std::llround(kept[b][1] / h)) : 0;
                const int lo1 = g.dim == 2 ? lo : 0, hi1 = g.dim == 2 ? hi : 0;
                for (int o1 = lo1; o1 <= hi1; ++o1) {
                    const double w1 =
                        g.dim == 2 ? BumpSystem::eval1d((base1 + o1) * h - kept[b][1]) : 1.0;
                    if (w1 == 0.0) continue;
                    const int i1 = g.dim == 2 ? (((base1 + o1) % g.points) + g.points) % g.points : 0;
                    for (int o0 = lo; o0 <= hi; ++o0) {
                        const double w0 = BumpSystem::eval1d((base0 + o0) * h - kept[b][0]);
                        if (w0 == 0.0) continue;
                        const int i0 = (((base0 + o0) % g.points) + g.points) % g.points;
                        sup[b].idx.push_back(g.dim == 2
                                                 ? static_cast<std::size_t>(i1) * g.points + i0
                                                 : static_cast<std::size_t>(i0));
                        sup[b].w.push_back(w0 * w1);
                    }
                }
            }
        }

        // scatter sum_b s_b phi_b(x) carrier(x)
        auto weight_field = [&](const std::vector<cd>& s, const Field& carrier) {
            Field out(g);
            for (std::size_t b = 0; b < B; ++b) {
                if (s[b] == cd(0, 0)) continue;
                for (std::size_t q = 0; q < sup[b].idx.size(); ++q)
                    out[sup[b].idx[q]] += s[b] * sup[b].w[q] * carrier[sup[b].idx[q]];
            }
            return out;
        };

        // datum part: u_m += P(t_m)[ (sum_b A_m(b) phi_b) g_ic ]
        std::vector<Field> cube_hat(M + 1, Field(g));
        {
            std::vector<cd> s(B);
            for (int m = 0; m <= M; ++m) {
                for (std::size_t b = 0; b < B; ++b) s[b] = wA[b][m];
                Field Wg = weight_field(s, g_ic);
                fft::forward(Wg.values(), g.dim, g.points);
                free_phase_inplace(Wg, g.time(m));
                cube_hat[m] = std::move(Wg);
            }
        }

        if (!p.zero_forcing() && M > 0) {
            if (B <= static_cast<std::size_t>(M) / 2 + 1) {
                // few bases: per-base cumulative trapezoid,
                // G_{b,m} = sum_{s<=m} theta dt (1/w_b(s)) e^{-i t_s k^2} F[phi_b f_ic(s)]
                std::vector<Field> G(B, Field(g)), q_prev(B, Field(g));
                for (int m = 0; m <= M; ++m) {
                    for (std::size_t b = 0; b < B; ++b) {
                        Field q = spatial_bump(f_ic[m], kept[b]);
                        fft::forward(q.values(), g.dim, g.points);
                        free_phase_inplace(q, -g.time(m));
                        q *= wB[b][m];
                        if (m > 0) {
                            for (std::size_t i = 0; i < G[b].size(); ++i)
                                G[b][i] += 0.5 * dt * (q_prev[b][i] + q[i]);
                            Field add = G[b];
                            add *= cd(0, -1) * wA[b][m];
                            free_phase_inplace(add, g.time(m));
                            cube_hat[m] += add;
                        }
                        q_prev[b] = std::move(q);
                    }
                }
            } else {
                // many bases: O(M^2) fields R_{m,s} = sum_b A_m(b) (1/w_b(s)) phi_b
                std::vector<cd> s_coef(B);
                for (int m = 1; m <= M; ++m) {
                    Field acc(g);
                    for (int s = 0; s <= m; ++s) {
                        const double theta = (s == 0 || s == m) ? 0.5 : 1.0;
                        for (std::size_t b = 0; b < B; ++b)
                            s_coef[b] = wA[b][m] * wB[b][s];
                        Field q = weight_field(s_coef, f_ic[s]);
                        fft::forward(q.values(), g.dim, g.points);
                        free_phase_inplace(q, -g.time(s));
                        q *= theta * dt;
                        acc += q;
                    }
                    acc *= cd(0, -1);
                    free_phase_inplace(acc, g.time(m));
                    cube_hat[m] += acc;
                }
            }
        }

        std::lock_guard<std::mutex> lk(total_mtx);
        for (int m = 0; m <= M; ++m) total_hat[m] += cube_hat[m];
    });

    std::vector<Field> frames(M + 1, Field(g));
    parallel_for(static_cast<std::size_t>(M + 1), [&](std::size_t m) {
        Field f = total_hat[m];
        fft::inverse(f.values(), g.dim, g.points);
        frames[m] = std::move(f);
    });
    return SpacetimeField(g, std::move(frames));
}

// ---------------------------------------------------------------------------
// residual via 4th-order time differences of the pullback
// ---------------------------------------------------------------------------

SpacetimeField apply_operator(const FirstOrderSymbol& a, const SpacetimeField& u) {
    const GridSpec& g = u.spec();
    const int M = g.steps;
    if (M < 4) throw std::invalid_argument("apply_operator: need time_steps >= 4");
    const double dt = g.dt();
    const SpacetimeField v = pullback(u);

    // (i d_t - Delta) u = pushforward(i v_t)
    std::vector<Field> out(M + 1, Field(g));
    parallel_for(static_cast<std::size_t>(M + 1), [&](std::size_t mm) {
        const int m = static_cast<int>(mm);
        Field dv(g);
        auto acc = [&](int idx, double coef) {
            const Field& fr = v.frame(idx);
            for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += coef * fr[i];
        };
        if (m >= 2 && m <= M - 2) {
            acc(m - 2, 1.0 / 12.0); acc(m - 1, -8.0 / 12.0);
            acc(m + 1, 8.0 / 12.0); acc(m + 2, -1.0 / 12.0);
        } else if (m < 2) {
            // forward 4th order: (-25/12, 4, -3, 4/3, -1/4) at m..m+4
            acc(m, -25.0 / 12.0); acc(m + 1, 4.0); acc(m + 2, -3.0);
            acc(m + 3, 4.0 / 3.0); acc(m + 4, -0.25);
        } else {
            acc(m, 25.0 / 12.0); acc(m - 1, -4.0); acc(m - 2, 3.0);
            acc(m - 3, -4.0 / 3.0); acc(m - 4, 0.25);
        }
        dv *= cd(0, 1.0 / dt);
        Field pushed = free_propagate(dv, g.time(m));
        if (!a.is_zero()) pushed -= apply_symbol(a, u.frame(m), m);
        out[mm] = std::move(pushed);
    });
    return SpacetimeField(g, std::move(out));
}

SpacetimeField residual(const LinearProblem& p, const SpacetimeField& u) {
    SpacetimeField r = apply_operator(p.a, u);
    if (!p.zero_forcing()) r -= p.f;
    return r;
}

// ---------------------------------------------------------------------------
// picard_solve
// ---------------------------------------------------------------------------

nlohmann::json SolveDiagnostics::to_json() const {
    nlohmann::json j;
    j["residual_l2"] = residual_l2;
    nlohmann::json ybr = nlohmann::json::array();
    for (const Bracket& b : residual_y) ybr.push_back({b.lo, b.hi});
    j["residual_y"] = std::move(ybr);
    j["iterations"] = iterations;
    j["contraction_ratio"] = contraction_ratio;
    j["ratios"] = ratios;
    j["M"] = symbol_m;
    j["delta"] = symbol_delta;
    j["admissible"] = admissible;
    j["converged"] = converged;
    return j;
}

std::pair<SpacetimeField, SolveDiagnostics> picard_solve(const LinearProblem& p, double tol,
                                                         int max_iter,
                                                         const PicardOptions& opts) {
    if (max_iter < 1) throw std::invalid_argument("picard_solve: max_iter >= 1");
    SolveDiagnostics diag;
    if (!p.a.is_zero()) {
        const SymbolClassReport rep = classify(p.a, opts.classify_budget);
        diag.symbol_m = rep.M;
        diag.symbol_delta = rep.delta;
        diag.admissible = rep.admissible;
        if (!rep.admissible)
            std::cerr << "picard_solve: symbol not admissible (delta e^M >= threshold); "
                         "proceeding anyway\n";
    }

    const double scale = p.g.l2_norm() + (p.zero_forcing() ? 0.0 : p.f.l2_norm());
    SpacetimeField u = assemble(p, opts.assemble);
    if (scale == 0.0) {
        diag.converged = true;
        diag.iterations = 0;
        return {u, diag};
    }

    for (int k = 0; k < max_iter; ++k) {
        const SpacetimeField r = residual(p, u);
        const double rn = r.l2_norm();
        diag.residual_l2.push_back(rn);
        if (opts.track_y_brackets) diag.residual_y.push_back(y_bracket(r, opts.y_s));
        if (diag.residual_l2.size() >= 2) {
            const double prev = diag.residual_l2[diag.residual_l2.size() - 2];
            if (prev > 0) diag.ratios.push_back(rn / prev);
        }
        diag.iterations = k;
        if (rn <= tol * scale) {
            diag.converged = true;
            if (!diag.ratios.empty()) diag.contraction_ratio = diag.ratios.back();
            return {u, diag};
        }
        // correction: solve with zero datum and forcing -r
        SpacetimeField neg_r = r;
        neg_r *= cd(-1, 0);
        LinearProblem corr(p.a, Field(p.grid()), std::move(neg_r));
        u += assemble(corr, opts.assemble);
    }
    const SpacetimeField r = residual(p, u);
    diag.residual_l2.push_back(r.l2_norm());
    if (!diag.ratios.empty()) diag.contraction_ratio = diag.ratios.back();
    if (diag.residual_l2.back() <= tol * scale) {
        diag.converged = true;
        diag.iterations = max_iter;
        return {u, diag};
    }
    throw PicardError("picard_solve: no convergence within max_iter", diag);
}

} // namespace dnls
