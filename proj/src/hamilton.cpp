#include "dnlslab/hamilton.hpp"
#include "dnlslab/fft.hpp"

#include <algorithm>
#include <iostream>

namespace dnls {

// ---------------------------------------------------------------------------
// SparseModes
// ---------------------------------------------------------------------------

SparseModes SparseModes::from_field(const Field& u, double rel_threshold) {
    const GridSpec& g = u.spec();
    Field hat = fft_forward(u);
    const double scale = 1.0 / static_cast<double>(g.size());
    double peak = 0;
    for (std::size_t i = 0; i < hat.size(); ++i) peak = std::max(peak, std::abs(hat[i]));
    const double thr = peak * rel_threshold;
    SparseModes m;
    const int n = g.points;
    const double dk = g.dk();
    std::size_t idx = 0;
    const int rows = g.dim == 2 ? n : 1;
    for (int j = 0; j < rows; ++j) {
        const double k1 = g.dim == 2 ? g.bin(j) * dk : 0.0;
        for (int i = 0; i < n; ++i, ++idx) {
            if (std::abs(hat[idx]) <= thr) continue;
            m.k.push_back({g.bin(i) * dk, k1});
            m.coef.push_back(hat[idx] * scale);
        }
    }
    return m;
}

cd SparseModes::eval(const DVec& x) const {
    cd s(0, 0);
    for (std::size_t i = 0; i < k.size(); ++i)
        s += coef[i] * std::polar(1.0, k[i][0] * x[0] + k[i][1] * x[1]);
    return s;
}

SparseModes SparseModes::derivative(const IVec& alpha) const {
    SparseModes d = *this;
    for (std::size_t i = 0; i < k.size(); ++i) {
        cd f(1, 0);
        for (int o = 0; o < alpha[0]; ++o) f *= cd(0, k[i][0]);
        for (int o = 0; o < alpha[1]; ++o) f *= cd(0, k[i][1]);
        d.coef[i] *= f;
    }
    return d;
}

// ---------------------------------------------------------------------------
// CoefficientField / FirstOrderSymbol
// ---------------------------------------------------------------------------

CoefficientField::CoefficientField(std::vector<Field> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) throw std::invalid_argument("CoefficientField: no frames");
    for (const Field& f : frames_)
        if (!(f.spec() == frames_[0].spec()))
            throw std::invalid_argument("CoefficientField: mismatched grids");
}

FirstOrderSymbol::FirstOrderSymbol(const GridSpec& spec, std::vector<CoefficientField> c,
                                   CoefficientField c0)
    : spec_(spec), c_(std::move(c)), c0_(std::move(c0)) {
    spec_.validate();
    if (static_cast<int>(c_.size()) != spec_.dim)
        throw std::invalid_argument("FirstOrderSymbol: need one coefficient per axis");
    for (const auto& cf : c_)
        if (!(cf.spec() == spec_))
            throw std::invalid_argument("FirstOrderSymbol: coefficients share one GridSpec");
    if (!(c0_.spec() == spec_))
        throw std::invalid_argument("FirstOrderSymbol: c0 shares the GridSpec");
}

FirstOrderSymbol FirstOrderSymbol::zero(const GridSpec& spec) {
    std::vector<CoefficientField> c(spec.dim, CoefficientField(Field(spec)));
    FirstOrderSymbol s(spec, std::move(c), CoefficientField(Field(spec)));
    s.zero_ = true;
    return s;
}

FirstOrderSymbol FirstOrderSymbol::from_static(const GridSpec& spec, std::vector<Field> c,
                                               Field c0) {
    std::vector<CoefficientField> cf;
    for (auto& f : c) cf.emplace_back(std::move(f));
    return FirstOrderSymbol(spec, std::move(cf), CoefficientField(std::move(c0)));
}

bool FirstOrderSymbol::is_static() const {
    for (const auto& cf : c_)
        if (!cf.is_static()) return false;
    return c0_.is_static();
}

FirstOrderSymbol FirstOrderSymbol::scaled(cd factor) const {
    auto scale_cf = [&](const CoefficientField& cf) {
        std::vector<Field> frames;
        for (int m = 0; m < cf.frame_count(); ++m) {
            Field f = cf.at_frame(m);
            f *= factor;
            frames.push_back(std::move(f));
        }
        return CoefficientField(std::move(frames));
    };
    std::vector<CoefficientField> c;
    for (const auto& cf : c_) c.push_back(scale_cf(cf));
    FirstOrderSymbol out(spec_, std::move(c), scale_cf(c0_));
    out.zero_ = zero_ && true;
    return out;
}

// ---------------------------------------------------------------------------
// Ray evaluation: precompute sparse-mode expansions of every coefficient and
// the spatial derivatives touched by the requested order.
// ---------------------------------------------------------------------------

namespace {

struct RayEvaluator {
    const FirstOrderSymbol* a;
    // per coefficient (dim entries then c0), per frame, base modes
    std::vector<std::vector<SparseModes>> modes;

    explicit RayEvaluator(const FirstOrderSymbol& sym) : a(&sym) {
        const int dim = sym.spec().dim;
        modes.resize(dim + 1);
        for (int d = 0; d <= dim; ++d) {
            const CoefficientField& cf = d < dim ? sym.c(d) : sym.c0();
            modes[d].reserve(cf.frame_count());
            for (int m = 0; m < cf.frame_count(); ++m)
                modes[d].push_back(SparseModes::from_field(cf.at_frame(m)));
        }
    }

    // coefficient d (dim = c0) with spatial derivative alpha at (t, x);
    // frame-sampled coefficients are linearly interpolated in t.
    cd coeff(int d, const IVec& alpha, double t, const DVec& x,
             std::vector<std::vector<SparseModes>>& dcache) const {
        auto& per_frame = dcache[d];
        const auto& base = modes[d];
        if (per_frame.size() != base.size()) {
            per_frame.clear();
            for (const auto& b : base) per_frame.push_back(b.derivative(alpha));
        }
        if (per_frame.size() == 1) return per_frame[0].eval(x);
        const int M = static_cast<int>(per_frame.size()) - 1;
        double tm = std::clamp(t, 0.0, 1.0) * M;
        const int m0 = std::min(static_cast<int>(tm), M - 1);
        const double w = tm - m0;
        return (1.0 - w) * per_frame[m0].eval(x) + w * per_frame[m0 + 1].eval(x);
    }
};

// |d_x^alpha d_xi^beta a| evaluated at (t, x(t), xi)
struct RayIntegrand {
    const RayEvaluator& ev;
    IVec alpha, beta;
    DVec x0, xi;
    mutable std::vector<std::vector<SparseModes>> dcache;

    RayIntegrand(const RayEvaluator& e, const IVec& al, const IVec& be, const DVec& x,
                 const DVec& k)
        : ev(e), alpha(al), beta(be), x0(x), xi(k), dcache(e.modes.size()) {}

    double operator()(double t) const {
        const GridSpec& g = ev.a->spec();
        DVec xt{x0[0] + 2.0 * t * xi[0], g.dim == 2 ? x0[1] + 2.0 * t * xi[1] : 0.0};
        for (int d = 0; d < g.dim; ++d) xt[d] -= g.length * std::floor(xt[d] / g.length);
        const int ob = beta[0] + beta[1];
        cd val(0, 0);
        if (ob == 0) {
            for (int d = 0; d < g.dim; ++d)
                val += ev.coeff(d, alpha, t, xt, dcache) * xi[d];
            val += ev.coeff(g.dim, alpha, t, xt, dcache);
        } else if (ob == 1) {
            const int axis = beta[0] == 1 ? 0 : 1;
            val = ev.coeff(axis, alpha, t, xt, dcache);
        } else {
            val = 0; // second xi-derivative of a first-order symbol vanishes
        }
        return std::abs(val);
    }
};

int auto_nodes(const DVec& xi, const RayQuadrature& q) {
    if (q.nodes > 0) return q.nodes + (q.nodes % 2); // even interval count
    const double sp = std::hypot(xi[0], xi[1]);
    int n = std::max(64, static_cast<int>(std::ceil(4.0 * sp))) * std::max(1, q.oversample);
    return n + (n % 2);
}

double simpson(const std::function<double(double)>& f, double t0, double t1, int intervals) {
    const double h = (t1 - t0) / intervals;
    double s = f(t0) + f(t1);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(t0 + i * h);
    return s * h / 3.0;
}

} // namespace

double ray_integral(const FirstOrderSymbol& a, const DVec& x, const DVec& xi, const IVec& alpha,
                    const IVec& beta, const RayQuadrature& quad) {
    if (alpha[0] + alpha[1] + beta[0] + beta[1] > 2)
        throw std::invalid_argument("ray_integral: |alpha|+|beta| <= 2 supported");
    if (a.is_zero()) return 0.0;
    const RayEvaluator ev(a);
    const RayIntegrand f(ev, alpha, beta, x, xi);
    const int n = auto_nodes(xi, quad);
    return simpson([&](double t) { return f(t); }, 0.0, 1.0, n);
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

nlohmann::json SymbolClassReport::to_json() const {
    return nlohmann::json{{"M", M}, {"delta", delta}, {"admissible", admissible},
                          {"threshold", threshold}};
}

SymbolClassReport classify(const FirstOrderSymbol& a, int sample_budget,
                           double admissible_threshold) {
    if (sample_budget < 1) throw std::invalid_argument("classify: budget >= 1");
    SymbolClassReport rep;
    rep.threshold = admissible_threshold;
    if (a.is_zero()) return rep;

    const GridSpec& g = a.spec();
    const RayEvaluator ev(a);
    const double ximax = 0.95 * g.nyquist();

    std::vector<std::pair<DVec, DVec>> samples;
    samples.reserve(sample_budget);
    for (int s = 0; s < sample_budget; ++s) {
        DVec x{halton(s, 2) * g.length, g.dim == 2 ? halton(s, 3) * g.length : 0.0};
        const double mag = std::exp(std::log(1.0) +
                                    halton(s, 5) * std::log(std::max(1.0, ximax)));
        DVec xi;
        if (g.dim == 1) {
            xi = {halton(s, 7) < 0.5 ? mag : -mag, 0.0};
        } else {
            const double th = kTwoPi * halton(s, 7);
            xi = {mag * std::cos(th), mag * std::sin(th)};
        }
        samples.push_back({x, xi});
    }

    std::vector<std::pair<IVec, IVec>> orders;
    for (int a0 = 0; a0 <= 2; ++a0)
        for (int a1 = 0; a1 <= (g.dim == 2 ? 2 : 0); ++a1)
            for (int b0 = 0; b0 <= 1; ++b0)
                for (int b1 = 0; b1 <= (g.dim == 2 ? 1 : 0); ++b1) {
                    const int total = a0 + a1 + b0 + b1;
                    if (total < 1 || total > 2) continue;
                    orders.push_back({{a0, a1}, {b0, b1}});
                }

    auto eval_order = [&](const IVec& alpha, const IVec& beta, const DVec& x, const DVec& xi) {
        const RayIntegrand f(ev, alpha, beta, x, xi);
        const int n = auto_nodes(xi, RayQuadrature{});
        return simpson([&](double t) { return f(t); }, 0.0, 1.0, n);
    };

    // pass 1: low-discrepancy sweep
    std::vector<double> m_vals(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        m_vals[s] = eval_order({0, 0}, {0, 0}, samples[s].first, samples[s].second);
    });
    std::size_t best_m = 0;
    for (std::size_t s = 0; s < samples.size(); ++s)
        if (m_vals[s] > m_vals[best_m]) best_m = s;
    rep.M = m_vals[best_m];

    double delta = 0;
    std::size_t best_d = 0;
    IVec best_alpha{0, 0}, best_beta{0, 0};
    for (const auto& [alpha, beta] : orders) {
        std::vector<double> vals(samples.size());
        parallel_for(samples.size(), [&](std::size_t s) {
            vals[s] = eval_order(alpha, beta, samples[s].first, samples[s].second);
        });
        for (std::size_t s = 0; s < samples.size(); ++s)
            if (vals[s] > delta) { delta = vals[s]; best_d = s; best_alpha = alpha; best_beta = beta; }
    }

    // pass 2: local refinement around the running maxima
    auto refine = [&](std::size_t seed_idx, const IVec& alpha, const IVec& beta, double cur) {
        DVec x = samples[seed_idx].first;
        DVec xi = samples[seed_idx].second;
        double best = cur;
        double rad_x = 1.0, rad_k = std::max(1.0, std::hypot(xi[0], xi[1]) * 0.25);
        Rng rng = make_rng(1234 + seed_idx);
        for (int round = 0; round < 3; ++round) {
            DVec bx = x, bxi = xi;
            for (int trial = 0; trial < 8; ++trial) {
                DVec tx{x[0] + uniform(rng, -rad_x, rad_x),
                        g.dim == 2 ? x[1] + uniform(rng, -rad_x, rad_x) : 0.0};
                DVec txi{xi[0] + uniform(rng, -rad_k, rad_k),
                         g.dim == 2 ? xi[1] + uniform(rng, -rad_k, rad_k) : 0.0};
                const double sp = std::hypot(txi[0], txi[1]);
                if (sp > ximax || sp < 1e-6) continue;
                const double v = eval_order(alpha, beta, tx, txi);
                if (v > best) { best = v; bx = tx; bxi = txi; }
            }
            x = bx; xi = bxi;
            rad_x *= 0.5; rad_k *= 0.5;
        }
        return best;
    };
    rep.M = refine(best_m, {0, 0}, {0, 0}, rep.M);
    if (delta > 0) delta = refine(best_d, best_alpha, best_beta, delta);
    rep.delta = delta;

    rep.admissible = (rep.delta == 0.0) ||
                     (std::log(rep.delta) + rep.M < std::log(admissible_threshold));
    return rep;
}

// ---------------------------------------------------------------------------
// mizohata
// ---------------------------------------------------------------------------

double mizohata(const std::vector<Field>& b, const DirectionSet& dirs_in, double R) {
    if (b.empty()) throw std::invalid_argument("mizohata: empty coefficient vector");
    const GridSpec& g = b[0].spec();
    if (static_cast<int>(b.size()) != g.dim)
        throw std::invalid_argument("mizohata: need one coefficient per axis");
    if (!(R > 0) || R > g.length / 2 + 1e-12)
        throw std::invalid_argument("mizohata: need 0 < R <= L/2");
    DirectionSet dirs = dirs_in;
    if (dirs.dirs.empty()) dirs = DirectionSet::standard(g.dim);
    dirs.validate();

    std::vector<SparseModes> modes;
    for (const Field& f : b) modes.push_back(SparseModes::from_field(f));

    // base points: integer lattice over the mass box of |b| (expanded), plus a
    // far anchor; rays starting far away reach the same running extrema.
    Field absb(g);
    for (std::size_t i = 0; i < absb.size(); ++i) {
        double m2 = 0;
        for (const Field& f : b) m2 += std::norm(f[i]);
        absb[i] = std::sqrt(m2);
    }
    std::vector<IVec> cells = bumps_with_mass(absb, 1e-20);
    if (cells.empty()) return 0.0;
    std::vector<DVec> bases;
    for (const IVec& c : cells)
        bases.push_back({static_cast<double>(c[0]), static_cast<double>(c[1])});
    bases.push_back({std::fmod(bases[0][0] + g.length / 2, g.length),
                     g.dim == 2 ? std::fmod(bases[0][1] + g.length / 2, g.length) : 0.0});

    const double hstep = std::min(g.h(), 0.25);
    const int nsteps = static_cast<int>(std::ceil(R / hstep));
    const double dr = R / nsteps;

    std::vector<double> per_base(bases.size(), 0.0);
    parallel_for(bases.size(), [&](std::size_t bi) {
        double best = 0;
        for (const DVec& w : dirs.dirs) {
            auto integrand = [&](double r) {
                DVec x{bases[bi][0] + r * w[0], g.dim == 2 ? bases[bi][1] + r * w[1] : 0.0};
                cd v(0, 0);
                for (int d = 0; d < g.dim; ++d) v += modes[d].eval(x) * w[d];
                return v.real();
            };
            double cum = 0;
            double prev = integrand(0.0);
            for (int s = 0; s < nsteps; ++s) {
                const double mid = integrand((s + 0.5) * dr);
                const double next = integrand((s + 1.0) * dr);
                cum += dr / 6.0 * (prev + 4.0 * mid + next);
                prev = next;
                best = std::max(best, std::abs(cum));
            }
        }
        per_base[bi] = best;
    });
    return *std::max_element(per_base.begin(), per_base.end());
}

// ---------------------------------------------------------------------------
// apply_symbol / ray exponential
// ---------------------------------------------------------------------------

Field apply_symbol(const FirstOrderSymbol& a, const Field& u, int frame) {
    const GridSpec& g = a.spec();
    if (!(u.spec() == g)) throw std::invalid_argument("apply_symbol: mismatched grids");
    if (a.is_zero()) return Field(g);
    Field out(g);
    for (int d = 0; d < g.dim; ++d) {
        const Field du = apply_multiplier(u, [d](const DVec& k) { return cd(k[d], 0.0); });
        const Field& cd_field = a.c(d).at_frame(frame);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cd_field[i] * du[i];
    }
    const Field& c0 = a.c0().at_frame(frame);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c0[i] * u[i];
    return out;
}

std::vector<cd> ray_cumulative_integral(const FirstOrderSymbol& a, const DVec& x0,
                                        const DVec& xi0, int substeps) {
    const GridSpec& g = a.spec();
    const int M = g.steps;
    std::vector<cd> out(M + 1, cd(0, 0));
    if (a.is_zero()) return out;
    const RayEvaluator ev(a);
    std::vector<std::vector<SparseModes>> dcache(ev.modes.size());
    auto value = [&](double t) {
        DVec xt{x0[0] + 2.0 * t * xi0[0], g.dim == 2 ? x0[1] + 2.0 * t * xi0[1] : 0.0};
        for (int d = 0; d < g.dim; ++d) xt[d] -= g.length * std::floor(xt[d] / g.length);
        cd v(0, 0);
        for (int d = 0; d < g.dim; ++d) v += ev.coeff(d, {0, 0}, t, xt, dcache) * xi0[d];
        v += ev.coeff(g.dim, {0, 0}, t, xt, dcache);
        return v;
    };
    const int sub = std::max(1, substeps) * 2; // even per-frame interval count
    const double dt = g.dt();
    cd acc(0, 0);
    cd prev = value(0.0);
    for (int m = 0; m < M; ++m) {
        const double t0 = m * dt;
        const double h = dt / sub;
        for (int s = 0; s < sub; s += 2) {
            const cd f1 = value(t0 + (s + 1) * h);
            const cd f2 = value(t0 + (s + 2) * h);
            acc += h / 3.0 * (prev + 4.0 * f1 + f2);
            prev = f2;
        }
        out[m + 1] = acc;
    }
    return out;
}

RayExponential ray_exponential(const FirstOrderSymbol& a, const DVec& x0, const DVec& xi0) {
    const std::vector<cd> cum = ray_cumulative_integral(a, x0, xi0);
    std::vector<cd> w(cum.size());
    for (std::size_t m = 0; m < cum.size(); ++m) w[m] = std::exp(cum[m]);
    RayExponential out;
    out.weight = TimeSeries::scalars_uniform(w);
    for (std::size_t m = 1; m < w.size(); ++m) out.w11 += std::abs(w[m] - w[m - 1]);
    out.v2 = v2_norm(out.weight);
    out.ray_m = ray_integral(a, x0, xi0, {0, 0}, {0, 0});
    return out;
}

} // namespace dnls
