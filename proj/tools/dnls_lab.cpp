// dnls_lab: scenario-driven runs, norm reports, estimate sweeps, packet I/O.
//
// Exit codes: 0 success, 1 config/input error, 2 solver failure.

#include "dnlslab/scenario.hpp"
#include "dnlslab/spaces.hpp"
#include "dnlslab/verify.hpp"
#include "dnlslab/wavepackets.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace dnls;

namespace {

struct CommonArgs {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void apply_common(const CommonArgs& c) {
    if (c.threads > 0) ThreadPool::instance().set_threads(c.threads);
    std::filesystem::create_directories(c.out);
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream os(p);
    os << j.dump(2) << "\n";
}

Scenario load_scenario(const CommonArgs& c) {
    if (c.config.empty()) throw std::invalid_argument("missing --config");
    Scenario sc = Scenario::load(c.config);
    if (c.seed_set) sc.seed = c.seed;
    return sc;
}

int cmd_solve(const CommonArgs& c) {
    apply_common(c);
    Scenario sc;
    try {
        sc = load_scenario(c);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    const Field u0 = sc.make_datum();
    nlohmann::json diag;
    try {
        LargeDataResult res = solve_large_data(u0, sc.nonlinearity, sc.pipeline_config());
        write_dnf1(std::filesystem::path(c.out) / "solution.dnf1", res.u);
        diag = res.diagnostics;
        diag["status"] = "ok";
        write_json(std::filesystem::path(c.out) / "diagnostics.json", diag);
        std::cout << "solved: T=" << res.T << " eps=" << res.eps << "\n";
        return 0;
    } catch (const std::exception& e) {
        diag["status"] = "failed";
        diag["error"] = e.what();
        write_json(std::filesystem::path(c.out) / "diagnostics.json", diag);
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
}

int cmd_linear(const CommonArgs& c) {
    apply_common(c);
    Scenario sc;
    try {
        sc = load_scenario(c);
        if (sc.grid.dim != 1)
            throw std::invalid_argument("cmd_linear: 1-d scenarios only");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        const double W = sc.bump_width > 0 ? sc.bump_width : sc.grid.length / 8.0;
        Field coeff(sc.grid);
        for (int i = 0; i < sc.grid.points; ++i) {
            const double x = i * sc.grid.h() - sc.grid.length / 2.0;
            coeff[i] = cd(0, sc.gamma * radial_cutoff(std::abs(x) / W));
        }
        const FirstOrderSymbol a = FirstOrderSymbol::from_static(sc.grid, {coeff}, Field(sc.grid));
        const Field g0 = sc.make_datum();
        LinearProblem lp(a, g0, SpacetimeField(sc.grid));
        auto [u, diag] = picard_solve(lp, sc.tol, 16);
        write_dnf1(std::filesystem::path(c.out) / "solution.dnf1", u);
        nlohmann::json j = diag.to_json();
        j["status"] = "ok";
        write_json(std::filesystem::path(c.out) / "diagnostics.json", j);
        std::cout << "linear solve: iterations=" << diag.iterations
                  << " residual=" << diag.residual_l2.back() << "\n";
        return 0;
    } catch (const PicardError& e) {
        nlohmann::json j = e.diagnostics.to_json();
        j["status"] = "failed";
        j["error"] = e.what();
        write_json(std::filesystem::path(c.out) / "diagnostics.json", j);
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
}

int cmd_norms(const CommonArgs& c, const std::vector<std::string>& files, double s) {
    apply_common(c);
    if (files.empty()) {
        std::cerr << "config error: no input files\n";
        return 1;
    }
    std::ofstream jsonl(std::filesystem::path(c.out) / "norms.jsonl");
    for (const std::string& file : files) {
        SpacetimeField u;
        try {
            u = read_dnf1(file);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }
        const GridSpec& g = u.spec();
        const Field& u0 = u.frame(0);
        std::vector<NormReport> reports;
        reports.push_back(NormReport::point("L2", u0.l2_norm(), {{"frame", 0}}, g));
        reports.push_back(NormReport::point("D-Hs", dhs_norm(u0, s), {{"s", s}}, g));
        if (g.steps >= 1) {
            const double p = 2.0 * (g.dim + 2.0) / g.dim;
            reports.push_back(NormReport::point("Xs", xs_norm(u, s), {{"s", s}}, g));
            reports.push_back(
                NormReport::point("LpLp", lpq_norm(u, p, p), {{"p", p}, {"q", p}}, g));
            reports.push_back(NormReport::bracket("Ys", y_bracket(u, s), {{"s", s}}, g));
        }
        std::cout << file << ":\n";
        for (const NormReport& r : reports) {
            jsonl << r.to_json().dump() << "\n";
            if (r.value.lo == r.value.hi)
                std::cout << "  " << r.name << " = " << r.value.lo << "\n";
            else
                std::cout << "  " << r.name << " in [" << r.value.lo << ", " << r.value.hi
                          << "]\n";
        }
    }
    return 0;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

int cmd_verify(const CommonArgs& c, const std::string& sweep_id, const std::string& lambdas,
               const std::string& mus, const std::string& sigmas, const std::string& eps,
               int trials, double s, int dim) {
    apply_common(c);
    EstimateSweep sweep;
    try {
        const GridSpec grid1{1, 512, 16.0, 64};
        const GridSpec grid2{2, 128, 16.0, 64};
        const GridSpec grid = dim == 2 ? grid2 : grid1;
        if (sweep_id == "strichartz") {
            sweep = sweep_strichartz(trials, grid, c.seed);
        } else if (sweep_id == "modulation") {
            sweep = sweep_modulation(parse_list(sigmas.empty() ? "4,16,64,256" : sigmas), trials,
                                     grid, c.seed);
        } else if (sweep_id == "bilinear") {
            sweep = sweep_bilinear(parse_list(lambdas.empty() ? "8,16" : lambdas),
                                   parse_list(mus.empty() ? "2,4" : mus), trials,
                                   ConjPattern::HighLowHigh,
                                   dim == 2 ? GridSpec{2, 256, 16.0, 64} : grid1, c.seed);
        } else if (sweep_id == "highhigh") {
            sweep = sweep_highhigh(parse_list(lambdas.empty() ? "8,16" : lambdas),
                                   parse_list(mus.empty() ? "2,4" : mus), trials,
                                   dim == 2 ? GridSpec{2, 256, 16.0, 64} : grid1, c.seed);
        } else if (sweep_id == "scaling") {
            sweep = sweep_scaling(parse_list(eps.empty() ? "0.25,0.125,0.0625,0.03125,0.015625"
                                                         : eps),
                                  s, trials, GridSpec{dim, dim == 2 ? 32 : 256, 8.0, 8}, c.seed);
        } else if (sweep_id == "linear") {
            sweep = sweep_linear_estimate(parse_list(lambdas.empty() ? "0,0.5,1,1.5,2" : lambdas),
                                          s, trials, GridSpec{1, 2048, 64.0, 48}, c.seed);
        } else {
            std::cerr << "config error: unknown sweep '" << sweep_id << "'\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
    std::ofstream csv(std::filesystem::path(c.out) / (sweep.id + ".csv"));
    sweep.to_csv(csv);
    write_json(std::filesystem::path(c.out) / (sweep.id + ".json"), sweep.summary);
    std::cout << sweep.id << ": rows=" << sweep.rows.size() << " max_ratio=" << sweep.max_ratio()
              << "\n";
    return 0;
}

int cmd_packets(const CommonArgs& c, const std::string& file, const std::string& xi0, int J) {
    apply_common(c);
    SpacetimeField u;
    IVec ic{0, 0};
    try {
        u = read_dnf1(file);
        const std::vector<double> v = parse_list(xi0);
        if (v.empty() || v.size() > 2)
            throw std::invalid_argument("cmd_packets: bad --xi0");
        ic[0] = static_cast<int>(v[0]);
        if (v.size() == 2) ic[1] = static_cast<int>(v[1]);
        if (J < 1) throw std::invalid_argument("cmd_packets: need J >= 1");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    const PacketSet p = decompose(u, ic, J);
    write_json(std::filesystem::path(c.out) / "packets.json", p.to_json());
    if (p.residual) write_dnf1(std::filesystem::path(c.out) / "residual.dnf1", *p.residual);
    const SpacetimeField rec = reconstruct_truncated(p, J);
    SpacetimeField diff = u;
    diff -= rec;
    if (p.residual) diff -= *p.residual;
    const double un = u.l2_norm();
    std::cout << "packets: entries=" << p.entries.size()
              << " truncation_residual=" << (p.residual ? p.residual->l2_norm() : 0.0)
              << " lossless_error=" << (un > 0 ? diff.l2_norm() / un : 0.0) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral simulation and verification toolkit for quadratic derivative NLS"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--threads", common.threads, "worker threads (default: hardware)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "scenario config path");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, "seed override")
            ->each([&](const std::string&) { common.seed_set = true; });
        sub->add_option("--threads", common.threads, "worker threads");
    };

    CLI::App* solve = app.add_subcommand("solve", "large-data pipeline solve");
    add_common(solve);

    CLI::App* linear = app.add_subcommand("linear", "perturbed linear solve (parametrix+Picard)");
    add_common(linear);

    CLI::App* norms = app.add_subcommand("norms", "norm report for DNF1 fields");
    add_common(norms);
    std::vector<std::string> norm_files;
    double norm_s = 2.0;
    norms->add_option("files", norm_files, "DNF1 inputs");
    norms->add_option("--s", norm_s, "Sobolev order");

    CLI::App* verify = app.add_subcommand("verify", "estimate sweeps");
    add_common(verify);
    std::string sweep_id, lambdas, mus, sigmas, eps;
    int trials = 8, dim = 1;
    double sweep_s = 1.75;
    verify->add_option("sweep", sweep_id, "sweep id")->required();
    verify->add_option("--lambdas", lambdas, "comma list");
    verify->add_option("--mus", mus, "comma list");
    verify->add_option("--sigmas", sigmas, "comma list");
    verify->add_option("--eps", eps, "comma list");
    verify->add_option("--trials", trials, "trials per point");
    verify->add_option("--s", sweep_s, "Sobolev order");
    verify->add_option("--dim", dim, "dimension (1 or 2)");

    CLI::App* packets = app.add_subcommand("packets", "wave-packet decomposition");
    add_common(packets);
    std::string packet_file, xi0 = "0";
    int J = 8;
    packets->add_option("file", packet_file, "DNF1 spacetime input")->required();
    packets->add_option("--xi0", xi0, "frequency-cube index (a or a,b)");
    packets->add_option("--J", J, "profile count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(common);
        if (linear->parsed()) return cmd_linear(common);
        if (norms->parsed()) return cmd_norms(common, norm_files, norm_s);
        if (verify->parsed())
            return cmd_verify(common, sweep_id, lambdas, mus, sigmas, eps, trials, sweep_s, dim);
        if (packets->parsed()) return cmd_packets(common, packet_file, xi0, J);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
