#include "spinlab/experiments.hpp"

#include "spinlab/errors.hpp"
#include "spinlab/io.hpp"
#include "spinlab/kawasaki.hpp"
#include "spinlab/lattice.hpp"
#include "spinlab/luyau.hpp"
#include "spinlab/observables.hpp"
#include "spinlab/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace spinlab {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const std::string& ctx) {
    if (!j.is_object()) throw ValidationError(ctx + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!required.count(key) && !optional.count(key))
            throw ValidationError(ctx + ": unknown key '" + key + "'");
    }
    for (const std::string& key : required)
        if (!j.contains(key)) throw ValidationError(ctx + ": missing key '" + key + "'");
}

double get_num(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError("'" + key + "' must be a number");
    return j.at(key).get<double>();
}

long get_int(const json& j, const std::string& key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ValidationError("'" + key + "' must be an integer");
    return j.at(key).get<long>();
}

std::vector<int> get_int_list(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw ValidationError("'" + key + "' must be an array");
    std::vector<int> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number_integer()) throw ValidationError("'" + key + "' entries must be integers");
        out.push_back(v.get<int>());
    }
    if (out.empty()) throw ValidationError("'" + key + "' must be non-empty");
    return out;
}

} // namespace

PerturbationSpec perturbation_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("perturbation: expected {\"kind\": ...}");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") {
        require_keys(j, {"kind"}, {}, "perturbation(zero)");
        return zero_perturbation();
    }
    if (kind == "sine") {
        require_keys(j, {"kind", "eps"}, {}, "perturbation(sine)");
        return sine_perturbation(get_num(j, "eps", 0.0));
    }
    if (kind == "poly_sine") {
        require_keys(j, {"kind", "p", "q"}, {}, "perturbation(poly_sine)");
        std::vector<double> p = j.at("p").get<std::vector<double>>();
        std::vector<double> q = j.at("q").get<std::vector<double>>();
        return poly_sine_perturbation(p, q);
    }
    throw ValidationError("perturbation: unknown kind '" + kind + "'");
}

ChainConfig chain_from_json(const json& j, std::uint64_t default_seed) {
    ChainConfig c;
    c.seed = default_seed;
    if (j.is_null()) return c;
    require_keys(j, {}, {"kind", "step", "burn_in", "samples", "thin", "seed"}, "chain");
    if (j.contains("kind")) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "metropolis_langevin") c.kind = ChainKind::metropolis_langevin;
        else if (kind == "pair_heat_bath") c.kind = ChainKind::pair_heat_bath;
        else throw ValidationError("chain: unknown kind '" + kind + "'");
    }
    c.step = get_num(j, "step", c.step);
    c.burn_in = get_int(j, "burn_in", c.burn_in);
    c.samples = get_int(j, "samples", c.samples);
    c.thin = get_int(j, "thin", c.thin);
    c.seed = static_cast<std::uint64_t>(get_int(j, "seed", static_cast<long>(c.seed)));
    c.validate();
    return c;
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    if (j.is_null()) return g;
    require_keys(j, {}, {"nodes", "halfwidth_sd"}, "grid");
    g.nodes_per_axis = static_cast<int>(get_int(j, "nodes", g.nodes_per_axis));
    g.halfwidth_sd = get_num(j, "halfwidth_sd", g.halfwidth_sd);
    return g;
}

namespace {

json report_to_json(const SpectralReport& rep) {
    json out;
    out["poincare"] = rep.poincare_estimate;
    if (rep.lsi_estimate) out["lsi"] = *rep.lsi_estimate;
    out["method"] = to_string(rep.method);
    out["resolution"] = rep.resolution;
    out["error"] = rep.error_estimate;
    return out;
}

struct Emitter {
    std::filesystem::path dir;
    RunResult result;

    void csv(const std::string& name, const CsvTable& table) {
        atomic_write(dir / name, table.to_string());
        result.outputs.push_back(name);
    }
    void jsonfile(const std::string& name, const json& j) {
        atomic_write(dir / name, j.dump(2) + "\n");
        result.outputs.push_back(name);
    }
};

// --- per-experiment runners -------------------------------------------------

void run_gap_or_lsi(const json& cfg, std::uint64_t seed, Emitter& em, bool with_lsi) {
    require_keys(cfg, {"experiment", "n", "M", "perturbation"}, {"grid", "seed", "out"},
                 "config");
    const int n = static_cast<int>(get_int(cfg, "n", 0));
    const double M = get_num(cfg, "M", 0.0);
    (void)seed;
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const GridSpec g = grid_from_json(cfg.contains("grid") ? cfg.at("grid") : json());
    const ConservativeModel m(n, M, p);

    const SpectralReport rep = with_lsi ? lsi_constant_grid(m, g) : generator_gap(m, g);
    CsvTable table({"n", "M", "family", "P", "L", "method", "err"});
    table.add_row({std::to_string(n), format_double(M), p.name,
                   format_double(rep.poincare_estimate),
                   rep.lsi_estimate ? format_double(*rep.lsi_estimate) : "",
                   to_string(rep.method), format_double(rep.error_estimate)});
    em.csv(with_lsi ? "lsi.csv" : "gap.csv", table);
    em.result.summary = report_to_json(rep);
    em.jsonfile("report.json", em.result.summary);
}

void run_covdecay(const json& cfg, std::uint64_t seed, Emitter& em) {
    require_keys(cfg, {"experiment", "n_list", "perturbation"},
                 {"M", "M_rule", "chain", "seed", "out"}, "config");
    const std::vector<int> n_list = get_int_list(cfg, "n_list");
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const ChainConfig c = chain_from_json(cfg.contains("chain") ? cfg.at("chain") : json(), seed);

    // default probes M-uniformity with both rules: M = 0 and M = n+1
    std::vector<std::pair<std::string, MRule>> rules;
    if (cfg.contains("M_rule")) {
        const std::string r = cfg.at("M_rule").get<std::string>();
        if (r == "zero") rules.emplace_back("zero", m_rule_zero());
        else if (r == "n_plus_1") rules.emplace_back("n_plus_1", m_rule_mean_one());
        else if (r == "both") {
            rules.emplace_back("zero", m_rule_zero());
            rules.emplace_back("n_plus_1", m_rule_mean_one());
        } else {
            throw ValidationError("covdecay: unknown M_rule '" + r + "'");
        }
    } else if (cfg.contains("M")) {
        const double M = get_num(cfg, "M", 0.0);
        rules.emplace_back("fixed", [M](int) { return M; });
    } else {
        rules.emplace_back("zero", m_rule_zero());
        rules.emplace_back("n_plus_1", m_rule_mean_one());
    }

    CsvTable table({"n", "M", "family", "cov", "cov_err", "var_sum_over_n", "var_err",
                    "conclusive"});
    json slopes = json::array();
    for (const auto& [rule_name, rule] : rules) {
        const CovDecayResult res = covariance_decay_experiment(p, n_list, rule, c);
        for (const CovDecayRow& r : res.rows)
            table.add_row({std::to_string(r.n), format_double(r.M), p.name,
                           format_double(r.cov), format_double(r.cov_err),
                           format_double(r.var_sum_over_n), format_double(r.var_err),
                           r.conclusive ? "1" : "0"});
        slopes.push_back({{"M_rule", rule_name},
                          {"slope", res.slope.slope},
                          {"slope_se", res.slope.slope_se},
                          {"intercept", res.slope.intercept}});
    }
    em.csv("covdecay.csv", table);
    em.result.summary = slopes;
    em.jsonfile("report.json", em.result.summary);
}

void run_onespin(const json& cfg, std::uint64_t seed, Emitter& em) {
    require_keys(cfg, {"experiment", "n", "M", "perturbation"},
                 {"x1_min", "x1_max", "x1_nodes", "chain", "seed", "out"}, "config");
    const int n = static_cast<int>(get_int(cfg, "n", 0));
    const double M = get_num(cfg, "M", 0.0);
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const ChainConfig c = chain_from_json(cfg.contains("chain") ? cfg.at("chain") : json(), seed);
    const double x1_min = get_num(cfg, "x1_min", -3.0);
    const double x1_max = get_num(cfg, "x1_max", 3.0);
    const long nodes = get_int(cfg, "x1_nodes", 13);
    if (nodes < 2 || !(x1_max > x1_min)) throw ValidationError("onespin: bad x1 grid");

    std::vector<double> x1_grid(nodes);
    for (long i = 0; i < nodes; ++i)
        x1_grid[i] = x1_min + (x1_max - x1_min) * static_cast<double>(i) / (nodes - 1);
    const ConservativeModel m(n, M, p);
    const OneSpinResult res = one_spin_curvature(m, x1_grid, c);

    CsvTable table({"x1", "phi_dd", "err", "flagged", "quad_check"});
    for (const OneSpinRow& r : res.rows)
        table.add_row({format_double(r.x1), format_double(r.phi_dd), format_double(r.err),
                       r.flagged ? "1" : "0",
                       n == 3 ? format_double(r.quad_check) : ""});
    em.csv("onespin.csv", table);
    em.result.summary = {{"fitted_C", res.fitted_C}, {"n", n}, {"M", M}};
    em.jsonfile("report.json", em.result.summary);
}

void run_luyau(const json& cfg, std::uint64_t seed, Emitter& em) {
    (void)seed;
    require_keys(cfg, {"experiment", "n", "M", "perturbation"},
                 {"grid_nodes", "seed", "out"}, "config");
    const int n = static_cast<int>(get_int(cfg, "n", 0));
    const double M = get_num(cfg, "M", 0.0);
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const int nodes = static_cast<int>(get_int(cfg, "grid_nodes", 64));
    const ConservativeModel m(n, M, p);
    const ConditionalTower tower(m, nodes);
    const std::vector<Observable> dict = luyau_dictionary(m);

    CsvTable decomp({"f", "kind", "level", "term", "total", "recon_error"});
    CsvTable idents({"f", "k", "gradient_residual", "ibp_residual"});
    json summary = json::array();
    for (const Observable& obs : dict) {
        const DecompositionReport var = variance_decomposition(tower, obs.f);
        for (int k = 1; k <= n; ++k)
            decomp.add_row({obs.name, "variance", std::to_string(k),
                            format_double(var.terms[k - 1]), format_double(var.total),
                            format_double(var.reconstruction_error)});
        // entropy of a positive transform: f itself when already positive,
        // else e^{f/2}
        const bool already_positive = obs.name.rfind("exp_", 0) == 0;
        const DecompositionReport ent =
            entropy_decomposition(tower, [&](const Eigen::VectorXd& x) {
                return already_positive ? obs.f(x) : std::exp(0.5 * obs.f(x));
            });
        for (int k = 1; k <= n; ++k)
            decomp.add_row({obs.name, "entropy", std::to_string(k),
                            format_double(ent.terms[k - 1]), format_double(ent.total),
                            format_double(ent.reconstruction_error)});
        json fj = {{"f", obs.name},
                   {"variance_total", var.total},
                   {"variance_recon_error", var.reconstruction_error},
                   {"entropy_total", ent.total},
                   {"entropy_recon_error", ent.reconstruction_error}};
        json res_list = json::array();
        for (int k = 1; k <= n - 1; ++k) {
            const double gr = gradient_identity_check(tower, obs, k);
            const double ib = integration_by_parts_check(tower, obs, k);
            idents.add_row({obs.name, std::to_string(k), format_double(gr), format_double(ib)});
            res_list.push_back({{"k", k}, {"gradient", gr}, {"ibp", ib}});
        }
        fj["identities"] = res_list;
        summary.push_back(fj);
    }
    em.csv("luyau_decompositions.csv", decomp);
    em.csv("luyau_identities.csv", idents);
    em.result.summary = summary;
    em.jsonfile("report.json", summary);
}

void run_kawasaki(const json& cfg, std::uint64_t seed, Emitter& em, int threads) {
    require_keys(cfg, {"experiment", "d", "L_list", "perturbation"},
                 {"M", "chain", "seed", "out"}, "config");
    const int d = static_cast<int>(get_int(cfg, "d", 1));
    const std::vector<int> L_list = get_int_list(cfg, "L_list");
    const double M = get_num(cfg, "M", 0.0);
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const ChainConfig c = chain_from_json(cfg.contains("chain") ? cfg.at("chain") : json(), seed);

    if (L_list.size() == 1 && L_list[0] < 2) {
        // single degenerate lattice: no dynamics
        LatticeBox box(d, std::max(1, L_list[0]));
        kawasaki_tau(box, p, M, c); // throws NumericalError
    }
    const LatticeBox box_template(d, 2);
    const KawasakiResult res = kawasaki_relaxation(box_template, p, M, c, L_list, threads);
    CsvTable table({"d", "L", "family", "tau", "tau_err"});
    for (const KawasakiRow& r : res.rows)
        table.add_row({std::to_string(d), std::to_string(r.L), p.name, format_double(r.tau),
                       format_double(r.tau_err)});
    em.csv("kawasaki.csv", table);
    em.result.summary = {{"z", res.z.slope},
                         {"z_se", res.z.slope_se},
                         {"z_ci95", 1.96 * res.z.slope_se}};
    em.jsonfile("report.json", em.result.summary);
}

void run_paths(const json& cfg, Emitter& em) {
    require_keys(cfg, {"experiment", "d", "L_list"}, {"dump_congestion", "seed", "out"},
                 "config");
    const int d = static_cast<int>(get_int(cfg, "d", 1));
    const std::vector<int> L_list = get_int_list(cfg, "L_list");
    const bool dump = cfg.contains("dump_congestion") && cfg.at("dump_congestion").get<bool>();

    CsvTable table({"d", "L", "sites", "edges", "ratio", "ratio_over_L2", "max_congestion",
                    "c_d", "max_path_len", "total_path_len"});
    std::vector<double> ls, congs;
    for (int L : L_list) {
        const LatticeBox box(d, L);
        const PathSystem ps = build_paths(box);
        const double ratio = comparison_ratio(box);
        // explicit congestion constant of this box: max congestion / L^{d+1}
        const double c_d = static_cast<double>(ps.max_congestion) /
                           std::pow(static_cast<double>(L), d + 1);
        table.add_row({std::to_string(d), std::to_string(L), std::to_string(box.nsites()),
                       std::to_string(box.nedges()), format_double(ratio),
                       format_double(ratio / (static_cast<double>(L) * L)),
                       std::to_string(ps.max_congestion), format_double(c_d),
                       std::to_string(ps.max_path_length),
                       std::to_string(ps.total_path_length)});
        ls.push_back(L);
        congs.push_back(static_cast<double>(ps.max_congestion));
        if (dump) {
            CsvTable ctab({"axis", "site", "congestion"});
            for (std::size_t a = 0; a < ps.congestion.size(); ++a)
                for (long i = 0; i < static_cast<long>(ps.congestion[a].size()); ++i)
                    if (box.coords(i)[a] + 1 < L)
                        ctab.add_row({std::to_string(a), std::to_string(i),
                                      std::to_string(ps.congestion[a][i])});
            em.csv("congestion_d" + std::to_string(d) + "_L" + std::to_string(L) + ".csv",
                   ctab);
        }
    }
    em.csv("paths.csv", table);
    json summary = {{"d", d}};
    if (ls.size() >= 2) {
        const SlopeFit fit = fit_loglog(ls, congs);
        summary["congestion_exponent"] = fit.slope;
        summary["congestion_exponent_se"] = fit.slope_se;
    }
    em.result.summary = summary;
    em.jsonfile("report.json", summary);
}

void run_betalimit(const json& cfg, std::uint64_t seed, Emitter& em) {
    require_keys(cfg, {"experiment", "n", "M", "perturbation", "observable", "beta_list"},
                 {"chain", "seed", "out"}, "config");
    const int n = static_cast<int>(get_int(cfg, "n", 0));
    const double M = get_num(cfg, "M", 0.0);
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const std::string obs = cfg.at("observable").get<std::string>();
    if (!cfg.at("beta_list").is_array()) throw ValidationError("betalimit: beta_list array");
    std::vector<double> betas;
    for (const auto& b : cfg.at("beta_list")) betas.push_back(b.get<double>());
    const ChainConfig c = chain_from_json(cfg.contains("chain") ? cfg.at("chain") : json(), seed);

    const ConservativeModel m(n, M, p);
    const BetaLimitResult res = beta_limit_check(m, obs, betas, c);
    CsvTable table({"beta", "value", "err"});
    for (const BetaLimitRow& r : res.rows)
        table.add_row({format_double(r.beta), format_double(r.value), format_double(r.err)});
    em.csv("betalimit.csv", table);
    em.result.summary = {{"reference", res.reference},
                         {"decreasing_beyond_noise", res.decreasing_beyond_noise},
                         {"final_within_3err", res.final_within_3err}};
    em.jsonfile("report.json", em.result.summary);
}

void run_uniformity(const json& cfg, std::uint64_t seed, Emitter& em, int threads) {
    require_keys(cfg, {"experiment", "n_list", "perturbation"},
                 {"chain", "grid", "seed", "out", "M_rules"}, "config");
    const std::vector<int> n_list = get_int_list(cfg, "n_list");
    if (n_list.empty()) throw ValidationError("uniformity_sweep: empty sweep grid");
    const PerturbationSpec p = perturbation_from_json(cfg.at("perturbation"));
    const ChainConfig c = chain_from_json(cfg.contains("chain") ? cfg.at("chain") : json(), seed);
    const GridSpec g = grid_from_json(cfg.contains("grid") ? cfg.at("grid") : json());

    std::vector<std::string> rules = {"zero", "n_plus_1"};
    if (cfg.contains("M_rules")) rules = cfg.at("M_rules").get<std::vector<std::string>>();
    std::vector<MRule> mrules;
    for (const std::string& r : rules) {
        if (r == "zero") mrules.push_back(m_rule_zero());
        else if (r == "n_plus_1") mrules.push_back(m_rule_mean_one());
        else throw ValidationError("uniformity_sweep: unknown M rule '" + r + "'");
    }

    struct Cell {
        int n;
        double M;
        SpectralReport variational;
        std::optional<SpectralReport> grid_report;
    };
    const long ncells = static_cast<long>(n_list.size() * mrules.size());
    std::vector<Cell> cells(ncells);
    parallel_for(
        ncells,
        [&](long idx) {
            const int n = n_list[idx / mrules.size()];
            const double M = mrules[idx % mrules.size()](n);
            const ConservativeModel m(n, M, p);
            Cell cell;
            cell.n = n;
            cell.M = M;
            const SampleBatch batch = sample_sigma(m, c.with_seed(split_seed(c.seed, idx)));
            SpectralReport vr;
            vr.method = SpectralMethod::variational_samples;
            vr.resolution = batch.nsamples();
            vr.poincare_estimate = variational_gap_lower_bound(batch, sigma_dictionary(m));
            vr.error_estimate = 0.0;
            cell.variational = vr;
            if (n <= 2) cell.grid_report = lsi_constant_grid(m, g);
            else if (n <= 3) cell.grid_report = generator_gap(m, g);
            cells[idx] = cell;
        },
        threads);

    CsvTable table({"n", "M", "family", "P", "L", "method", "err"});
    double vmax = 0.0, vmin = 1e300;
    std::vector<double> v_by_n_first, v_by_n_second;
    for (const Cell& cell : cells) {
        table.add_row({std::to_string(cell.n), format_double(cell.M), p.name,
                       format_double(cell.variational.poincare_estimate), "",
                       to_string(cell.variational.method),
                       format_double(cell.variational.error_estimate)});
        if (cell.grid_report)
            table.add_row({std::to_string(cell.n), format_double(cell.M), p.name,
                           format_double(cell.grid_report->poincare_estimate),
                           cell.grid_report->lsi_estimate
                               ? format_double(*cell.grid_report->lsi_estimate)
                               : "",
                           to_string(cell.grid_report->method),
                           format_double(cell.grid_report->error_estimate)});
        vmax = std::max(vmax, cell.variational.poincare_estimate);
        vmin = std::min(vmin, cell.variational.poincare_estimate);
    }
    // plateau check: the upper half of the n-sweep must not exceed the lower
    // half's maximum by more than 25%
    const int n_split = n_list[n_list.size() / 2];
    double lo_max = 0.0, hi_max = 0.0;
    for (const Cell& cell : cells) {
        if (cell.n < n_split) lo_max = std::max(lo_max, cell.variational.poincare_estimate);
        else hi_max = std::max(hi_max, cell.variational.poincare_estimate);
    }
    const bool bounded = hi_max <= 1.25 * lo_max;

    em.csv("uniformity.csv", table);
    em.result.summary = {{"max", vmax},         {"min", vmin},  {"split_n", n_split},
                         {"low_half_max", lo_max}, {"high_half_max", hi_max},
                         {"bounded", bounded}};
    em.jsonfile("summary.json", em.result.summary);
}

} // namespace

RunResult run_experiment(json config, const std::filesystem::path& out_dir,
                         long long seed_override, int threads) {
    if (!config.is_object() || !config.contains("experiment"))
        throw ValidationError("config: missing 'experiment'");
    const std::string kind = config.at("experiment").get<std::string>();
    if (seed_override >= 0) config["seed"] = seed_override;
    const std::uint64_t seed =
        static_cast<std::uint64_t>(get_int(config, "seed", 1));

    Emitter em;
    em.dir = out_dir;
    std::filesystem::create_directories(out_dir);

    if (kind == "gap") run_gap_or_lsi(config, seed, em, false);
    else if (kind == "lsi") run_gap_or_lsi(config, seed, em, true);
    else if (kind == "covdecay") run_covdecay(config, seed, em);
    else if (kind == "onespin") run_onespin(config, seed, em);
    else if (kind == "luyau") run_luyau(config, seed, em);
    else if (kind == "kawasaki") run_kawasaki(config, seed, em, threads);
    else if (kind == "paths") run_paths(config, em);
    else if (kind == "betalimit") run_betalimit(config, seed, em);
    else if (kind == "uniformity_sweep") run_uniformity(config, seed, em, threads);
    else throw ValidationError("config: unknown experiment '" + kind + "'");

    // manifest: resolved config + outputs; the timestamp lives only here
    json manifest;
    manifest["experiment"] = kind;
    manifest["config"] = config;
    manifest["outputs"] = em.result.outputs;
    manifest["timestamp"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
    em.result.outputs.push_back("manifest.json");
    return em.result;
}

} // namespace spinlab
