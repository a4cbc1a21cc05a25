#pragma once

// mmdlab command line: build-fbeta, estimate, horseshoe, implant, sweep.
//
// Exit codes: 0 ok, 1 other failure, 2 infeasible plan, 3 missing file,
// 4 grid precision, 5 horseshoe verification failed, 6 surgery precondition.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/fbeta.hpp"
#include "mmdlab/horseshoe.hpp"
#include "mmdlab/parallel.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/rational.hpp"
#include "mmdlab/separation.hpp"
#include "mmdlab/surgery.hpp"

namespace mmdlab::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_infeasible = 2;
inline constexpr int exit_missing_file = 3;
inline constexpr int exit_grid_precision = 4;
inline constexpr int exit_horseshoe_failed = 5;
inline constexpr int exit_surgery_precondition = 6;

using Json = nlohmann::ordered_json;

struct GlobalOptions {
    std::string out_dir = ".";
    std::size_t workers = 1;
    std::string format = "csv";

    bool json() const { return format == "json"; }
};

struct BuildOptions {
    std::string beta;
    std::size_t levels = 2;
    std::string seed_a1 = "1/2";
    std::string variant = "none";
    std::size_t node_budget = default_node_budget;
};

struct EstimateOptions {
    std::string model;
    std::string scales = "plan";
    std::size_t n_min = 1;
    std::size_t n_max = 3;
    std::string method = "cylinder-exact";
    std::string grid;
    std::string window;
    std::string plan;
    unsigned long cap = default_representative_cap;
};

struct HorseshoeOptions {
    std::size_t dim = 2;
    std::size_t N = 4;
    std::size_t p = 2;
    std::size_t ell = 1;
    std::string delta = "1/2";
    std::string epsilon = "1/16";
    std::string width;
    std::string model;
    std::optional<std::size_t> level;
    std::string interval;
    std::string core;
    std::string eta = "0";
    std::optional<std::size_t> target;
};

struct ImplantOptions {
    std::string surgery_plan;
    std::string host;
    std::string fbeta_plan;
    std::string j_hat;
    std::string j_tilde;
    std::string P;
    std::string rho;
    std::string budget;
};

struct SweepOptions {
    std::string betas = "3/10,1/2,7/10";
    std::size_t levels = 2;
    std::string seed_a1 = "1/2";
    std::size_t n_min = 1;
    std::size_t n_max = 2;
    unsigned long cap = default_representative_cap;
};

// ---- helpers ---------------------------------------------------------------------

inline std::vector<Rational> parse_fraction_list(const std::string& text) {
    std::vector<Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_rational(item));
    if (out.empty()) throw ParseError("empty fraction list");
    return out;
}

inline std::filesystem::path write_output(const GlobalOptions& g, const std::string& name, const std::string& text) {
    std::filesystem::path dir(g.out_dir);
    std::filesystem::create_directories(dir);
    std::filesystem::path file = dir / name;
    std::ofstream os(file, std::ios::binary);
    if (!os) throw FileError("cannot write " + file.string());
    os << text;
    return file;
}

inline std::string decimal(const Rational& r) { return to_decimal(to_double(r)); }

// A loaded dynamics file: f_beta model/plan or a plain PwaMap.
struct LoadedDynamics {
    std::optional<FBetaModel> fbeta;
    std::optional<PwaMap> map;

    Rational operator()(const Rational& x) const {
        if (map) return map->eval(x);
        return fbeta->eval(x);
    }
};

inline LoadedDynamics load_dynamics(const std::string& path, std::size_t node_budget = default_node_budget) {
    auto in = open_input(path);
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    in.seekg(0);
    LoadedDynamics d;
    if (header == model_header) {
        d.fbeta.emplace(read_model(in, node_budget));
    } else if (header == plan_header) {
        d.fbeta.emplace(read_plan(in), node_budget);
    } else if (header == pwa_header) {
        d.map.emplace(read_pwa(in));
        return d;
    } else {
        throw ParseError("unrecognized file header in " + path + ": '" + header + "'");
    }
    if (d.fbeta->map()) d.map = *d.fbeta->map();
    return d;
}

inline Json record_json(const CountRecord& r) {
    Json j;
    j["n"] = r.n;
    j["epsilon"] = to_fraction(r.epsilon);
    j["count"] = r.count.get_str();
    j["method"] = std::string(method_name(r.method));
    j["grid"] = r.grid ? to_fraction(*r.grid) : std::string();
    j["certified"] = r.certified;
    return j;
}

inline Json report_json(const SeparationReport& rep) {
    Json j;
    j["n_min"] = rep.n_min;
    j["n_max"] = rep.n_max;
    j["upper"] = to_decimal(rep.upper);
    j["lower"] = to_decimal(rep.lower);
    Json entries = Json::array();
    for (const auto& e : rep.entries) {
        Json x;
        x["epsilon"] = to_fraction(e.epsilon);
        x["epsilon_decimal"] = decimal(e.epsilon);
        x["h_hat"] = to_decimal(e.h_hat);
        x["ratio"] = to_decimal(e.ratio);
        Json recs = Json::array();
        for (const auto& r : e.records) recs.push_back(record_json(r));
        x["records"] = recs;
        entries.push_back(x);
    }
    j["entries"] = entries;
    return j;
}

// ---- build-fbeta -----------------------------------------------------------------

inline int cmd_build_fbeta(const GlobalOptions& g, const BuildOptions& o, std::ostream& out) {
    Rational beta = parse_rational(o.beta);
    Rational seed = parse_rational(o.seed_a1);
    FBetaVariant variant = parse_variant(o.variant);
    FBetaPlan plan = plan_sequences(beta, o.levels, seed, variant);
    FBetaModel model(plan, o.node_budget);

    std::ostringstream plan_text, model_text;
    write_plan(plan_text, plan);
    write_model(model_text, model);
    auto plan_path = write_output(g, "fbeta_plan.txt", plan_text.str());
    auto model_path = write_output(g, "fbeta_model.txt", model_text.str());

    if (g.json()) {
        Json j;
        j["beta"] = to_fraction(beta);
        j["K"] = plan.levels;
        j["plan"] = plan_path.string();
        j["model"] = model_path.string();
        j["materialized"] = model.map().has_value();
        Json rows = Json::array();
        for (std::size_t k = 0; k < plan.levels; ++k) {
            const auto& L = plan.level[k];
            rows.push_back({{"k", k},
                            {"a_2k", to_fraction(L.a_even)},
                            {"ell", L.ell.get_str()},
                            {"i", L.i.get_str()},
                            {"eps", to_fraction(L.eps)}});
        }
        j["table"] = rows;
        out << j.dump(2) << '\n';
    } else {
        out << "k\ta_2k\tell_k\ti_k\teps_k\n";
        for (std::size_t k = 0; k < plan.levels; ++k) {
            const auto& L = plan.level[k];
            out << k << '\t' << to_fraction(L.a_even) << '\t' << L.ell.get_str() << '\t' << L.i.get_str() << '\t'
                << to_fraction(L.eps) << '\n';
        }
        out << "wrote " << plan_path.string() << '\n' << "wrote " << model_path.string() << '\n';
        if (!model.map())
            out << "node list omitted: " << model.node_estimate().get_str() << " nodes exceed the budget\n";
    }
    return exit_ok;
}

// ---- estimate --------------------------------------------------------------------

inline int cmd_estimate(const GlobalOptions& g, const EstimateOptions& o, std::ostream& out) {
    LoadedDynamics dyn = load_dynamics(o.model);
    CountMethod method = parse_method(o.method);
    std::optional<Interval> window;
    std::optional<FBetaPlan> transport_plan;
    if (!o.window.empty()) {
        window = parse_interval(o.window);
        if (window->degenerate()) throw DomainError("window must have positive length");
        if (o.plan.empty()) throw DomainError("--window needs --plan (the implanted f_beta plan)");
        transport_plan = load_plan(o.plan);
    }
    const FBetaPlan* plan = transport_plan ? &*transport_plan : (dyn.fbeta ? &dyn.fbeta->plan() : nullptr);
    Rational lambda = window ? window->length() : Rational(1);

    std::vector<Rational> scales;
    if (o.scales == "plan") {
        if (!plan) throw DomainError("--scales plan needs an f_beta model or --plan");
        for (const auto& L : plan->level) scales.push_back(lambda * L.eps);
    } else {
        scales = parse_fraction_list(o.scales);
    }
    std::optional<Rational> grid;
    if (!o.grid.empty()) grid = parse_rational(o.grid);

    std::optional<FBetaModel> transport_model;
    if (transport_plan) transport_model.emplace(*transport_plan);
    std::optional<FullBranchSystem> lattice;
    if (method == CountMethod::cylinder_exact && !plan) {
        if (!dyn.map) throw ContractError("cylinder counting needs a node list");
        lattice = lattice_of(*dyn.map);
        if (!lattice) throw ContractError("map is not a full-branch lattice; use --method greedy-grid");
    }

    auto counter = [&](std::size_t n, const Rational& eps) -> CountRecord {
        switch (method) {
        case CountMethod::greedy_grid: {
            Rational h = grid ? *grid : Rational(eps / 4);
            return count_separated_greedy(dyn, n, eps, h);
        }
        case CountMethod::exhaustive_grid: {
            Rational h = grid ? *grid : make_rational(1, static_cast<long>(exhaustive_point_limit - 1));
            auto pts = grid_points(h);
            auto rec = count_separated_exhaustive(dyn, n, eps, std::span<const Rational>(pts));
            rec.grid = h;
            return rec;
        }
        case CountMethod::cylinder_exact: break;
        }
        if (lattice) return count_cylinders(*lattice, n, eps, dyn, o.cap).record;
        if (window) {
            std::size_t k = level_for_scale(*plan, Rational(eps / lambda));
            auto view = transport_model->markov_view(k).transported(window->lo, lambda);
            return count_cylinders(view, n, eps, dyn, o.cap).record;
        }
        std::size_t k = level_for_scale(*plan, eps);
        return count_cylinders(dyn.fbeta->markov_view(k), n, eps, dyn, o.cap).record;
    };
    SeparationReport rep = mdim_profile(counter, scales, o.n_min, o.n_max, g.workers);

    std::vector<double> transported;
    for (const auto& e : rep.entries) {
        double denom = std::fabs(log_of(Rational(e.epsilon / lambda)));
        transported.push_back(denom > 0 ? e.h_hat / denom : 0.0);
    }

    std::filesystem::path file;
    if (g.json()) {
        Json j = report_json(rep);
        if (window) {
            j["window"] = to_string(*window);
            Json t = Json::array();
            for (double v : transported) t.push_back(to_decimal(v));
            j["transported_ratio"] = t;
        }
        file = write_output(g, "estimate.json", j.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        write_report_csv(csv, rep);
        file = write_output(g, "estimate.csv", csv.str());
    }
    out << "epsilon\th_hat\tratio" << (window ? "\ttransported_ratio" : "") << '\n';
    for (std::size_t s = 0; s < rep.entries.size(); ++s) {
        const auto& e = rep.entries[s];
        out << to_fraction(e.epsilon) << '\t' << to_decimal(e.h_hat) << '\t' << to_decimal(e.ratio);
        if (window) out << '\t' << to_decimal(transported[s]);
        out << '\n';
    }
    out << "upper ratio estimate " << to_decimal(rep.upper) << "\nlower ratio estimate " << to_decimal(rep.lower)
        << '\n';
    out << "wrote " << file.string() << '\n';
    return exit_ok;
}

// ---- horseshoe -------------------------------------------------------------------

inline int horseshoe_2d(const GlobalOptions& g, const HorseshoeOptions& o, std::ostream& out, std::ostream& err) {
    Rational delta = parse_rational(o.delta);
    Rational eps = parse_rational(o.epsilon);
    std::optional<Rational> width;
    if (!o.width.empty()) width = parse_rational(o.width);
    Horseshoe2DModel model = build_model_2d(o.N, delta, eps, o.p, width);
    Horseshoe2DCheck check = verify_conditions(model);
    std::ostringstream model_text;
    write_model_2d(model_text, model);
    auto model_path = write_output(g, "horseshoe_model.txt", model_text.str());
    if (!check.ok) {
        err << "horseshoe verification failed: " << check.failure << '\n';
        return exit_horseshoe_failed;
    }
    SeparatedBound2D cert = separated_bound_2d(model, o.ell, g.workers);
    double ratio = o.N > 1 ? log_of(cert.count) / static_cast<double>(cert.depth) / std::fabs(log_of(eps)) : 0.0;
    std::filesystem::path cert_path;
    if (g.json()) {
        Json rows = Json::array();
        for (const auto& r : cert.rows)
            rows.push_back({{"itinerary", itinerary_text(r.itinerary)},
                            {"x", to_fraction(r.point.x)},
                            {"y", to_fraction(r.point.y)},
                            {"min_pairwise_dn", to_fraction(r.min_pairwise_dn)}});
        Json j{{"N", o.N},           {"p", o.p},
               {"ell", o.ell},       {"depth", cert.depth},
               {"count", cert.count.get_str()}, {"min_pairwise_dn", to_fraction(cert.min_pairwise_dn)},
               {"ratio", to_decimal(ratio)},    {"rows", rows}};
        cert_path = write_output(g, "certificate.json", j.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        write_certificate_csv(csv, cert);
        cert_path = write_output(g, "certificate.csv", csv.str());
    }
    for (const auto& p : check.passed) out << "pass: " << p << '\n';
    out << "certified points " << cert.count.get_str() << " at depth " << cert.depth << ", min pairwise d_n "
        << to_fraction(cert.min_pairwise_dn) << " > epsilon " << to_fraction(eps) << '\n';
    out << "ratio lower bound log N / |log eps| = " << to_decimal(ratio) << '\n';
    out << "wrote " << model_path.string() << "\nwrote " << cert_path.string() << '\n';
    return exit_ok;
}

inline int horseshoe_1d(const GlobalOptions& g, const HorseshoeOptions& o, std::ostream& out, std::ostream& err) {
    if (o.model.empty()) throw DomainError("1-D detection needs --model");
    LoadedDynamics dyn = load_dynamics(o.model);
    if (!dyn.map) throw ContractError("1-D detection needs a node list (model exceeds the node budget)");
    Interval I{0, 1}, C{0, 1};
    Rational eps = parse_rational(o.epsilon);
    std::size_t target = o.target.value_or(2);
    if (o.level) {
        if (!dyn.fbeta) throw DomainError("--level needs an f_beta model");
        const auto& L = dyn.fbeta->level(*o.level);
        I = C = L.core();
        eps = L.eps;
        if (!o.target) target = L.i.get_ui() + 1;
    }
    if (!o.interval.empty()) I = parse_interval(o.interval);
    if (!o.core.empty()) C = parse_interval(o.core);
    Rational eta = parse_rational(o.eta);
    Horseshoe1DReport rep = detect_1d(*dyn.map, I, C, eps, eta);

    std::filesystem::path file;
    if (g.json()) {
        Json laps = Json::array();
        for (std::size_t i = 0; i < rep.lap_domains.size(); ++i)
            laps.push_back({{"lo", to_fraction(rep.lap_domains[i].lo)},
                            {"hi", to_fraction(rep.lap_domains[i].hi)},
                            {"margin", to_fraction(rep.margins[i])}});
        Json j{{"I", to_string(I)},
               {"C", to_string(C)},
               {"epsilon", to_fraction(eps)},
               {"eta", to_fraction(eta)},
               {"n_detected", rep.n_detected},
               {"target", target},
               {"laps", laps}};
        file = write_output(g, "horseshoe1d.json", j.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "lap_lo,lap_hi,margin\n";
        for (std::size_t i = 0; i < rep.lap_domains.size(); ++i)
            csv << to_fraction(rep.lap_domains[i].lo) << ',' << to_fraction(rep.lap_domains[i].hi) << ','
                << to_fraction(rep.margins[i]) << '\n';
        file = write_output(g, "horseshoe1d.csv", csv.str());
    }
    out << "laps crossing " << to_string(C) << ": " << rep.n_detected << " (target " << target << ")\n";
    if (rep.min_pairwise_hausdorff)
        out << "min pairwise Hausdorff distance " << to_fraction(*rep.min_pairwise_hausdorff) << '\n';
    out << "wrote " << file.string() << '\n';
    if (rep.n_detected < target) {
        err << "horseshoe verification failed: " << rep.n_detected << " separated crossing laps, fewer than type "
            << target << '\n';
        return exit_horseshoe_failed;
    }
    return exit_ok;
}

inline int cmd_horseshoe(const GlobalOptions& g, const HorseshoeOptions& o, std::ostream& out, std::ostream& err) {
    if (o.dim == 2) return horseshoe_2d(g, o, out, err);
    if (o.dim == 1) return horseshoe_1d(g, o, out, err);
    throw DomainError("--dim must be 1 or 2");
}

// ---- implant ---------------------------------------------------------------------

inline SurgeryPlan surgery_plan_from(const ImplantOptions& o) {
    if (!o.surgery_plan.empty()) return load_surgery_plan(o.surgery_plan);
    if (o.host.empty() || o.fbeta_plan.empty() || o.j_hat.empty())
        throw DomainError("implant needs --surgery-plan, or --host, --fbeta-plan and --j-hat");
    SurgeryPlan plan;
    plan.host = load_pwa(o.host);
    plan.fbeta_plan = load_plan(o.fbeta_plan);
    plan.j_hat = parse_interval(o.j_hat);
    if (!o.j_tilde.empty()) {
        plan.j_tilde = parse_interval(o.j_tilde);
    } else {
        Rational pad = plan.j_hat.length() / 4;
        plan.j_tilde = {plan.j_hat.lo - pad, plan.j_hat.hi + pad};
    }
    plan.P = o.P.empty() ? plan.j_tilde.midpoint() : parse_rational(o.P);
    plan.rho = o.rho.empty() ? Rational(plan.j_tilde.length() * 5 / 4) : parse_rational(o.rho);
    if (!o.budget.empty()) plan.budget = parse_rational(o.budget);
    return plan;
}

inline int cmd_implant(const GlobalOptions& g, const ImplantOptions& o, std::ostream& out, std::ostream& err) {
    SurgeryPlan plan = surgery_plan_from(o);
    ImplantResult r = implant(plan);
    auto bad = locality_violations(r.h3, r.h2, plan.j_tilde);
    auto file = write_output(g, "implant.txt", to_text(r.h3));
    Rational d_host = sup_distance(r.h3, plan.host);
    Rational d_blend = sup_distance(r.h3, r.h2);
    Rational d_flat = sup_distance(r.h2, plan.host);
    if (g.json()) {
        Json j{{"h3", file.string()},
               {"nodes", r.h3.size()},
               {"sup_distance_h3_host", to_fraction(d_host)},
               {"sup_distance_h3_h2", to_fraction(d_blend)},
               {"sup_distance_h2_host", to_fraction(d_flat)},
               {"J_tilde_length", to_fraction(plan.j_tilde.length())},
               {"locality_violations", bad.size()}};
        out << j.dump(2) << '\n';
    } else {
        out << "sup_distance(h3, host) = " << to_fraction(d_host) << " (" << decimal(d_host) << ")\n";
        out << "sup_distance(h3, h2) = " << to_fraction(d_blend) << ", sup_distance(h2, host) = " << to_fraction(d_flat)
            << '\n';
        out << "|J_tilde| = " << to_fraction(plan.j_tilde.length()) << '\n';
        out << "locality off J_tilde: " << (bad.empty() ? "pass" : "FAIL") << '\n';
        out << "wrote " << file.string() << " (" << r.h3.size() << " nodes)\n";
    }
    if (!bad.empty()) {
        err << "h3 differs from h2 at x = " << to_fraction(bad.front()) << " outside J_tilde\n";
        return exit_failure;
    }
    return exit_ok;
}

// ---- sweep -----------------------------------------------------------------------

inline constexpr const char* sweep_csv_header = "beta,level,epsilon,epsilon_decimal,n,count,certified,h_hat,ratio";

inline int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, std::ostream& out) {
    check_window(o.n_min, o.n_max);
    std::vector<Rational> betas = parse_fraction_list(o.betas);
    Rational seed = parse_rational(o.seed_a1);
    std::vector<FBetaModel> models;
    for (const auto& b : betas)
        models.emplace_back(plan_sequences(b, o.levels, seed, b == 1 ? FBetaVariant::full : FBetaVariant::standard));

    struct Job {
        std::size_t model, level, n;
    };
    std::vector<Job> jobs;
    std::size_t per = o.n_max - o.n_min + 1;
    for (std::size_t m = 0; m < models.size(); ++m)
        for (std::size_t k = 0; k < o.levels; ++k)
            for (std::size_t n = o.n_min; n <= o.n_max; ++n) jobs.push_back({m, k, n});
    auto records = parallel_map(jobs.size(), g.workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        const FBetaModel& model = models[job.model];
        const Rational& eps = model.level(job.level).eps;
        return count_cylinders(model.markov_view(job.level), job.n, eps, fbeta_dynamics(model), o.cap).record;
    });

    std::ostringstream csv;
    Json rows = Json::array();
    csv << sweep_csv_header << '\n';
    out << "beta\tlevel\tepsilon\tratio\n";
    for (std::size_t base = 0; base < jobs.size(); base += per) {
        std::vector<CountRecord> chunk(records.begin() + static_cast<std::ptrdiff_t>(base),
                                       records.begin() + static_cast<std::ptrdiff_t>(base + per));
        RateEstimate est = rate_from_records(chunk);
        const Job& job = jobs[base];
        std::string beta = to_fraction(betas[job.model]);
        for (const auto& r : est.records) {
            csv << beta << ',' << job.level << ',' << to_fraction(r.epsilon) << ',' << decimal(r.epsilon) << ',' << r.n
                << ',' << r.count.get_str() << ',' << (r.certified ? "true" : "false") << ','
                << to_decimal(est.h_hat) << ',' << to_decimal(est.ratio) << '\n';
            Json row = record_json(r);
            row["beta"] = beta;
            row["level"] = job.level;
            row["h_hat"] = to_decimal(est.h_hat);
            row["ratio"] = to_decimal(est.ratio);
            rows.push_back(row);
        }
        out << beta << '\t' << job.level << '\t' << to_fraction(est.epsilon) << '\t' << to_decimal(est.ratio) << '\n';
    }
    auto file = g.json() ? write_output(g, "sweep.json", rows.dump(2) + "\n") : write_output(g, "sweep.csv", csv.str());
    out << "wrote " << file.string() << '\n';
    return exit_ok;
}

// ---- dispatch --------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mmdlab: metric mean dimension experiments on piecewise-affine interval maps", "mmdlab"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key = value file");
    GlobalOptions g;
    app.add_option("-o,--out", g.out_dir, "output directory");
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"csv", "json"}));

    BuildOptions build;
    auto* sc_build = app.add_subcommand("build-fbeta", "plan and build f_beta, write plan and model files");
    sc_build->fallthrough();
    sc_build->add_option("--beta", build.beta, "beta as an exact fraction")->required();
    sc_build->add_option("--levels", build.levels, "number of levels K")->check(CLI::PositiveNumber);
    sc_build->add_option("--seed-a1", build.seed_a1, "a_1 as an exact fraction");
    sc_build->add_option("--variant", build.variant, "full-branch variant (beta = 1)")
        ->check(CLI::IsMember({"none", "standard", "full"}));
    sc_build->add_option("--node-budget", build.node_budget, "largest node list to materialize");

    EstimateOptions est;
    auto* sc_est = app.add_subcommand("estimate", "separated-set counts and ratio estimates");
    sc_est->fallthrough();
    sc_est->add_option("--model", est.model, "PwaMap, f_beta plan or f_beta model file")->required();
    sc_est->add_option("--scales", est.scales, "comma-separated fractions, or 'plan'");
    sc_est->add_option("--n-min", est.n_min, "smallest orbit length");
    sc_est->add_option("--n-max", est.n_max, "largest orbit length");
    sc_est->add_option("--method", est.method, "greedy-grid, exhaustive-grid or cylinder-exact")
        ->check(CLI::IsMember({"greedy-grid", "exhaustive-grid", "cylinder-exact"}));
    sc_est->add_option("--grid", est.grid, "grid resolution as an exact fraction");
    sc_est->add_option("--window", est.window, "lo,hi: implanted copy of f_beta (needs --plan)");
    sc_est->add_option("--plan", est.plan, "f_beta plan of the implanted copy");
    sc_est->add_option("--cap", est.cap, "largest representative set to verify");

    HorseshoeOptions hs;
    auto* sc_hs = app.add_subcommand("horseshoe", "build and verify pseudo-horseshoes");
    sc_hs->fallthrough();
    sc_hs->add_option("--dim", hs.dim, "1 (lap detector) or 2 (rectangle model)");
    sc_hs->add_option("--N", hs.N, "type N")->check(CLI::PositiveNumber);
    sc_hs->add_option("--p", hs.p, "period p")->check(CLI::PositiveNumber);
    sc_hs->add_option("--ell", hs.ell, "recursion length ell")->check(CLI::PositiveNumber);
    sc_hs->add_option("--delta", hs.delta, "half side of the square");
    sc_hs->add_option("--epsilon", hs.epsilon, "separation scale");
    sc_hs->add_option("--width", hs.width, "strip width (default 2 delta / N - epsilon)");
    sc_hs->add_option("--model", hs.model, "map for 1-D detection");
    sc_hs->add_option("--level", hs.level, "f_beta level: I = C = J_k, epsilon = eps_k");
    sc_hs->add_option("--interval", hs.interval, "lo,hi");
    sc_hs->add_option("--core", hs.core, "lo,hi");
    sc_hs->add_option("--eta", hs.eta, "crossing margin");
    sc_hs->add_option("--target", hs.target, "required type N");

    ImplantOptions im;
    auto* sc_im = app.add_subcommand("implant", "implant f_beta into a host map");
    sc_im->fallthrough();
    sc_im->add_option("--surgery-plan", im.surgery_plan, "surgery plan file");
    sc_im->add_option("--host", im.host, "host PwaMap file");
    sc_im->add_option("--fbeta-plan", im.fbeta_plan, "f_beta plan file");
    sc_im->add_option("--j-hat", im.j_hat, "lo,hi");
    sc_im->add_option("--j-tilde", im.j_tilde, "lo,hi (default: J_hat padded by |J_hat|/4)");
    sc_im->add_option("--P", im.P, "fixed point of the host (default: centre of J_tilde)");
    sc_im->add_option("--rho", im.rho, "flattening radius (default: 5/4 |J_tilde|)");
    sc_im->add_option("--budget", im.budget, "require |J_tilde| < budget / 3");

    SweepOptions sw;
    auto* sc_sw = app.add_subcommand("sweep", "cylinder ratios of f_beta over a list of betas");
    sc_sw->fallthrough();
    sc_sw->add_option("--betas", sw.betas, "comma-separated fractions");
    sc_sw->add_option("--levels", sw.levels, "number of levels K")->check(CLI::PositiveNumber);
    sc_sw->add_option("--seed-a1", sw.seed_a1, "a_1 as an exact fraction");
    sc_sw->add_option("--n-min", sw.n_min, "smallest orbit length");
    sc_sw->add_option("--n-max", sw.n_max, "largest orbit length");
    sc_sw->add_option("--cap", sw.cap, "largest representative set to verify");

    std::vector<const char*> argv{"mmdlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    std::string which;
    try {
        if (sc_build->parsed()) {
            which = "build-fbeta";
            return cmd_build_fbeta(g, build, out);
        }
        if (sc_est->parsed()) {
            which = "estimate";
            return cmd_estimate(g, est, out);
        }
        if (sc_hs->parsed()) {
            which = "horseshoe";
            return cmd_horseshoe(g, hs, out, err);
        }
        if (sc_im->parsed()) {
            which = "implant";
            return cmd_implant(g, im, out, err);
        }
        which = "sweep";
        return cmd_sweep(g, sw, out);
    } catch (const FileError& e) {
        err << "error: " << e.what() << '\n';
        return exit_missing_file;
    } catch (const PrecisionError& e) {
        err << "error: " << e.what() << '\n';
        return exit_grid_precision;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        if (which == "build-fbeta") return exit_infeasible;
        if (which == "horseshoe") return exit_horseshoe_failed;
        if (which == "implant") return exit_surgery_precondition;
        return exit_failure;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        if (which == "implant") return exit_surgery_precondition;
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

} // namespace mmdlab::cli
