#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "eklab/agflow.hpp"
#include "eklab/besov.hpp"
#include "eklab/compensation.hpp"
#include "eklab/entropy.hpp"
#include "eklab/experiment.hpp"
#include "eklab/field_io.hpp"
#include "eklab/kinetic.hpp"

using namespace eklab;

namespace {

Shape shape_by_name(const std::string& name) {
    if (name == "square") return Shape::rect({0, 0}, 1.0, 1.0);
    if (name == "disk") return Shape::disk({0, 0}, 1.0);
    if (name == "ellipse") return Shape::ellipse({0, 0}, 1.0, 0.6);
    if (name == "annulus") return Shape::annulus({0, 0}, 0.25, 1.0);
    if (name == "plane") return Shape::plane();
    throw PreconditionError("unknown domain '" + name + "'");
}

AngleField load_angle(const std::string& path) {
    AnyField f = load_field(path);
    if (auto* a = std::get_if<AngleField>(&f)) return std::move(*a);
    throw ParseError(path + ": expected an angle field");
}

std::optional<ScalarField> load_scalar(const std::string& path) {
    if (path.empty()) return std::nullopt;
    AnyField f = load_field(path);
    if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
    throw ParseError(path + ": expected a scalar field");
}

void save_stack(const std::string& path, const FieldStack& st) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write " + path);
    write_stack(f, st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eikonal entropy-production lab"};
    app.require_subcommand(1);

    // fields gen
    auto* fields = app.add_subcommand("fields", "canonical fields");
    fields->require_subcommand(1);
    auto* gen = fields->add_subcommand("gen", "write a canonical angle field");
    std::string kind = "vortex", domain = "plane", out;
    int n = 128;
    double lo = -1, hi = 1, alpha = kPi / 4, width = 0.05, core = 0.0;
    gen->add_option("--kind", kind, "constant | vortex | wall | mollified-wall | smooth")->capture_default_str();
    gen->add_option("--domain", domain, "plane | square | disk | ellipse | annulus")->capture_default_str();
    gen->add_option("--n", n, "cells per side")->capture_default_str();
    gen->add_option("--lo", lo)->capture_default_str();
    gen->add_option("--hi", hi)->capture_default_str();
    gen->add_option("--alpha", alpha, "wall half-angle")->capture_default_str();
    gen->add_option("--width", width, "mollified wall width")->capture_default_str();
    gen->add_option("--core", core, "excise a disk of this radius around the origin")->capture_default_str();
    gen->add_option("-o,--output", out)->required();

    // entropy produce / check
    auto* entropy = app.add_subcommand("entropy", "entropies and their production");
    entropy->require_subcommand(1);
    auto* produce = entropy->add_subcommand("produce", "div Phi(m) of a field");
    std::string field_path, entropy_name = "jk2";
    double kappa = 0.5;
    produce->add_option("--field", field_path)->required();
    produce->add_option("--entropy", entropy_name, "id | jk1 | jk2 | jk1-literal | jk2-literal | psi:<path>")
        ->capture_default_str();
    produce->add_option("--kappa", kappa)->capture_default_str();
    produce->add_option("-o,--output", out);
    auto* echeck = entropy->add_subcommand("check", "tangency defect and generator round trip");
    echeck->add_option("--entropy", entropy_name)->capture_default_str();
    echeck->add_option("--kappa", kappa)->capture_default_str();

    // kinetic pair
    auto* kinetic = app.add_subcommand("kinetic", "kinetic formulation");
    kinetic->require_subcommand(1);
    auto* kpair = kinetic->add_subcommand("pair", "write chi and sigma stacks");
    int ns = 256;
    std::string chi_out, sigma_out;
    kpair->add_option("--field", field_path, "angle field for an indicator chi; default: builtin synthetic pair");
    kpair->add_option("--n", n)->capture_default_str();
    kpair->add_option("--ns", ns)->capture_default_str();
    kpair->add_option("--chi", chi_out)->required();
    kpair->add_option("--sigma", sigma_out);

    // comp residual / bootstrap
    auto* comp = app.add_subcommand("comp", "compensation identity");
    comp->require_subcommand(1);
    auto* residual = comp->add_subcommand("residual", "weak-form residual of the compensation identity");
    std::string which = "synthetic";
    double gamma = 3.0;
    residual->add_option("--case", which, "synthetic | vortex")->capture_default_str();
    residual->add_option("--n", n)->capture_default_str();
    residual->add_option("--ns", ns)->capture_default_str();
    residual->add_option("--gamma", gamma)->capture_default_str();
    auto* bootstrap = comp->add_subcommand("bootstrap", "Besov bootstrap terms");
    std::string f_path;
    double p = 2.0, u_radius = 0.5, prime_radius = 0.2, eta_plateau = 0.5, eta_support = 0.7;
    std::vector<double> taus;
    bootstrap->add_option("--field", field_path)->required();
    bootstrap->add_option("--F", f_path, "scalar field F of sigma");
    bootstrap->add_option("--p", p)->capture_default_str();
    bootstrap->add_option("--u-radius", u_radius)->capture_default_str();
    bootstrap->add_option("--prime-radius", prime_radius)->capture_default_str();
    bootstrap->add_option("--eta-plateau", eta_plateau)->capture_default_str();
    bootstrap->add_option("--eta-support", eta_support)->capture_default_str();
    bootstrap->add_option("--tau", taus)->required();

    // besov fit
    auto* besov = app.add_subcommand("besov", "structure functions");
    besov->require_subcommand(1);
    auto* fit = besov->add_subcommand("fit", "fit the structure-function exponent");
    double q = 6.0, ladder_L = 0.5, radius = 0.5;
    int kmin = 2, kmax = 7;
    fit->add_option("--field", field_path)->required();
    fit->add_option("--q", q)->capture_default_str();
    fit->add_option("--L", ladder_L, "ladder |h| = 2^-k L")->capture_default_str();
    fit->add_option("--kmin", kmin)->capture_default_str();
    fit->add_option("--kmax", kmax)->capture_default_str();
    fit->add_option("--radius", radius, "U = disk of this radius at the origin")->capture_default_str();

    // ag minimize
    auto* ag = app.add_subcommand("ag", "Aviles-Giga energy");
    ag->require_subcommand(1);
    auto* minimize = ag->add_subcommand("minimize", "epsilon continuation with a stream function");
    MinimizeConfig mc;
    std::string out_dir;
    domain = "disk";
    minimize->add_option("--domain", domain, "disk | square | ellipse")->capture_default_str();
    minimize->add_option("--n", n)->capture_default_str();
    minimize->add_option("--eps-start", mc.eps_start)->capture_default_str();
    minimize->add_option("--eps-factor", mc.eps_factor)->capture_default_str();
    minimize->add_option("--eps-count", mc.eps_count)->capture_default_str();
    minimize->add_option("--max-iterations", mc.max_iterations)->capture_default_str();
    minimize->add_option("--grad-tol", mc.grad_tol)->capture_default_str();
    minimize->add_option("--noise", mc.noise)->capture_default_str();
    minimize->add_option("--seed", mc.seed)->capture_default_str();
    minimize->add_option("--kappa", kappa)->capture_default_str();
    minimize->add_option("-o,--output-dir", out_dir)->required();

    // run
    auto* run = app.add_subcommand("run", "run an acceptance experiment");
    std::string exp_id, config_path;
    std::vector<std::string> sets;
    run->add_option("experiment", exp_id, "E0..E9")->required();
    run->add_option("--config", config_path, "key = value file");
    run->add_option("--set", sets, "key=value override (repeatable)");
    run->add_option("--output-dir", out_dir);
    bool json = false;
    run->add_flag("--json", json, "print the JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const Grid2 g = Grid2::square(n, lo, hi);
            Mask mask = shape_by_name(domain).mask(g);
            if (core > 0.0) mask = excise_disk(mask, {0, 0}, core);
            static const std::map<std::string, CanonicalSpec::Kind> kinds = {
                {"constant", CanonicalSpec::Kind::constant},
                {"vortex", CanonicalSpec::Kind::vortex},
                {"wall", CanonicalSpec::Kind::wall},
                {"mollified-wall", CanonicalSpec::Kind::mollified_wall},
                {"smooth", CanonicalSpec::Kind::synthetic_smooth}};
            const auto it = kinds.find(kind);
            if (it == kinds.end()) throw PreconditionError("unknown field kind '" + kind + "'");
            CanonicalSpec spec;
            spec.kind = it->second;
            spec.alpha = alpha;
            spec.width = width;
            save_field(out, make_canonical_field(spec, g, mask));
        } else if (produce->parsed()) {
            const AngleField m = load_angle(field_path);
            const ScalarField d = entropy_production(m, entropy_by_name(entropy_name, kappa));
            std::cout << "integral " << format_double(integral(d)) << "\n"
                      << "l1 " << format_double(lp_norm(d, 1.0)) << "\n"
                      << "l2 " << format_double(lp_norm(d, 2.0)) << "\n";
            if (!out.empty()) save_field(out, d);
        } else if (echeck->parsed()) {
            const Entropy e = entropy_by_name(entropy_name, kappa);
            const TangencyReport t = ent_tangency_defect(e);
            std::cout << "tangency_defect " << format_double(t.defect) << " at theta " << format_double(t.defect_theta)
                      << "\n";
            try {
                const TorusFunction psi = psi_table_from_phi(e.circle);
                double sup = 0.0;
                for (int k = 0; k < 1024; ++k) {
                    const double th = (k + 0.25) * kTwoPi / 1024;
                    sup = std::max(sup, norm(phi_from_psi_angle(psi, th) - e(th)));
                }
                std::cout << "round_trip_sup " << format_double(sup) << "\n";
            } catch (const PreconditionError& err) {
                std::cout << "round_trip unavailable: " << err.what() << "\n";
            }
        } else if (kpair->parsed()) {
            if (field_path.empty()) {
                const KineticPair pair = builtin_kinetic_pair(Grid2::square(n, 0.0, kTwoPi), ns);
                save_stack(chi_out, pair.chi.to_stack());
                if (!sigma_out.empty()) save_stack(sigma_out, pair.sigma.to_stack());
            } else {
                save_stack(chi_out, KineticField::indicator(load_angle(field_path), ns).to_stack());
                if (!sigma_out.empty()) throw PreconditionError("sigma is only available for the builtin pair");
            }
        } else if (residual->parsed()) {
            const TestKernel phi = TestKernel::power(gamma);
            ResidualReport r;
            if (which == "synthetic") {
                const KineticPair pair = builtin_kinetic_pair(Grid2::square(n, 0.0, kTwoPi), ns);
                r = comp_identity_residual(pair.chi, pair.sigma, phi, TestFunction::radial({kPi, kPi}, 0.3, 1.0),
                                           TestFunction::bump1d(0.0, 0.5), 0.5);
            } else if (which == "vortex") {
                const Grid2 g = Grid2::square(n, -1, 1);
                CanonicalSpec spec;
                spec.kind = CanonicalSpec::Kind::vortex;
                const AngleField m = make_canonical_field(spec, g, Shape::annulus({0, 0}, 0.25, 1.0).mask(g));
                r = comp_identity_residual(KineticField::indicator(m, ns), std::nullopt, phi,
                                           TestFunction::radial({0.0, 0.6}, 0.05, 0.25), TestFunction::bump1d(0.0, 0.1),
                                           0.1);
            } else {
                throw PreconditionError("unknown case '" + which + "'");
            }
            std::cout << "lhs " << format_double(r.lhs) << "\nrhs " << format_double(r.rhs) << "\nresidual "
                      << format_double(r.residual) << "\ntau_steps " << r.tau_steps << "\n";
        } else if (bootstrap->parsed()) {
            const AngleField m = load_angle(field_path);
            const RegionSpec rs = RegionSpec::make(m.grid, Shape::plane(), Shape::disk({0, 0}, u_radius),
                                                   Shape::disk({0, 0}, prime_radius));
            const BootstrapReport br = besov_bootstrap(m, load_scalar(f_path), p, rs,
                                                       TestFunction::radial({0, 0}, eta_plateau, eta_support), taus);
            std::cout << "r0 " << format_double(br.r0) << "\ngamma " << format_double(br.gamma) << "\n"
                      << "tau,C_tau,lhs,structure,link_bound,holder_term,phi1_term,layer_term,coercivity_c\n";
            for (const auto& r : br.rows) {
                std::cout << format_double(r.tau) << "," << format_double(r.C_tau) << "," << format_double(r.lhs) << ","
                          << format_double(r.structure) << "," << format_double(r.link_bound) << ","
                          << format_double(r.holder_term) << "," << format_double(r.phi1_term) << ","
                          << format_double(r.layer_term) << "," << format_double(r.coercivity_c) << "\n";
            }
        } else if (fit->parsed()) {
            const AngleField m = load_angle(field_path);
            const StructureReport r =
                structure_exponent(m, q, Shape::disk({0, 0}, radius).mask(m.grid), dyadic_ladder(ladder_L, kmin, kmax));
            std::cout << "slope " << format_double(r.slope) << "\nresidual " << format_double(r.residual)
                      << "\nseminorm " << format_double(r.seminorm) << "\n";
        } else if (minimize->parsed()) {
            const Grid2 g = Grid2::square(n, -1.1, 1.1);
            const AgDomain d = AgDomain::make(g, shape_by_name(domain), 4 * g.hx);
            const auto rungs = continuation_run(d, mc, kappa);
            std::filesystem::create_directories(out_dir);
            std::ofstream csv(std::filesystem::path(out_dir) / "trace.csv", std::ios::binary);
            csv << "epsilon,energy,grad_norm,iterations,entropy_tv,ratio\n";
            for (std::size_t k = 0; k < rungs.size(); ++k) {
                const Rung& r = rungs[k];
                csv << format_double(r.eps) << "," << format_double(r.energy) << "," << format_double(r.grad_norm)
                    << "," << r.iterations << "," << format_double(r.comparison.total_variation) << ","
                    << format_double(r.comparison.ratio) << "\n";
                save_field(std::filesystem::path(out_dir) / ("m_rung" + std::to_string(k) + ".ekf"), r.u.m());
                std::cout << "eps " << format_double(r.eps) << " energy " << format_double(r.energy) << " ("
                          << r.stop_reason << ", " << r.iterations << " iterations)\n";
            }
        } else if (run->parsed()) {
            ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(config_path);
            cfg.experiment = exp_id;
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + s + "'");
                cfg.set(s.substr(0, eq), s.substr(eq + 1));
            }
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            const ExperimentReport rep = run_experiment(cfg);
            if (json) {
                std::cout << rep.to_json() << "\n";
            } else {
                rep.print(std::cout);
            }
            return rep.pass() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
