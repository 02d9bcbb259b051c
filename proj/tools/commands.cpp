#include "commands.hpp"

#include "brake/capacity.hpp"
#include "brake/displacement.hpp"
#include "brake/parallel.hpp"

#include <iostream>
#include <sstream>

namespace brake::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTolKeys = {"ode", "symmetry", "drift", "s_symmetry", "nonconstant"};
const std::set<std::string> kRunKeys = {"seed", "threads"};

OrbitTolerances tolerances(const Config& c) {
    OrbitTolerances t;
    t.ode = c.positive("tolerances", "ode", t.ode);
    t.symmetry = c.positive("tolerances", "symmetry", t.symmetry);
    t.drift = c.positive("tolerances", "drift", t.drift);
    t.s_symmetry = c.positive("tolerances", "s_symmetry", t.s_symmetry);
    t.nonconstant = c.positive("tolerances", "nonconstant", t.nonconstant);
    return t;
}

json to_json(const OrbitTolerances& t) {
    return {{"ode", t.ode},
            {"symmetry", t.symmetry},
            {"drift", t.drift},
            {"s_symmetry", t.s_symmetry},
            {"nonconstant", t.nonconstant}};
}

OrbitTolerances tolerances_from_json(const json& j) {
    OrbitTolerances t;
    t.ode = j.at("ode").get<double>();
    t.symmetry = j.at("symmetry").get<double>();
    t.drift = j.at("drift").get<double>();
    t.s_symmetry = j.at("s_symmetry").get<double>();
    t.nonconstant = j.at("nonconstant").get<double>();
    return t;
}

json to_json(const ModelSpec& s) { return {{"name", s.name}, {"params", s.params}}; }

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.name = j.at("name").get<std::string>();
    s.params = j.at("params").get<std::map<std::string, std::string>>();
    return s;
}

int count_at_least(const Config& c, const std::string& section, const std::string& key, int fallback, int least) {
    const int v = c.integer(section, key, fallback);
    if (v < least) throw ConfigError("[" + section + "] " + key + " must be >= " + std::to_string(least));
    return v;
}

/// Optional translation of H to vanish near the origin: [pipeline] z0, delta, domain_radius.
json displacement_record(const Config& c) {
    if (!c.has("pipeline", "z0")) return nullptr;
    return {{"z0", c.numbers("pipeline", "z0", {})},
            {"delta", c.positive("pipeline", "delta", 0.1)},
            {"domain_radius", c.positive("pipeline", "domain_radius", 1.0)}};
}

ModelPtr build_model(const ModelSpec& spec, const json& displacement) {
    ModelPtr H = builtin(spec);
    if (displacement.is_null()) return H;
    const auto z = displacement.at("z0").get<std::vector<double>>();
    if (static_cast<int>(z.size()) != 2 * H->n()) throw Error("z0 needs " + std::to_string(2 * H->n()) + " entries");
    const Vec z0 = Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
    return displace_to_origin(H, z0, displacement.at("delta").get<double>(),
                              displacement.at("domain_radius").get<double>())
        .model;
}

ModelPtr build_model_or_config_error(const ModelSpec& spec, const json& displacement) {
    try {
        return build_model(spec, displacement);
    } catch (const Error& e) {
        throw ConfigError(std::string("[model] ") + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

void write_orbit_files(const fs::path& dir, const std::string& stem, const BrakeOrbit& orbit, const json& extra) {
    std::ostringstream csv;
    write_orbit_csv(csv, orbit);
    write_text(dir / (stem + ".csv"), csv.str());
    json meta = orbit_metadata(orbit);
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

int threads_of(const RunContext& ctx) { return ctx.threads > 0 ? ctx.threads : default_threads(); }

DomainSpec named_domain(DomainKind kind, int n, double r, DomainSymmetry sym) {
    DomainSpec d;
    d.kind = kind;
    d.n = n;
    d.r = r;
    d.symmetry = sym;
    return d;
}

CapacityEstimate reference_estimate(const DomainSpec& d, unsigned seed) {
    CapacityEstimate e;
    e.domain = d;
    e.reference = reference_value(d);
    e.family = "reference";
    e.seed = seed;
    e.status = "reference only";
    return e;
}

void append_estimates(const fs::path& path, const std::vector<CapacityEstimate>& estimates) {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    if (!f) throw Error("cannot append to " + path.string());
    for (const CapacityEstimate& e : estimates) f << to_json(e).dump() << '\n';
}

/// Latest record per (domain, family, seed), in order of first appearance.
std::vector<CapacityEstimate> stored_estimates(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("no stored estimates at " + path.string());
    std::vector<std::string> order;
    std::map<std::string, CapacityEstimate> latest;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        CapacityEstimate e;
        try {
            e = estimate_from_json(json::parse(line));
        } catch (const std::exception& ex) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        const std::string key = e.domain.label() + "|" + e.family + "|" + std::to_string(e.seed);
        if (!latest.count(key)) order.push_back(key);
        latest[key] = e;
    }
    std::vector<CapacityEstimate> out;
    for (const std::string& k : order) out.push_back(latest[k]);
    return out;
}

}  // namespace

void Logger::open(const fs::path& path) { file_.open(path, std::ios::app | std::ios::binary); }

void Logger::write(const char* level, const std::string& module, const std::string& message) {
    const std::string line = std::string(level) + " " + module + ": " + message + "\n";
    if (err_) *err_ << line;
    if (file_) file_ << line << std::flush;
}

void apply_run_section(RunContext& ctx, std::optional<unsigned> seed, std::optional<int> threads) {
    const Config& c = ctx.config;
    c.require_keys("run", kRunKeys);
    const int s = c.integer("run", "seed", 1);
    if (s < 0) throw ConfigError("[run] seed must be >= 0");
    ctx.seed = seed ? *seed : static_cast<unsigned>(s);
    ctx.threads = threads ? *threads : c.integer("run", "threads", 0);
    if (ctx.threads < 0) throw ConfigError("threads must be >= 0");
}

int cmd_find_orbit(RunContext& ctx) {
    const Config& c = ctx.config;
    c.require_sections({"model", "pipeline", "tolerances", "run"});
    c.require_keys("pipeline", {"kmax", "directions", "s_grid", "s_order", "extension_eps", "form_K", "form_radius",
                                "samples", "z0", "delta", "domain_radius"});
    c.require_keys("tolerances", kTolKeys);
    const ModelSpec spec = c.model();
    const int kmax = count_at_least(c, "pipeline", "kmax", 16, 1);
    const int directions = count_at_least(c, "pipeline", "directions", 8, 1);
    const int s_grid = count_at_least(c, "pipeline", "s_grid", 17, 3);
    const int s_order = count_at_least(c, "pipeline", "s_order", 0, 0);
    const int samples = count_at_least(c, "pipeline", "samples", 0, 0);
    const double eps = c.positive("pipeline", "extension_eps", 0.25);
    const double K = c.positive("pipeline", "form_K", 1.0);
    const double radius = c.positive("pipeline", "form_radius", 1.0);
    const OrbitTolerances tol = tolerances(c);
    const json displacement = displacement_record(c);
    const ModelPtr H = build_model_or_config_error(spec, displacement);
    ctx.log->info("find-orbit", "model " + H->name() + ", n = " + std::to_string(H->n()));

    try {
        const ExtendedPtr Hbar = extend(H, QuadraticForm(H->n(), K, radius), eps);
        MinimaxProblem p = make_problem(Hbar, kmax, s_order, ctx.seed);
        p.directions = directions;
        p.s_grid = s_grid;
        p.threads = threads_of(ctx);
        ctx.log->info("minimax", "tau = " + format_double(p.tau) + ", alpha = " + format_double(p.alpha) +
                                     ", beta = " + format_double(p.beta));
        const MinimaxResult r = minimax_search(p);
        ctx.log->info("minimax", "c = " + format_double(r.c_value) + ", status: " + r.status);
        if (!r.converged) throw Error("minimax did not converge: " + r.status);
        const BrakeOrbit bar = loop_to_orbit(r.x, Hbar, samples, s_order, tol);
        const Localization loc = localize_check(bar, *Hbar, tol);
        ctx.log->info("orbits", "max q on the orbit = " + format_double(loc.max_q));
        if (!loc.inside) throw Error("orbit leaves E_K");
        const BrakeOrbit& orbit = *loc.base_orbit;
        if (orbit.constant) throw Error("critical point is a constant loop");
        if (!orbit.verified) throw Error("orbit unverified: " + orbit.diagnostics);

        const json extra = {{"model", to_json(spec)},
                            {"displacement", displacement},
                            {"tolerances", to_json(tol)},
                            {"critical_value", r.c_value},
                            {"phi", loc.phi},
                            {"max_q", loc.max_q},
                            {"seed", ctx.seed}};
        write_orbit_files(ctx.out, "orbit", orbit, extra);
        write_text(ctx.out / "config.ini", c.canonical());
        *ctx.report << "orbit: verified\n"
                    << "period = " << format_double(orbit.period) << "\n"
                    << "energy = " << format_double(orbit.energy) << "\n"
                    << "action = " << format_double(orbit.action) << "\n"
                    << "critical_value = " << format_double(r.c_value) << "\n"
                    << "files = orbit.csv, orbit.json\n";
        ctx.log->info("find-orbit", "verified orbit written to " + (ctx.out / "orbit.csv").string());
        return kExitOk;
    } catch (const Error& e) {
        ctx.log->error("find-orbit", e.what());
        return kExitFailure;
    }
}

int cmd_sweep(RunContext& ctx) {
    const Config& c = ctx.config;
    c.require_sections({"model", "sweep", "pipeline", "tolerances", "run"});
    c.require_keys("sweep", {"level", "eps_list", "m", "M"});
    c.require_keys("pipeline", {"kmax", "directions", "s_grid", "extension_eps", "plateau_margin"});
    c.require_keys("tolerances", kTolKeys);
    const ModelSpec spec = c.model();
    const std::vector<double> eps_list = c.numbers("sweep", "eps_list", {});
    if (eps_list.empty()) throw ConfigError("[sweep] eps_list is required and must be nonempty");
    for (double e : eps_list)
        if (!(e > 0.0)) throw ConfigError("[sweep] eps_list entries must be positive");
    const int m = count_at_least(c, "sweep", "m", 0, 0);
    SweepOptions opt;
    opt.kmax = count_at_least(c, "pipeline", "kmax", opt.kmax, 1);
    opt.directions = count_at_least(c, "pipeline", "directions", opt.directions, 1);
    opt.s_grid = count_at_least(c, "pipeline", "s_grid", opt.s_grid, 3);
    opt.extension_eps = c.positive("pipeline", "extension_eps", opt.extension_eps);
    opt.plateau_margin = c.positive("pipeline", "plateau_margin", opt.plateau_margin);
    opt.seed = ctx.seed;
    opt.threads = threads_of(ctx);
    opt.tol = tolerances(c);
    const ModelPtr H = build_model_or_config_error(spec, nullptr);

    std::vector<SweepEntry> rows;
    try {
        if (m > 0) {
            const double M = c.number("sweep", "M", 0.5);
            ctx.log->info("sweep", "S-symmetric sweep, m = " + std::to_string(m) + ", M = " + format_double(M));
            rows = s_symmetric_sweep(H, m, M, eps_list, opt);
        } else {
            const double level = c.number("sweep", "level", 1.0);
            ctx.log->info("sweep", "energy sweep at level " + format_double(level));
            rows = energy_sweep(H, level, eps_list, opt);
        }
    } catch (const Error& e) {
        ctx.log->error("sweep", e.what());
        return kExitFailure;
    }

    std::ostringstream table;
    table << "eps,lo,hi,found,lambda,tau,period,action,ode,symmetry,energy_drift" << (m > 0 ? ",s_symmetry" : "")
          << ",status\n";
    int verified = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepEntry& e = rows[i];
        const OrbitResiduals& res = e.orbit.residuals;
        table << format_double(eps_list[i]) << ',' << format_double(e.lo) << ',' << format_double(e.hi) << ','
              << (e.found ? 1 : 0) << ',';
        if (e.found) {
            table << format_double(e.lambda) << ',' << format_double(e.tau) << ',' << format_double(e.orbit.period)
                  << ',' << format_double(e.orbit.action) << ',' << format_double(res.ode) << ','
                  << format_double(res.symmetry) << ',' << format_double(res.energy_drift);
            if (m > 0) table << ',' << format_double(res.s_symmetry.value_or(0.0));
            const std::string stem = "sweep_" + std::to_string(i);
            write_orbit_files(ctx.out, stem, e.orbit,
                              {{"model", to_json(spec)},
                               {"displacement", nullptr},
                               {"tolerances", to_json(opt.tol)},
                               {"window", {e.lo, e.hi}},
                               {"lambda", e.lambda},
                               {"seed", ctx.seed}});
            ++verified;
        } else {
            table << ",,,,,," << (m > 0 ? "," : "");
        }
        table << ',' << csv_quote(e.status) << '\n';
        ctx.log->info("sweep", "eps = " + format_double(eps_list[i]) + ": " + e.status);
    }
    write_text(ctx.out / "sweep.csv", table.str());
    write_text(ctx.out / "config.ini", c.canonical());
    *ctx.report << table.str();
    return verified > 0 ? kExitOk : kExitFailure;
}

int cmd_capacity(RunContext& ctx, bool report_only) {
    const fs::path store = ctx.out / "estimates.jsonl";
    if (report_only) {
        *ctx.report << render_report(stored_estimates(store));
        return kExitOk;
    }
    const Config& c = ctx.config;
    c.require_sections({"capacity", "tolerances", "run"});
    c.require_keys("capacity", {"domain", "n", "r", "K", "symmetry", "m", "grid", "width", "max_rounds", "kmax",
                                "directions", "s_grid"});
    c.require_keys("tolerances", kTolKeys);
    DomainSpec d;
    try {
        d.kind = parse_domain_kind(c.text("capacity", "domain", "ball"));
        d.symmetry = parse_domain_symmetry(c.text("capacity", "symmetry", "N0"));
    } catch (const Error& e) {
        throw ConfigError(std::string("[capacity] ") + e.what());
    }
    d.n = count_at_least(c, "capacity", "n", 1, 1);
    d.r = c.positive("capacity", "r", 1.0);
    d.K = c.positive("capacity", "K", 1.0);
    d.m = count_at_least(c, "capacity", "m", 0, 0);
    if (d.symmetry == DomainSymmetry::N0S && d.m < 1) throw ConfigError("[capacity] symmetry N0S needs m >= 1");
    if (d.kind == DomainKind::torus_product) throw ConfigError("[capacity] torus products have no plateau family; use embed-torus");
    OnsetOptions o;
    o.grid = c.numbers("capacity", "grid", {});
    o.width = c.number("capacity", "width", 0.0);
    if (o.width < 0.0) throw ConfigError("[capacity] width must be >= 0");
    o.max_rounds = count_at_least(c, "capacity", "max_rounds", o.max_rounds, 0);
    o.kmax = count_at_least(c, "capacity", "kmax", o.kmax, 1);
    o.directions = count_at_least(c, "capacity", "directions", o.directions, 1);
    o.s_grid = count_at_least(c, "capacity", "s_grid", o.s_grid, 3);
    o.seed = ctx.seed;
    o.threads = threads_of(ctx);
    o.tol = tolerances(c);

    CapacityEstimate est;
    try {
        est = onset_probe(d, o);
    } catch (const Error& e) {
        ctx.log->error("capacity", e.what());
        return kExitFailure;
    }
    for (const LevelRecord& r : est.levels)
        ctx.log->info("capacity", "m = " + format_double(r.m) + ": " + to_string(r.outcome) + " (" + r.detail + ")");
    append_estimates(store, {est});
    write_text(ctx.out / "capacity.json", to_json(est).dump(2) + "\n");
    *ctx.report << render_report(stored_estimates(store));
    ctx.log->info("capacity", d.label() + ": " + est.status);
    const bool ok = est.ordered() && (est.lower || est.upper);
    return ok ? kExitOk : kExitFailure;
}

int cmd_embed_torus(RunContext& ctx) {
    const Config& c = ctx.config;
    c.require_sections({"torus", "run"});
    c.require_keys("torus", {"a", "n", "samples"});
    const double a = c.positive("torus", "a", 1.0);
    const int n = count_at_least(c, "torus", "n", 1, 1);
    const int samples = count_at_least(c, "torus", "samples", 2000, 10);
    const TorusEmbedding phi = torus_embedding(a, n);

    const double pull = phi.pullback_residual(samples / 10, ctx.seed);
    const double equi = phi.equivariance_residual(samples, ctx.seed);
    const DomainSpec outer_domain = named_domain(n == 1 ? DomainKind::ball : DomainKind::cylinder, n,
                                                 std::sqrt(5.0 * a), DomainSymmetry::N1);
    const bool annuli = phi.image_in_annuli(samples, ctx.seed);
    const bool inside = phi.image_in(outer_domain, samples, ctx.seed);
    const CapacityEstimate torus = reference_estimate(named_domain(DomainKind::torus_product, n, a, DomainSymmetry::N1), ctx.seed);
    const CapacityEstimate outer = reference_estimate(outer_domain, ctx.seed);
    const AuditReport chain = monotonicity_audit(torus, outer, phi, samples, ctx.seed);

    const bool pull_ok = pull < 1e-10, equi_ok = equi < 1e-12, contain_ok = annuli && inside;
    std::ostringstream os;
    auto verdict = [](bool b) { return b ? "PASS" : "FAIL"; };
    os << "pullback: " << verdict(pull_ok) << " (max |D^T W D - W| = " << format_double(pull) << ")\n"
       << "equivariance: " << verdict(equi_ok) << " (max |Phi(phi p) - N1 Phi(p)| = " << format_double(equi) << ")\n"
       << "containment: " << verdict(contain_ok) << " (annuli " << (annuli ? "yes" : "no") << ", inside "
       << outer_domain.label() << " " << (inside ? "yes" : "no") << ")\n"
       << "bound: " << verdict(chain.holds) << " (c(" << chain.inner << ") <= c(" << chain.outer
       << ") = " << format_double(chain.outer_upper) << ")\n";
    const json record = {{"a", a},
                         {"n", n},
                         {"samples", samples},
                         {"seed", ctx.seed},
                         {"pullback_residual", pull},
                         {"equivariance_residual", equi},
                         {"image_in_annuli", annuli},
                         {"image_in_outer", inside},
                         {"outer", to_json(outer_domain)},
                         {"audit", to_json(chain)}};
    write_text(ctx.out / "torus.json", record.dump(2) + "\n");
    write_text(ctx.out / "torus_report.txt", os.str());
    append_estimates(ctx.out / "estimates.jsonl", {torus, outer});
    *ctx.report << os.str();
    ctx.log->info("embed-torus", chain.detail);
    return pull_ok && equi_ok && contain_ok && chain.holds ? kExitOk : kExitFailure;
}

int cmd_verify(RunContext& ctx, const fs::path& orbit_csv) {
    std::ifstream in(orbit_csv);
    if (!in) throw ConfigError("cannot open orbit file " + orbit_csv.string());
    double period = 0.0;
    Mat samples;
    try {
        samples = read_orbit_csv(in, &period);
    } catch (const Error& e) {
        throw ConfigError(orbit_csv.string() + ": " + e.what());
    }

    ModelSpec spec;
    json displacement = nullptr;
    OrbitTolerances tol;
    int s_order = 0;
    const Config& c = ctx.config;
    if (c.has_section("model")) {
        spec = c.model();
        displacement = displacement_record(c);
        tol = tolerances(c);
        s_order = count_at_least(c, "pipeline", "s_order", 0, 0);
    } else {
        fs::path meta_path = orbit_csv;
        meta_path.replace_extension(".json");
        std::ifstream mf(meta_path);
        if (!mf) throw ConfigError("no [model] in the config and no metadata at " + meta_path.string());
        try {
            const json meta = json::parse(mf);
            spec = spec_from_json(meta.at("model"));
            displacement = meta.value("displacement", json(nullptr));
            tol = tolerances_from_json(meta.at("tolerances"));
            s_order = meta.at("s_order").get<int>();
        } catch (const json::exception& e) {
            throw ConfigError(meta_path.string() + ": " + e.what());
        }
    }
    if (samples.cols() % 2 != 0) throw ConfigError(orbit_csv.string() + ": odd number of coordinates");
    const ModelPtr H = build_model_or_config_error(spec, displacement);
    if (2 * H->n() != samples.cols())
        throw ConfigError(orbit_csv.string() + ": dimension does not match model " + H->name());
    if (s_order > 0 && samples.rows() % s_order != 0)
        throw ConfigError(orbit_csv.string() + ": sample count not divisible by s_order");

    const OrbitResiduals res = sample_residuals(samples, period, *H, s_order);
    std::string why;
    bool ok = passes(res, tol, &why);
    if (res.excursion < tol.nonconstant) {
        ok = false;
        why += std::string(why.empty() ? "" : "; ") + "orbit is constant";
    }
    std::ostringstream os;
    os << "file = " << orbit_csv.filename().string() << "\n"
       << "model = " << H->name() << "\n"
       << "samples = " << samples.rows() << "\n"
       << "period = " << format_double(period) << "\n";
    const json res_json = to_json(res);
    for (const auto& [k, v] : res_json.items()) os << k << " = " << v.dump() << "\n";
    os << "status = " << (ok ? "verified" : "failed: " + why) << "\n";
    *ctx.report << os.str();
    if (!ok) ctx.log->error("verify", why);
    return ok ? kExitOk : kExitFailure;
}

}  // namespace brake::cli
