#include "erwlab/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "erwlab/error.hpp"
#include "erwlab/model_io.hpp"
#include "erwlab/oracle.hpp"
#include "erwlab/sa.hpp"
#include "erwlab/simulate.hpp"
#include "erwlab/stats.hpp"
#include "erwlab/theory.hpp"
#include "erwlab/verify.hpp"

namespace erwlab {

using nlohmann::json;
namespace fs = std::filesystem;

Tolerances::Tolerances() {
    values = {{"slln.z", 4.0},
              {"clt.rel_tol_diffusive", 0.05},
              {"clt.rel_tol_critical", 0.12},
              {"clt.alpha", 0.01},
              {"lil.lo", 0.3},
              {"lil.hi", 1.8},
              {"lil.min_fraction", 0.9},
              {"super.threshold", 0.15},
              {"expansion.rel_tol", 0.15},
              {"noise.z", 3.0},
              {"noise.min_count", 1000.0},
              {"sa.rel_tol", 0.05},
              {"sa.cauchy_threshold", 0.15},
              {"sa_expansion.rel_tol", 0.15},
              {"sa_expansion.slope_tol", 0.1}};
}

double Tolerances::get(const std::string& key) const { return values.at(key).get<double>(); }

void Tolerances::apply(const json& overrides) {
    if (!overrides.is_object()) throw Error(ErrorCode::ConfigInvalid, "tolerance overrides must be a JSON object");
    for (const auto& [key, v] : overrides.items()) {
        if (!values.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown tolerance key '" + key + "'");
        if (!v.is_number()) throw Error(ErrorCode::ConfigInvalid, "tolerance '" + key + "' must be a number");
        values[key] = v.get<double>();
    }
}

namespace {

/// Config problems surface as exit code 2; everything else as 1.
struct ConfigFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

struct Resolved {
    ModelSpec spec;
    std::optional<ValidatedModel> model;
    json model_json;
    json config;
    std::string hash;
    Tolerances tol;
};

ModelSpec resolve_spec(const RunConfig& cfg) {
    if (cfg.preset && cfg.model_path) throw ConfigFailure("give either --preset or --model, not both");
    if (cfg.preset) return build_preset(*cfg.preset, cfg.params);
    if (cfg.model_path) {
        if (!fs::exists(*cfg.model_path)) throw Error(ErrorCode::ConfigInvalid, "model file '" + *cfg.model_path + "' not found");
        if (!cfg.params.empty()) throw ConfigFailure("preset parameters given without --preset");
        return load_model_file(*cfg.model_path);
    }
    throw ConfigFailure("a model is required (--preset NAME or --model FILE)");
}

json checkpoints_json(const std::vector<long>& cps) { return cps; }

Resolved resolve(const RunConfig& cfg, bool needs_model) {
    Resolved r;
    if (cfg.tol_overrides_path) {
        std::ifstream in(*cfg.tol_overrides_path);
        if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open tolerance file '" + *cfg.tol_overrides_path + "'");
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigInvalid, std::string("tolerance file is not valid JSON: ") + e.what());
        }
        r.tol.apply(doc);
    }
    r.config = {{"subcommand", cfg.subcommand}, {"seed", cfg.seed}};
    if (needs_model) {
        r.spec = resolve_spec(cfg);
        r.model = require_valid(r.spec);
        r.model_json = model_to_json(r.spec);
        r.config["model"] = r.model_json;
    }
    if (cfg.subcommand == "simulate" || cfg.subcommand == "verify" || cfg.subcommand == "sa") {
        if (cfg.n_max < 1) throw ConfigFailure("--n must be >= 1");
        if (cfg.N < 2) throw ConfigFailure("--N must be >= 2");
        r.config["n_max"] = cfg.n_max;
        r.config["N"] = cfg.N;
        r.config["checkpoints"] = checkpoints_json(cfg.checkpoints);
    }
    if (cfg.subcommand == "verify") r.config["suite"] = cfg.suite;
    if (cfg.subcommand == "oracle") r.config["n"] = cfg.oracle_n;
    if (cfg.subcommand == "sa") {
        r.config["drift"] = cfg.drift;
        r.config["theta0"] = cfg.theta0;
        r.config["theta1"] = cfg.theta1;
        r.config["noise"] = cfg.noise;
        r.config["k"] = cfg.k;
        r.config["terms"] = cfg.terms;
    }
    r.config["tolerances"] = r.tol.values;
    r.hash = config_hash(r.config);
    return r;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigInvalid, "cannot write '" + path + "'");
    f << text;
}

/// Writes the primary artifact plus the timestamp sidecar and the resolved model next to it.
void emit(const RunConfig& cfg, const Resolved& r, const std::string& body, const std::string& started,
          std::ostream& out) {
    if (cfg.out.empty()) {
        out << body;
        return;
    }
    const fs::path p(cfg.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text(cfg.out, body);
    json meta = {{"config_hash", r.hash}, {"started", started}, {"finished", utc_now()}, {"artifact", p.filename().string()}};
    write_text(cfg.out + ".meta.json", meta.dump(2) + "\n");
    if (!r.model_json.is_null()) {
        fs::path mp = p;
        mp.replace_extension(".model.json");
        write_text(mp.string(), r.model_json.dump(2) + "\n");
    }
}

std::string json_body(const json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------- subcommands

int cmd_presets(const RunConfig& cfg, std::ostream& out) {
    json rows = json::array();
    for (const auto& p : list_presets())
        rows.push_back({{"name", p.name}, {"params", p.params}, {"citation", p.citation}, {"summary", p.summary}});
    if (!cfg.out.empty()) {
        write_text(cfg.out, rows.dump(2) + "\n");
        return 0;
    }
    for (const auto& p : list_presets())
        out << std::left << std::setw(20) << p.name << std::setw(36) << p.params << p.citation << "\n";
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const Resolved& r, const std::string& started, std::ostream& out) {
    const RegimeReport rep = classify(*r.model);
    json doc = {{"config_hash", r.hash}, {"config", r.config}, {"regime_report", rep.to_json()}};
    emit(cfg, r, json_body(doc), started, out);
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const Resolved& r, const std::string& started, std::ostream& out,
                 std::ostream& err) {
    const EnsembleStats st = ensemble(*r.model, cfg.n_max, cfg.N, cfg.seed, cfg.checkpoints, {}, cfg.threads);
    for (const auto& w : st.warnings) err << "warning: " << w << "\n";
    emit(cfg, r, "# config_hash: " + r.hash + "\n" + stats_to_csv(st), started, out);
    return 0;
}

int cmd_oracle(const RunConfig& cfg, const Resolved& r, const std::string& started, std::ostream& out) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash: " << r.hash << "\n";
    const auto& model = *r.model;
    bool done = false;
    if (model.s() == 1 && model.d() == 1) {
        try {
            const ExactLaw1D law = exact_dp_1d(model, cfg.oracle_n);
            os << "n,count,S,prob\n";
            for (std::size_t k = 0; k < law.pmf.size(); ++k)
                os << law.n << ',' << k << ',' << law.A * static_cast<double>(k) + law.b * law.n << ',' << law.pmf[k] << '\n';
            done = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UnsupportedModel) throw;
        }
    }
    if (!done) {
        const SparseLaw law = enumerate_small_multi(model, cfg.oracle_n);
        os << "n";
        for (int j = 0; j < model.s(); ++j) os << ",aux_" << (j + 1);
        os << ",prob\n";
        for (std::size_t i = 0; i < law.points.size(); ++i) {
            os << law.n;
            for (double v : law.points[i]) os << ',' << v;
            os << ',' << law.probs[i] << '\n';
        }
    }
    emit(cfg, r, os.str(), started, out);
    return 0;
}

const std::vector<std::string> kSuites = {"slln", "clt", "lil", "super", "expansion", "recurrence", "noise"};

bool inapplicable(ErrorCode c) {
    return c == ErrorCode::WrongRegime || c == ErrorCode::NonLatticeModel || c == ErrorCode::ComplexTopEigenvalue ||
           c == ErrorCode::MissingLEstimates || c == ErrorCode::UnsupportedModel ||
           c == ErrorCode::InsufficientBinCounts;
}

int cmd_verify(const RunConfig& cfg, const Resolved& r, const std::string& started, std::ostream& out,
               std::ostream& err) {
    std::set<std::string> suites;
    if (cfg.suite == "all") {
        suites.insert(kSuites.begin(), kSuites.end());
    } else {
        std::stringstream ss(cfg.suite);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (std::find(kSuites.begin(), kSuites.end(), item) == kSuites.end())
                throw ConfigFailure("unknown suite '" + item + "'");
            suites.insert(item);
        }
    }
    const bool all = cfg.suite == "all";
    const auto& model = *r.model;
    const RegimeReport rep = classify(model);
    const bool fluct = rep.regime == Regime::Diffusive || rep.regime == Regime::Critical;

    FunctionalConfig fc;
    if (suites.count("lil") && model.d() == 1 && fluct && rep.cov.lil_constant) {
        fc.lil = true;
        fc.lil_scale = rep.regime == Regime::Critical ? LilScale::Critical : LilScale::Diffusive;
        fc.lil_center = rep.limit(0);
        fc.lil_from = std::min(1000L, std::max(3L, cfg.n_max / 100));
    }
    if (suites.count("recurrence") && model.integer_lattice()) fc.returns = true;
    if (suites.count("noise")) {
        fc.noise = true;
        fc.noise_lo = rep.x0(0) - 0.1;
        fc.noise_hi = rep.x0(0) + 0.1;
        fc.noise_bins = 10;
    }
    const EnsembleStats st = ensemble(model, cfg.n_max, cfg.N, cfg.seed, cfg.checkpoints, fc, cfg.threads);
    for (const auto& w : st.warnings) err << "warning: " << w << "\n";

    const auto& T = r.tol;
    json verdicts = json::array(), skipped = json::array();
    bool pass = true;
    std::vector<double> L_hat;
    auto run = [&](const std::string& name, const std::function<VerificationReport()>& fn) {
        if (!suites.count(name)) return;
        try {
            json v = fn().to_json();
            v["suite"] = name;
            pass = pass && v["pass"].get<bool>();
            verdicts.push_back(v);
        } catch (const Error& e) {
            if (all && inapplicable(e.code())) {
                skipped.push_back({{"suite", name}, {"reason", e.what()}});
            } else {
                pass = false;
                verdicts.push_back({{"suite", name}, {"pass", false}, {"error", e.what()}});
            }
        }
    };

    run("slln", [&] {
        std::optional<Eigen::MatrixXd> cv;
        const double n = static_cast<double>(st.checkpoints.back());
        if (rep.cov.clt_variance) cv = rep.regime == Regime::Critical ? Eigen::MatrixXd(*rep.cov.clt_variance * std::log(n)) : *rep.cov.clt_variance;
        return slln_test(st, rep.limit, T.get("slln.z"), cv);
    });
    run("clt", [&] {
        FluctuationOptions o;
        o.alpha = T.get("clt.alpha");
        o.rel_tol = T.get(rep.regime == Regime::Critical ? "clt.rel_tol_critical" : "clt.rel_tol_diffusive");
        return fluctuation_test(st, rep, o);
    });
    run("lil", [&] {
        if (st.lil_max.empty()) throw Error(ErrorCode::WrongRegime, "LIL maxima not tracked for this model");
        return lil_envelope_test(st.lil_max, rep, T.get("lil.lo"), T.get("lil.hi"), T.get("lil.min_fraction"));
    });
    const bool want_L = suites.count("super") || suites.count("expansion");
    if (want_L) {
        auto super = [&] { return supercritical_limit_test(st, rep, &L_hat, T.get("super.threshold")); };
        if (suites.count("super")) {
            run("super", super);
        } else {
            try {
                super();
            } catch (const Error&) {
            }
        }
    }
    run("expansion", [&] {
        if (L_hat.empty()) throw Error(ErrorCode::MissingLEstimates, "no L estimates (supercritical limit test did not run)");
        ExpansionOptions o;
        o.rel_tol = T.get("expansion.rel_tol");
        return expansion_residual_test(st, rep, L_hat, o);
    });
    run("recurrence", [&] { return recurrence_report(st, rep); });
    run("noise", [&] {
        NoiseCheckOptions o;
        o.z = T.get("noise.z");
        o.min_count = T.get("noise.min_count");
        return noise_moment_check(st, o);
    });

    json doc = {{"config_hash", r.hash},   {"config", r.config}, {"regime_report", rep.to_json()},
                {"verdicts", verdicts},    {"skipped", skipped}, {"warnings", st.warnings},
                {"pass", pass}};
    emit(cfg, r, json_body(doc), started, out);
    for (const auto& v : verdicts)
        err << (v["pass"].get<bool>() ? "PASS " : "FAIL ") << v["suite"].get<std::string>()
            << (v.contains("error") ? " (" + v["error"].get<std::string>() + ")" : std::string()) << "\n";
    return pass ? 0 : 1;
}

int cmd_sa(const RunConfig& cfg, const Resolved& r, const std::string& started, std::ostream& out, std::ostream& err) {
    if (cfg.drift.empty()) throw ConfigFailure("--drift is required");
    SAProcess proc;
    try {
        proc = make_sa_process(FuncExpr::parse(cfg.drift, 1), cfg.theta0, NoiseSpec::parse(cfg.noise), cfg.theta1,
                               std::max(4, cfg.terms));
    } catch (const Error& e) {
        throw ConfigFailure(e.what());
    }
    const SAEnsemble ens = sa_ensemble(proc, cfg.n_max, cfg.N, cfg.seed, cfg.checkpoints, cfg.threads);
    const auto& T = r.tol;
    json verdicts = json::array();
    bool pass = true;
    auto add = [&](const std::string& name, const VerificationReport& v) {
        json j = v.to_json();
        j["suite"] = name;
        pass = pass && v.pass;
        verdicts.push_back(j);
    };
    add("fluctuation", sa_fluctuation_check(ens, proc, T.get("sa.rel_tol"), T.get("sa.cauchy_threshold")));
    const double g = proc.slope();
    if (g < 0.5 && g <= 1.0 / (2.0 * cfg.k) + 1e-12) {
        SAExpansionOptions o;
        o.terms = cfg.terms;
        o.rel_tol = T.get("sa_expansion.rel_tol");
        o.slope_tol = T.get("sa_expansion.slope_tol");
        add("expansion", sa_expansion_check(ens, proc, cfg.k, o));
    }
    json summary = json::array();
    for (std::size_t c = 0; c < ens.checkpoints.size(); ++c)
        summary.push_back({{"n", ens.checkpoints[c]},
                           {"mean", stats::mean(ens.theta[c])},
                           {"var", stats::variance(ens.theta[c])}});
    json doc = {{"config_hash", r.hash},
                {"config", r.config},
                {"drift_derivatives", proc.derivs},
                {"checkpoints", summary},
                {"verdicts", verdicts},
                {"pass", pass}};
    emit(cfg, r, json_body(doc), started, out);
    for (const auto& v : verdicts)
        err << (v["pass"].get<bool>() ? "PASS " : "FAIL ") << v["suite"].get<std::string>() << "\n";
    return pass ? 0 : 1;
}

bool is_config_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::SyntaxError:
        case ErrorCode::UnknownIdentifier:
        case ErrorCode::ArityMismatch:
        case ErrorCode::PartitionOverlap:
        case ErrorCode::ProbabilityOutOfRange:
        case ErrorCode::MomentMissing:
        case ErrorCode::DomainViolation:
        case ErrorCode::UnknownPreset:
        case ErrorCode::ParameterOutOfRange:
        case ErrorCode::ConfigInvalid: return true;
        default: return false;
    }
}

}  // namespace

int run_config(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const std::string started = utc_now();
    const std::string& sub = cfg.subcommand;
    Resolved r;
    try {
        if (sub == "presets") return cmd_presets(cfg, out);
        const bool needs_model = sub != "sa";
        if (sub != "simulate" && sub != "analyze" && sub != "oracle" && sub != "verify" && sub != "sa")
            throw ConfigFailure("unknown subcommand '" + sub + "'");
        r = resolve(cfg, needs_model);
    } catch (const ConfigFailure& e) {
        err << "config-invalid: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return 2;
    }
    try {
        if (sub == "analyze") return cmd_analyze(cfg, r, started, out);
        if (sub == "simulate") return cmd_simulate(cfg, r, started, out, err);
        if (sub == "oracle") return cmd_oracle(cfg, r, started, out);
        if (sub == "verify") return cmd_verify(cfg, r, started, out, err);
        return cmd_sa(cfg, r, started, out, err);
    } catch (const ConfigFailure& e) {
        err << "config-invalid: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return is_config_error(e.code()) ? 2 : 1;
    }
}

namespace {

/// Free-form "--key value" / "--key=value" pairs become preset parameters.
Params parse_extras(const std::vector<std::string>& extras) {
    Params p;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string a = extras[i];
        if (a.rfind("--", 0) != 0 || a.size() < 3) throw ConfigFailure("unexpected argument '" + a + "'");
        a = a.substr(2);
        const auto eq = a.find('=');
        if (eq != std::string::npos) {
            p[a.substr(0, eq)] = a.substr(eq + 1);
        } else {
            if (i + 1 >= extras.size()) throw ConfigFailure("parameter --" + a + " needs a value");
            p[a] = extras[++i];
        }
    }
    return p;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized elephant random walk laboratory"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::string preset, model, tol;
    std::vector<std::string> param_list;

    auto add_global = [&](CLI::App* sc) {
        sc->add_option("--seed", cfg.seed, "master seed");
        sc->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
        sc->add_option("--out", cfg.out, "output file");
        sc->add_option("--tol-overrides", tol, "JSON file of tolerance overrides");
    };
    auto add_model = [&](CLI::App* sc) {
        sc->add_option("--preset", preset, "preset name");
        sc->add_option("--model", model, "model JSON file");
        sc->add_option("--param", param_list, "preset parameter key=value (repeatable)");
        sc->allow_extras();
    };
    auto add_sim = [&](CLI::App* sc) {
        sc->add_option("--n", cfg.n_max, "steps per trajectory");
        sc->add_option("--N", cfg.N, "trajectories");
        sc->add_option("--checkpoints", cfg.checkpoints, "checkpoint times")->delimiter(',');
    };

    auto* presets = app.add_subcommand("presets", "list presets");
    presets->add_option("--out", cfg.out, "write the table as JSON");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble statistics (CSV)");
    auto* analyze = app.add_subcommand("analyze", "regime classification and asymptotic constants (JSON)");
    auto* oracle = app.add_subcommand("oracle", "exact law at small n (CSV)");
    auto* verify = app.add_subcommand("verify", "toleranced checks of the limit theorems (JSON)");
    auto* sa = app.add_subcommand("sa", "one-dimensional stochastic approximation runs (JSON)");
    for (auto* sc : {simulate, analyze, oracle, verify}) {
        add_global(sc);
        add_model(sc);
    }
    add_global(sa);
    for (auto* sc : {simulate, verify, sa}) add_sim(sc);
    oracle->add_option("--n", cfg.oracle_n, "time n of the exact law");
    verify->add_option("--suite", cfg.suite, "slln|clt|lil|super|expansion|recurrence|noise|all (comma list)");
    sa->add_option("--drift", cfg.drift, "drift expression in x")->required();
    sa->add_option("--theta0", cfg.theta0, "root of the drift");
    sa->add_option("--theta1", cfg.theta1, "initial value");
    sa->add_option("--noise", cfg.noise, "none | gaussian:SD | rademacher:SD");
    sa->add_option("--k", cfg.k, "expansion order");
    sa->add_option("--terms", cfg.terms, "coefficients subtracted in the residual (default k)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "config-invalid: " << e.what() << "\n";
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    cfg.subcommand = chosen->get_name();
    try {
        if (!preset.empty()) cfg.preset = preset;
        if (!model.empty()) cfg.model_path = model;
        if (!tol.empty()) cfg.tol_overrides_path = tol;
        if (cfg.subcommand != "presets" && cfg.subcommand != "sa") {
            cfg.params = parse_extras(chosen->remaining());
            for (const auto& kv : param_list) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigFailure("--param expects key=value, got '" + kv + "'");
                cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
        }
    } catch (const ConfigFailure& e) {
        err << "config-invalid: " << e.what() << "\n";
        return 2;
    }
    return run_config(cfg, out, err);
}

}  // namespace erwlab
