#include "trapmodes/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trapmodes/errors.hpp"
#include "trapmodes/floquet.hpp"
#include "trapmodes/integrator.hpp"
#include "trapmodes/linearization.hpp"
#include "trapmodes/log.hpp"
#include "trapmodes/periodic_orbit.hpp"

namespace trapmodes {

namespace {

constexpr double kPi = std::numbers::pi;

std::string g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_output(const RunManifest& manifest, const std::string& name) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(manifest.output_dir, ec);
    const fs::path path = fs::path(manifest.output_dir) / name;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

void write_json_file(const RunManifest& manifest, const std::string& name, nlohmann::json j) {
    j["seed"] = manifest.seed;
    auto out = open_output(manifest, name);
    out << j.dump(2) << '\n';
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

// --set key=value: dots descend into objects, integer components index arrays.
// Values parse as JSON when possible and fall back to plain strings.
void apply_override(nlohmann::json& root, const std::string& key, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty override key");

    nlohmann::json* node = &root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
        node = all_digits(parts[i]) ? &(*node)[std::stoul(parts[i])] : &(*node)[parts[i]];

    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    if (all_digits(parts.back()))
        (*node)[std::stoul(parts.back())] = parsed;
    else
        (*node)[parts.back()] = parsed;
}

nlohmann::json config_json(const RunManifest& manifest) {
    std::ifstream in(manifest.config_path);
    if (!in) throw ConfigError("cannot open config " + manifest.config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config JSON in " + manifest.config_path + ": " + e.what());
    }
    for (const auto& [k, v] : manifest.overrides) apply_override(j, k, v);
    return j;
}

// Overrides double as tuning knobs for the commands themselves (horizon,
// depth, n_max, ...); unknown keys in the trap config are simply ignored there.
double tuning(const RunManifest& manifest, const std::string& key, double fallback) {
    const auto it = manifest.overrides.find(key);
    if (it == manifest.overrides.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigError("override " + key + " needs a numeric value, got '" + it->second + "'");
    }
}

IonState start_state(const TrapConfig& config, unsigned seed) {
    return seed == 0 ? default_seed(config) : random_seed(config, seed);
}

RelaxOptions relax_options(const RunManifest& manifest) {
    RelaxOptions options;
    options.n_max = static_cast<int>(tuning(manifest, "n_max", options.n_max));
    options.periodicity_tol = tuning(manifest, "periodicity_tol", options.periodicity_tol);
    return options;
}

PeriodicOrbit relax_pipeline(const TrapConfig& config, const RunManifest& manifest) {
    PeriodicOrbit orbit =
        relax_to_crystal(config, start_state(config, manifest.seed), relax_options(manifest));
    double micromotion = 0.0;
    for (const auto& [harmonic, c] : orbit.coefficients)
        if (harmonic != 0) micromotion = std::max(micromotion, c.cwiseAbs().maxCoeff());
    if (micromotion <= 1e-12)
        TM_WARN("crystal has no micromotion content: all B_{2n} with n != 0 vanish");
    return orbit;
}

OdeRhs hill_rhs(const HillSystem& hill) {
    const int f = hill.dim();
    return [&hill, f](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2 * f);
        dy.head(f) = y.tail(f);
        dy.tail(f) = -hill.coefficient(t) * y.head(f);
    };
}

struct ModePipeline {
    TrapConfig config;
    PeriodicOrbit orbit;
    HillSystem hill;
    ExponentScan scan;
    std::vector<FloquetMode> ladders;  // f modes, sorted by beta, ladders filled
    FLTransform transform;
    int depth = 20;
};

// Full pipeline through the FL transform. Returns 3 (after writing the
// instability report) when the crystal is unstable, 0 otherwise.
int solve_modes(const RunManifest& manifest, ModePipeline& p) {
    p.config = load_config(manifest);
    p.orbit = relax_pipeline(p.config, manifest);
    p.hill = linearize(p.config, p.orbit);
    p.depth = static_cast<int>(tuning(manifest, "depth", 20));
    const int n_max = static_cast<int>(tuning(manifest, "mode_n_max", 6));
    const int scan_points = static_cast<int>(tuning(manifest, "scan_points", 0));

    p.scan = find_exponents(p.hill, scan_points, p.depth);
    if (!p.scan.stable) {
        nlohmann::json report;
        report["stable"] = false;
        report["unstable_moduli"] = p.scan.unstable_moduli;
        report["oracle_betas"] = p.scan.oracle_betas;
        write_json_file(manifest, "modes.json", report);
        std::string moduli;
        for (const double m : p.scan.unstable_moduli) moduli += " " + g17(m);
        TM_ERROR("crystal is unstable; monodromy moduli off the unit circle:%s", moduli.c_str());
        return 3;
    }

    for (const FloquetMode& root : p.scan.modes) {
        std::vector<FloquetMode> group = mode_ladder(p.hill, root.beta, p.depth, n_max);
        p.ladders.insert(p.ladders.end(), group.begin(), group.end());
    }
    std::stable_sort(p.ladders.begin(), p.ladders.end(),
                     [](const FloquetMode& l, const FloquetMode& r) { return l.beta < r.beta; });
    p.transform = build_fl_transform(p.ladders);
    return 0;
}

nlohmann::json complex_vector_to_json(const Eigen::VectorXcd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
    return out;
}

}  // namespace

TrapConfig load_config(const RunManifest& manifest) {
    return TrapConfig::from_json(config_json(manifest));
}

int cmd_relax(const RunManifest& manifest) {
    const TrapConfig config = load_config(manifest);
    const PeriodicOrbit orbit = relax_pipeline(config, manifest);
    write_json_file(manifest, "orbit.json", orbit.to_json());

    auto csv = open_output(manifest, "trajectory.csv");
    csv << "# seed=" << manifest.seed << "\n";
    csv << "t";
    for (int i = 0; i < config.n_ions; ++i)
        csv << ",ion" << i << "_x,ion" << i << "_y,ion" << i << "_z";
    csv << "\n";
    const int samples = 512;
    for (int s = 0; s < samples; ++s) {
        const double t = s * kPi / samples;
        const Eigen::MatrixXd r = orbit.position(t);
        csv << g17(t);
        for (int i = 0; i < config.n_ions; ++i)
            for (int axis = 0; axis < 3; ++axis) csv << ',' << g17(r(i, axis));
        csv << "\n";
    }
    TM_INFO("crystal found: n_max=%d, reconstruction defect %.3e", orbit.n_max, orbit.residual);
    return 0;
}

int cmd_modes(const RunManifest& manifest) {
    ModePipeline p;
    if (const int rc = solve_modes(manifest, p); rc != 0) return rc;
    const int f = p.hill.dim();

    write_json_file(manifest, "hill.json", p.hill.to_json());
    {
        nlohmann::json report;
        report["stable"] = true;
        report["betas"] = nlohmann::json::array();
        for (int j = 0; j < f; ++j) report["betas"].push_back(p.transform.betas[j]);
        nlohmann::json modes = nlohmann::json::array();
        for (const FloquetMode& mode : p.ladders) {
            nlohmann::json mj;
            mj["beta"] = mode.beta;
            mj["kernel_dim"] = mode.kernel_dim;
            mj["residual"] = ladder_residual(p.hill, mode);
            nlohmann::json ladder = nlohmann::json::object();
            for (const auto& [harmonic, c] : mode.ladder)
                ladder[std::to_string(harmonic)] = complex_vector_to_json(c);
            mj["ladder"] = std::move(ladder);
            modes.push_back(std::move(mj));
        }
        report["modes"] = std::move(modes);
        write_json_file(manifest, "modes.json", report);
    }

    {
        auto csv = open_output(manifest, "c0_table.csv");
        csv << "# seed=" << manifest.seed << "\n";
        csv << "mode,beta";
        for (const std::string& label : p.hill.labels) csv << ',' << label;
        csv << "\n";
        const Eigen::MatrixXcd u0 = p.transform.u_fourier.at(0);
        for (int j = 0; j < f; ++j) {
            csv << "xi" << (j + 1) << ',' << g17(p.transform.betas[j]);
            for (int i = 0; i < f; ++i) csv << ',' << g17(u0(i, j).real());
            csv << "\n";
        }
    }

    {
        const double horizon = tuning(manifest, "horizon", 100.0) * kPi;
        const int per_period = static_cast<int>(tuning(manifest, "samples_per_period", 16));
        std::vector<double> times;
        for (int k = 0; k * kPi / per_period <= horizon; ++k) times.push_back(k * kPi / per_period);

        auto csv = open_output(manifest, "mode_compare.csv");
        csv << "# seed=" << manifest.seed << "\n";
        csv << "mode,beta,horizon,max_error,max_amplitude,rel_error\n";
        const OdeRhs rhs = hill_rhs(p.hill);
        const Eigen::MatrixXcd gamma0 = p.transform.gamma(0.0);
        for (int j = 0; j < f; ++j) {
            const Eigen::VectorXd initial = gamma0.col(j).real();
            std::vector<Eigen::VectorXd> direct;
            direct.reserve(times.size());
            integrate_dense(rhs, 0.0, initial, horizon, IntegratorSettings{}, times,
                            [&](double, const Eigen::VectorXd& y) { direct.push_back(y); });
            double max_error = 0.0, max_amplitude = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k) {
                const ModeEvolution ev = evolve_modes(p.transform, initial, times[k]);
                max_error =
                    std::max(max_error, (ev.phase_space - direct[k]).cwiseAbs().maxCoeff());
                max_amplitude = std::max(max_amplitude, direct[k].cwiseAbs().maxCoeff());
            }
            csv << "xi" << (j + 1) << ',' << g17(p.transform.betas[j]) << ',' << g17(horizon)
                << ',' << g17(max_error) << ',' << g17(max_amplitude) << ','
                << g17(max_error / std::max(max_amplitude, 1e-300)) << "\n";
        }
    }
    return 0;
}

int cmd_micromotion(const RunManifest& manifest) {
    const TrapConfig config = load_config(manifest);
    const PeriodicOrbit orbit = relax_pipeline(config, manifest);
    const Eigen::MatrixXd b0 = orbit.b(0);
    const Eigen::MatrixXd b2 = orbit.b(2);
    const Eigen::MatrixXd measured = micromotion_ratio(orbit);
    const MicromotionPrediction prediction = predict_micromotion(config, b0);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto csv = open_output(manifest, "micromotion.csv");
    csv << "# seed=" << manifest.seed << "\n";
    csv << "ion,axis,b0,b2,measured_ratio,predicted_ratio,deviation_pct\n";
    const char* axes = "xyz";
    for (int i = 0; i < config.n_ions; ++i) {
        for (int axis = 0; axis < 3; ++axis) {
            double predicted = nan;
            if (std::abs(config.q[axis]) > 1e-12)
                predicted = -config.q[axis] / 4.0;
            else if (std::abs(b0(i, axis)) > 1e-3)
                predicted = prediction.b2(i, axis) / b0(i, axis);
            const double m = measured(i, axis);
            const double deviation = 100.0 * std::abs(m - predicted) /
                                     std::max(std::abs(predicted), 1e-300);
            csv << i << ',' << axes[axis] << ',' << g17(b0(i, axis)) << ',' << g17(b2(i, axis))
                << ',' << g17(m) << ',' << g17(predicted) << ',' << g17(deviation) << "\n";
        }
    }
    return 0;
}

namespace {

struct SweepRow {
    double a = 0.0, q = 0.0;
    std::string status = "error";
    double min_beta = std::numeric_limits<double>::quiet_NaN();
    double max_modulus = std::numeric_limits<double>::quiet_NaN();
};

IonState sweep_seed(const TrapConfig& config, unsigned seed, int index) {
    if (seed == 0) {
        try {
            return default_seed(config);
        } catch (const Error&) {
            // no pseudopotential minimum to start from; fall back to a
            // deterministic random cloud, decorrelated across grid points
            return random_seed(config, 1000003u + static_cast<unsigned>(index));
        }
    }
    return random_seed(config, seed + static_cast<unsigned>(index));
}

std::map<int, Eigen::MatrixXd> pseudo_projection(const TrapConfig& config) {
    Eigen::MatrixXd b0 = default_seed(config).positions;
    Eigen::MatrixXd b2 = b0;
    for (int axis = 0; axis < 3; ++axis) b2.col(axis) *= -config.q[axis] / 4.0;
    return {{0, std::move(b0)}, {2, std::move(b2)}};
}

// Axes that decouple with identically zero Hill coefficients (a = q = 0 rows)
// carry no exponent in (0,1); they are removed before the scan.
HillSystem drop_inert_rows(const HillSystem& hill) {
    const int f = hill.dim();
    const bool q4 = hill.Q4.size() > 0;
    std::vector<int> keep;
    for (int i = 0; i < f; ++i) {
        double mag = hill.A.row(i).cwiseAbs().sum() + hill.A.col(i).cwiseAbs().sum() +
                     hill.Q2.row(i).cwiseAbs().sum() + hill.Q2.col(i).cwiseAbs().sum();
        if (q4) mag += hill.Q4.row(i).cwiseAbs().sum() + hill.Q4.col(i).cwiseAbs().sum();
        if (mag > 1e-12) keep.push_back(i);
    }
    if (static_cast<int>(keep.size()) == f) return hill;
    const int g = static_cast<int>(keep.size());
    HillSystem sub;
    sub.A.resize(g, g);
    sub.Q2.resize(g, g);
    sub.Q4.resize(q4 ? g : 0, q4 ? g : 0);
    for (int r = 0; r < g; ++r) {
        sub.labels.push_back(hill.labels[keep[r]]);
        for (int c = 0; c < g; ++c) {
            sub.A(r, c) = hill.A(keep[r], keep[c]);
            sub.Q2(r, c) = hill.Q2(keep[r], keep[c]);
            if (q4) sub.Q4(r, c) = hill.Q4(keep[r], keep[c]);
        }
    }
    return sub;
}

void classify_point(const TrapConfig& config, unsigned seed, int index, SweepRow& row) {
    PeriodicOrbit orbit;
    bool have_orbit = false;
    try {
        orbit = relax_to_crystal(config, sweep_seed(config, seed, index));
        have_orbit = true;
    } catch (const NonCrystal&) {
    } catch (const RefinementFailure&) {
    }
    if (!have_orbit) {
        // Damped relaxation repels from linearly unstable crystals; probe for
        // one with a Newton polish seeded from the pseudopotential layout.
        try {
            orbit = refine_from_projection(config, pseudo_projection(config));
            have_orbit = true;
        } catch (const Error&) {
            row.status = "no_crystal";
            return;
        }
    }

    const HillSystem hill = drop_inert_rows(linearize(config, orbit));
    if (hill.dim() == 0) {
        row.status = "stable";
        return;
    }
    const ExponentScan scan = find_exponents(hill);
    if (scan.stable) {
        row.status = "stable";
        row.max_modulus = 1.0;
        for (const FloquetMode& mode : scan.modes)
            row.min_beta = std::isnan(row.min_beta) ? mode.beta
                                                    : std::min(row.min_beta, mode.beta);
    } else {
        row.status = "unstable";
        if (!scan.unstable_moduli.empty()) row.max_modulus = scan.unstable_moduli.front();
    }
}

}  // namespace

int cmd_sweep(const RunManifest& manifest) {
    nlohmann::json base = config_json(manifest);
    const std::string geometry = base.value("geometry", "");
    if (geometry != "linear" && geometry != "hyperbolic")
        throw ConfigError("sweep needs a linear or hyperbolic preset config (scalar a and q)");
    if (manifest.a_count < 1 || manifest.q_count < 1)
        throw ConfigError("sweep grid counts must be >= 1");

    const int total = manifest.a_count * manifest.q_count;
    std::vector<SweepRow> rows(total);
    for (int ia = 0; ia < manifest.a_count; ++ia) {
        const double a = manifest.a_count == 1
                             ? manifest.a_min
                             : manifest.a_min + (manifest.a_max - manifest.a_min) * ia /
                                                    (manifest.a_count - 1);
        for (int iq = 0; iq < manifest.q_count; ++iq) {
            const double q = manifest.q_count == 1
                                 ? manifest.q_min
                                 : manifest.q_min + (manifest.q_max - manifest.q_min) * iq /
                                                        (manifest.q_count - 1);
            rows[ia * manifest.q_count + iq].a = a;
            rows[ia * manifest.q_count + iq].q = q;
        }
    }

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int index = next.fetch_add(1);
            if (index >= total) return;
            SweepRow& row = rows[index];
            try {
                nlohmann::json point = base;
                point["a"] = row.a;
                point["q"] = row.q;
                classify_point(TrapConfig::from_json(point), manifest.seed, index, row);
            } catch (const Error& e) {
                row.status = "error";
                TM_WARN("sweep point a=%g q=%g failed: %s", row.a, row.q, e.what());
            } catch (const std::exception& e) {
                row.status = "error";
                TM_WARN("sweep point a=%g q=%g failed: %s", row.a, row.q, e.what());
            }
        }
    };
    const int jobs = std::max(1, manifest.jobs);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    auto csv = open_output(manifest, "sweep.csv");
    csv << "# seed=" << manifest.seed << "\n";
    csv << "a,q,status,min_beta,max_modulus\n";
    for (const SweepRow& row : rows)
        csv << g17(row.a) << ',' << g17(row.q) << ',' << row.status << ',' << g17(row.min_beta)
            << ',' << g17(row.max_modulus) << "\n";
    return 0;
}

int cmd_evolve(const RunManifest& manifest) {
    ModePipeline p;
    if (const int rc = solve_modes(manifest, p); rc != 0) return rc;
    const int f = p.hill.dim();

    const double horizon = tuning(manifest, "horizon", 100.0) * kPi;
    const int per_period = static_cast<int>(tuning(manifest, "samples_per_period", 16));
    std::vector<double> times;
    for (int k = 0; k * kPi / per_period <= horizon; ++k) times.push_back(k * kPi / per_period);

    std::mt19937 rng(manifest.seed + 12345u);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    Eigen::VectorXd initial(2 * f);
    for (int i = 0; i < 2 * f; ++i) initial[i] = unit_normal(rng);
    initial.normalize();

    std::vector<Eigen::VectorXd> direct;
    direct.reserve(times.size());
    integrate_dense(hill_rhs(p.hill), 0.0, initial, horizon, IntegratorSettings{}, times,
                    [&](double, const Eigen::VectorXd& y) { direct.push_back(y); });

    auto csv = open_output(manifest, "evolve.csv");
    csv << "# seed=" << manifest.seed << "\n";
    csv << "t";
    for (const std::string& label : p.hill.labels) csv << ",fl_" << label;
    for (const std::string& label : p.hill.labels) csv << ",fl_d" << label;
    for (const std::string& label : p.hill.labels) csv << ",direct_" << label;
    for (const std::string& label : p.hill.labels) csv << ",direct_d" << label;
    csv << ",err_inf\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        const ModeEvolution ev = evolve_modes(p.transform, initial, times[k]);
        csv << g17(times[k]);
        for (int i = 0; i < 2 * f; ++i) csv << ',' << g17(ev.phase_space[i]);
        for (int i = 0; i < 2 * f; ++i) csv << ',' << g17(direct[k][i]);
        csv << ',' << g17((ev.phase_space - direct[k]).cwiseAbs().maxCoeff()) << "\n";
    }
    return 0;
}

namespace {

int dispatch(const RunManifest& manifest) {
    switch (manifest.command) {
        case RunManifest::Command::relax: return cmd_relax(manifest);
        case RunManifest::Command::modes: return cmd_modes(manifest);
        case RunManifest::Command::micromotion: return cmd_micromotion(manifest);
        case RunManifest::Command::sweep: return cmd_sweep(manifest);
        case RunManifest::Command::evolve: return cmd_evolve(manifest);
    }
    return 4;
}

}  // namespace

int run_cli(int argc, char** argv) {
    RunManifest manifest;
    std::vector<std::string> sets;

    CLI::App app{"rf-trap ion crystals: periodic orbits, Floquet modes, stability maps"};
    app.require_subcommand(1);
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", manifest.config_path, "trap configuration JSON")
            ->required();
        sub->add_option("--out", manifest.output_dir, "output directory (default: .)");
        sub->add_option("--seed", manifest.seed,
                        "pseudorandom seed; 0 starts from the pseudopotential layout");
        sub->add_option("--jobs", manifest.jobs, "worker threads (sweep only)");
        sub->add_option("--set", sets, "config/tuning override key=value (repeatable)");
        return sub;
    };
    CLI::App* relax = add_common(app.add_subcommand("relax", "relax to the periodic crystal"));
    CLI::App* modes =
        add_common(app.add_subcommand("modes", "crystal modes and Floquet-Lyapunov transform"));
    CLI::App* micromotion =
        add_common(app.add_subcommand("micromotion", "micromotion amplitude ratio table"));
    CLI::App* sweep = add_common(app.add_subcommand("sweep", "stability map over an (a,q) grid"));
    CLI::App* evolve =
        add_common(app.add_subcommand("evolve", "mode-space evolution vs direct integration"));
    sweep->add_option("--a-min", manifest.a_min, "grid start for a")->required();
    sweep->add_option("--a-max", manifest.a_max, "grid end for a");
    sweep->add_option("--a-count", manifest.a_count, "grid points along a (default 1)");
    sweep->add_option("--q-min", manifest.q_min, "grid start for q")->required();
    sweep->add_option("--q-max", manifest.q_max, "grid end for q");
    sweep->add_option("--q-count", manifest.q_count, "grid points along q (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "--set expects key=value, got '%s'\n", kv.c_str());
            return 4;
        }
        manifest.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (app.got_subcommand(relax)) manifest.command = RunManifest::Command::relax;
    if (app.got_subcommand(modes)) manifest.command = RunManifest::Command::modes;
    if (app.got_subcommand(micromotion)) manifest.command = RunManifest::Command::micromotion;
    if (app.got_subcommand(sweep)) manifest.command = RunManifest::Command::sweep;
    if (app.got_subcommand(evolve)) manifest.command = RunManifest::Command::evolve;

    try {
        return dispatch(manifest);
    } catch (const NonCrystal& e) {
        TM_ERROR("%s", e.what());
        return 2;
    } catch (const RefinementFailure& e) {
        TM_ERROR("no crystal: %s", e.what());
        return 2;
    } catch (const ConfigError& e) {
        TM_ERROR("%s", e.what());
        return 4;
    } catch (const Error& e) {
        TM_ERROR("%s", e.what());
        return 1;
    } catch (const std::exception& e) {
        TM_ERROR("internal error: %s", e.what());
        return 1;
    }
}

}  // namespace trapmodes
