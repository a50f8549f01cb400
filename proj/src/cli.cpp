#include "lsgrf/cli.hpp"

#include "lsgrf/asymptotics.hpp"
#include "lsgrf/covariance.hpp"
#include "lsgrf/error.hpp"
#include "lsgrf/field_spec.hpp"
#include "lsgrf/io.hpp"
#include "lsgrf/montecarlo.hpp"
#include "lsgrf/pickands.hpp"
#include "lsgrf/rng.hpp"
#include "lsgrf/sampling.hpp"
#include "lsgrf/validate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace lsgrf::cli {

namespace {

constexpr std::uint64_t kSamplePurpose = 5;
constexpr std::uint64_t kDefaultSeed = 1;

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception&) {
        throw SpecError("", "cannot read " + path);
    }
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SpecError("", path + ": invalid JSON: " + e.what());
    }
}

FieldSpec spec_of(const nlohmann::json& params) { return field_spec_from_json(params.at("spec_document")); }

PickandsTable table_of(const nlohmann::json& params) {
    if (params.contains("pickands_document") && !params["pickands_document"].is_null()) {
        return pickands_table_from_json(params["pickands_document"]);
    }
    return {};
}

// Fills in constants from the table, the closed forms, or an on-the-fly estimate.
std::vector<PickandsValue> constants_for(const FieldSpec& spec, const nlohmann::json& params, std::size_t threads) {
    PickandsTable table = table_of(params);
    const auto reps = params.value("pickands_reps", std::size_t{0});
    std::vector<PickandsValue> out;
    for (const auto& p : spec.profiles) {
        const double a = p.alpha0();
        if (auto v = table.find(a)) {
            out.push_back(*v);
        } else if (auto k = known_pickands(a)) {
            out.push_back(*k);
        } else if (reps > 0) {
            PickandsOptions opt{params.at("seed").get<std::uint64_t>(), threads};
            const auto est = estimate_pickands(a, default_pickands_horizon(a), kDefaultPickandsStep, reps, opt);
            PickandsValue v{est.estimate, est.standard_error, "monte carlo"};
            table.set(a, v);
            out.push_back(v);
        } else {
            throw DomainError("no Pickands constant for alpha = " + format_double(a) +
                              "; supply --pickands or --pickands-reps");
        }
    }
    return out;
}

Artifacts cmd_validate(const nlohmann::json& params) {
    const auto spec = spec_of(params);
    const auto report = validate_field_spec(spec);
    Artifacts a;
    const auto j = to_json(report);
    a.files.emplace_back("validation.json", dump(j));
    std::ostringstream summary;
    for (const auto& c : report.conditions) {
        summary << std::left << std::setw(20) << c.name << (c.passed ? "pass  " : "FAIL  ") << c.message << "\n";
    }
    summary << (report.passed() ? "all conditions pass\n" : "some conditions fail\n");
    a.primary = summary.str();
    a.exit_code = report.passed() ? kOk : kConditionFailure;
    return a;
}

Artifacts cmd_pickands(const nlohmann::json& params, std::size_t threads) {
    PickandsOptions opt{params.at("seed").get<std::uint64_t>(), threads};
    const auto reps = params.at("reps").get<std::size_t>();
    PickandsEstimate est;
    if (params.contains("alpha_vector")) {
        const auto alpha = params["alpha_vector"].get<std::vector<double>>();
        const double upper = params.at("domain_upper").get<double>();
        const auto points = params.at("domain_points").get<std::size_t>();
        if (points == 0) throw DomainError("--domain-points must be positive");
        std::vector<std::vector<double>> axes(alpha.size());
        for (auto& ax : axes) {
            for (std::size_t j = 0; j < points; ++j) {
                ax.push_back(points == 1 ? 0.0 : upper * static_cast<double>(j) / static_cast<double>(points - 1));
            }
        }
        est = estimate_pickands_domain(alpha, Grid(std::move(axes)), reps, opt);
    } else {
        est = estimate_pickands(params.at("alpha").get<double>(), params.at("horizon").get<double>(),
                                params.at("step").get<double>(), reps, opt);
    }
    Artifacts a;
    a.files.emplace_back("pickands.json", dump(to_json(est)));
    a.primary = a.files.back().second;
    return a;
}

Artifacts cmd_tail(const nlohmann::json& params, std::size_t threads) {
    const auto spec = spec_of(params);
    const auto constants = constants_for(spec, params, threads);
    const auto u_list = params.at("u").get<std::vector<double>>();
    nlohmann::json out = nlohmann::json::array();
    for (double u : u_list) out.push_back(to_json(tail_asymptotic(spec, constants, u)));
    nlohmann::json doc{{"spec", spec.name}, {"results", out}};
    nlohmann::json used = nlohmann::json::array();
    for (std::size_t i = 0; i < constants.size(); ++i) {
        used.push_back({{"coordinate", i},
                        {"alpha", spec.profiles[i].alpha0()},
                        {"value", constants[i].value},
                        {"standard_error", constants[i].standard_error},
                        {"source", constants[i].source}});
    }
    doc["pickands"] = used;
    Artifacts a;
    a.files.emplace_back("tail.json", dump(doc));
    a.primary = a.files.back().second;
    return a;
}

Artifacts cmd_mc(const nlohmann::json& params, std::size_t threads) {
    const auto spec = spec_of(params);
    const double u = params.at("u").get<double>();
    McOptions opt{params.at("seed").get<std::uint64_t>(), threads};
    std::optional<double> expected;
    try {
        expected = tail_asymptotic(spec, constants_for(spec, params, threads), u).probability;
    } catch (const DomainError&) {
        expected.reset();
    }
    const Grid grid = tail_grid(spec, u, params.at("refine").get<std::size_t>());
    const auto est = estimate_sup_tail(spec, u, grid, params.at("reps").get<std::size_t>(), opt, expected);
    Artifacts a;
    a.files.emplace_back("mc.json", dump(to_json(est)));
    a.primary = a.files.back().second;
    return a;
}

Artifacts cmd_ratio(const nlohmann::json& params, std::size_t threads) {
    const auto spec = spec_of(params);
    RatioOptions opt;
    opt.reps = params.at("reps").get<std::size_t>();
    opt.refine = params.at("refine").get<std::size_t>();
    opt.mc = {params.at("seed").get<std::uint64_t>(), threads};
    const auto report =
        ratio_experiment(spec, params.at("u").get<std::vector<double>>(), constants_for(spec, params, threads), opt);
    Artifacts a;
    a.files.emplace_back("ratio.csv", ratio_csv(report));
    a.files.emplace_back("ratio.json", dump(to_json(report)));
    a.primary = a.files.front().second;
    return a;
}

Artifacts cmd_sample(const nlohmann::json& params, std::size_t threads) {
    const auto spec = spec_of(params);
    const auto intervals = params.at("intervals").get<std::size_t>();
    const auto count = params.at("count").get<std::size_t>();
    const auto format = params.at("format").get<std::string>();
    const auto seed = params.at("seed").get<std::uint64_t>();
    if (format != "csv" && format != "binary" && format != "both") throw DomainError("--format must be csv, binary or both");
    auto grid = std::make_shared<const Grid>(Grid::uniform(spec.k, spec.lower, spec.upper(), intervals));
    const auto matrix = build_cov_matrix(*grid, make_kernel(spec), threads);
    const auto paths = cholesky_sample(matrix, grid, count, seed, stream_id(kSamplePurpose, 0), threads);
    Artifacts a;
    for (std::size_t j = 0; j < paths.size(); ++j) {
        std::ostringstream stem;
        stem << "sample_" << std::setw(4) << std::setfill('0') << j;
        if (format != "binary") a.files.emplace_back(stem.str() + ".csv", sample_csv(paths[j]));
        if (format != "csv") a.files.emplace_back(stem.str() + ".bin", sample_binary(paths[j]));
    }
    nlohmann::json info{{"spec", spec.name},
                        {"grid_counts", grid->counts()},
                        {"paths", count},
                        {"seed", seed},
                        {"first_stream", stream_id(kSamplePurpose, 0)},
                        {"rng", std::string(PhiloxStream::kAlgorithm)},
                        {"jitter", matrix.jitter},
                        {"grid_margin", matrix.grid_margin}};
    a.files.emplace_back("sample.json", dump(info));
    a.primary = a.files.back().second;
    return a;
}

void write_outputs(const fs::path& dir, const Artifacts& a) {
    fs::create_directories(dir);
    for (const auto& [name, bytes] : a.files) write_file_atomic(dir / name, bytes);
}

void write_manifest(const fs::path& dir, const std::string& command, const nlohmann::json& params,
                    const std::vector<std::string>& inputs, const std::string& seed_source, std::size_t threads,
                    double seconds, const Artifacts& a) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : a.files) outputs.push_back(f.first);
    nlohmann::json m{{"command", command},
                     {"tool_version", std::string(kToolVersion)},
                     {"inputs", inputs},
                     {"parameters", params},
                     {"seed", params.value("seed", kDefaultSeed)},
                     {"seed_source", seed_source},
                     {"rng", std::string(PhiloxStream::kAlgorithm)},
                     {"threads", threads},
                     {"duration_seconds", seconds},
                     {"outputs", outputs},
                     {"exit_code", a.exit_code}};
    write_file_atomic(dir / "manifest.json", dump(m));
}

std::optional<std::uint64_t> parse_seed(const char* text) {
    if (text == nullptr || *text == '\0') return std::nullopt;
    std::uint64_t v = 0;
    const char* end = text + std::char_traits<char>::length(text);
    auto [ptr, ec] = std::from_chars(text, end, v);
    if (ec != std::errc() || ptr != end) throw DomainError(std::string(kSeedEnvironment) + " is not an unsigned integer");
    return v;
}

struct Common {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, bool seeded) {
    if (seeded) sub->add_option("--seed", c.seed, "RNG seed (default: $LSGRF_SEED, else 1)");
    sub->add_option("--threads", c.threads, "worker threads, 0 = all cores; never changes results");
    sub->add_option("--out", c.out, "run directory for artifacts and manifest.json");
}

}  // namespace

Artifacts execute(const std::string& command, const nlohmann::json& params, std::size_t threads) {
    if (command == "validate") return cmd_validate(params);
    if (command == "pickands") return cmd_pickands(params, threads);
    if (command == "tail") return cmd_tail(params, threads);
    if (command == "mc") return cmd_mc(params, threads);
    if (command == "ratio") return cmd_ratio(params, threads);
    if (command == "sample") return cmd_sample(params, threads);
    throw DomainError("unknown command '" + command + "'");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tail asymptotics and simulation for locally stationary Gaussian fields", "lsgrf"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Common common;
    std::string spec_path, pickands_path, manifest_path, format = "csv";
    std::optional<double> alpha, horizon;
    std::vector<double> alpha_vector, u_list;
    double step = kDefaultPickandsStep, domain_upper = 1.0, u = 3.0;
    std::size_t reps = 0, refine = 1, intervals = 64, count = 1, domain_points = 101, pickands_reps = 0;
    bool check = false;

    auto* validate = app.add_subcommand("validate", "check D1-D4, A1, A2 and strict correlation for a spec");
    validate->add_option("--spec", spec_path, "FieldSpec JSON")->required();
    add_common(validate, common, false);

    auto* pickands = app.add_subcommand("pickands", "estimate a Pickands constant");
    pickands->add_option("--alpha", alpha, "exponent in (0, 2]");
    pickands->add_option("--alpha-vector", alpha_vector, "per-axis exponents for a product-domain constant")
        ->delimiter(',');
    pickands->add_option("--horizon", horizon, "interval length (default 16 for alpha >= 1, else 8)");
    pickands->add_option("--step", step, "grid step")->capture_default_str();
    pickands->add_option("--domain-upper", domain_upper, "product domain [0, S]^k edge")->capture_default_str();
    pickands->add_option("--domain-points", domain_points, "nodes per axis of the product domain")->capture_default_str();
    pickands->add_option("--reps", reps, "replications (default 10000)");
    add_common(pickands, common, true);

    auto* tail = app.add_subcommand("tail", "evaluate the asymptotic tail");
    tail->add_option("--spec", spec_path, "FieldSpec JSON")->required();
    tail->add_option("--u", u_list, "threshold(s), comma separated")->required()->delimiter(',');
    tail->add_option("--pickands", pickands_path, "Pickands constants JSON");
    tail->add_option("--pickands-reps", pickands_reps, "estimate missing constants with this many replications");
    add_common(tail, common, true);

    auto* mc = app.add_subcommand("mc", "crude Monte Carlo sup-tail estimate");
    mc->add_option("--spec", spec_path, "FieldSpec JSON")->required();
    mc->add_option("--u", u, "threshold")->required();
    mc->add_option("--reps", reps, "replications (default 100000)");
    mc->add_option("--refine", refine, "multiplier on the resolution-rule interval count")->capture_default_str();
    mc->add_option("--pickands", pickands_path, "Pickands constants JSON (for the power check)");
    add_common(mc, common, true);

    auto* ratio = app.add_subcommand("ratio", "Monte Carlo / asymptotic ratio table");
    ratio->add_option("--spec", spec_path, "FieldSpec JSON")->required();
    ratio->add_option("--u", u_list, "increasing thresholds, comma separated")->required()->delimiter(',');
    ratio->add_option("--reps", reps, "replications per threshold (default 100000)");
    ratio->add_option("--refine", refine, "multiplier on the resolution-rule interval count")->capture_default_str();
    ratio->add_option("--pickands", pickands_path, "Pickands constants JSON");
    ratio->add_option("--pickands-reps", pickands_reps, "estimate missing constants with this many replications");
    add_common(ratio, common, true);

    auto* sample = app.add_subcommand("sample", "exact Cholesky sample paths on a uniform grid");
    sample->add_option("--spec", spec_path, "FieldSpec JSON")->required();
    sample->add_option("--intervals", intervals, "intervals per axis")->capture_default_str();
    sample->add_option("--count", count, "number of paths")->capture_default_str();
    sample->add_option("--format", format, "csv, binary or both")->capture_default_str();
    add_common(sample, common, true);

    auto* replay = app.add_subcommand("replay", "re-run a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    replay->add_flag("--check", check, "compare outputs byte for byte with the original run");
    add_common(replay, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    const auto start = std::chrono::steady_clock::now();
    std::string command;
    nlohmann::json params = nlohmann::json::object();
    std::vector<std::string> inputs;
    std::string seed_source = "default";
    std::optional<fs::path> original_dir;

    try {
        CLI::App* chosen = app.get_subcommands().front();
        command = chosen->get_name();
        if (command == "replay") {
            const auto manifest = read_json_file(manifest_path);
            command = manifest.at("command").get<std::string>();
            params = manifest.at("parameters");
            inputs = {manifest_path};
            seed_source = "manifest";
            original_dir = fs::path(manifest_path).parent_path();
            if (original_dir->empty()) original_dir = fs::path(".");
        } else {
            std::uint64_t seed = kDefaultSeed;
            if (common.seed) {
                seed = *common.seed;
                seed_source = "flag";
            } else if (auto env = parse_seed(std::getenv(kSeedEnvironment))) {
                seed = *env;
                seed_source = "environment";
            }
            if (!spec_path.empty()) {
                params["spec"] = spec_path;
                params["spec_document"] = read_json_file(spec_path);
                inputs.push_back(spec_path);
                field_spec_from_json(params["spec_document"]);
            }
            if (!pickands_path.empty()) {
                params["pickands"] = pickands_path;
                params["pickands_document"] = read_json_file(pickands_path);
                inputs.push_back(pickands_path);
            }
            if (command != "validate") params["seed"] = seed;
            if (command == "pickands") {
                if (!alpha && alpha_vector.empty()) {
                    err << "pickands: one of --alpha or --alpha-vector is required\n";
                    return kUsageError;
                }
                params["reps"] = reps == 0 ? 10000 : reps;
                if (!alpha_vector.empty()) {
                    params["alpha_vector"] = alpha_vector;
                    params["domain_upper"] = domain_upper;
                    params["domain_points"] = domain_points;
                } else {
                    params["alpha"] = *alpha;
                    params["horizon"] = horizon ? *horizon : default_pickands_horizon(*alpha);
                    params["step"] = step;
                }
            } else if (command == "tail") {
                params["u"] = u_list;
                params["pickands_reps"] = pickands_reps;
            } else if (command == "mc") {
                params["u"] = u;
                params["reps"] = reps == 0 ? 100000 : reps;
                params["refine"] = refine;
            } else if (command == "ratio") {
                params["u"] = u_list;
                params["reps"] = reps == 0 ? 100000 : reps;
                params["refine"] = refine;
                params["pickands_reps"] = pickands_reps;
            } else if (command == "sample") {
                params["intervals"] = intervals;
                params["count"] = count;
                params["format"] = format;
            }
        }

        const Artifacts result = execute(command, params, common.threads);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!common.out.empty()) {
            write_outputs(common.out, result);
            write_manifest(common.out, command, params, inputs, seed_source, common.threads, seconds, result);
        }
        out << result.primary;
        if (original_dir && check) {
            bool same = true;
            for (const auto& [name, bytes] : result.files) {
                std::string before;
                try {
                    before = read_file(*original_dir / name);
                } catch (const std::exception&) {
                    err << "replay: missing original output " << name << "\n";
                    same = false;
                    continue;
                }
                if (before != bytes) {
                    err << "replay: " << name << " differs\n";
                    same = false;
                }
            }
            err << (same ? "replay: outputs identical\n" : "replay: outputs differ\n");
            if (!same) return kConditionFailure;
        }
        return result.exit_code;
    } catch (const SpecError& e) {
        err << "schema error at '" << e.path() << "': " << e.what() << "\n";
        return kUsageError;
    } catch (const DomainError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kConditionFailure;
    }
}

}  // namespace lsgrf::cli
