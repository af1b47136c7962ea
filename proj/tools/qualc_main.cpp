// qualc: a toolkit for binary qualitative calculi.
//
// Subcommands:
//   convert    generate logic-program encodings from a calculus spec
//   solve      decide model existence for a constraint network
//   casestudy  antenna coverage: topology + frequency coloring
//   bench      scaling harness over synthetic case-study instances
//   validate   check a calculus spec and report its algebraic profile

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qualc/qualc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qualc::Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qualc::Error("cannot write '" + path.string() + "'");
    out << content;
}

qualc::SolveMode parse_mode(const std::string& name) {
    if (name == "auto") return qualc::SolveMode::Auto;
    if (name == "gen0") return qualc::SolveMode::Gen0;
    if (name == "gen1") return qualc::SolveMode::Gen1;
    if (name == "gen2") return qualc::SolveMode::Gen2;
    if (name == "prop" || name == "gen3") return qualc::SolveMode::Propagator;
    throw qualc::Error("unknown mode '" + name + "' (expected auto|gen0|gen1|gen2|prop)");
}

qualc::EncodingVariant parse_variant(const std::string& name) {
    if (name == "gen0") return qualc::EncodingVariant::Gen0;
    if (name == "gen1") return qualc::EncodingVariant::Gen1;
    if (name == "gen2") return qualc::EncodingVariant::Gen2;
    if (name == "gen3") return qualc::EncodingVariant::Gen3;
    throw qualc::Error("unknown variant '" + name + "' (expected gen0|gen1|gen2|gen3)");
}

std::optional<double> env_time_budget() {
    if (const char* v = std::getenv("QUALC_TIME_BUDGET_S")) {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            throw qualc::Error("QUALC_TIME_BUDGET_S is not a number");
        }
    }
    return std::nullopt;
}

int finish(qualc::RunReport& report) {
    report.peak_memory_bytes = qualc::peak_rss_bytes();
    std::cout << report.to_json().dump() << std::endl;
    return qualc::exit_code_for_status(report.status);
}

std::vector<std::string> default_color_names(std::size_t k) {
    if (k == 3) return {"red", "green", "blue"};
    std::vector<std::string> names;
    for (std::size_t i = 1; i <= k; ++i) names.push_back("c" + std::to_string(i));
    return names;
}

json model_to_json(const qualc::Calculus& calc, const qualc::ConstraintNetwork& net,
                   const qualc::Assignment& model) {
    json pairs = json::array();
    for (std::size_t i = 0; i < model.element_count; ++i)
        for (std::size_t j = i + 1; j < model.element_count; ++j) {
            pairs.push_back({{"x", net.element_names.size() > i ? net.element_names[i] : std::to_string(i)},
                             {"y", net.element_names.size() > j ? net.element_names[j] : std::to_string(j)},
                             {"rel", calc.relations[model.at(i, j)]}});
        }
    return pairs;
}

void fill_stats(qualc::RunReport& report, const qualc::SolverStats& stats) {
    report.decisions = stats.decisions;
    report.backtracks = stats.backtracks;
    report.nogoods_added = stats.nogoods_added;
    report.elapsed_ms = stats.elapsed_ms;
}

/// Runs an installed ASP system on emitted encodings and reports SAT/UNSAT,
/// or nullopt when the output is unrecognizable.
std::optional<std::string> run_external_solver(const std::string& solver, const fs::path& theory,
                                               const fs::path& instance) {
    std::string cmd = solver + " " + theory.string() + " " + instance.string() + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return std::nullopt;
    std::string output;
    char buf[4096];
    while (std::size_t got = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, got);
    pclose(pipe);
    if (output.find("UNSATISFIABLE") != std::string::npos) return "UNSAT";
    if (output.find("SATISFIABLE") != std::string::npos) return "SAT";
    return std::nullopt;
}

struct CaseStudyArgs {
    std::string csv_path;
    std::size_t synthetic_n = 0;
    std::uint64_t seed = 1;
    double radius = qualc::kDefaultCoverageRadiusM;
    double box_side = 0.0;
    std::size_t known = 1;
    std::size_t colors = 3;
    std::string mode = "prop";
    std::string outdir = ".";
    std::optional<double> time_budget;
};

struct CaseStudyOutcome {
    qualc::ColoredSolveResult solved;
    std::vector<std::string> outputs;
    std::string stem;
};

CaseStudyOutcome run_casestudy(const CaseStudyArgs& args) {
    using namespace qualc;
    std::vector<Antenna> antennas;
    std::string stem;
    if (!args.csv_path.empty()) {
        antennas = parse_antenna_csv(read_file(args.csv_path));
        stem = fs::path(args.csv_path).stem().string();
    } else {
        if (args.synthetic_n == 0) throw Error("need --csv <file> or --synthetic <n>");
        antennas = synthetic_antennas(args.synthetic_n, args.seed, args.box_side);
        stem = "synthetic" + std::to_string(args.synthetic_n) + "-seed" + std::to_string(args.seed);
    }
    auto regions = buffer_all(antennas, args.radius);
    auto geo = build_network(regions, args.known);

    const Calculus& calc = rcc5();
    SolveConfig cfg;
    cfg.mode = parse_mode(args.mode);
    cfg.time_budget_s = args.time_budget;
    auto solved = solve_with_coloring(calc, geo.network, default_overlap_relations(calc),
                                      args.colors, cfg);

    CaseStudyOutcome out;
    out.stem = stem;
    fs::path dir(args.outdir);
    fs::path pairs_path = dir / (stem + "-pairs.csv");
    fs::path net_path = dir / (stem + ".net");
    fs::path solution_path = dir / (stem + "-solution.json");
    write_file(pairs_path, write_pair_table_csv(geo.pair_table));
    write_file(net_path, write_network(geo.network));

    json solution;
    solution["status"] = status_name(solved.result.status);
    solution["colors"] = args.colors;
    solution["models_tried"] = solved.models_tried;
    if (solved.result.status == SolveStatus::Sat) {
        json coloring = json::object();
        for (std::size_t i = 0; i < solved.coloring.size(); ++i)
            coloring[geo.network.element_names[i]] = solved.coloring[i];
        solution["coloring"] = coloring;
        solution["assignment"] = model_to_json(calc, geo.network, *solved.result.model);
    }
    write_file(solution_path, solution.dump(2) + "\n");

    out.outputs = {pairs_path.string(), net_path.string(), solution_path.string()};
    out.solved = std::move(solved);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qualc: representation, solving and encoding generation for binary qualitative calculi"};
    app.require_subcommand(1);

    // ---- convert ----
    auto* convert = app.add_subcommand("convert", "generate logic-program encodings");
    std::string cv_spec, cv_variant = "gen0", cv_network, cv_outdir = ".";
    convert->add_option("spec", cv_spec, "calculus spec file")->required();
    convert->add_option("--variant", cv_variant, "gen0|gen1|gen2|gen3");
    convert->add_option("--network", cv_network, "optional constraint network file");
    convert->add_option("-o,--out", cv_outdir, "output directory");

    // ---- solve ----
    auto* solve_cmd = app.add_subcommand("solve", "decide model existence for a network");
    std::string sv_spec, sv_network, sv_mode = "auto", sv_outdir, sv_external;
    std::uint64_t sv_enumerate = 1;
    bool sv_oracle = false;
    double sv_budget = -1.0;
    solve_cmd->add_option("spec", sv_spec, "calculus spec file")->required();
    solve_cmd->add_option("network", sv_network, "constraint network file")->required();
    solve_cmd->add_option("--mode", sv_mode, "auto|gen0|gen1|gen2|prop");
    solve_cmd->add_option("--enumerate", sv_enumerate, "maximum number of models to enumerate");
    solve_cmd->add_flag("--oracle", sv_oracle, "cross-check against the brute-force oracle");
    solve_cmd->add_option("--time-budget", sv_budget, "time budget in seconds");
    solve_cmd->add_option("-o,--out", sv_outdir, "directory for the models file");
    solve_cmd->add_option("--external-solver", sv_external,
                          "path to an ASP solver; diffs its status against the native result");

    // ---- casestudy ----
    auto* cs = app.add_subcommand("casestudy", "antenna topology + frequency coloring pipeline");
    CaseStudyArgs cs_args;
    double cs_budget = -1.0;
    cs->add_option("--csv", cs_args.csv_path, "antenna CSV (id,lat,lon)");
    cs->add_option("--synthetic", cs_args.synthetic_n, "generate n synthetic antennas");
    cs->add_option("--seed", cs_args.seed, "seed for the synthetic generator");
    cs->add_option("--radius", cs_args.radius, "coverage radius in meters (default 300)");
    cs->add_option("--box-side", cs_args.box_side, "synthetic box side in meters (0 = auto)");
    cs->add_option("--known", cs_args.known, "known relations kept per region (default 1)");
    cs->add_option("--colors", cs_args.colors, "number of frequencies (default 3)");
    cs->add_option("--mode", cs_args.mode, "auto|gen0|gen1|gen2|prop (default prop)");
    cs->add_option("-o,--out", cs_args.outdir, "output directory");
    cs->add_option("--time-budget", cs_budget, "time budget in seconds");

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "scaling benchmark over synthetic instances");
    std::string bn_spec, bn_sizes = "10:50:10", bn_modes = "prop", bn_outdir = ".";
    std::uint64_t bn_seed = 1;
    std::size_t bn_known = 1, bn_colors = 3;
    double bn_budget = -1.0;
    bench->add_option("spec", bn_spec, "calculus spec file")->required();
    bench->add_option("--sizes", bn_sizes, "size range a:b:step or single size");
    bench->add_option("--seed", bn_seed, "base seed");
    bench->add_option("--modes", bn_modes, "comma-separated solve modes");
    bench->add_option("--known", bn_known, "known relations per region");
    bench->add_option("--colors", bn_colors, "number of frequencies");
    bench->add_option("-o,--out", bn_outdir, "output directory");
    bench->add_option("--time-budget", bn_budget, "per-solve time budget in seconds");

    // ---- validate ----
    auto* validate_cmd = app.add_subcommand("validate", "check a calculus spec file");
    std::string vd_spec;
    validate_cmd->add_option("spec", vd_spec, "calculus spec file")->required();

    CLI11_PARSE(app, argc, argv);

    qualc::RunReport report;
    {
        std::ostringstream echo;
        for (int i = 0; i < argc; ++i) echo << (i ? " " : "") << argv[i];
        report.command = echo.str();
    }

    try {
        if (*convert) {
            qualc::Calculus calc = qualc::parse_calculus_spec(read_file(cv_spec));
            auto variant = parse_variant(cv_variant);
            fs::path dir(cv_outdir);
            if (!cv_network.empty()) {
                auto net = qualc::parse_network(read_file(cv_network));
                auto normalized = qualc::normalize_network(net, calc);
                auto theory = qualc::emit_theory(calc, variant, true);
                auto instance = qualc::emit_instance(calc, normalized.network);
                fs::path tp = dir / qualc::encoding_filename(calc, variant);
                fs::path ip = dir / qualc::encoding_filename(calc, variant, true);
                write_file(tp, theory.text);
                write_file(ip, instance.text);
                report.outputs = {tp.string(), ip.string()};
            } else {
                auto theory = qualc::emit_theory(calc, variant, false);
                fs::path tp = dir / qualc::encoding_filename(calc, variant);
                write_file(tp, theory.text);
                report.outputs = {tp.string()};
            }
            report.status = "SAT"; // command succeeded
            return finish(report);
        }

        if (*solve_cmd) {
            qualc::Calculus calc = qualc::parse_calculus_spec(read_file(sv_spec));
            auto net = qualc::parse_network(read_file(sv_network));
            qualc::SolveConfig cfg;
            cfg.mode = parse_mode(sv_mode);
            cfg.max_models = sv_enumerate;
            cfg.time_budget_s = sv_budget >= 0 ? std::optional<double>(sv_budget) : env_time_budget();

            auto result = qualc::solve(calc, net, cfg);
            report.status = qualc::status_name(result.status);
            fill_stats(report, result.stats);

            if (!sv_outdir.empty()) {
                json models = json::array();
                for (const auto& m : result.models) models.push_back(model_to_json(calc, net, m));
                fs::path mp = fs::path(sv_outdir) / "models.json";
                write_file(mp, json{{"status", report.status}, {"models", models}}.dump(2) + "\n");
                report.outputs.push_back(mp.string());
            }

            if (sv_oracle) {
                auto oracle = qualc::brute_force(calc, net);
                bool agree = oracle.status == result.status;
                if (result.model) agree = agree && qualc::verify(calc, net, *result.model).ok;
                report.oracle_agreement = agree;
                if (!agree) {
                    std::cerr << "oracle disagreement: native=" << qualc::status_name(result.status)
                              << " brute-force=" << qualc::status_name(oracle.status) << "\n";
                    report.status = "ERROR";
                }
            }

            if (!sv_external.empty()) {
                auto variant = qualc::classify(calc).tier == qualc::Tier::Gen2
                                   ? qualc::EncodingVariant::Gen2
                                   : (qualc::classify(calc).tier == qualc::Tier::Gen1
                                          ? qualc::EncodingVariant::Gen1
                                          : qualc::EncodingVariant::Gen0);
                auto theory = qualc::emit_theory(calc, variant, true);
                auto normalized = qualc::normalize_network(net, calc);
                auto instance = qualc::emit_instance(calc, normalized.network);
                fs::path dir = fs::temp_directory_path() / "qualc-external";
                fs::path tp = dir / qualc::encoding_filename(calc, variant);
                fs::path ip = dir / qualc::encoding_filename(calc, variant, true);
                write_file(tp, theory.text);
                write_file(ip, instance.text);
                auto external = run_external_solver(sv_external, tp, ip);
                if (!external) {
                    std::cerr << "external solver produced no recognizable answer; skipping diff\n";
                } else if (*external != report.status && report.status != "TIMEOUT") {
                    std::cerr << "external solver disagreement: native=" << report.status
                              << " external=" << *external << "\n";
                    report.status = "ERROR";
                }
            }
            return finish(report);
        }

        if (*cs) {
            cs_args.time_budget = cs_budget >= 0 ? std::optional<double>(cs_budget) : env_time_budget();
            auto outcome = run_casestudy(cs_args);
            report.status = qualc::status_name(outcome.solved.result.status);
            fill_stats(report, outcome.solved.result.stats);
            report.outputs = outcome.outputs;
            return finish(report);
        }

        if (*bench) {
            qualc::Calculus calc = qualc::parse_calculus_spec(read_file(bn_spec));
            // sizes: "a:b:step" inclusive, or one number
            std::vector<std::size_t> sizes;
            {
                std::vector<long> parts;
                std::stringstream ss(bn_sizes);
                std::string tok;
                while (std::getline(ss, tok, ':')) parts.push_back(std::stol(tok));
                if (parts.size() == 1) sizes.push_back(parts[0]);
                else if (parts.size() == 3)
                    for (long s = parts[0]; s <= parts[1]; s += parts[2]) sizes.push_back(s);
                else
                    throw qualc::Error("--sizes expects 'a:b:step' or a single size");
            }
            for (std::size_t s : sizes)
                if (s < 2) throw qualc::Error("bench sizes must be at least 2");
            std::vector<std::string> modes;
            {
                std::stringstream ss(bn_modes);
                std::string tok;
                while (std::getline(ss, tok, ',')) modes.push_back(tok);
            }
            std::optional<double> budget =
                bn_budget >= 0 ? std::optional<double>(bn_budget) : env_time_budget();

            const qualc::RelationSet overlap = qualc::default_overlap_relations(calc);
            fs::path dir(bn_outdir);
            json rows = json::array();
            for (std::size_t size : sizes) {
                std::uint64_t seed = bn_seed * 1000003ull + size;
                auto antennas = qualc::synthetic_antennas(size, seed);
                auto regions = qualc::buffer_all(antennas, qualc::kDefaultCoverageRadiusM);
                auto geo = qualc::build_network(regions, bn_known);
                fs::path csv_path = dir / ("bench-" + std::to_string(size) + ".csv");
                fs::path net_path = dir / ("bench-" + std::to_string(size) + ".net");
                write_file(csv_path, qualc::write_antenna_csv(antennas));
                write_file(net_path, qualc::write_network(geo.network));
                report.outputs.push_back(csv_path.string());
                report.outputs.push_back(net_path.string());
                for (const auto& mode : modes) {
                    qualc::SolveConfig cfg;
                    cfg.mode = parse_mode(mode);
                    cfg.time_budget_s = budget;
                    auto solved = qualc::solve_with_coloring(calc, geo.network, overlap, bn_colors, cfg);
                    rows.push_back({{"size", size},
                                    {"mode", mode},
                                    {"status", qualc::status_name(solved.result.status)},
                                    {"elapsed_ms", solved.result.stats.elapsed_ms},
                                    {"decisions", solved.result.stats.decisions},
                                    {"backtracks", solved.result.stats.backtracks},
                                    {"nogoods_added", solved.result.stats.nogoods_added},
                                    {"table_checks", solved.result.stats.table_checks},
                                    {"models_tried", solved.models_tried}});
                }
            }
            fs::path results = dir / "bench-results.json";
            write_file(results, rows.dump(2) + "\n");
            report.outputs.push_back(results.string());
            report.status = "SAT";
            return finish(report);
        }

        if (*validate_cmd) {
            qualc::Calculus calc = qualc::parse_calculus_spec(read_file(vd_spec));
            auto diagnostics = qualc::validate(calc);
            auto profile = qualc::classify(calc);
            for (const auto& d : diagnostics) std::cout << "diagnostic: " << d.message << "\n";
            std::cout << "calculus: " << calc.name << " (" << calc.relation_count() << " relations)\n";
            std::cout << "involution: " << (profile.involution ? "yes" : "no")
                      << ", identity law: " << (profile.identity_law ? "yes" : "no")
                      << ", tier: " << qualc::tier_name(profile.tier) << "\n";
            const char* recommended = profile.tier == qualc::Tier::Gen2
                                          ? "gen2"
                                          : (profile.tier == qualc::Tier::Gen1 ? "gen1" : "gen0");
            std::cout << "recommended variant: " << recommended << "\n";
            report.status = diagnostics.empty() ? "SAT" : "ERROR";
            return finish(report);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        report.status = "ERROR";
        return finish(report);
    }
    return 2;
}
