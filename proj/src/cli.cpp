#include "diffverify/cli.hpp"

#include "diffverify/oracle.hpp"
#include "diffverify/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <random>
#include <sstream>

namespace dv {

namespace {

struct PairOptions {
    std::string net1;
    std::string net2;
    bool truncate = false;
};

void add_pair_options(CLI::App& cmd, PairOptions& opts, bool required)
{
    auto* net1 = cmd.add_option("--net1", opts.net1, "First network (.nnet or .json)");
    auto* net2 = cmd.add_option("--net2", opts.net2, "Second network");
    auto* trunc = cmd.add_flag("--truncate", opts.truncate,
                               "Derive the second network by binary16 truncation of the first");
    net2->excludes(trunc);
    if (required) {
        net1->required();
    }
}

std::shared_ptr<const NetworkPair> load_pair(const PairOptions& opts)
{
    Network first = load_network(opts.net1);
    if (opts.truncate) {
        Network second = truncate_weights(first);
        return std::make_shared<const NetworkPair>(std::move(first), std::move(second));
    }
    if (opts.net2.empty()) {
        throw CLI::ValidationError("--net2", "either --net2 or --truncate is required");
    }
    return std::make_shared<const NetworkPair>(std::move(first), load_network(opts.net2));
}

Mode mode_from(const std::string& text)
{
    const auto mode = parse_mode(text);
    if (!mode) {
        throw CLI::ValidationError("--mode", "unknown mode '" + text + "'");
    }
    return *mode;
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << text << '\n';
        return;
    }
    std::ofstream file(path);
    if (!file) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    file << text << '\n';
}

std::vector<double> parse_point(const std::string& text)
{
    std::vector<double> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) {
            throw std::invalid_argument("bad coordinate '" + item + "'");
        }
    }
    return values;
}

SymVarOptions symvar_options(const std::optional<std::size_t>& budget, bool all_layers)
{
    SymVarOptions options;
    options.budget_override = budget;
    options.skip_last_hidden_layer = !all_layers;
    return options;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Differential bounds for pairs of ReLU networks", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    PairOptions pair_opts;
    std::string property_path;
    std::string mode_text = "full";
    std::string out_path;
    std::optional<std::size_t> budget;
    bool all_layers = false;

    auto* verify_cmd = app.add_subcommand("verify", "Check |f'(x) - f(x)| < epsilon over the box");
    add_pair_options(*verify_cmd, pair_opts, true);
    unsigned threads = 12;
    double timeout_s = 1800.0;
    int max_depth = 25;
    std::string split_text = "smear";
    verify_cmd->add_option("--property", property_path, "Property JSON")->required();
    verify_cmd->add_option("--mode", mode_text, "naive|concretize|convex-only|symvars-only|full");
    verify_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);
    verify_cmd->add_option("--timeout-s", timeout_s)->check(CLI::PositiveNumber);
    verify_cmd->add_option("--max-depth", max_depth)->check(CLI::NonNegativeNumber);
    verify_cmd->add_option("--split", split_text, "smear|widest");
    verify_cmd->add_option("--budget", budget, "Override the intermediate-variable budget");
    verify_cmd->add_flag("--symvars-all-layers", all_layers,
                         "Allow intermediate variables in the last hidden layer");
    verify_cmd->add_option("--out", out_path, "Write the JSON report here instead of stdout");

    auto* bounds_cmd = app.add_subcommand("bounds", "Print output delta bounds for the whole box");
    add_pair_options(*bounds_cmd, pair_opts, true);
    bounds_cmd->add_option("--property", property_path, "Property JSON")->required();
    bounds_cmd->add_option("--mode", mode_text);
    bounds_cmd->add_option("--budget", budget);
    bounds_cmd->add_flag("--symvars-all-layers", all_layers);
    bounds_cmd->add_option("--out", out_path);

    std::string in_path;
    auto* truncate_cmd = app.add_subcommand("truncate", "Round every parameter to binary16");
    truncate_cmd->add_option("--in", in_path, "Input network")->required();
    truncate_cmd->add_option("--out", out_path, "Output network (.nnet or .json)")->required();

    std::string point_text;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate both networks at one point");
    add_pair_options(*eval_cmd, pair_opts, true);
    eval_cmd->add_option("--point", point_text, "Comma-separated input")->required();

    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    auto* fuzz_cmd = app.add_subcommand("fuzz", "Sample-check every bound of one analysis");
    add_pair_options(*fuzz_cmd, pair_opts, false);
    fuzz_cmd->add_option("--property", property_path, "Property JSON (required with --net1)");
    fuzz_cmd->add_option("--mode", mode_text);
    fuzz_cmd->add_option("--samples", samples);
    fuzz_cmd->add_option("--seed", seed);
    fuzz_cmd->add_option("--budget", budget);

    std::vector<std::string> argv_storage{kToolName};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) {
        argv.push_back(a.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (truncate_cmd->parsed()) {
            save_network(truncate_weights(load_network(in_path)), out_path);
            return 0;
        }

        const auto pair = pair_opts.net1.empty() ? nullptr : load_pair(pair_opts);

        if (eval_cmd->parsed()) {
            const auto x = parse_point(point_text);
            if (static_cast<Eigen::Index>(x.size()) != pair->first().input_count()) {
                throw std::invalid_argument("point has " + std::to_string(x.size())
                                            + " coordinates, network expects "
                                            + std::to_string(pair->first().input_count()));
            }
            const Vector v = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
            const Vector f = evaluate(pair->first(), v);
            const Vector g = evaluate(pair->second(), v);
            out.precision(17);
            for (Eigen::Index o = 0; o < f.size(); ++o) {
                out << "output " << o << ": f=" << f[o] << " f'=" << g[o] << " diff=" << g[o] - f[o]
                    << '\n';
            }
            return 0;
        }

        const Mode mode = mode_from(mode_text);
        const SymVarOptions options = symvar_options(budget, all_layers);

        if (fuzz_cmd->parsed()) {
            std::shared_ptr<const NetworkPair> fuzz_pair = pair;
            InputBox box;
            if (pair_opts.net1.empty()) {
                std::mt19937_64 rng(seed);
                Network first = oracle::random_network(rng);
                Network second = truncate_weights(first);
                box = oracle::random_box(rng, first.input_count());
                fuzz_pair = std::make_shared<const NetworkPair>(std::move(first), std::move(second));
            } else {
                if (property_path.empty()) {
                    throw CLI::ValidationError("--property", "required when --net1 is given");
                }
                box = load_property(property_path).box_for(pair->first());
            }
            const DiffAnalysis analysis = forward_diff(*fuzz_pair, box, mode, options);
            const auto report = oracle::sample_check(*fuzz_pair, box, analysis, samples, seed);
            out << "samples " << report.samples_tested << ", checks " << report.checks
                << ", violations " << report.violations.size() << '\n';
            for (std::size_t i = 0; i < std::min<std::size_t>(report.violations.size(), 10); ++i) {
                out << "  " << report.violations[i].where << " by " << report.violations[i].amount
                    << '\n';
            }
            return report.sound() ? 0 : kExitUndetermined;
        }

        const PropertySpec property = load_property(property_path);
        const InputBox box = property.box_for(pair->first());

        Report report;
        report.mode = mode;

        if (bounds_cmd->parsed()) {
            const auto start = std::chrono::steady_clock::now();
            const DiffAnalysis analysis = forward_diff(*pair, box, mode, options);
            report.command = "bounds";
            report.output_bounds = analysis.output_bounds;
            report.symbolic_bounds = analysis.output;
            report.minimal_epsilon = minimal_epsilon(analysis.output_bounds);
            report.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            report.subregions = 1;
            report.leaves = 1;
            report.symvars = analysis.stats.symvars_introduced;
            report.cases = analysis.stats.cases;
            emit(render_report(report), out_path, out);
            return 0;
        }

        const auto split = parse_split_strategy(split_text);
        if (!split) {
            throw CLI::ValidationError("--split", "unknown strategy '" + split_text + "'");
        }
        VerificationTask task;
        task.pair = pair;
        task.box = box;
        task.epsilon = property.epsilon;
        task.mode = mode;
        task.max_depth = max_depth;
        task.timeout = std::chrono::duration<double>(timeout_s);
        task.thread_count = threads;
        task.split_strategy = *split;
        task.symvars = options;
        const VerificationOutcome outcome = verify(task);

        report.command = "verify";
        report.status = outcome.status;
        report.epsilon = property.epsilon;
        report.output_bounds = outcome.output_bounds;
        report.wall_seconds = outcome.wall_time.count();
        report.subregions = outcome.subregions_explored;
        report.leaves = outcome.leaves;
        report.max_depth_reached = outcome.max_depth_reached;
        report.timed_out = outcome.timed_out;
        report.symvars = outcome.symvars_introduced;
        report.cases = outcome.case_histogram;
        report.threads = threads;
        emit(render_report(report), out_path, out);
        return outcome.status == Status::verified ? kExitVerified : kExitUndetermined;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

} // namespace dv
