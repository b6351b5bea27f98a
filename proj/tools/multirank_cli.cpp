// multirank: rank-based homogeneity tests and change-point detection.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multirank/app.hpp"

using multirank::Index;

namespace {

using multirank::Command;
using multirank::RunConfig;

void add_common(CLI::App* sub, RunConfig& cfg, std::string& format) {
    sub->add_option("-o,--output", cfg.output, "Write the report here instead of stdout");
    sub->add_option("--format", format, "Report format: json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--epsilon", cfg.epsilon, "Relative eigenvalue threshold of the pseudo-inverse")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", cfg.threads, "Worker threads (default: MULTIRANK_THREADS or hardware)");
    sub->add_option("--seed", cfg.seed, "Random seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-based multivariate homogeneity tests and change-point detection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MULTIRANK_VERSION);

    RunConfig cfg;
    std::string format = "json";
    Index split = 0;
    std::string kind = "null";
    std::vector<double> shift;

    auto* test = app.add_subcommand("test", "Two-sample or multigroup homogeneity test");
    test->add_option("-i,--input", cfg.input, "CSV input")->required();
    test->add_option("--split", split, "Rows in the first sample")->check(CLI::PositiveNumber);
    test->add_option("--groups", cfg.groups, "Group boundaries (comma separated)")->delimiter(',');
    add_common(test, cfg, format);

    auto* scan = app.add_subcommand("scan", "Single change-point scan with asymptotic p-value");
    scan->add_option("-i,--input", cfg.input, "CSV input")->required();
    scan->add_option("--kiefer-terms", cfg.kiefer_terms, "Initial Kiefer series length")->check(CLI::PositiveNumber);
    add_common(scan, cfg, format);

    auto* segment = app.add_subcommand("segment", "Dynamic-programming segmentation with a known number of changes");
    segment->add_option("-i,--input", cfg.input, "CSV input")->required();
    segment->add_option("--num-changes", cfg.num_changes, "Number of change points")->required();
    segment->add_option("--min-seg-len", cfg.min_seg_len, "Minimum segment length")->check(CLI::PositiveNumber);
    segment->add_flag("--brute-force", cfg.brute_force, "Exhaustive search instead of dynamic programming");
    add_common(segment, cfg, format);

    auto* select = app.add_subcommand("select", "Choose the number of changes and segment");
    select->add_option("-i,--input", cfg.input, "CSV input")->required();
    select->add_option("--lmax", cfg.max_changes, "Largest number of changes considered");
    select->add_option("--alpha", cfg.alpha_gate, "Significance gate of the single-change scan");
    select->add_option("--min-seg-len", cfg.min_seg_len, "Minimum segment length")->check(CLI::PositiveNumber);
    select->add_option("--kiefer-terms", cfg.kiefer_terms, "Initial Kiefer series length")->check(CLI::PositiveNumber);
    add_common(select, cfg, format);

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic data or run a Monte Carlo ROC comparison");
    simulate->add_option("--scenario", kind, "null, cross_mixture, noise_padding, correlated_shift, outlier_contamination");
    simulate->add_option("--n", cfg.scenario.n, "Series length");
    simulate->add_option("--dim", cfg.scenario.dim, "Dimension");
    simulate->add_option("--change-at", cfg.scenario.change_points, "Change points (comma separated)")->delimiter(',');
    simulate->add_option("--shift", shift, "Mean shift (one value for all coordinates, or one per coordinate)")
        ->delimiter(',');
    simulate->add_option("--correlation", cfg.scenario.correlation, "Tridiagonal correlation");
    simulate->add_option("--outlier-fraction", cfg.scenario.outlier_fraction, "Fraction of outlying rows");
    simulate->add_option("--outlier-scale", cfg.scenario.outlier_scale, "Outlier covariance multiplier");
    simulate->add_option("--noise-sd", cfg.scenario.noise_sd, "Standard deviation of padding coordinates");
    simulate->add_option("--reps", cfg.reps, "Replications for the ROC comparison (0: emit one data set)");
    simulate->add_option("--detectors", cfg.detectors, "Detectors to compare")->delimiter(',');
    simulate->add_option("--roc-output", cfg.roc_output, "CSV file for the ROC table");
    add_common(simulate, cfg, format);

    auto* pvalue = app.add_subcommand("pvalue", "Asymptotic p-value of a scan or chi-square statistic");
    pvalue->add_option("--stat", cfg.stat, "Statistic value")->required();
    pvalue->add_option("--dim", cfg.dim, "Number of bridges K");
    pvalue->add_option("--chi2-df", cfg.chi2_df, "Use a chi-square law with this many degrees of freedom");
    pvalue->add_option("--kiefer-terms", cfg.kiefer_terms, "Initial Kiefer series length")->check(CLI::PositiveNumber);
    add_common(pvalue, cfg, format);

    CLI11_PARSE(app, argc, argv);

    if (*test) cfg.command = Command::test;
    if (*scan) cfg.command = Command::scan;
    if (*segment) cfg.command = Command::segment;
    if (*select) cfg.command = Command::select;
    if (*simulate) cfg.command = Command::simulate;
    if (*pvalue) cfg.command = Command::pvalue;
    if (test->count("--split")) cfg.split = split;
    cfg.format = format == "csv" ? multirank::OutputFormat::csv : multirank::OutputFormat::json;

    multirank::RunOutput out;
    try {
        if (cfg.command == Command::simulate) {
            cfg.scenario.kind = multirank::scenario_kind_from_string(kind);
            if (shift.size() == 1)
                cfg.scenario.shift = multirank::Vector::Constant(cfg.scenario.dim, shift[0]);
            else
                cfg.scenario.shift = Eigen::Map<const multirank::Vector>(shift.data(), static_cast<Index>(shift.size()));
        }
        out = multirank::run(cfg);
    } catch (const multirank::Error& e) {
        out.exit_code = 1;
        out.report = {{"schema_version", multirank::report_schema_version},
                      {"error", {{"code", multirank::to_string(e.code())}, {"message", e.what()}}}};
    }

    const bool csv = cfg.format == multirank::OutputFormat::csv && out.exit_code == 0;
    const std::string text = csv ? out.csv : out.report.dump(2) + "\n";
    if (cfg.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(cfg.output);
        if (!f) {
            std::cerr << "cannot write " << cfg.output << '\n';
            return 2;
        }
        f << text;
    }
    if (out.exit_code != 0) std::cerr << out.report["error"]["message"].get<std::string>() << '\n';
    return out.exit_code;
}
