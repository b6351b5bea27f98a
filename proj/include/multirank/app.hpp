#ifndef MULTIRANK_APP_HPP
#define MULTIRANK_APP_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "multirank/csv_io.hpp"
#include "multirank/simulation.hpp"

#ifndef MULTIRANK_VERSION
#define MULTIRANK_VERSION "0.0.0"
#endif

namespace multirank {

inline constexpr int report_schema_version = 1;

enum class Command { test, scan, segment, select, simulate, pvalue };
enum class OutputFormat { json, csv };

inline std::string_view to_string(Command c) {
    switch (c) {
        case Command::test: return "test";
        case Command::scan: return "scan";
        case Command::segment: return "segment";
        case Command::select: return "select";
        case Command::simulate: return "simulate";
        case Command::pvalue: return "pvalue";
    }
    return "unknown";
}

struct RunConfig {
    Command command = Command::test;
    std::string input;
    std::string output;
    OutputFormat format = OutputFormat::json;

    // test
    std::optional<Index> split;
    std::vector<Index> groups;
    // segment / select
    Index num_changes = 1;
    Index max_changes = 20;
    Index min_seg_len = 1;
    bool brute_force = false;
    double alpha_gate = 0.001;
    // numerics
    double epsilon = 1e-8;
    int kiefer_terms = default_kiefer_terms;
    // simulate
    Scenario scenario;
    Index reps = 0;
    std::vector<std::string> detectors{"multirank_scan", "hotelling_scan"};
    std::string roc_output;
    // pvalue
    Index dim = 1;
    std::optional<double> stat;
    std::optional<double> chi2_df;

    std::uint64_t seed = 0;
    int threads = 0;
};

struct RunOutput {
    nlohmann::json report;
    /// Tabular rendering when format == csv.
    std::string csv;
    int exit_code = 0;
};

namespace detail {

using nlohmann::json;

inline json config_json(const RunConfig& c) {
    json j;
    j["command"] = to_string(c.command);
    j["input"] = c.input;
    j["format"] = c.format == OutputFormat::json ? "json" : "csv";
    j["epsilon"] = c.epsilon;
    j["seed"] = c.seed;
    j["threads"] = resolve_threads(c.threads);
    switch (c.command) {
        case Command::test:
            if (c.split) j["split"] = *c.split;
            if (!c.groups.empty()) j["groups"] = c.groups;
            break;
        case Command::scan: j["kiefer_terms"] = c.kiefer_terms; break;
        case Command::segment:
            j["num_changes"] = c.num_changes;
            j["min_seg_len"] = c.min_seg_len;
            j["method"] = c.brute_force ? "brute" : "dp";
            break;
        case Command::select:
            j["lmax"] = c.max_changes;
            j["min_seg_len"] = c.min_seg_len;
            j["alpha_gate"] = c.alpha_gate;
            j["kiefer_terms"] = c.kiefer_terms;
            break;
        case Command::simulate: {
            const Scenario& s = c.scenario;
            j["scenario"] = {{"kind", to_string(s.kind)},
                             {"n", s.n},
                             {"dim", s.dim},
                             {"change_points", s.change_points},
                             {"shift", std::vector<double>(s.shift.data(), s.shift.data() + s.shift.size())},
                             {"correlation", s.correlation},
                             {"outlier_fraction", s.outlier_fraction},
                             {"outlier_scale", s.outlier_scale},
                             {"noise_sd", s.noise_sd}};
            j["reps"] = c.reps;
            j["detectors"] = c.detectors;
            break;
        }
        case Command::pvalue:
            j["dim"] = c.dim;
            j["kiefer_terms"] = c.kiefer_terms;
            if (c.stat) j["stat"] = *c.stat;
            if (c.chi2_df) j["chi2_df"] = *c.chi2_df;
            break;
    }
    return j;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Per-segment coordinate means of the raw values, for plotting step fits.
inline json segment_summary(const DataMatrix& data, const Segmentation& seg) {
    json out = json::array();
    Index start = 0;
    for (std::size_t s = 0; s <= seg.boundaries.size(); ++s) {
        const Index stop = s < seg.boundaries.size() ? seg.boundaries[s] : data.rows();
        const Vector mean = data.values().middleRows(start, stop - start).colwise().mean().transpose();
        out.push_back({{"start", start + 1},
                       {"end", stop},
                       {"cost", seg.segment_costs[s]},
                       {"means", to_std(mean)}});
        start = stop;
    }
    return out;
}

inline std::string segments_csv(const json& segments) {
    std::ostringstream os;
    os.precision(17);
    os << "segment,start,end,cost";
    const std::size_t K = segments.empty() ? 0 : segments[0]["means"].size();
    for (std::size_t k = 0; k < K; ++k) os << ",mean_" << k + 1;
    os << '\n';
    for (std::size_t s = 0; s < segments.size(); ++s) {
        os << s + 1 << ',' << segments[s]["start"].get<Index>() << ',' << segments[s]["end"].get<Index>() << ','
           << segments[s]["cost"].get<double>();
        for (const auto& m : segments[s]["means"]) os << ',' << m.get<double>();
        os << '\n';
    }
    return os.str();
}

inline std::string key_value_csv(const json& result) {
    std::ostringstream os;
    os << "key,value\n";
    for (auto it = result.begin(); it != result.end(); ++it)
        if (it->is_primitive()) os << it.key() << ',' << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
    return os.str();
}

inline DataMatrix load_input(const RunConfig& c) {
    require(!c.input.empty(), ErrorCode::invalid_argument, "this command needs --input");
    return ingest_csv(c.input);
}

inline void run_test(const RunConfig& c, RunOutput& out, const CovarianceOptions& opts) {
    const DataMatrix data = load_input(c);
    require(c.split.has_value() != !c.groups.empty(), ErrorCode::invalid_argument,
            "test needs exactly one of --split or --groups");
    TestReport r;
    json result;
    if (c.split) {
        r = two_sample_stat(data, *c.split, opts);
        result["kind"] = "two_sample";
        result["split"] = *c.split;
    } else {
        r = multigroup_stat(data, GroupSpec{c.groups}, opts);
        result["kind"] = "multigroup";
        result["groups"] = c.groups;
    }
    result["statistic"] = r.statistic;
    result["df"] = r.df;
    result["pvalue"] = r.pvalue;
    result["effective_rank"] = r.effective_rank;
    result["variant"] = to_string(r.variant);
    result["n"] = data.rows();
    result["K"] = data.cols();
    for (const auto& w : r.warnings) out.report["warnings"].push_back(w);
    out.report["result"] = result;
    out.csv = key_value_csv(result);
}

inline void run_scan(const RunConfig& c, RunOutput& out, const CovarianceOptions& opts) {
    const DataMatrix data = load_input(c);
    const ScanResult s = scan_single(data, ScanOptions{opts, c.kiefer_terms});
    json result{{"wstat", s.wstat},
                {"argmax", s.argmax},
                {"pvalue", s.pvalue},
                {"kiefer_terms", s.kiefer_terms},
                {"kiefer_converged", s.kiefer_converged},
                {"effective_rank", s.effective_rank},
                {"variant", to_string(s.variant)},
                {"n", data.rows()},
                {"K", data.cols()},
                {"profile", s.profile}};
    for (const auto& w : s.warnings) out.report["warnings"].push_back(w);
    out.report["result"] = result;
    std::ostringstream os;
    os.precision(17);
    os << "split,statistic\n";
    for (std::size_t i = 0; i < s.profile.size(); ++i) os << i + 1 << ',' << s.profile[i] << '\n';
    out.csv = os.str();
}

inline void run_segment(const RunConfig& c, RunOutput& out, const CovarianceOptions& opts) {
    const DataMatrix data = load_input(c);
    require(c.num_changes >= 0, ErrorCode::invalid_argument, "--num-changes must be >= 0");
    const Index L = c.num_changes + 1;
    const Segmentation seg =
        c.brute_force ? brute_force_segment(data, L, c.min_seg_len, opts) : dp_segment(data, L, c.min_seg_len, opts);
    json segments = segment_summary(data, seg);
    json result{{"boundaries", seg.boundaries},
                {"criterion", seg.criterion},
                {"segment_costs", seg.segment_costs},
                {"method", to_string(seg.method)},
                {"effective_rank", seg.effective_rank},
                {"segments", segments}};
    if (!seg.layer_criteria.empty()) result["layer_criteria"] = seg.layer_criteria;
    out.report["result"] = result;
    out.csv = segments_csv(segments);
}

inline void run_select(const RunConfig& c, RunOutput& out, const CovarianceOptions& opts) {
    const DataMatrix data = load_input(c);
    const Selection sel = select_num_changes(data, c.max_changes, c.alpha_gate, c.min_seg_len,
                                             ScanOptions{opts, c.kiefer_terms});
    json segments = segment_summary(data, sel.segmentation);
    json rss = json::array();
    for (double r : sel.rss) rss.push_back(std::isnan(r) ? json(nullptr) : json(r));
    json result{{"num_changes", sel.num_changes},
                {"gate_pvalue", sel.gate_pvalue},
                {"alpha_gate", c.alpha_gate},
                {"criterion_curve", sel.curve},
                {"rss", rss},
                {"boundaries", sel.segmentation.boundaries},
                {"criterion", sel.segmentation.criterion},
                {"segments", segments}};
    out.report["result"] = result;
    out.csv = segments_csv(segments);
}

inline void run_simulate(const RunConfig& c, RunOutput& out) {
    Scenario s = c.scenario;
    s.seed = c.seed;
    s.validate();
    if (c.reps == 0) {
        const DataMatrix data = generate(s);
        std::ostringstream os;
        write_csv(os, data);
        out.csv = os.str();
        out.report["result"] = {{"n", data.rows()}, {"K", data.cols()}, {"generated", true}};
        if (c.format == OutputFormat::json) out.report["result"]["data_csv"] = out.csv;
        return;
    }
    const Index n1 = s.change_points.empty() ? s.n / 2 : s.change_points.front();
    std::vector<NamedDetector> dets;
    for (const auto& name : c.detectors) dets.push_back(detectors::by_name(name, n1));
    const auto curves = roc_compare(dets, s, s.without_change(), c.reps, c.threads);
    json list = json::array();
    for (const auto& curve : curves)
        list.push_back({{"detector", curve.name},
                        {"auc", curve.auc},
                        {"auc_se", curve.auc_se},
                        {"detection_at_5pct", curve.detection_at(0.05)},
                        {"replications", curve.replications}});
    out.report["result"] = {{"roc", list}};
    std::ostringstream os;
    write_roc_csv(os, curves);
    out.csv = os.str();
    if (!c.roc_output.empty()) {
        std::ofstream f(c.roc_output);
        require(static_cast<bool>(f), ErrorCode::io_error, "cannot write ROC output");
        f << out.csv;
        out.report["result"]["roc_csv"] = c.roc_output;
    }
}

inline void run_pvalue(const RunConfig& c, RunOutput& out) {
    require(c.stat.has_value(), ErrorCode::invalid_argument, "pvalue needs --stat");
    json result;
    result["stat"] = *c.stat;
    if (c.chi2_df) {
        result["distribution"] = "chi2";
        result["df"] = *c.chi2_df;
        result["pvalue"] = chi2_sf(*c.chi2_df, *c.stat);
    } else {
        require(c.dim >= 1, ErrorCode::invalid_argument, "--dim must be >= 1");
        const KieferResult k = kiefer_pvalue(static_cast<int>(c.dim), *c.stat, c.kiefer_terms);
        result["distribution"] = "brownian_bridge_sup";
        result["dim"] = c.dim;
        result["pvalue"] = k.pvalue;
        result["kiefer_terms"] = k.terms;
        result["kiefer_converged"] = k.converged;
    }
    out.report["result"] = result;
    out.csv = key_value_csv(result);
}

} // namespace detail

/**
 * Executes one command and returns its report.  Failures never throw: they
 * yield exit_code 1 and a populated "error" member {code, message}.
 */
inline RunOutput run(const RunConfig& config) {
    RunOutput out;
    out.report = {{"schema_version", report_schema_version},
                  {"tool", "multirank"},
                  {"version", MULTIRANK_VERSION},
                  {"command", to_string(config.command)},
                  {"config", detail::config_json(config)},
                  {"warnings", nlohmann::json::array()},
                  {"result", nullptr},
                  {"error", nullptr}};
    const CovarianceOptions opts{config.epsilon};
    try {
        switch (config.command) {
            case Command::test: detail::run_test(config, out, opts); break;
            case Command::scan: detail::run_scan(config, out, opts); break;
            case Command::segment: detail::run_segment(config, out, opts); break;
            case Command::select: detail::run_select(config, out, opts); break;
            case Command::simulate: detail::run_simulate(config, out); break;
            case Command::pvalue: detail::run_pvalue(config, out); break;
        }
    } catch (const Error& e) {
        out.report["result"] = nullptr;
        out.report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        out.csv.clear();
        out.exit_code = 1;
    } catch (const std::exception& e) {
        out.report["result"] = nullptr;
        out.report["error"] = {{"code", "internal"}, {"message", e.what()}};
        out.csv.clear();
        out.exit_code = 1;
    }
    return out;
}

} // namespace multirank

#endif
