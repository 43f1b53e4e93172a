#include "mlow/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlow/mlow.hpp"

namespace mlow::cli {

namespace {

/// Bad flag values. Maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    const char* env = std::getenv("MLOW_SEED");
    if (env == nullptr || *env == '\0') return 0;
    try {
        std::size_t used = 0;
        const unsigned long long value = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw UsageError(std::string("MLOW_SEED must be an unsigned integer, got '") + env + "'");
    }
}

enum class SplitName { train, val, test, all };

SplitName parse_split(const std::string& name) {
    if (name == "train") return SplitName::train;
    if (name == "val") return SplitName::val;
    if (name == "test") return SplitName::test;
    if (name == "all") return SplitName::all;
    throw UsageError("--split must be one of train, val, test, all (got '" + name + "')");
}

/// Source-coordinate view of one split: slice rows [slice_begin, core_end),
/// modelled rows [core_begin, core_end).
struct SplitView {
    std::size_t slice_begin = 0;
    std::size_t core_begin = 0;
    std::size_t core_end = 0;
};

SplitView split_view(const SeriesTable& table, SplitName which, std::size_t lookback) {
    if (which == SplitName::all) return {0, 0, table.length()};
    const SplitDataset s = split(table, SplitRatios{}, lookback);
    switch (which) {
        case SplitName::train: return {0, 0, s.train_end};
        case SplitName::val: return {s.val_offset, s.train_end, s.val_end};
        case SplitName::test: return {s.test_offset, s.val_end, s.length};
        case SplitName::all: break;
    }
    return {0, 0, table.length()};
}

void require_path_writable(const std::filesystem::path& path) {
    const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    if (!std::filesystem::is_directory(parent)) {
        throw Error("output directory '" + parent.string() + "' does not exist");
    }
}

void require_file(const std::filesystem::path& path, const char* flag) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ParseError(std::string(flag) + " '" + path.string() + "' is not a readable file");
    }
}

std::string strip_extension_suffix(const std::filesystem::path& path, const std::string& suffix) {
    auto p = path;
    p.replace_extension();
    return p.string() + suffix;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    std::string out;
    std::size_t horizon = 96;
    std::size_t levels = 168;
    long long rank = 10;
    double lambda = 20.0;
    long long iterations = 1000;
    std::string method = "hyperplane_nmf";
    std::optional<std::uint64_t> seed;
    long long stride = 1;
    std::string split = "train";
    bool has_timestamp = false;
};

int cmd_fit(const FitArgs& a, bool lambda_given, std::ostream& out, std::ostream& err) {
    if (a.rank < 1) throw UsageError("V must be ≥ 1");
    if (a.iterations < 1) throw UsageError("iters must be ≥ 1");
    if (a.stride < 1) throw UsageError("stride must be ≥ 1");
    MlowConfig config;
    config.input_horizon = a.horizon;
    config.freq_levels = a.levels;
    config.rank = static_cast<std::size_t>(a.rank);
    config.iterations = static_cast<std::size_t>(a.iterations);
    config.lambda = a.lambda;
    config.stride = static_cast<std::size_t>(a.stride);
    config.seed = a.seed.value_or(default_seed());
    try {
        config.method = parse_method(a.method);
        config.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    const SplitName which = parse_split(a.split);
    if (which == SplitName::val || which == SplitName::test) throw UsageError("fit accepts --split train or all");
    if (config.method == Method::pca && lambda_given) {
        err << "mlow: warning: --lambda has no effect for --method pca; ignored\n";
    }
    require_file(a.data, "--data");
    require_path_writable(a.out);

    const SeriesTable table = load_csv(a.data, CsvOptions{a.has_timestamp});
    const SplitView view = split_view(table, which, config.window_length());
    const SeriesTable train = table.slice(view.slice_begin, view.core_end);
    const MlowModel model = fit(train.values, config);
    save_model(a.out, model);

    out << nlohmann::json{
               {"command", "fit"},
               {"N", model.metadata.n_training_spectra},
               {"channels", model.metadata.channels},
               {"method", std::string(to_string(config.method))},
               {"wall_time_s", model.metadata.wall_time_seconds},
               {"final_objective", model.metadata.final_objective},
               {"out", a.out},
           }
               .dump()
        << '\n';
    return kSuccess;
}

// ---------------------------------------------------------- transform

struct TransformArgs {
    std::string model;
    std::string data;
    std::string split = "test";
    std::string out;
    bool per_channel = false;
    bool has_timestamp = false;
};

constexpr double kIdentityTolerance = 1e-9;

void write_decomposition_header(std::ostream& os, std::size_t rank) {
    os << "channel,t,x,x_m,x_r";
    for (std::size_t v = 1; v <= rank; ++v) os << ",z_" << v;
    os << '\n';
}

int cmd_transform(const TransformArgs& a, std::ostream& out, std::ostream& err) {
    const SplitName which = parse_split(a.split);
    require_file(a.model, "--model");
    require_file(a.data, "--data");
    require_path_writable(a.out);

    const MlowModel model = load_model(a.model);
    const SeriesTable table = load_csv(a.data, CsvOptions{a.has_timestamp});
    const std::size_t window = model.config.window_length();
    const std::size_t horizon = model.config.input_horizon;
    const std::size_t rank = model.config.rank;
    const SplitView view = split_view(table, which, window);

    std::vector<std::ofstream> files;
    std::vector<std::string> paths;
    if (a.per_channel) {
        for (const auto& name : table.channel_names) {
            paths.push_back(strip_extension_suffix(a.out, "_" + name + ".csv"));
            files.emplace_back(paths.back(), std::ios::binary);
            if (!files.back()) throw Error("cannot open '" + paths.back() + "' for writing");
            write_decomposition_header(files.back(), rank);
        }
    } else {
        paths.push_back(a.out);
        files.emplace_back(a.out, std::ios::binary);
        if (!files.back()) throw Error("cannot open '" + a.out + "' for writing");
        write_decomposition_header(files.back(), rank);
    }

    std::size_t windows = 0;
    std::size_t skipped = 0;
    std::size_t rows = 0;
    double worst = 0.0;
    // Tails tile the split's core range; each needs a full 2K window of history
    // inside the split slice.
    for (std::size_t d = 0; d < table.channels(); ++d) {
        std::ostream& os = files[a.per_channel ? d : 0];
        const std::span<const double> channel = table.channel(d);
        for (std::size_t tail = view.core_begin; tail < view.core_end; tail += horizon) {
            const std::size_t end = tail + horizon;
            if (end > view.core_end || end < window || end - window < view.slice_begin) {
                ++skipped;
                continue;
            }
            const Decomposition dec = transform(model, channel.subspan(end - window, window));
            const double identity = dec.identity_error();
            worst = std::max(worst, identity);
            if (!(identity < kIdentityTolerance)) {
                throw NumericalError("additive identity violated by " + format_double(identity) + " at channel " +
                                     table.channel_names[d] + ", t = " + std::to_string(tail));
            }
            for (std::size_t t = 0; t < horizon; ++t) {
                const auto ti = static_cast<Eigen::Index>(t);
                os << table.channel_names[d] << ',' << (tail + t) << ',' << format_double(dec.input[ti]) << ','
                   << format_double(dec.mean[ti]) << ',' << format_double(dec.residual[ti]);
                for (Eigen::Index v = 0; v < dec.pieces.rows(); ++v) os << ',' << format_double(dec.pieces(v, ti));
                os << '\n';
                ++rows;
            }
            ++windows;
        }
    }
    for (auto& f : files) {
        f.flush();
        if (!f) throw Error("failed writing decomposition output");
    }
    if (skipped > 0) {
        err << "mlow: " << skipped << " window(s) skipped: not enough history inside the split for 2K = " << window
            << " samples\n";
    }
    out << nlohmann::json{
               {"command", "transform"},
               {"windows", windows},
               {"skipped", skipped},
               {"rows", rows},
               {"max_identity_error", worst},
               {"out", paths},
           }
               .dump()
        << '\n';
    return kSuccess;
}

// --------------------------------------------------------------- eval

struct EvalArgs {
    std::string model;
    std::string data;
    long long horizon = 96;
    std::string modes = "raw,mlow,ma";
    std::string out;
    std::string horizon_csv;
    long long stride = 1;
    bool has_timestamp = false;
};

std::vector<FeatureMode> parse_modes(const std::string& text) {
    std::vector<FeatureMode> modes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            const FeatureMode m = parse_feature_mode(item);
            if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
        } catch (const InvalidInput& e) {
            throw UsageError(e.what());
        }
    }
    if (modes.empty()) throw UsageError("--modes must name at least one of raw, mlow, ma");
    return modes;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.horizon < 1) throw UsageError("L must be ≥ 1");
    if (a.stride < 1) throw UsageError("stride must be ≥ 1");
    ExperimentOptions options;
    options.horizon = static_cast<std::size_t>(a.horizon);
    options.modes = parse_modes(a.modes);
    options.window_stride = static_cast<std::size_t>(a.stride);
    require_file(a.model, "--model");
    require_file(a.data, "--data");
    require_path_writable(a.out);
    const std::string horizon_csv = a.horizon_csv.empty() ? strip_extension_suffix(a.out, "_horizons.csv") : a.horizon_csv;
    require_path_writable(horizon_csv);

    const MlowModel model = load_model(a.model);
    const SeriesTable table = load_csv(a.data, CsvOptions{a.has_timestamp});
    const ExperimentReport report = run_forecast_experiment(table, model, options);

    nlohmann::json modes = nlohmann::json::array();
    for (const ModeResult& r : report.modes) {
        modes.push_back({
            {"mode", std::string(to_string(r.mode))},
            {"alpha", r.alpha},
            {"val_mse_by_alpha", r.val_mse},
            {"val", eval_report_to_json(r.val)},
            {"test", eval_report_to_json(r.test)},
        });
    }
    const nlohmann::json doc{
        {"version", kVersion},
        {"git_describe", kGitDescribe},
        {"config", config_to_json(model.config)},
        {"L", options.horizon},
        {"alpha_grid", options.alphas},
        {"windows", {{"train", report.train_windows}, {"val", report.val_windows}, {"test", report.test_windows}}},
        {"modes", modes},
    };
    {
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw Error("cannot open '" + a.out + "' for writing");
        f << doc.dump(2) << '\n';
    }
    {
        std::ofstream f(horizon_csv, std::ios::binary);
        if (!f) throw Error("cannot open '" + horizon_csv + "' for writing");
        f << "mode,step,mse,mae\n";
        for (const ModeResult& r : report.modes) {
            for (Eigen::Index s = 0; s < r.test.mse_per_step.size(); ++s) {
                f << to_string(r.mode) << ',' << (s + 1) << ',' << format_double(r.test.mse_per_step[s]) << ','
                  << format_double(r.test.mae_per_step[s]) << '\n';
            }
        }
    }

    nlohmann::json summary{{"command", "eval"}, {"out", a.out}, {"horizon_csv", horizon_csv}};
    for (const ModeResult& r : report.modes) {
        summary[std::string(to_string(r.mode))] = {{"mse", r.test.mse}, {"mae", r.test.mae}};
    }
    out << summary.dump() << '\n';
    return kSuccess;
}

// ------------------------------------------------------------- report

struct ReportArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string split = "train";
    bool has_timestamp = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    const SplitName which = parse_split(a.split);
    require_file(a.model, "--model");
    require_file(a.data, "--data");
    const MlowModel model = load_model(a.model);
    const SeriesTable table = load_csv(a.data, CsvOptions{a.has_timestamp});
    const SplitView view = split_view(table, which, model.config.window_length());
    const SeriesTable slice = table.slice(view.slice_begin, view.core_end);
    const SpectraMatrix spectra = collect_training_spectra(slice.values, model.config);
    const ComponentReport report = export_component_report(model, spectra);
    write_component_report(a.out, report);
    out << nlohmann::json{
               {"command", "report"},
               {"components", model.components.rank()},
               {"spectra", spectra.n_samples()},
               {"out", a.out},
               {"files", {"weights.csv", "normalized_weights.csv", "cosine.csv", "spectra_band.csv"}},
           }
               .dump()
        << '\n';
    return kSuccess;
}

// -------------------------------------------------------------- synth

struct SynthArgs {
    std::string spec;
    long long length = 5000;
    long long channels = 3;
    std::optional<std::uint64_t> seed;
    std::string out;
};

SynthSpec resolve_synth_spec(const std::string& text) {
    if (text == "two_tone") return two_tone_benchmark_spec();
    if (text == "two_tone_pure") return two_tone_component_spec();
    std::string body = text;
    if (!text.empty() && text.front() == '@') {
        std::ifstream in(text.substr(1), std::ios::binary);
        if (!in) throw UsageError("cannot read --spec file '" + text.substr(1) + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        body = ss.str();
    }
    try {
        return synth_spec_from_json(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed --spec: ") + e.what());
    } catch (const InvalidInput& e) {
        throw UsageError(std::string("malformed --spec: ") + e.what());
    }
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    if (a.length < 1) throw UsageError("len must be ≥ 1");
    if (a.channels < 1) throw UsageError("channels must be ≥ 1");
    const SynthSpec spec = resolve_synth_spec(a.spec);
    const std::uint64_t seed = a.seed.value_or(default_seed());
    require_path_writable(a.out);
    const SynthResult result =
        generate_synthetic(spec, static_cast<std::size_t>(a.length), static_cast<std::size_t>(a.channels), seed);
    save_csv(a.out, result.table);
    const std::string sidecar = a.out + ".json";
    {
        std::ofstream f(sidecar, std::ios::binary);
        if (!f) throw Error("cannot open '" + sidecar + "' for writing");
        f << result.parameters.dump(2) << '\n';
    }
    out << nlohmann::json{{"command", "synth"}, {"rows", a.length}, {"channels", a.channels}, {"seed", seed},
                          {"out", a.out}, {"sidecar", sidecar}}
               .dump()
        << '\n';
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank magnitude-spectrum decomposition of time series", "mlow"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kVersion) + " (" + kGitDescribe + ")");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Learn low-rank spectral components from a CSV series");
    fit->add_option("--data", fit_args.data, "Input CSV")->required();
    fit->add_option("--out", fit_args.out, "Model JSON to write")->required();
    fit->add_option("--T", fit_args.horizon, "Input horizon T")->capture_default_str();
    fit->add_option("--K", fit_args.levels, "Frequency levels K (spectrum window 2K)")->capture_default_str();
    fit->add_option("--V", fit_args.rank, "Number of low-rank components")->capture_default_str();
    auto* lambda_opt = fit->add_option("--lambda", fit_args.lambda, "Cosine-penalty weight")->capture_default_str();
    fit->add_option("--iters", fit_args.iterations, "Iterations F")->capture_default_str();
    fit->add_option("--method", fit_args.method, "pca | nmf | semi_nmf | hyperplane_nmf")->capture_default_str();
    fit->add_option("--seed", fit_args.seed, "RNG seed (default: $MLOW_SEED or 0)");
    fit->add_option("--stride", fit_args.stride, "Training-window stride")->capture_default_str();
    fit->add_option("--split", fit_args.split, "Rows to fit on: train | all")->capture_default_str();
    fit->add_flag("--has-timestamp", fit_args.has_timestamp, "First CSV column is a timestamp");

    TransformArgs tr_args;
    auto* tr = app.add_subcommand("transform", "Decompose a split into pieces, residual and mean");
    tr->add_option("--model", tr_args.model, "Model JSON")->required();
    tr->add_option("--data", tr_args.data, "Input CSV")->required();
    tr->add_option("--split", tr_args.split, "train | val | test | all")->capture_default_str();
    tr->add_option("--out", tr_args.out, "Decomposition CSV")->required();
    tr->add_flag("--per-channel", tr_args.per_channel, "One CSV per channel instead of one stacked file");
    tr->add_flag("--has-timestamp", tr_args.has_timestamp, "First CSV column is a timestamp");

    EvalArgs ev_args;
    auto* ev = app.add_subcommand("eval", "Compare ridge forecasters on raw, MLOW and moving-average features");
    ev->add_option("--model", ev_args.model, "Model JSON")->required();
    ev->add_option("--data", ev_args.data, "Input CSV")->required();
    ev->add_option("--L", ev_args.horizon, "Forecast horizon L")->capture_default_str();
    ev->add_option("--modes", ev_args.modes, "Comma-separated feature modes")->capture_default_str();
    ev->add_option("--out", ev_args.out, "Report JSON")->required();
    ev->add_option("--horizon-csv", ev_args.horizon_csv, "Per-step CSV (default: <out>_horizons.csv)");
    ev->add_option("--stride", ev_args.stride, "Window stride for all splits")->capture_default_str();
    ev->add_flag("--has-timestamp", ev_args.has_timestamp, "First CSV column is a timestamp");

    ReportArgs rp_args;
    auto* rp = app.add_subcommand("report", "Export component weights, cosine matrix and spectra band");
    rp->add_option("--model", rp_args.model, "Model JSON")->required();
    rp->add_option("--data", rp_args.data, "Input CSV")->required();
    rp->add_option("--out", rp_args.out, "Output directory")->required();
    rp->add_option("--split", rp_args.split, "Rows whose spectra form the band")->capture_default_str();
    rp->add_flag("--has-timestamp", rp_args.has_timestamp, "First CSV column is a timestamp");

    SynthArgs sy_args;
    auto* sy = app.add_subcommand("synth", "Generate a deterministic synthetic multichannel CSV");
    sy->add_option("--spec", sy_args.spec,
                   "JSON {tones:[{period,amplitude,phase?,amplitude_jitter?}], trend:[c0,c1,...], noise}, "
                   "@file.json, or a preset: two_tone | two_tone_pure")
        ->required();
    sy->add_option("--len", sy_args.length, "Series length")->capture_default_str();
    sy->add_option("--channels", sy_args.channels, "Channel count")->capture_default_str();
    sy->add_option("--seed", sy_args.seed, "RNG seed (default: $MLOW_SEED or 0)");
    sy->add_option("--out", sy_args.out, "Output CSV (parameters go to <out>.json)")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_args, lambda_opt->count() > 0, out, err);
        if (tr->parsed()) return cmd_transform(tr_args, out, err);
        if (ev->parsed()) return cmd_eval(ev_args, out);
        if (rp->parsed()) return cmd_report(rp_args, out);
        if (sy->parsed()) return cmd_synth(sy_args, out);
    } catch (const UsageError& e) {
        err << "mlow: error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "mlow: error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace mlow::cli
