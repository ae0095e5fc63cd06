#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "roiexplain/http_predictor.hpp"
#include "roiexplain/image_io.hpp"
#include "roiexplain/lime.hpp"
#include "roiexplain/occlusion.hpp"
#include "roiexplain/parallel.hpp"
#include "roiexplain/preprocess.hpp"
#include "roiexplain/report.hpp"
#include "roiexplain/rise.hpp"
#include "roiexplain/roi_gate.hpp"

namespace roiexplain::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Option bundles

struct PreprocessArgs {
    std::string input;
    std::string output;
    preprocess::PreprocessConfig cfg;
    unsigned jobs = 0;
};

struct RoiArgs {
    std::string importance;
    std::string output;
    roi::RoiConfig cfg;
    double top_fraction = 0.0;
    int width = 0;
    int height = 0;
};

struct ExplainArgs {
    std::string image;
    std::string method = "occlusion";
    std::string roi;
    std::string predictor;
    std::string out = ".";
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    std::uint64_t roi_flops = 0;
    std::uint64_t builtin_flops = 0;
    int timeout_ms = 30000;
    int background_threshold = 20;
    bool zero_timing = false;
    bool debug_scales = false;
    // occlusion
    int patch = 64;
    int stride = 32;
    std::string fill = "mean";
    // rise
    std::size_t n_masks = 2000;
    double p1 = 0.5;
    std::string grid = "7x7";
    bool no_shift = false;
    // lime
    std::size_t n_samples = 300;
    std::vector<double> scales{50.0, 100.0, 200.0};
    double kernel_width = 0.25;
    double ridge_lambda = 0.01;
};

std::pair<int, int> parse_grid(const std::string& text) {
    int a = 0, b = 0;
    char x = 0;
    std::istringstream is(text);
    if (!(is >> a >> x >> b) || (x != 'x' && x != 'X') || a < 1 || b < 1 || !is.eof()) {
        fail(ErrorKind::InvalidInput, "grid must look like ROWSxCOLS, got '" + text + "'");
    }
    return {a, b};
}

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm";
}

Image load_gray(const fs::path& path) {
    Image img = io::read_image(path);
    return img.channels == 3 ? preprocess::to_grayscale(img) : img;
}

// ---------------------------------------------------------------------------
// Predictor construction: region:<mask>:<sensitivity>, linear:<weights>, http(s)://...

std::unique_ptr<LinearOracle> load_linear(const fs::path& weights_path, std::uint64_t flops) {
    std::ifstream in(weights_path);
    if (!in) fail(ErrorKind::InvalidInput, weights_path.string() + ": cannot open weights file");
    std::optional<LabelMap> labels;
    std::map<int, double> weights;
    double bias = 0.0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        auto bad = [&] {
            fail(ErrorKind::InvalidInput,
                 weights_path.string() + ":" + std::to_string(lineno) + ": malformed line");
        };
        if (key == "labels") {
            std::string rel;
            if (!(is >> rel)) bad();
            fs::path p = rel;
            if (p.is_relative()) p = weights_path.parent_path() / p;
            labels = io::read_labels_pgm(p);
        } else if (key == "bias") {
            if (!(is >> bias)) bad();
        } else if (key == "flops") {
            if (!(is >> flops)) bad();
        } else {
            double w = 0.0;
            int label = 0;
            try {
                label = std::stoi(key);
            } catch (const std::exception&) {
                bad();
            }
            if (!(is >> w)) bad();
            weights[label] = w;
        }
    }
    if (!labels) fail(ErrorKind::InvalidInput, weights_path.string() + ": missing 'labels <file>' line");
    return std::make_unique<LinearOracle>(std::move(*labels), std::move(weights), bias, flops);
}

std::unique_ptr<Predictor> make_predictor(const ExplainArgs& a, const Image& image) {
    const std::string& spec = a.predictor;
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
        return std::make_unique<HttpPredictor>(spec, std::chrono::milliseconds(a.timeout_ms));
    }
    if (spec.rfind("region:", 0) == 0) {
        const std::string rest = spec.substr(7);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos) {
            fail(ErrorKind::InvalidInput, "predictor spec must be region:<maskfile>:<sensitivity>");
        }
        double sensitivity = 0.0;
        try {
            sensitivity = std::stod(rest.substr(colon + 1));
        } catch (const std::exception&) {
            fail(ErrorKind::InvalidInput, "invalid sensitivity in predictor spec '" + spec + "'");
        }
        BinaryMask support = io::read_mask(rest.substr(0, colon));
        if (!support.same_shape(image)) support = roi::resize_mask_nn(support, image.width, image.height);
        return std::make_unique<RegionOracle>(image, std::move(support), sensitivity, a.builtin_flops);
    }
    if (spec.rfind("linear:", 0) == 0) return load_linear(spec.substr(7), a.builtin_flops);
    fail(ErrorKind::InvalidInput, "unknown predictor spec '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Running one explanation and writing its outputs

struct Outputs {
    ExplainReport report;
    std::vector<std::pair<std::string, FloatMap>> heatmaps;  // file stem -> normalized map
};

Outputs run_method(const ExplainArgs& a, const Image& image, Predictor& predictor,
                   const std::optional<BinaryMask>& roi) {
    RunOptions opts;
    opts.jobs = a.jobs;
    opts.roi_flops = roi ? a.roi_flops : 0;
    opts.background_threshold = a.background_threshold;

    Outputs out;
    switch (method_from_string(a.method)) {
        case Method::Occlusion: {
            occlusion::OcclusionConfig cfg{a.patch, a.stride, Fill::parse(a.fill)};
            auto r = occlusion::run(image, predictor, roi, cfg, opts);
            r.report.seed = a.seed;
            out.report = std::move(r.report);
            out.heatmaps.emplace_back("occlusion", std::move(r.saliency.normalized));
            break;
        }
        case Method::Rise: {
            const auto [rows, cols] = parse_grid(a.grid);
            rise::RiseConfig cfg{a.n_masks, a.p1, rows, cols, !a.no_shift, a.seed};
            auto r = rise::run(image, predictor, roi, cfg, opts);
            out.report = std::move(r.report);
            out.heatmaps.emplace_back("rise_fidelity", std::move(r.fidelity.normalized));
            out.heatmaps.emplace_back("rise_relevance", std::move(r.relevance.normalized));
            break;
        }
        case Method::Lime: {
            lime::LimeConfig cfg;
            cfg.n_samples = a.n_samples;
            cfg.scales = a.scales;
            cfg.kernel_width = a.kernel_width;
            cfg.ridge_lambda = a.ridge_lambda;
            cfg.fill = Fill::parse(a.fill);
            cfg.seed = a.seed;
            auto r = lime::run(image, predictor, roi, cfg, opts);
            out.report = std::move(r.report);
            out.heatmaps.emplace_back("lime", std::move(r.saliency.normalized));
            if (a.debug_scales) {
                for (auto& s : r.scales) {
                    std::ostringstream name;
                    name << "lime_scale_" << s.scale;
                    out.heatmaps.emplace_back(name.str(), std::move(s.map));
                }
            }
            break;
        }
    }
    if (a.zero_timing) out.report.wall_clock_ms = 0.0;
    return out;
}

// A predictor failure mid-run still leaves the partial report in `dir`.
Outputs explain_once(const ExplainArgs& a, const Image& image, Predictor& predictor,
                     const std::optional<BinaryMask>& roi, const fs::path& dir) {
    try {
        return run_method(a, image, predictor, roi);
    } catch (const RunFailed& e) {
        ExplainReport partial = e.partial();
        partial.seed = a.seed;
        if (a.zero_timing) partial.wall_clock_ms = 0.0;
        fs::create_directories(dir);
        io::write_text(dir / (a.method + "_report.json"), report::write_report(partial));
        throw;
    }
}

void write_outputs(const Outputs& o, const fs::path& dir, const std::string& method) {
    fs::create_directories(dir);
    for (const auto& [stem, map] : o.heatmaps) io::write_bytes(dir / (stem + ".png"), report::write_heatmap(map));
    io::write_text(dir / (method + "_report.json"), report::write_report(o.report));
}

std::optional<BinaryMask> load_roi(const std::string& path, const Image& image) {
    if (path.empty()) return std::nullopt;
    BinaryMask m = io::read_mask(path);
    if (!m.same_shape(image)) m = roi::resize_mask_nn(m, image.width, image.height);
    return m;
}

json delta_pct(double gated, double traditional) {
    if (traditional == 0.0) return nullptr;
    return (gated - traditional) / traditional * 100.0;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_preprocess(const PreprocessArgs& a) {
    a.cfg.validate();
    const fs::path in = a.input;
    if (!fs::exists(in)) fail(ErrorKind::InvalidInput, a.input + ": no such file or directory");

    if (!fs::is_directory(in)) {
        const fs::path out = a.output;
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        io::write_image(out, preprocess::enhance(io::read_image(in), a.cfg));
        return kOk;
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    fs::create_directories(a.output);
    parallel_for(files.size(), effective_workers(a.jobs, 0), [&](std::size_t i) {
        io::write_image(fs::path(a.output) / files[i].filename(),
                        preprocess::enhance(io::read_image(files[i]), a.cfg));
    });
    std::cout << "processed " << files.size() << " image(s)\n";
    return kOk;
}

int cmd_roi(RoiArgs a) {
    if (a.top_fraction > 0.0) a.cfg.top_fraction = a.top_fraction;
    BinaryMask mask = roi::binarize_importance(io::read_importance(a.importance), a.cfg);
    if (a.width > 0 || a.height > 0) {
        mask = roi::resize_mask_nn(mask, a.width > 0 ? a.width : mask.width, a.height > 0 ? a.height : mask.height);
    }
    const fs::path out = a.output;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_mask(out, mask);
    return kOk;
}

int cmd_explain(const ExplainArgs& a) {
    const Image image = load_gray(a.image);
    const auto roi = load_roi(a.roi, image);
    auto predictor = make_predictor(a, image);
    const Outputs o = explain_once(a, image, *predictor, roi, a.out);
    write_outputs(o, a.out, a.method);
    std::cout << report::write_report(o.report);
    return kOk;
}

int cmd_compare(const ExplainArgs& a) {
    if (a.roi.empty()) fail(ErrorKind::InvalidInput, "compare: --roi is required");
    const Image image = load_gray(a.image);
    const auto roi = load_roi(a.roi, image);
    auto predictor = make_predictor(a, image);

    const fs::path out = a.out;
    const Outputs traditional = explain_once(a, image, *predictor, std::nullopt, out / "traditional");
    const Outputs gated = explain_once(a, image, *predictor, roi, out / "gated");
    write_outputs(traditional, out / "traditional", a.method);
    write_outputs(gated, out / "gated", a.method);

    const auto& t = traditional.report;
    const auto& g = gated.report;
    json summary{{"traditional", report::report_to_json(t)},
                 {"gated", report::report_to_json(g)},
                 {"delta",
                  {{"delta_dice_pct", delta_pct(g.dice_vs_baseline, t.dice_vs_baseline)},
                   {"delta_iou_pct", delta_pct(g.iou_vs_baseline, t.iou_vs_baseline)},
                   {"delta_gflops_pct", delta_pct(static_cast<double>(g.flops.total),
                                                  static_cast<double>(t.flops.total))},
                   {"delta_time_pct", delta_pct(g.wall_clock_ms, t.wall_clock_ms)}}}};
    const std::string text = report::write_canonical(summary);
    io::write_text(out / "compare.json", text);
    std::cout << text;
    return kOk;
}

void add_explain_options(CLI::App& cmd, ExplainArgs& a) {
    cmd.add_option("image", a.image, "Grayscale input image (PNG or PGM)")->required()->check(CLI::ExistingFile);
    cmd.add_option("--method", a.method, "occlusion | rise | lime")
        ->check(CLI::IsMember({"occlusion", "rise", "lime"}))
        ->envname("XAICLIP_METHOD");
    cmd.add_option("--roi", a.roi, "Binary ROI mask (PNG or PGM)")->envname("XAICLIP_ROI");
    cmd.add_option("--predictor", a.predictor,
                   "region:<maskfile>:<sensitivity> | linear:<weightsfile> | http://host:port")
        ->required()
        ->envname("XAICLIP_PREDICTOR");
    cmd.add_option("--seed", a.seed, "Seed for every random draw")->envname("XAICLIP_SEED");
    cmd.add_option("--out", a.out, "Output directory")->envname("XAICLIP_OUT");
    cmd.add_option("--jobs", a.jobs, "Worker threads (0 = logical CPUs)")->envname("XAICLIP_JOBS");
    cmd.add_option("--roi-flops", a.roi_flops, "FLOPs charged for ROI extraction");
    cmd.add_option("--builtin-flops", a.builtin_flops, "Declared FLOPs per call for builtin predictors");
    cmd.add_option("--timeout-ms", a.timeout_ms, "Per-call timeout for remote predictors")
        ->envname("XAICLIP_TIMEOUT_MS");
    cmd.add_option("--t-bg", a.background_threshold, "Background threshold used for mean fill")
        ->check(CLI::Range(0, 255));
    cmd.add_flag("--zero-timing", a.zero_timing, "Write wall_clock_ms as 0 for byte-reproducible reports");
    cmd.add_option("--patch", a.patch, "Occlusion patch size")->check(CLI::PositiveNumber);
    cmd.add_option("--stride", a.stride, "Occlusion stride")->check(CLI::PositiveNumber);
    cmd.add_option("--fill", a.fill, "Fill value: zero | mean | 0..255");
    cmd.add_option("--n-masks", a.n_masks, "RISE mask count")->check(CLI::PositiveNumber);
    cmd.add_option("--p1", a.p1, "RISE keep probability");
    cmd.add_option("--grid", a.grid, "RISE base grid ROWSxCOLS");
    cmd.add_flag("--no-shift", a.no_shift, "Disable RISE random shifts");
    cmd.add_option("--n-samples", a.n_samples, "LIME samples per scale")->check(CLI::PositiveNumber);
    cmd.add_option("--scales", a.scales, "LIME Felzenszwalb scales")->delimiter(',');
    cmd.add_option("--kernel-width", a.kernel_width, "LIME kernel width");
    cmd.add_option("--ridge-lambda", a.ridge_lambda, "LIME ridge regularization");
    cmd.add_flag("--debug-scales", a.debug_scales, "Also write per-scale LIME heatmaps");
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return kInputError;
        case ErrorKind::Degenerate: return kDegenerate;
        case ErrorKind::Predictor: return kPredictorError;
        case ErrorKind::Internal: return kInternalError;
    }
    return kInternalError;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"ROI-gated perturbation explanations for segmentation models"};
    app.set_config("--config", "", "Flat key=value configuration file; flags take precedence");
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "Adaptive contrast enhancement to a standard size");
    pre_cmd->add_option("input", pre.input, "Input image or directory")->required();
    pre_cmd->add_option("output", pre.output, "Output image or directory")->required();
    pre_cmd->add_option("--t-bg", pre.cfg.background_threshold, "Background threshold (0..255)")
        ->envname("XAICLIP_T_BG");
    pre_cmd->add_option("--pct-low", pre.cfg.pct_low, "Lower stretch percentile");
    pre_cmd->add_option("--pct-high", pre.cfg.pct_high, "Upper stretch percentile");
    pre_cmd->add_option("--clahe-clip", pre.cfg.clahe_clip, "CLAHE clip multiplier");
    pre_cmd->add_option("--tile-rows", pre.cfg.tile_grid.rows, "CLAHE tile rows");
    pre_cmd->add_option("--tile-cols", pre.cfg.tile_grid.cols, "CLAHE tile columns");
    pre_cmd->add_option("--target-size", pre.cfg.target_size, "Output width and height");
    pre_cmd->add_option("--jobs", pre.jobs, "Worker threads (0 = logical CPUs)")->envname("XAICLIP_JOBS");

    RoiArgs roi_args;
    auto* roi_cmd = app.add_subcommand("roi", "Binarize an importance map into an ROI mask");
    roi_cmd->add_option("importance", roi_args.importance, "Importance map (PNG/PGM or RF32 raw)")->required();
    roi_cmd->add_option("output", roi_args.output, "Output mask (PNG or PGM)")->required();
    roi_cmd->add_option("--sigma", roi_args.cfg.gauss_sigma, "Gaussian smoothing sigma");
    roi_cmd->add_option("--threshold", roi_args.cfg.threshold, "Binarization threshold in (0,1)");
    roi_cmd->add_option("--top-fraction", roi_args.top_fraction, "Keep this fraction of pixels; overrides --threshold");
    roi_cmd->add_option("--width", roi_args.width, "Resize mask (nearest neighbour) to this width");
    roi_cmd->add_option("--height", roi_args.height, "Resize mask (nearest neighbour) to this height");

    ExplainArgs explain_args;
    auto* explain_cmd = app.add_subcommand("explain", "Run one perturbation explanation");
    add_explain_options(*explain_cmd, explain_args);

    ExplainArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "Traditional vs ROI-gated explanation, same seed");
    add_explain_options(*compare_cmd, compare_args);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& s : args) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*pre_cmd) return cmd_preprocess(pre);
        if (*roi_cmd) return cmd_roi(roi_args);
        if (*explain_cmd) return cmd_explain(explain_args);
        if (*compare_cmd) return cmd_compare(compare_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}

}  // namespace roiexplain::cli
