#include "roiexplain/lime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "roiexplain/metrics.hpp"
#include "roiexplain/parallel.hpp"
#include "roiexplain/random.hpp"
#include "roiexplain/superpixel.hpp"

namespace roiexplain::lime {

void LimeConfig::validate() const {
    if (n_samples < 1) fail(ErrorKind::InvalidInput, "lime: n_samples must be >= 1");
    if (scales.empty()) fail(ErrorKind::InvalidInput, "lime: at least one scale is required");
    for (double s : scales) {
        if (!(s > 0.0)) fail(ErrorKind::InvalidInput, "lime: scales must be > 0");
    }
    if (!(kernel_width > 0.0)) fail(ErrorKind::InvalidInput, "lime: kernel width must be > 0");
    if (!(ridge_lambda >= 0.0)) fail(ErrorKind::InvalidInput, "lime: ridge lambda must be >= 0");
    if (min_size < 1) fail(ErrorKind::InvalidInput, "lime: min_size must be >= 1");
}

AblationMatrix sample_ablations(std::size_t k, std::size_t n, std::uint64_t seed) {
    if (k < 1) fail(ErrorKind::InvalidInput, "sample_ablations: need at least one superpixel");
    AblationMatrix z{n, k, std::vector<std::uint8_t>(n * k, 1)};
    for (std::size_t r = 1; r < n; ++r) {
        RandomStream rng(seed, r);
        for (std::size_t c = 0; c < k; ++c) z.data[r * k + c] = rng.bernoulli(0.5) ? 1 : 0;
    }
    return z;
}

Image render_ablation(const Image& image, const LabelMap& labels, std::span<const std::uint8_t> z,
                      std::uint8_t fill) {
    require_same_shape(image, labels, "render_ablation");
    const int k = labels.max_label();
    if (z.size() != static_cast<std::size_t>(k)) {
        fail(ErrorKind::InvalidInput, "render_ablation: " + std::to_string(z.size()) +
                                          " flags for " + std::to_string(k) + " superpixels");
    }
    Image out = image;
    const auto ch = static_cast<std::size_t>(image.channels);
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const int label = labels.data[i];
        if (label > 0 && z[static_cast<std::size_t>(label - 1)] == 0) {
            for (std::size_t c = 0; c < ch; ++c) out.data[i * ch + c] = fill;
        }
    }
    return out;
}

std::vector<double> fit_weighted_ridge(const AblationMatrix& z, std::span<const double> scores,
                                       std::span<const double> weights, double lambda) {
    const std::size_t n = z.rows, k = z.cols;
    if (n < 1 || k < 1) fail(ErrorKind::InvalidInput, "fit_surrogate: empty design matrix");
    if (scores.size() != n || weights.size() != n) {
        fail(ErrorKind::InvalidInput, "fit_surrogate: scores/weights do not match the sample count");
    }
    if (lambda < 0.0) fail(ErrorKind::InvalidInput, "fit_surrogate: lambda must be >= 0");

    double wsum = 0.0, smean = 0.0;
    Eigen::VectorXd zmean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < n; ++r) {
        wsum += weights[r];
        smean += weights[r] * scores[r];
        for (std::size_t c = 0; c < k; ++c) zmean[static_cast<Eigen::Index>(c)] += weights[r] * z.at(r, c);
    }
    if (!(wsum > 0.0)) fail(ErrorKind::Degenerate, "singular-fit: sample weights sum to zero");
    smean /= wsum;
    zmean /= wsum;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd row(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            row[static_cast<Eigen::Index>(c)] = z.at(r, c) - zmean[static_cast<Eigen::Index>(c)];
        }
        a.noalias() += weights[r] * row * row.transpose();
        b.noalias() += weights[r] * (scores[r] - smean) * row;
    }
    a.diagonal().array() += lambda;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < static_cast<Eigen::Index>(k)) {
        fail(ErrorKind::Degenerate, "singular-fit: normal equations have rank " +
                                        std::to_string(qr.rank()) + " < " + std::to_string(k));
    }
    const Eigen::VectorXd beta = qr.solve(b);
    return {beta.data(), beta.data() + beta.size()};
}

std::vector<double> kernel_weights(const AblationMatrix& z, double kernel_width) {
    std::vector<double> w(z.rows);
    for (std::size_t r = 0; r < z.rows; ++r) {
        std::size_t off = 0;
        for (std::size_t c = 0; c < z.cols; ++c) off += z.at(r, c) == 0;
        const double d = static_cast<double>(off) / static_cast<double>(z.cols);
        w[r] = std::exp(-(d * d) / (kernel_width * kernel_width));
    }
    return w;
}

std::vector<double> fit_surrogate(const AblationMatrix& z, std::span<const double> scores,
                                  double kernel_width, double lambda) {
    if (!(kernel_width > 0.0)) fail(ErrorKind::InvalidInput, "fit_surrogate: kernel width must be > 0");
    return fit_weighted_ridge(z, scores, kernel_weights(z, kernel_width), lambda);
}

namespace {

std::string format_scale(double s) {
    std::ostringstream os;
    os << s;
    return os.str();
}

}  // namespace

LimeResult run(const Image& image, Predictor& predictor, const std::optional<BinaryMask>& roi,
               const LimeConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    check_engine_inputs(image, predictor, roi);
    const auto& info = predictor.info();
    const std::uint8_t fill = resolve_fill(cfg.fill, image, opts.background_threshold);
    const unsigned workers = effective_workers(opts.jobs, info.max_concurrency);
    const std::size_t pixels = image.pixel_count();

    LimeResult result;
    ExplainReport& report = result.report;
    report.method = Method::Lime;
    report.gated = roi.has_value();
    report.seed = cfg.seed;

    const auto start = Clock::now();
    const Prediction baseline = predictor.segment(image);
    std::uint64_t evaluated = 0;
    std::uint64_t planned = 0;

    auto finish_report = [&] {
        report.n_patch = evaluated;
        report.n_patch_full = planned;
        report.rho = planned == 0 ? 0.0 : static_cast<double>(evaluated) / static_cast<double>(planned);
        report.flops = metrics::ledger(opts.roi_flops, evaluated + 1, info.flops_per_call);
        report.wall_clock_ms = elapsed_ms(start);
    };

    FloatMap fused(image.width, image.height, 1, 0.0);
    std::vector<std::uint32_t> coverage(pixels, 0);

    for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
        const double scale = cfg.scales[si];
        LabelMap labels = superpixel::felzenszwalb(image, {scale, cfg.felz_sigma, cfg.min_size});
        if (roi) labels = superpixel::restrict_to_roi(labels, *roi);
        const int k = labels.max_label();
        if (k == 0) {
            report.warnings.push_back("scale " + format_scale(scale) + ": no superpixels inside the ROI, skipped");
            continue;
        }

        const AblationMatrix z = sample_ablations(static_cast<std::size_t>(k), cfg.n_samples,
                                                  cfg.seed ^ splitmix64(si + 1));
        std::vector<double> scores(z.rows, 0.0);
        std::atomic<std::uint64_t> done{0};
        planned += z.rows;
        try {
            parallel_for(z.rows, workers, [&](std::size_t r) {
                const Prediction p = predictor.segment(render_ablation(image, labels, z.row(r), fill));
                scores[r] = metrics::dice(p.mask, baseline.mask);
                ++done;
            });
        } catch (const Error& e) {
            evaluated += done.load();
            finish_report();
            report.warnings.push_back(std::string("invalid: ") + e.what());
            throw RunFailed(e.what(), report);
        }
        evaluated += z.rows;

        ScaleResult sr;
        sr.scale = scale;
        sr.regions = k;
        sr.coefficients = fit_surrogate(z, scores, cfg.kernel_width, cfg.ridge_lambda);
        const auto [lo, hi] = std::minmax_element(sr.coefficients.begin(), sr.coefficients.end());
        const double range = *hi - *lo;
        sr.map = FloatMap(image.width, image.height, 1, 0.0);
        for (std::size_t i = 0; i < pixels; ++i) {
            const int label = labels.data[i];
            if (label == 0) continue;
            const double beta = sr.coefficients[static_cast<std::size_t>(label - 1)];
            sr.map.data[i] = range > 0.0 ? (beta - *lo) / range : 0.0;
            ++coverage[i];
        }
        result.scales.push_back(std::move(sr));
    }

    if (result.scales.empty()) {
        report.warnings.push_back("no scale produced superpixels; saliency is empty");
    } else {
        for (const auto& sr : result.scales) {
            for (std::size_t i = 0; i < pixels; ++i) fused.data[i] += sr.map.data[i];
        }
        const auto n_scales = static_cast<double>(result.scales.size());
        for (auto& v : fused.data) v /= n_scales;
    }
    finish_report();

    if (roi) {
        const Fidelity f = region_fidelity(image, predictor, baseline.mask, *roi, fill);
        report.dice_vs_baseline = f.dice;
        report.iou_vs_baseline = f.iou;
    }

    result.saliency.normalized = min_max_normalize(fused);
    result.saliency.raw = std::move(fused);
    result.saliency.coverage = std::move(coverage);
    return result;
}

}  // namespace roiexplain::lime
