#include <atomic>
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cli.hpp"
#include "roiexplain/image_io.hpp"
#include "roiexplain/wire.hpp"
#include "support.hpp"

using namespace roiexplain;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "roiexplain");
    return cli::run(args);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

/// 224x224 scene with a region oracle support, written to disk.
struct Scene {
    fs::path dir;
    fs::path image, support, half_roi, covering_roi;

    explicit Scene(const std::string& name) : dir(testing::scratch_dir(name)) {
        image = dir / "image.png";
        support = dir / "support.png";
        half_roi = dir / "half.png";
        covering_roi = dir / "cover.png";
        io::write_image(image, testing::random_image(224, 224, 1, 30, 220));
        io::write_mask(support, testing::rect_mask(224, 224, 90, 90, 130, 140));
        io::write_mask(half_roi, testing::rect_mask(224, 224, 0, 0, 112, 224));
        io::write_mask(covering_roi, testing::rect_mask(224, 224, 26, 26, 194, 204));
    }

    [[nodiscard]] std::string region() const { return "region:" + support.string() + ":0.8"; }
};

/// Model server that thresholds at 100 and sleeps per request; with
/// `fail_after` >= 0 it answers 500 once that many segment calls succeeded.
class SlowServer {
public:
    explicit SlowServer(int delay_ms, int fail_after = -1) {
        server_.Get("/info", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(wire::info_to_json({"dummy", 1000, true, 1, 0, 0}).dump(), "application/json");
        });
        server_.Post("/segment", [this, delay_ms, fail_after](const httplib::Request& req, httplib::Response& res) {
            if (fail_after >= 0 && calls_++ >= fail_after) {
                res.status = 500;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            const Image img = wire::request_from_json(json::parse(req.body));
            BinaryMask m(img.width, img.height);
            for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = img.data[i] >= 100;
            res.set_content(wire::response_to_json({m, std::nullopt}).dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~SlowServer() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::atomic<int> calls_{0};
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(invoke({}) == cli::kInputError);
    CHECK(invoke({"explain"}) == cli::kInputError);
    CHECK(invoke({"frobnicate"}) == cli::kInputError);
    CHECK(invoke({"--help"}) == cli::kOk);
}

TEST_CASE("preprocess a file and a directory") {
    const auto dir = testing::scratch_dir("cli_pre");
    fs::create_directories(dir / "in");
    for (int i = 0; i < 3; ++i) io::write_image(dir / "in" / ("s" + std::to_string(i) + ".png"), testing::random_image(300, 260, i));
    io::write_text(dir / "in" / "notes.txt", "ignored");

    CHECK(invoke({"preprocess", (dir / "in" / "s0.png").string(), (dir / "one.png").string()}) == cli::kOk);
    const Image one = io::read_image(dir / "one.png");
    CHECK(one.width == 224);
    CHECK(one.height == 224);

    CHECK(invoke({"preprocess", (dir / "in").string(), (dir / "out").string(), "--jobs", "3", "--target-size", "64"}) == cli::kOk);
    int count = 0;
    for (const auto& e : fs::directory_iterator(dir / "out")) {
        CHECK(io::read_image(e.path()).width == 64);
        ++count;
    }
    CHECK(count == 3);

    CHECK(invoke({"preprocess", (dir / "nope.png").string(), (dir / "x.png").string()}) == cli::kInputError);
    CHECK(invoke({"preprocess", (dir / "in" / "s0.png").string(), (dir / "x.png").string(), "--pct-low", "99"}) ==
          cli::kInputError);
}

TEST_CASE("roi command") {
    const auto dir = testing::scratch_dir("cli_roi");
    Image ramp(100, 10, 1);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 100; ++x) ramp.at(x, y) = static_cast<std::uint8_t>(std::lround(x * 255.0 / 99.0));
    io::write_image(dir / "ramp.png", ramp);

    CHECK(invoke({"roi", (dir / "ramp.png").string(), (dir / "half.png").string(), "--sigma", "0"}) == cli::kOk);
    const BinaryMask half = io::read_mask(dir / "half.png");
    CHECK(half.count() == 500);
    CHECK(half.at(49, 0) == 0);
    CHECK(half.at(50, 0) == 1);

    CHECK(invoke({"roi", (dir / "ramp.png").string(), (dir / "top.pgm").string(), "--sigma", "0", "--threshold", "0.9",
               "--top-fraction", "0.2"}) == cli::kOk);
    CHECK(io::read_mask(dir / "top.pgm").count() == 200);

    CHECK(invoke({"roi", (dir / "ramp.png").string(), (dir / "big.png").string(), "--sigma", "0", "--width", "200",
               "--height", "20"}) == cli::kOk);
    CHECK(io::read_mask(dir / "big.png").count() == 2000);

    io::write_image(dir / "flat.png", Image(10, 10, 1, std::uint8_t{50}));
    CHECK(invoke({"roi", (dir / "flat.png").string(), (dir / "f.png").string()}) == cli::kDegenerate);
}

TEST_CASE("explain occlusion reports rho") {
    const Scene s("cli_occ");
    CHECK(invoke({"explain", s.image.string(), "--predictor", s.region(), "--out", (s.dir / "full").string()}) == cli::kOk);
    const json full = load_json(s.dir / "full" / "occlusion_report.json");
    CHECK(full["rho"] == 1.0);
    CHECK(full["n_patch"] == 36);
    CHECK(full["gated"] == false);
    CHECK(fs::exists(s.dir / "full" / "occlusion.png"));

    CHECK(invoke({"explain", s.image.string(), "--predictor", s.region(), "--roi", s.half_roi.string(), "--out",
               (s.dir / "half").string(), "--builtin-flops", "1000", "--roi-flops", "5"}) == cli::kOk);
    const json half = load_json(s.dir / "half" / "occlusion_report.json");
    CHECK(half["n_patch"] == 24);
    CHECK(half["rho"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(half["flops"]["total"] == 5 + 25 * 1000);
}

TEST_CASE("explain rise writes two heatmaps") {
    const Scene s("cli_rise");
    CHECK(invoke({"explain", s.image.string(), "--method", "rise", "--predictor", s.region(), "--n-masks", "40",
               "--seed", "3", "--out", s.dir.string()}) == cli::kOk);
    CHECK(fs::exists(s.dir / "rise_fidelity.png"));
    CHECK(fs::exists(s.dir / "rise_relevance.png"));
    CHECK(load_json(s.dir / "rise_report.json")["seed"] == 3);
    CHECK(invoke({"explain", s.image.string(), "--method", "rise", "--predictor", s.region(), "--grid", "7by7"}) ==
          cli::kInputError);
}

TEST_CASE("explain lime with a linear predictor file") {
    const auto dir = testing::scratch_dir("cli_lime");
    io::write_image(dir / "img.png", testing::random_image(48, 48, 4, 30, 220));
    LabelMap regions(48, 48, 1, 0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) regions.at(x, y) = 1 + (y / 24) * 2 + x / 24;
    io::write_labels_pgm(dir / "regions.pgm", regions);
    io::write_text(dir / "weights.txt", "# toy\nlabels regions.pgm\nbias 0.1\nflops 10\n1 0.5\n2 0.25\n4 -0.1\n");
    CHECK(invoke({"explain", (dir / "img.png").string(), "--method", "lime", "--predictor",
               "linear:" + (dir / "weights.txt").string(), "--n-samples", "40", "--scales", "50,100",
               "--debug-scales", "--out", (dir / "out").string()}) == cli::kOk);
    CHECK(fs::exists(dir / "out" / "lime.png"));
    CHECK(fs::exists(dir / "out" / "lime_scale_50.png"));
    CHECK(fs::exists(dir / "out" / "lime_scale_100.png"));
    CHECK(load_json(dir / "out" / "lime_report.json")["n_patch"] == 80);

    io::write_text(dir / "bad.txt", "bias 0.1\n");
    CHECK(invoke({"explain", (dir / "img.png").string(), "--predictor", "linear:" + (dir / "bad.txt").string()}) ==
          cli::kInputError);
}

TEST_CASE("explain error exits") {
    const Scene s("cli_err");
    CHECK(invoke({"explain", s.image.string(), "--predictor", "http://127.0.0.1:1", "--timeout-ms", "300"}) ==
          cli::kPredictorError);
    CHECK(invoke({"explain", s.image.string(), "--predictor", "magic:thing"}) == cli::kInputError);
    CHECK(invoke({"explain", s.image.string(), "--predictor", s.region(), "--method", "gradcam"}) == cli::kInputError);
    CHECK(invoke({"explain", (s.dir / "missing.png").string(), "--predictor", s.region()}) == cli::kInputError);
}

TEST_CASE("a resized ROI is accepted") {
    const Scene s("cli_resize");
    io::write_mask(s.dir / "small.png", testing::rect_mask(112, 112, 0, 0, 56, 112));
    CHECK(invoke({"explain", s.image.string(), "--predictor", s.region(), "--roi", (s.dir / "small.png").string(),
               "--out", s.dir.string()}) == cli::kOk);
    CHECK(load_json(s.dir / "occlusion_report.json")["n_patch"] == 24);
}

TEST_CASE("config file and environment overrides") {
    const Scene s("cli_cfg");
    io::write_text(s.dir / "run.ini", "[explain]\nmethod=rise\nn-masks=10\nseed=42\n");
    CHECK(invoke({"--config", (s.dir / "run.ini").string(), "explain", s.image.string(), "--predictor", s.region(),
               "--seed", "7", "--out", (s.dir / "a").string()}) == cli::kOk);
    const json a = load_json(s.dir / "a" / "rise_report.json");
    CHECK(a["n_patch"] == 10);
    CHECK(a["seed"] == 7);  // the flag wins over the file

    ::setenv("XAICLIP_SEED", "11", 1);
    CHECK(invoke({"explain", s.image.string(), "--method", "rise", "--n-masks", "5", "--predictor", s.region(), "--out",
               (s.dir / "b").string()}) == cli::kOk);
    ::unsetenv("XAICLIP_SEED");
    CHECK(load_json(s.dir / "b" / "rise_report.json")["seed"] == 11);
}

TEST_CASE("identical runs produce identical bytes") {
    const Scene s("cli_det");
    for (const char* method : {"occlusion", "rise", "lime"}) {
        std::vector<std::string> files;
        for (const char* jobs : {"1", "1", "8"}) {
            const fs::path out = s.dir / (std::string(method) + "_" + std::to_string(files.size()));
            CHECK(invoke({"explain", s.image.string(), "--method", method, "--predictor", s.region(), "--roi",
                       s.half_roi.string(), "--seed", "5", "--jobs", jobs, "--zero-timing", "--n-masks", "64",
                       "--n-samples", "40", "--out", out.string()}) == cli::kOk);
            std::string all;
            for (const auto& e : fs::directory_iterator(out)) all += e.path().filename().string() + slurp(e.path());
            files.push_back(all);
        }
        CHECK(files[0] == files[1]);
        CHECK(files[0] == files[2]);
    }
}

TEST_CASE("compare with a covering ROI keeps fidelity") {
    const Scene s("cli_cmp");
    CHECK(invoke({"compare", s.image.string(), "--predictor", s.region(), "--roi", s.covering_roi.string(), "--out",
               s.dir.string(), "--builtin-flops", "100"}) == cli::kOk);
    const json c = load_json(s.dir / "compare.json");
    CHECK(c.contains("traditional"));
    CHECK(c.contains("gated"));
    CHECK(c["gated"]["gated"] == true);
    CHECK(c["traditional"]["gated"] == false);
    CHECK(c["delta"]["delta_dice_pct"] == 0.0);
    CHECK(c["delta"]["delta_iou_pct"] == 0.0);
    CHECK(c["delta"]["delta_gflops_pct"] == 0.0);  // this ROI touches every patch
    CHECK(fs::exists(s.dir / "traditional" / "occlusion.png"));
    CHECK(fs::exists(s.dir / "gated" / "occlusion_report.json"));

    CHECK(invoke({"compare", s.image.string(), "--predictor", s.region(), "--out", s.dir.string()}) == cli::kInputError);
}

TEST_CASE("compare with a slow predictor is faster when gated") {
    const Scene s("cli_slow");
    SlowServer server(5);
    CHECK(invoke({"compare", s.image.string(), "--predictor", server.endpoint(), "--roi", s.half_roi.string(), "--out",
               s.dir.string()}) == cli::kOk);
    const json c = load_json(s.dir / "compare.json");
    CHECK(c["traditional"]["flops"]["calls"] == 37);
    CHECK(c["gated"]["flops"]["calls"] == 25);
    CHECK(c["delta"]["delta_time_pct"].get<double>() < 0.0);
}

TEST_CASE("predictor failure mid-run writes the partial report") {
    const Scene s("cli_partial");
    SlowServer server(0, 10);
    CHECK(invoke({"explain", s.image.string(), "--predictor", server.endpoint(), "--out", s.dir.string(), "--seed",
               "9"}) == cli::kPredictorError);
    const json r = load_json(s.dir / "occlusion_report.json");
    CHECK(r["n_patch"].get<int>() < 36);
    CHECK(r["n_patch_full"] == 36);
    CHECK(r["seed"] == 9);
    CHECK(r["warnings"].size() == 1);
    CHECK_FALSE(fs::exists(s.dir / "occlusion.png"));
}
