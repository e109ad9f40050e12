#include <Eigen/Core>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ifc/dataset.hpp"
#include "ifc/enhance.hpp"
#include "ifc/entropy.hpp"
#include "ifc/image.hpp"
#include "ifc/synthetic.hpp"
#include "ifc/util.hpp"
#include "ifc/zoo.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::span<const uint8_t> text_span(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

// Provenance record written next to every artifact-producing run.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> argv;
    uint64_t seed = 0;
    bool has_seed = false;
    std::map<std::string, std::string> inputs;
    std::string started = iso_now();

    RunManifest(std::string sub, std::vector<std::string> av, uint64_t sd = 0, bool has = false)
        : subcommand(std::move(sub)), argv(std::move(av)), seed(sd), has_seed(has) {}

    void add_input(const std::string& path) { inputs[path] = ifc::sha256_file_hex(path); }

    void write(const std::string& path) const {
        json j;
        j["subcommand"] = subcommand;
        j["argv"] = argv;
        j["version"] = IFC_VERSION;
        if (has_seed) j["seed"] = seed;
        j["inputs"] = inputs;
        j["started"] = started;
        j["finished"] = iso_now();
        std::string text = j.dump(2) + "\n";
        ifc::write_file_atomic(path, text_span(text));
    }
};

std::string qf_file_name(int qf) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "qf_%03d.ppm", qf);
    return buf;
}

std::string frame_file_name(int index) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "frame_%03d.ppm", index);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    Eigen::setNbThreads(ifc::thread_count());
    std::vector<std::string> raw_argv(argv, argv + argc);

    CLI::App app{"Block-DCT image codec with learned coefficient restoration"};
    app.require_subcommand(1);

    // encode
    std::string enc_in, enc_out;
    int enc_qf = 50;
    auto* enc = app.add_subcommand("encode", "Encode a PPM image to a coefficient stream");
    enc->add_option("--input", enc_in, "Source .ppm")->required()->check(CLI::ExistingFile);
    enc->add_option("--output", enc_out, "Output .ifr1 stream")->required();
    enc->add_option("--qf", enc_qf, "Quality factor 1..100")->capture_default_str();
    enc->callback([&] {
        RunManifest rm{"encode", raw_argv};
        rm.add_input(enc_in);
        auto stream = ifc::encode_image(ifc::read_ppm(enc_in), ifc::QualityFactor(enc_qf));
        ifc::write_file(enc_out, stream);
        rm.write(enc_out + ".run.json");
    });

    // decode
    std::string dec_in, dec_out;
    auto* dec = app.add_subcommand("decode", "Decode a coefficient stream to a PPM image");
    dec->add_option("--input", dec_in, "Input .ifr1 stream")->required()->check(CLI::ExistingFile);
    dec->add_option("--output", dec_out, "Output .ppm")->required();
    dec->callback([&] {
        RunManifest rm{"decode", raw_argv};
        rm.add_input(dec_in);
        ifc::write_ppm(ifc::decode_image(ifc::read_file(dec_in)), dec_out);
        rm.write(dec_out + ".run.json");
    });

    // qf-sweep
    std::string sweep_in, sweep_dir;
    std::vector<int> sweep_qfs = {10, 20, 30, 40, 50, 100};
    auto* sweep = app.add_subcommand("qf-sweep", "Encode/decode at several QFs and score each");
    sweep->add_option("--input", sweep_in, "Source .ppm")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out-dir", sweep_dir, "Directory for decoded images and metrics")
        ->required();
    sweep->add_option("--qfs", sweep_qfs, "Quality factors")->delimiter(',')
        ->capture_default_str();
    sweep->callback([&] {
        RunManifest rm{"qf-sweep", raw_argv};
        rm.add_input(sweep_in);
        ifc::RgbImage image = ifc::read_ppm(sweep_in);
        fs::create_directories(sweep_dir);
        std::vector<ifc::MetricRow> rows;
        for (ifc::SweepEntry& e : ifc::qf_sweep(image, sweep_qfs)) {
            ifc::write_ppm(e.decoded, sweep_dir + "/" + qf_file_name(e.qf));
            rows.push_back(std::move(e.row));
        }
        ifc::write_file_atomic(sweep_dir + "/metrics.csv", text_span(ifc::render_csv(rows)));
        ifc::write_file_atomic(sweep_dir + "/metrics.txt", text_span(ifc::render_table(rows)));
        std::cout << ifc::render_table(rows);
        rm.write(sweep_dir + "/run.json");
    });

    // dataset-build
    std::string ds_frames, ds_out;
    std::vector<int> ds_qfs = {10, 20, 30, 40, 50};
    uint64_t ds_seed = 0;
    auto* ds = app.add_subcommand("dataset-build",
                                  "Cut frames into patches and store coefficient tensors");
    ds->add_option("--frames", ds_frames, "Frame directory (.ppm files; subdirs are test sets)")
        ->required()
        ->check(CLI::ExistingDirectory);
    ds->add_option("--out", ds_out, "Dataset output directory")->required();
    ds->add_option("--qfs", ds_qfs, "Quality factors to materialize")->delimiter(',')
        ->capture_default_str();
    ds->add_option("--seed", ds_seed, "Split shuffle seed")->capture_default_str();
    ds->callback([&] {
        RunManifest rm{"dataset-build", raw_argv, ds_seed, true};
        ifc::DatasetManifest m = ifc::build_dataset(ds_frames, ds_out, ds_qfs, ds_seed);
        for (const ifc::SampleEntry& s : m.samples) {
            std::string src = (fs::path(ds_frames) / s.source).string();
            if (!rm.inputs.count(src)) rm.add_input(src);
        }
        std::cout << "dataset: " << m.samples.size() << " patches\n";
        rm.write(ds_out + "/run.json");
    });

    // train
    ifc::ExperimentConfig tc;
    auto* train = app.add_subcommand("train", "Train a restoration model on a dataset");
    train->add_option("--dataset", tc.dataset_dir, "Dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    train->add_option("--out", tc.out_dir, "Run output directory")->required();
    train->add_option("--arch", tc.arch, "Architecture name")->capture_default_str();
    train->add_option("--width-mult", tc.width_mult, "Hidden width multiplier")
        ->capture_default_str();
    train->add_option("--input-qf", tc.input_qf, "Input quality factor")->capture_default_str();
    train->add_option("--target-qf", tc.target_qf, "Restoration target quality factor")
        ->capture_default_str();
    train->add_option("--epochs", tc.epochs)->capture_default_str();
    train->add_option("--batch", tc.batch)->capture_default_str();
    train->add_option("--seed", tc.seed)->capture_default_str();
    train->add_option("--frames", tc.frames_dir,
                      "Original frames (QF=20 reference row fallback)");
    train->callback([&] {
        RunManifest rm{"train", raw_argv, tc.seed, true};
        rm.add_input(tc.dataset_dir + "/manifest.txt");
        tc.on_epoch = [&](const ifc::ConvergenceRecord& r) {
            std::printf("epoch %d/%d  loss %.6g  ssim %.4f  psnr %.2f\n", r.epoch, tc.epochs,
                        r.loss, r.ssim, r.psnr);
            std::fflush(stdout);
        };
        ifc::ExperimentResult result = ifc::run_experiment(tc);
        std::cout << "\n" << ifc::render_table(result.report);
        std::cout << "best epoch " << result.best_epoch << ", weights " << result.weights_path
                  << "\n";
        rm.write(tc.out_dir + "/run.json");
    });

    // eval
    std::string ev_weights, ev_dataset, ev_csv;
    int ev_input_qf = 10, ev_target_qf = 50;
    auto* ev = app.add_subcommand("eval", "Score saved weights on a dataset's test sources");
    ev->add_option("--weights", ev_weights)->required()->check(CLI::ExistingFile);
    ev->add_option("--dataset", ev_dataset)->required()->check(CLI::ExistingDirectory);
    ev->add_option("--input-qf", ev_input_qf)->capture_default_str();
    ev->add_option("--target-qf", ev_target_qf)->capture_default_str();
    ev->add_option("--csv", ev_csv, "Also write the rows as CSV");
    ev->callback([&] {
        auto rows = ifc::evaluate_model(ev_weights, ev_dataset, ev_input_qf, ev_target_qf);
        std::cout << ifc::render_table(rows);
        if (!ev_csv.empty()) {
            RunManifest rm{"eval", raw_argv};
            rm.add_input(ev_weights);
            rm.add_input(ev_dataset + "/manifest.txt");
            ifc::write_file_atomic(ev_csv, text_span(ifc::render_csv(rows)));
            rm.write(ev_csv + ".run.json");
        }
    });

    // enhance
    std::string en_in, en_weights, en_out;
    int en_input_qf = 10, en_ref_qf = 50;
    auto* en = app.add_subcommand("enhance", "Model-enhanced decode of a coefficient stream");
    en->add_option("--input", en_in, "Input .ifr1 stream")->required()->check(CLI::ExistingFile);
    en->add_option("--weights", en_weights)->required()->check(CLI::ExistingFile);
    en->add_option("--output", en_out, "Output .ppm")->required();
    en->add_option("--input-qf", en_input_qf, "Expected stream quality factor")
        ->capture_default_str();
    en->add_option("--ref-qf", en_ref_qf, "Reference QF for dequantization")
        ->capture_default_str();
    en->callback([&] {
        RunManifest rm{"enhance", raw_argv};
        rm.add_input(en_in);
        rm.add_input(en_weights);
        ifc::EnhanceConfig cfg{en_weights, en_input_qf, en_ref_qf};
        ifc::write_ppm(ifc::enhance_decode(ifc::read_file(en_in), cfg), en_out);
        rm.write(en_out + ".run.json");
    });

    // metrics
    std::string mt_image, mt_reference;
    auto* mt = app.add_subcommand("metrics", "SSIM / PSNR / NRMSE of an image vs a reference");
    mt->add_option("--image", mt_image)->required()->check(CLI::ExistingFile);
    mt->add_option("--reference", mt_reference)->required()->check(CLI::ExistingFile);
    mt->callback([&] {
        ifc::RgbImage a = ifc::read_ppm(mt_image);
        ifc::RgbImage b = ifc::read_ppm(mt_reference);
        std::vector<ifc::MetricRow> rows = {{fs::path(mt_image).filename().string(),
                                             ifc::ssim(a, b), ifc::psnr(a, b),
                                             ifc::nrmse(a, b)}};
        std::cout << ifc::render_table(rows);
    });

    // synth
    std::string sy_out, sy_dir;
    int sy_width = 600, sy_height = 480, sy_count = 8;
    uint64_t sy_seed = 0;
    auto* sy = app.add_subcommand("synth", "Generate deterministic textured test frames");
    sy->add_option("--output", sy_out, "Single output .ppm");
    sy->add_option("--out-dir", sy_dir, "Directory for a numbered frame corpus");
    sy->add_option("--count", sy_count, "Frames to generate in --out-dir mode")
        ->capture_default_str();
    sy->add_option("--width", sy_width)->capture_default_str();
    sy->add_option("--height", sy_height)->capture_default_str();
    sy->add_option("--seed", sy_seed)->capture_default_str();
    sy->callback([&] {
        if (sy_out.empty() == sy_dir.empty())
            throw CLI::ValidationError("synth", "pass exactly one of --output / --out-dir");
        RunManifest rm{"synth", raw_argv, sy_seed, true};
        if (!sy_out.empty()) {
            ifc::write_ppm(ifc::synthetic_frame(sy_width, sy_height, sy_seed), sy_out);
            rm.write(sy_out + ".run.json");
        } else {
            fs::create_directories(sy_dir);
            for (int i = 0; i < sy_count; ++i)
                ifc::write_ppm(ifc::synthetic_frame(sy_width, sy_height, sy_seed + uint64_t(i)),
                               sy_dir + "/" + frame_file_name(i));
            rm.write(sy_dir + "/run.json");
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ifc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
