#include "ifc/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>

#include "ifc/entropy.hpp"
#include "ifc/util.hpp"
#include "ifc/zoo.hpp"

namespace fs = std::filesystem;

namespace ifc {
namespace {

std::string display_name(const std::string& arch) {
    static const std::map<std::string, std::string> names = {
        {"dncnn", "DnCNN"},   {"deeper-srcnn", "Deeper SRCNN"},
        {"resnet", "ResNet"}, {"unet", "U-Net"},
        {"res-unet", "Res-UNet"}, {"arcnn", "AR-CNN"},
        {"fast-arcnn", "Fast AR-CNN"},
    };
    auto it = names.find(arch);
    return it == names.end() ? arch : it->second;
}

std::span<const uint8_t> text_span(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

RealCoeffPlane real_plane_from(const Tensor4<float>& t, int c) {
    RealCoeffPlane p;
    p.blocks_w = t.w / 8;
    p.blocks_h = t.h / 8;
    p.blocks.assign(size_t(p.blocks_w) * p.blocks_h, Block8::Zero());
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
            p.blocks[size_t(y / 8) * p.blocks_w + x / 8](y % 8, x % 8) = double(t.at(0, c, y, x));
    return p;
}

// Weights files carry the stats as float32; training uses the same rounding so
// a reloaded checkpoint reproduces its validation decodes bit for bit.
NormStats snap_stats(const NormStats& s) {
    NormStats out;
    for (int c = 0; c < 3; ++c) {
        out.mean[c] = double(float(s.mean[c]));
        out.stddev[c] = double(float(s.stddev[c]));
    }
    return out;
}

RgbImage decode_tensor_plain(const CoeffTensor& t, QualityFactor qf) {
    EncodedPlanes p = coeff_tensor_to_planes(t);
    return decode_planes(p.y, p.cb, p.cr, qf, t.width, t.height);
}

MetricRow score(const std::string& label, const RgbImage& img, const RgbImage& reference) {
    return {label, ssim(img, reference), psnr(img, reference), nrmse(img, reference)};
}

// The 0.9997 batchnorm momentum needs tens of thousands of steps before the
// running averages forget their init, far beyond a desk-scale run, and infer
// mode is useless until they do. After each epoch the running stats are
// replaced with population statistics of every batchnorm input over a fixed
// slice of the training set (scalar accumulation, so runs stay bit-identical).
void refresh_batchnorm_stats(const ModelGraph& graph, ParamMap<float>& params,
                             const std::vector<Tensor4<float>>& train_in, int batch) {
    std::vector<int> bn_nodes;
    for (int i = 0; i < int(graph.layers.size()); ++i)
        if (graph.layers[i].kind == LayerKind::batchnorm) bn_nodes.push_back(i);
    if (bn_nodes.empty()) return;

    size_t take = std::min(train_in.size(), size_t(64));
    std::map<int, std::vector<double>> sums, sqs;
    std::map<int, size_t> counts;
    ForwardTrace<float> trace;
    for (size_t start = 0; start < take; start += size_t(batch)) {
        size_t k = std::min(size_t(batch), take - start);
        const Tensor4<float>& t0 = train_in[start];
        Tensor4<float> xb(int(k), t0.c, t0.h, t0.w);
        for (size_t j = 0; j < k; ++j)
            std::copy(train_in[start + j].v.begin(), train_in[start + j].v.end(), xb.batch(int(j)));
        forward(graph, xb, params, Mode::train, &trace);
        for (int i : bn_nodes) {
            int src = graph.layers[size_t(i)].inputs[0];
            const Tensor4<float>& a = src < 0 ? xb : trace.outputs[size_t(src)];
            auto& sum = sums[i];
            auto& sq = sqs[i];
            if (sum.empty()) {
                sum.assign(size_t(a.c), 0.0);
                sq.assign(size_t(a.c), 0.0);
            }
            size_t plane = size_t(a.h) * a.w;
            for (int in = 0; in < a.n; ++in)
                for (int c = 0; c < a.c; ++c) {
                    const float* p = a.batch(in) + size_t(c) * plane;
                    double s = 0, q = 0;
                    for (size_t z = 0; z < plane; ++z) {
                        s += p[z];
                        q += double(p[z]) * p[z];
                    }
                    sum[size_t(c)] += s;
                    sq[size_t(c)] += q;
                }
            counts[i] += size_t(a.n) * plane;
        }
    }
    for (int i : bn_nodes) {
        Tensor4<float>& mean = params.at(param_key(i, "mean"));
        Tensor4<float>& var = params.at(param_key(i, "var"));
        double n = double(counts.at(i));
        for (size_t c = 0; c < mean.size(); ++c) {
            double m = sums.at(i)[c] / n;
            double v = sqs.at(i)[c] / n - m * m;
            mean.v[c] = float(m);
            var.v[c] = float(v < 0 ? 0 : v);
        }
    }
}

}  // namespace

EnhanceModel load_enhance_model(const std::string& weights_path) {
    WeightsFile wf = load_weights(weights_path);
    EnhanceModel m;
    m.graph = graph_for_weights(wf, 3);
    auto mean_it = wf.tensors.find("norm.mean");
    auto std_it = wf.tensors.find("norm.std");
    if ((mean_it == wf.tensors.end()) != (std_it == wf.tensors.end()))
        fail("normalization tensors must come in pairs");
    if (mean_it != wf.tensors.end()) {
        const Tensor4<float>& mt = mean_it->second;
        const Tensor4<float>& st = std_it->second;
        if (mt.size() != 3 || st.size() != 3) fail("malformed normalization tensors");
        NormStats stats;
        for (int c = 0; c < 3; ++c) {
            stats.mean[c] = mt.v[c];
            stats.stddev[c] = st.v[c];
            if (!(stats.stddev[c] > 0)) fail("normalization std must be positive");
        }
        m.stats = stats;
    }
    for (auto& [name, t] : wf.tensors)
        if (!name.starts_with("norm.")) m.params.emplace(name, std::move(t));
    return m;
}

WeightsFile pack_enhance_model(const ModelGraph& graph, const ParamMap<float>& params,
                               const std::optional<NormStats>& stats) {
    WeightsFile wf;
    wf.descriptor = graph_descriptor(graph);
    wf.tensors = params;
    if (stats) {
        Tensor4<float> mean(1, 3, 1, 1), sd(1, 3, 1, 1);
        for (int c = 0; c < 3; ++c) {
            mean.v[c] = float(stats->mean[c]);
            sd.v[c] = float(stats->stddev[c]);
        }
        wf.tensors.emplace("norm.mean", std::move(mean));
        wf.tensors.emplace("norm.std", std::move(sd));
    }
    return wf;
}

RgbImage enhance_tensor(const CoeffTensor& input, EnhanceModel& model, int reference_qf,
                        int width, int height) {
    if (input.channels != 3) fail("coefficient tensor must have 3 channels");
    if (input.height % 8 != 0 || input.width % 8 != 0)
        fail("tensor dims must be multiples of 8");
    Tensor4<float> x = to_float_tensor(input);
    if (model.stats) x = normalize(x, *model.stats);
    Tensor4<float> y = forward(model.graph, x, model.params, Mode::infer);
    if (y.n != 1 || y.c != 3 || y.h != input.height || y.w != input.width)
        fail("model output shape mismatch");
    if (model.stats) y = denormalize(y, *model.stats);
    return decode_real_planes(real_plane_from(y, 0), real_plane_from(y, 1),
                              real_plane_from(y, 2), QualityFactor(reference_qf), width, height);
}

RgbImage enhance_decode(std::span<const uint8_t> stream, EnhanceModel& model, int input_qf,
                        int reference_qf) {
    ExtractedStream s = extract_quantized_coeffs(stream);
    if (s.qf.value() != input_qf) fail("stream QF does not match the configured input QF");
    CoeffTensor t = planes_to_coeff_tensor({s.y, s.cb, s.cr});
    return enhance_tensor(t, model, reference_qf, s.width, s.height);
}

RgbImage enhance_decode(std::span<const uint8_t> stream, const EnhanceConfig& cfg) {
    EnhanceModel model = load_enhance_model(cfg.weights_path);
    return enhance_decode(stream, model, cfg.input_qf, cfg.reference_qf);
}

std::string render_convergence_csv(const std::vector<ConvergenceRecord>& records) {
    std::string out = "epoch,loss,ssim,psnr,nrmse\n";
    char buf[160];
    for (const ConvergenceRecord& r : records) {
        if (std::isinf(r.psnr))
            std::snprintf(buf, sizeof buf, "%d,%.8g,%.6f,inf,%.6f\n", r.epoch, r.loss, r.ssim,
                          r.nrmse);
        else
            std::snprintf(buf, sizeof buf, "%d,%.8g,%.6f,%.6f,%.6f\n", r.epoch, r.loss, r.ssim,
                          r.psnr, r.nrmse);
        out += buf;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.epochs < 1) fail("epochs must be >= 1");
    if (cfg.batch < 1) fail("batch size must be >= 1");
    if (cfg.width_mult <= 0) fail("width multiplier must be positive");
    if (cfg.target_qf != 30 && cfg.target_qf != 40 && cfg.target_qf != 50)
        fail("target QF must be 30, 40, or 50");
    if (cfg.out_dir.empty()) fail("output directory required");
    QualityFactor in_qf(cfg.input_qf), tgt_qf(cfg.target_qf);

    ModelGraph graph = build_model(cfg.arch, cfg.width_mult);
    DatasetManifest m = load_manifest(cfg.dataset_dir + "/manifest.txt");
    auto has_qf = [&](int qf) {
        return std::find(m.qfs.begin(), m.qfs.end(), qf) != m.qfs.end();
    };
    if (!has_qf(cfg.input_qf))
        fail("dataset does not contain QF " + std::to_string(cfg.input_qf));
    if (!has_qf(cfg.target_qf))
        fail("dataset does not contain QF " + std::to_string(cfg.target_qf));

    auto train_rows = split_samples(m, "train");
    auto valid_rows = split_samples(m, "valid");
    if (train_rows.empty()) fail("training split is empty");
    if (valid_rows.empty()) fail("validation split is empty");

    NormStats stats = snap_stats(m.stats);
    int side = m.patch_size;

    std::vector<Tensor4<float>> train_in, train_tgt;
    train_in.reserve(train_rows.size());
    train_tgt.reserve(train_rows.size());
    for (const SampleEntry* e : train_rows) {
        CoeffTensor in = read_dcts(sample_path(cfg.dataset_dir, e->id, cfg.input_qf)).tensor;
        CoeffTensor tg = read_dcts(sample_path(cfg.dataset_dir, e->id, cfg.target_qf)).tensor;
        if (in.height != side || in.width != side)
            fail("sample does not match the manifest patch size");
        train_in.push_back(normalize(to_float_tensor(in), stats));
        train_tgt.push_back(normalize(to_float_tensor(tg), stats));
    }

    struct ValidSample {
        const SampleEntry* entry;
        CoeffTensor in_raw;
        RgbImage reference;  // target-QF decode
        RgbImage plain;      // input-QF decode
    };
    std::vector<ValidSample> valid;
    valid.reserve(valid_rows.size());
    for (const SampleEntry* e : valid_rows) {
        ValidSample v;
        v.entry = e;
        v.in_raw = read_dcts(sample_path(cfg.dataset_dir, e->id, cfg.input_qf)).tensor;
        CoeffTensor tg = read_dcts(sample_path(cfg.dataset_dir, e->id, cfg.target_qf)).tensor;
        v.reference = decode_tensor_plain(tg, tgt_qf);
        v.plain = decode_tensor_plain(v.in_raw, in_qf);
        valid.push_back(std::move(v));
    }

    fs::create_directories(cfg.out_dir);

    Rng rng(cfg.seed);
    EnhanceModel live;
    live.graph = graph;
    live.params = init_params<float>(graph, 3, rng);
    live.stats = stats;
    std::map<std::string, AdamState<float>> opt;

    ExperimentResult result;
    result.weights_path = cfg.out_dir + "/best.dctw";
    result.best_ssim = -1.0;
    size_t n_train = train_in.size();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<size_t> order(n_train);
        std::iota(order.begin(), order.end(), size_t(0));
        Rng erng = rng.fork(uint64_t(epoch));
        erng.shuffle(order.begin(), order.end());

        double loss_sum = 0;
        for (size_t start = 0; start < n_train; start += size_t(cfg.batch)) {
            size_t k = std::min(size_t(cfg.batch), n_train - start);
            Tensor4<float> xb(int(k), 3, side, side), tb(int(k), 3, side, side);
            for (size_t j = 0; j < k; ++j) {
                const Tensor4<float>& ti = train_in[order[start + j]];
                const Tensor4<float>& tt = train_tgt[order[start + j]];
                std::copy(ti.v.begin(), ti.v.end(), xb.batch(int(j)));
                std::copy(tt.v.begin(), tt.v.end(), tb.batch(int(j)));
            }
            ForwardTrace<float> trace;
            Tensor4<float> pred = forward(graph, xb, live.params, Mode::train, &trace);
            LossResult<float> loss = mse_loss(pred, tb);
            if (!std::isfinite(loss.loss)) {
                std::string dump = cfg.out_dir + "/diverged.dctw";
                save_weights(dump, pack_enhance_model(graph, live.params, live.stats));
                fail("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                     " (state in " + dump + ")");
            }
            ParamMap<float> grads = backward(graph, xb, trace, live.params, loss.grad);
            for (auto& [name, g] : grads) adam_step(live.params.at(name), g, opt[name]);
            loss_sum += loss.loss * double(k);
        }

        refresh_batchnorm_stats(graph, live.params, train_in, cfg.batch);

        std::vector<MetricRow> rows;
        rows.reserve(valid.size());
        for (ValidSample& v : valid) {
            RgbImage enhanced = enhance_tensor(v.in_raw, live, cfg.target_qf, side, side);
            rows.push_back(score(v.entry->id, enhanced, v.reference));
        }
        MetricRow agg = aggregate(rows, "valid");
        result.convergence.push_back(
            {epoch, loss_sum / double(n_train), agg.ssim, agg.psnr, agg.nrmse});
        write_file_atomic(cfg.out_dir + "/convergence.csv",
                          text_span(render_convergence_csv(result.convergence)));
        if (cfg.on_epoch) cfg.on_epoch(result.convergence.back());

        if (agg.ssim > result.best_ssim) {
            result.best_ssim = agg.ssim;
            result.best_epoch = epoch;
            save_weights(result.weights_path, pack_enhance_model(graph, live.params, live.stats));
        }
    }

    // Reference rows are scored once, against the same target-QF decodes.
    EnhanceModel best = load_enhance_model(result.weights_path);
    std::vector<MetricRow> model_rows, input_rows, qf20_rows;
    bool stored20 = has_qf(20);
    std::map<std::string, std::vector<RgbImage>> patch_cache;
    for (ValidSample& v : valid) {
        RgbImage enhanced = enhance_tensor(v.in_raw, best, cfg.target_qf, side, side);
        model_rows.push_back(score(v.entry->id, enhanced, v.reference));
        input_rows.push_back(score(v.entry->id, v.plain, v.reference));

        RgbImage dec20;
        if (stored20) {
            CoeffTensor t20 = read_dcts(sample_path(cfg.dataset_dir, v.entry->id, 20)).tensor;
            dec20 = decode_tensor_plain(t20, QualityFactor(20));
        } else {
            if (cfg.frames_dir.empty())
                fail("QF=20 reference row needs a dataset built with QF 20 or the original "
                     "frames directory");
            auto [it, fresh] = patch_cache.try_emplace(v.entry->source);
            if (fresh) {
                RgbImage frame = read_ppm((fs::path(cfg.frames_dir) / v.entry->source).string());
                it->second = extract_patches(frame, m.patch_size);
            }
            const RgbImage& patch = it->second.at(size_t(v.entry->patch_index));
            EncodedPlanes p20 = encode_planes(patch, QualityFactor(20));
            dec20 = decode_planes(p20.y, p20.cb, p20.cr, QualityFactor(20), side, side);
        }
        qf20_rows.push_back(score(v.entry->id, dec20, v.reference));
    }
    result.report.push_back(aggregate(model_rows, display_name(cfg.arch)));
    result.report.push_back(aggregate(qf20_rows, "MPEG QF=20"));
    result.report.push_back(
        aggregate(input_rows, "MPEG QF=" + std::to_string(cfg.input_qf) + " (input)"));

    write_file_atomic(cfg.out_dir + "/report.csv", text_span(render_csv(result.report)));
    write_file_atomic(cfg.out_dir + "/report.txt", text_span(render_table(result.report)));
    return result;
}

std::vector<MetricRow> evaluate_model(const std::string& weights_path,
                                      const std::string& dataset_dir, int input_qf,
                                      int target_qf) {
    QualityFactor in_qf(input_qf), tgt_qf(target_qf);
    EnhanceModel model = load_enhance_model(weights_path);
    DatasetManifest m = load_manifest(dataset_dir + "/manifest.txt");
    auto has_qf = [&](int qf) {
        return std::find(m.qfs.begin(), m.qfs.end(), qf) != m.qfs.end();
    };
    if (!has_qf(input_qf)) fail("dataset does not contain QF " + std::to_string(input_qf));
    if (!has_qf(target_qf)) fail("dataset does not contain QF " + std::to_string(target_qf));

    std::vector<std::string> splits;
    for (const SampleEntry& s : m.samples)
        if (s.split.starts_with("test:") &&
            std::find(splits.begin(), splits.end(), s.split) == splits.end())
            splits.push_back(s.split);
    std::sort(splits.begin(), splits.end());
    if (splits.empty()) splits.push_back("valid");

    std::string arch = display_name(model.graph.name);
    std::string input_label = "MPEG QF=" + std::to_string(input_qf) + " (input)";
    std::vector<MetricRow> report;
    std::vector<MetricRow> all_plain, all_enhanced;
    for (const std::string& split : splits) {
        std::string src = split.starts_with("test:") ? split.substr(5) : split;
        std::vector<MetricRow> plain_rows, enhanced_rows;
        for (const SampleEntry* e : split_samples(m, split)) {
            CoeffTensor in = read_dcts(sample_path(dataset_dir, e->id, input_qf)).tensor;
            CoeffTensor tg = read_dcts(sample_path(dataset_dir, e->id, target_qf)).tensor;
            RgbImage reference = decode_tensor_plain(tg, tgt_qf);
            RgbImage plain = decode_tensor_plain(in, in_qf);
            RgbImage enhanced = enhance_tensor(in, model, target_qf, in.width, in.height);
            plain_rows.push_back(score(e->id, plain, reference));
            enhanced_rows.push_back(score(e->id, enhanced, reference));
        }
        if (plain_rows.empty()) continue;
        report.push_back(aggregate(enhanced_rows, src + ": " + arch));
        report.push_back(aggregate(plain_rows, src + ": " + input_label));
        all_plain.insert(all_plain.end(), plain_rows.begin(), plain_rows.end());
        all_enhanced.insert(all_enhanced.end(), enhanced_rows.begin(), enhanced_rows.end());
    }
    if (all_enhanced.empty()) fail("no samples to evaluate");
    if (splits.size() > 1) {
        report.push_back(aggregate(all_enhanced, "all: " + arch));
        report.push_back(aggregate(all_plain, "all: " + input_label));
    }
    return report;
}

std::vector<SweepEntry> qf_sweep(const RgbImage& image, const std::vector<int>& qfs) {
    if (qfs.empty()) fail("no quality factors given");
    std::vector<SweepEntry> out;
    out.reserve(qfs.size());
    for (int q : qfs) {
        QualityFactor qf(q);
        std::vector<uint8_t> stream = encode_image(image, qf);
        RgbImage decoded = decode_image(stream);
        SweepEntry e;
        e.qf = q;
        e.row = score("QF=" + std::to_string(q), decoded, image);
        e.decoded = std::move(decoded);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ifc
