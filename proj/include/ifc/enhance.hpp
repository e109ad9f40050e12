#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifc/dataset.hpp"
#include "ifc/metrics.hpp"
#include "ifc/model.hpp"

namespace ifc {

// A restoration model ready to run: graph, float parameters, and the
// normalization stats bundled with the weights (when present).
struct EnhanceModel {
    ModelGraph graph;
    ParamMap<float> params;
    std::optional<NormStats> stats;
};

// Loads a weights file and splits the norm.mean / norm.std tensors out of the
// parameter map. Shapes are validated against the descriptor's architecture.
EnhanceModel load_enhance_model(const std::string& weights_path);

// Packs parameters plus optional norm stats back into a weights container.
WeightsFile pack_enhance_model(const ModelGraph& graph, const ParamMap<float>& params,
                               const std::optional<NormStats>& stats);

struct EnhanceConfig {
    std::string weights_path;
    int input_qf = 10;
    int reference_qf = 50;
};

// Model-enhanced decode of a coefficient stream: extract, restore in the
// (normalized) coefficient domain, dequantize with reference-QF tables,
// inverse DCT, convert to RGB. The stream's QF must equal input_qf.
RgbImage enhance_decode(std::span<const uint8_t> stream, const EnhanceConfig& cfg);
RgbImage enhance_decode(std::span<const uint8_t> stream, EnhanceModel& model, int input_qf,
                        int reference_qf);

// In-memory core shared by decode, training validation, and eval.
RgbImage enhance_tensor(const CoeffTensor& input, EnhanceModel& model, int reference_qf,
                        int width, int height);

struct ConvergenceRecord {
    int epoch = 0;
    double loss = 0;
    double ssim = 0;
    double psnr = 0;
    double nrmse = 0;
};

std::string render_convergence_csv(const std::vector<ConvergenceRecord>& records);

struct ExperimentConfig {
    std::string arch = "res-unet";
    double width_mult = 1.0;
    std::string dataset_dir;
    std::string frames_dir;  // original frames; used for the QF=20 reference row
                             // when the dataset was not built with QF 20
    int input_qf = 10;
    int target_qf = 50;
    int epochs = 400;
    int batch = 16;
    uint64_t seed = 0;
    std::string out_dir;
    std::function<void(const ConvergenceRecord&)> on_epoch;  // progress hook
};

struct ExperimentResult {
    std::vector<ConvergenceRecord> convergence;
    std::vector<MetricRow> report;
    std::string weights_path;
    int best_epoch = 0;
    double best_ssim = 0;
};

// Trains arch on (input QF -> target QF) coefficient pairs with Adam on MSE
// in the normalized domain, validating each epoch by full enhanced decode
// against the target-QF decode. Keeps the best-validation-SSIM checkpoint and
// writes convergence.csv, report.csv, and report.txt under out_dir. The final
// report pairs the model against the plain input-QF and QF=20 decodes.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Scores saved weights on the dataset's test sources (falling back to the
// validation split when there are none): per-source and overall rows pairing
// the plain input-QF decode with the enhanced decode, both measured against
// the target-QF decode.
std::vector<MetricRow> evaluate_model(const std::string& weights_path,
                                      const std::string& dataset_dir, int input_qf,
                                      int target_qf);

struct SweepEntry {
    int qf = 0;
    RgbImage decoded;
    MetricRow row;  // decoded vs the original image
};

std::vector<SweepEntry> qf_sweep(const RgbImage& image, const std::vector<int>& qfs);

}  // namespace ifc
