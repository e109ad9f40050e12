#pragma once

#include <string>
#include <vector>

#include "ifc/model.hpp"

namespace ifc {

// Coefficient-restoration architectures. width_mult scales every hidden width
// (minimum 1 filter) for desk-scale training runs.
ModelGraph build_dncnn(double width_mult = 1.0);
ModelGraph build_deeper_srcnn(double width_mult = 1.0);
ModelGraph build_resnet(int blocks = 8, int width = 64, double width_mult = 1.0);
ModelGraph build_unet(int base_width = 32, double width_mult = 1.0);
ModelGraph build_res_unet(int base_width = 32, double width_mult = 1.0);
ModelGraph build_arcnn(double width_mult = 1.0);
ModelGraph build_fast_arcnn(double width_mult = 1.0);

// Build by registry name: dncnn, deeper-srcnn, resnet, unet, res-unet, arcnn,
// fast-arcnn.
ModelGraph build_model(const std::string& name, double width_mult = 1.0);
std::vector<std::string> model_names();

// Rebuild the graph named by a weights-file descriptor ("arch=... width_mult=...").
ModelGraph model_from_descriptor(const std::string& descriptor);

// Graph for the descriptor, with every tensor checked against the expected
// parameter shapes; extra tensors are allowed only under the "norm." prefix.
ModelGraph graph_for_weights(const WeightsFile& weights, int input_channels);

// Trainable parameters only (weights, biases, batchnorm affine).
long parameter_count(const ModelGraph& g, int input_channels);

}  // namespace ifc
