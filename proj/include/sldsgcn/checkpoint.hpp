#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sldsgcn {

/// A loaded checkpoint: free-form JSON metadata (model configuration, run
/// provenance) plus named dense tensors in save order.
struct Checkpoint {
  std::string meta_json;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
};

/// Binary format: magic line, a JSON header describing metadata and tensor
/// shapes, then raw row-major doubles for each tensor in order. Writes go
/// to a temporary file renamed into place so readers never see a torn file.
void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<std::pair<std::string, Eigen::MatrixXd>>&
                         tensors);

/// Throws LoadError on missing files or magic/shape mismatches.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sldsgcn
