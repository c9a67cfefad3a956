#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "wsod/data_model.hpp"

namespace wsod {

/// A region hypothesis handed to detectors: box plus pooled feature vector.
struct Candidate {
  BBox box;
  Eigen::VectorXd feature;
};

/// Supplies candidate regions for the image named by a training view. Keeps
/// detector and MIL code blind to how candidates are synthesized.
using CandidateSource = std::function<std::vector<Candidate>(const ImageView&)>;

}  // namespace wsod
