#pragma once

#include <string>
#include <vector>

#include "attnad/data/dataset.hpp"

namespace attnad::metrics {

/// One class is normal, every other class is anomalous.
struct OneClassSplit {
  data::Dataset train;              // normal-class training images only
  data::Dataset test;               // every test image, original class labels kept
  std::vector<int> anomaly_labels;  // per test image: 0 normal, 1 anomaly
  int normal_class = 0;
};

/// Throws ConfigError for an unknown class index.
OneClassSplit one_class_protocol(const data::SplitDataset& data, int normal_class);
OneClassSplit one_class_protocol(const data::SplitDataset& data, const std::string& normal_class);

}  // namespace attnad::metrics
