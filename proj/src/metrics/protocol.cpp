#include "attnad/metrics/protocol.hpp"

#include "attnad/common/errors.hpp"

namespace attnad::metrics {

OneClassSplit one_class_protocol(const data::SplitDataset& data, int normal_class) {
  const auto n_classes = static_cast<int>(data.train.class_names.size());
  if (normal_class < 0 || normal_class >= n_classes) {
    throw ConfigError("one-class protocol: unknown class id " + std::to_string(normal_class));
  }
  OneClassSplit out;
  out.normal_class = normal_class;
  std::vector<std::int64_t> keep;
  for (std::size_t i = 0; i < data.train.labels.size(); ++i) {
    if (data.train.labels[i] == normal_class) keep.push_back(static_cast<std::int64_t>(i));
  }
  if (keep.empty()) throw DataError("one-class protocol: no training images of class " + std::to_string(normal_class));
  out.train = data.train.subset(keep);
  out.test = data.test;
  for (int label : data.test.labels) out.anomaly_labels.push_back(label == normal_class ? 0 : 1);
  return out;
}

OneClassSplit one_class_protocol(const data::SplitDataset& data, const std::string& normal_class) {
  const int idx = data.train.class_index(normal_class);
  if (idx < 0) throw ConfigError("one-class protocol: unknown class '" + normal_class + "'");
  return one_class_protocol(data, idx);
}

}  // namespace attnad::metrics
