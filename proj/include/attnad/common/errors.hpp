#pragma once

#include <stdexcept>
#include <string>

namespace attnad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions violate an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value, detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset files missing, corrupt or inconsistent with their manifest.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A metric is mathematically undefined for the given records
/// (e.g. AUROC with a single class present).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// A loss or score became non-finite during training. Carries the path of
/// the diagnostic checkpoint written before the abort (empty if none).
class TrainingDivergence : public Error {
 public:
  TrainingDivergence(const std::string& what, std::string checkpoint)
      : Error(what), checkpoint_(std::move(checkpoint)) {}

  const std::string& checkpoint() const noexcept { return checkpoint_; }

 private:
  std::string checkpoint_;
};

}  // namespace attnad
