#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace calibre {

/// Row sums must be within this distance of 1 for a row to be accepted.
inline constexpr double kSimplexTolerance = 1e-6;

/// A calibration sample: n labels and the n predicted probability vectors
/// the model produced for the same inputs.
///
/// Labels are 0-based: a problem with m classes uses labels 0..m-1, and
/// column j of `probs()` is the predicted probability of label j.
///
/// Construction validates every row (entries in [0, 1], sum within
/// kSimplexTolerance of 1) and every label; the object is immutable after.
class PredictionSet {
 public:
  /// Throws ValidationError when any invariant fails.
  PredictionSet(std::vector<int> labels, Eigen::MatrixXd probs);

  std::size_t size() const { return labels_.size(); }
  int classes() const { return static_cast<int>(probs_.cols()); }

  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }

  /// n x m, row i is the prediction for sample i.
  const Eigen::MatrixXd& probs() const { return probs_; }

  /// m x n copy with one prediction per column (contiguous per sample).
  Eigen::MatrixXd columns() const { return probs_.transpose(); }

  /// Subset / reordering by sample index.
  PredictionSet select(std::span<const std::size_t> indices) const;

 private:
  std::vector<int> labels_;
  Eigen::MatrixXd probs_;
};

enum class PredictionFormat { csv, jsonl };

/// csv for ".csv", jsonl for ".jsonl"/".json"/".ndjson"; ValidationError otherwise.
PredictionFormat prediction_format_from_path(const std::filesystem::path& path);

/// Reads and validates a prediction dump.
///
/// CSV: header `label,p0,...,p{m-1}` followed by one row per sample.
/// JSONL: one `{"label": int, "probs": [m numbers]}` object per line.
/// Rows off the simplex are rejected, never repaired; see renormalize().
/// Throws IoError (unreadable file), ParseError (malformed content or empty
/// file) or ValidationError (invariant failure).
PredictionSet load_predictions(const std::filesystem::path& path, PredictionFormat format);
PredictionSet load_predictions(const std::filesystem::path& path);

PredictionSet parse_predictions_csv(std::string_view text);
PredictionSet parse_predictions_jsonl(std::string_view text);

/// Writes reals in shortest round-trip form, so load_predictions(save) is bit-exact.
void save_predictions(const PredictionSet& ps, const std::filesystem::path& path, PredictionFormat format);

/// Divides each row by its sum. Intended for float32 softmax dumps whose rows
/// miss the strict tolerance. Every row sum must already be within `tol` of 1
/// (tol <= 1e-2) and positive; otherwise ValidationError.
PredictionSet renormalize(const std::vector<int>& labels, const Eigen::MatrixXd& probs, double tol);
PredictionSet renormalize(const PredictionSet& ps, double tol);

/// Raw rows without simplex validation; used by the renormalizing CLI path.
struct RawPredictions {
  std::vector<int> labels;
  Eigen::MatrixXd probs;
};
RawPredictions load_raw_predictions(const std::filesystem::path& path, PredictionFormat format);

}  // namespace calibre
