#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pushdet/rng.hpp"
#include "pushdet/skeleton.hpp"

namespace pushdet {

inline constexpr int kModelFormatVersion = 1;

/// Impurity of a binary node, 1 - p0^2 - p1^2. Throws Error(Domain) on (0, 0).
double gini(std::uint64_t n_normal, std::uint64_t n_push);

struct ForestParams {
  std::size_t n_trees = 100;
  std::uint64_t seed = 42;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> max_features;  ///< unset: floor(sqrt(d))
  std::optional<std::size_t> max_depth;      ///< unset: unbounded
  bool bootstrap = true;                     ///< off only for single-tree checks

  std::size_t resolved_max_features(std::size_t dim) const;
  /// Throws Error(Config).
  void validate(std::size_t dim) const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Row-major design matrix with binary labels.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t dim) : dim_(dim) {}

  /// Throws Error(Validation) on wrong length or non-finite values.
  void add(std::span<const double> features, Label label);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return labels_.size(); }
  double value(std::size_t row, std::size_t col) const noexcept { return values_[row * dim_ + col]; }
  std::span<const double> row(std::size_t r) const noexcept { return {values_.data() + r * dim_, dim_}; }
  Label label(std::size_t row) const noexcept { return labels_[row]; }

 private:
  std::size_t dim_;
  std::vector<double> values_;
  std::vector<Label> labels_;
};

/// Flat preorder node. Internal nodes send x[feature] <= threshold to the
/// left child, which always directly follows its parent.
struct TreeNode {
  static constexpr std::uint32_t kLeaf = 0xFFFFFFFFu;

  std::uint32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t right = 0;  ///< index of the right child
  std::array<std::uint64_t, 2> counts{};  ///< (normal, push) reaching a leaf

  bool is_leaf() const noexcept { return feature == kLeaf; }
  Label vote() const noexcept { return counts[1] > counts[0] ? Label::Push : Label::Normal; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  ///< nodes[0] is the root

  Label predict(std::span<const double> x) const noexcept;
  std::size_t depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct ForestModel {
  int format_version = kModelFormatVersion;
  ForestParams params;
  std::size_t feature_dim = 0;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;

  /// Majority vote; ties go to Normal. Throws Error(Validation) on a bad x.
  Label predict(std::span<const double> x) const;
  /// Fraction of trees voting Push.
  double predict_proba(std::span<const double> x) const;
  std::size_t push_votes(std::span<const double> x) const;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct FitOptions {
  /// Worker threads for tree construction; the model is identical for any value.
  unsigned threads = 1;
};

/// Throws Error(Training) on < 2 samples or a single class.
ForestModel fit(const TrainingSet& data, const ForestParams& params, std::vector<std::string> feature_names = {},
                FitOptions options = {});

/// Grows one tree on the given (possibly repeated) row indices, drawing
/// feature subsets from `rng`. `fit` calls it once per tree with the stream
/// SplitMix64::stream(seed, tree_index) after the bootstrap draws.
Tree grow_tree(const TrainingSet& data, std::vector<std::uint32_t> rows, const ForestParams& params,
               SplitMix64& rng);

std::string save_model(const ForestModel& model);
/// Throws Error(ModelFormat) on any schema or invariant violation.
ForestModel load_model(std::string_view text);

ForestModel load_model_file(const std::string& path);
void save_model_file(const std::string& path, const ForestModel& model);

}  // namespace pushdet
