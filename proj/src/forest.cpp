#include "pushdet/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pushdet/error.hpp"

namespace pushdet {

double gini(std::uint64_t n0, std::uint64_t n1) {
  const std::uint64_t n = n0 + n1;
  if (n == 0) throw Error(Errc::Domain, "gini of an empty node");
  const double p0 = static_cast<double>(n0) / static_cast<double>(n);
  const double p1 = static_cast<double>(n1) / static_cast<double>(n);
  return 1.0 - p0 * p0 - p1 * p1;
}

std::size_t ForestParams::resolved_max_features(std::size_t dim) const {
  if (max_features) return *max_features;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(dim)))));
}

void ForestParams::validate(std::size_t dim) const {
  if (n_trees < 1) throw Error(Errc::Config, "n_trees must be >= 1");
  if (min_samples_split < 2) throw Error(Errc::Config, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw Error(Errc::Config, "min_samples_leaf must be >= 1");
  if (dim == 0) throw Error(Errc::Config, "feature dimension must be >= 1");
  const std::size_t mf = resolved_max_features(dim);
  if (mf < 1 || mf > dim) throw Error(Errc::Config, "max_features must lie in [1, d]");
}

void TrainingSet::add(std::span<const double> features, Label label) {
  if (features.size() != dim_)
    throw Error(Errc::Validation,
                "expected " + std::to_string(dim_) + " features, got " + std::to_string(features.size()));
  for (double v : features)
    if (!std::isfinite(v)) throw Error(Errc::Validation, "non-finite feature value");
  values_.insert(values_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

Label Tree::predict(std::span<const double> x) const noexcept {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? i + 1 : nodes[i].right;
  return nodes[i].vote();
}

std::size_t Tree::depth() const {
  // Preorder walk with an explicit stack of (node, depth).
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(i + 1, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return best;
}

namespace {

void check_input(const ForestModel& m, std::span<const double> x) {
  if (x.size() != m.feature_dim)
    throw Error(Errc::Validation, "model expects " + std::to_string(m.feature_dim) + " features, got " +
                                      std::to_string(x.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::Validation, "non-finite feature value");
}

}  // namespace

std::size_t ForestModel::push_votes(std::span<const double> x) const {
  check_input(*this, x);
  std::size_t votes = 0;
  for (const Tree& t : trees) votes += t.predict(x) == Label::Push ? 1 : 0;
  return votes;
}

Label ForestModel::predict(std::span<const double> x) const {
  const std::size_t push = push_votes(x);
  return 2 * push > trees.size() ? Label::Push : Label::Normal;
}

double ForestModel::predict_proba(std::span<const double> x) const {
  return static_cast<double>(push_votes(x)) / static_cast<double>(trees.size());
}

namespace {

__extension__ typedef __int128 i128;

/// Split quality kept as the exact rational (a*nR + b*nL) / (nL*nR), where
/// a, b are the sums of squared class counts of each child. Larger is better;
/// it equals n times (1 - weighted child Gini).
struct SplitScore {
  i128 num = 0;
  i128 den = 1;

  bool better_than(const SplitScore& o) const noexcept { return num * o.den > o.num * den; }
  bool ties(const SplitScore& o) const noexcept { return num * o.den == o.num * den; }
};

SplitScore score(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0, std::uint64_t r1) {
  const i128 nl = l0 + l1, nr = r0 + r1;
  const i128 a = i128(l0) * l0 + i128(l1) * l1;
  const i128 b = i128(r0) * r0 + i128(r1) * r1;
  return {a * nr + b * nl, nl * nr};
}

double midpoint_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles can round the midpoint up onto `hi`.
  return mid >= hi ? lo : mid;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const ForestParams& params, SplitMix64& rng)
      : data_(data),
        params_(params),
        rng_(rng),
        max_features_(params.resolved_max_features(data.dim())),
        feature_order_(data.dim()) {}

  Tree build(std::vector<std::uint32_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Best {
    bool found = false;
    std::uint32_t feature = 0;
    double threshold = 0.0;
    SplitScore score;
  };

  void grow(std::vector<std::uint32_t>& rows, std::size_t depth) {
    const std::size_t self = tree_.nodes.size();
    tree_.nodes.emplace_back();
    std::array<std::uint64_t, 2> counts{};
    for (std::uint32_t r : rows) ++counts[static_cast<std::size_t>(data_.label(r))];

    const std::size_t n = rows.size();
    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_cap = params_.max_depth && depth >= *params_.max_depth;
    Best best;
    if (!pure && !depth_cap && n >= params_.min_samples_split && n >= 2 * params_.min_samples_leaf)
      best = find_split(rows, counts);

    if (!best.found) {
      tree_.nodes[self].counts = counts;
      return;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(n);
    right.reserve(n);
    for (std::uint32_t r : rows)
      (data_.value(r, best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[self].feature = best.feature;
    tree_.nodes[self].threshold = best.threshold;
    grow(left, depth + 1);
    tree_.nodes[self].right = static_cast<std::uint32_t>(tree_.nodes.size());
    grow(right, depth + 1);
  }

  // Draws features one at a time (partial Fisher-Yates). Features constant
  // within the node do not count toward max_features, so a node only becomes
  // a leaf for lack of candidates after every feature was inspected.
  Best find_split(const std::vector<std::uint32_t>& rows, const std::array<std::uint64_t, 2>& total) {
    const std::size_t dim = data_.dim();
    std::iota(feature_order_.begin(), feature_order_.end(), 0u);
    Best best;
    std::size_t informative = 0;
    std::vector<std::pair<double, std::uint32_t>> sorted(rows.size());
    for (std::size_t k = 0; k < dim && informative < max_features_; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng_.below(dim - k));
      std::swap(feature_order_[k], feature_order_[j]);
      const std::uint32_t f = feature_order_[k];

      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {data_.value(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;
      ++informative;

      std::array<std::uint64_t, 2> left{};
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left[static_cast<std::size_t>(data_.label(sorted[i].second))];
        if (sorted[i].first == sorted[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = sorted.size() - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const SplitScore s = score(left[0], left[1], total[0] - left[0], total[1] - left[1]);
        const double thr = midpoint_threshold(sorted[i].first, sorted[i + 1].first);
        const bool take = !best.found || s.better_than(best.score) ||
                          (s.ties(best.score) && (f < best.feature || (f == best.feature && thr < best.threshold)));
        if (take) best = {true, f, thr, s};
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const ForestParams& params_;
  SplitMix64& rng_;
  std::size_t max_features_;
  std::vector<std::uint32_t> feature_order_;
  Tree tree_;
};

Tree build_tree_for_index(const TrainingSet& data, const ForestParams& params, std::size_t tree_index) {
  SplitMix64 rng = SplitMix64::stream(params.seed, tree_index);
  const std::size_t n = data.size();
  std::vector<std::uint32_t> rows(n);
  if (params.bootstrap) {
    for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n));
  } else {
    std::iota(rows.begin(), rows.end(), 0u);
  }
  return grow_tree(data, std::move(rows), params, rng);
}

}  // namespace

Tree grow_tree(const TrainingSet& data, std::vector<std::uint32_t> rows, const ForestParams& params,
               SplitMix64& rng) {
  params.validate(data.dim());
  if (rows.empty()) throw Error(Errc::Training, "cannot grow a tree on zero rows");
  return TreeBuilder(data, params, rng).build(std::move(rows));
}

ForestModel fit(const TrainingSet& data, const ForestParams& params, std::vector<std::string> feature_names,
                FitOptions options) {
  params.validate(data.dim());
  if (data.size() < 2) throw Error(Errc::Training, "need at least 2 samples");
  if (data.size() > 0xFFFFFFFFull) throw Error(Errc::Training, "too many samples");
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < data.size(); ++i) has[static_cast<std::size_t>(data.label(i))] = true;
  if (!has[0] || !has[1]) throw Error(Errc::Training, "training data must contain both classes");
  if (!feature_names.empty() && feature_names.size() != data.dim())
    throw Error(Errc::Training, "feature_names length must equal the feature dimension");

  ForestModel model;
  model.params = params;
  model.params.max_features = params.resolved_max_features(data.dim());
  model.feature_dim = data.dim();
  model.feature_names = std::move(feature_names);
  if (model.feature_names.empty())
    for (std::size_t i = 0; i < data.dim(); ++i) model.feature_names.push_back("f" + std::to_string(i + 1));
  model.trees.resize(params.n_trees);

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(params.n_trees)));
  if (workers == 1) {
    for (std::size_t i = 0; i < params.n_trees; ++i) model.trees[i] = build_tree_for_index(data, model.params, i);
  } else {
    // Static striping; each tree depends only on its own index.
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < params.n_trees; i += workers)
          model.trees[i] = build_tree_for_index(data, model.params, i);
      });
  }
  return model;
}

// ---- model file ---------------------------------------------------------

namespace {

using ojson = nlohmann::ordered_json;

void emit_tree(const Tree& tree, ojson& out) {
  out = ojson::array();
  for (const TreeNode& n : tree.nodes) {
    if (n.is_leaf())
      out.push_back(ojson{{"n", {n.counts[0], n.counts[1]}}});
    else
      out.push_back(ojson{{"f", n.feature}, {"t", n.threshold}});
  }
}

[[noreturn]] void bad_model(const std::string& why) { throw Error(Errc::ModelFormat, why); }

// Rebuilds `right` links from a preorder listing; returns one past the subtree.
std::size_t link_subtree(Tree& tree, std::size_t i, std::size_t depth) {
  if (i >= tree.nodes.size()) bad_model("truncated tree");
  if (depth > tree.nodes.size()) bad_model("tree too deep");
  if (tree.nodes[i].is_leaf()) return i + 1;
  const std::size_t right = link_subtree(tree, i + 1, depth + 1);
  tree.nodes[i].right = static_cast<std::uint32_t>(right);
  return link_subtree(tree, right, depth + 1);
}

template <typename T>
T get_unsigned(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_unsigned()) bad_model(std::string("missing or invalid '") + key + "'");
  return it->get<T>();
}

}  // namespace

std::string save_model(const ForestModel& m) {
  ojson params{
      {"n_trees", m.params.n_trees},
      {"seed", m.params.seed},
      {"min_samples_split", m.params.min_samples_split},
      {"min_samples_leaf", m.params.min_samples_leaf},
      {"max_features", m.params.resolved_max_features(m.feature_dim)},
      {"max_depth", m.params.max_depth ? ojson(*m.params.max_depth) : ojson(nullptr)},
      {"bootstrap", m.params.bootstrap},
      {"criterion", "gini"},
      {"threshold_rule", "midpoint"},
  };
  // Choices made by this implementation rather than by the caller.
  ojson assumed = ojson::array({"criterion", "threshold_rule"});
  if (m.params.resolved_max_features(m.feature_dim) == ForestParams{}.resolved_max_features(m.feature_dim))
    assumed.push_back("max_features");
  if (!m.params.max_depth) assumed.push_back("max_depth");
  params["assumed_defaults"] = std::move(assumed);
  ojson doc{
      {"format_version", m.format_version},
      {"rng", SplitMix64::kName},
      {"params", std::move(params)},
      {"feature_dim", m.feature_dim},
      {"feature_names", m.feature_names},
      {"trees", ojson::array()},
  };
  for (const Tree& t : m.trees) {
    ojson nodes;
    emit_tree(t, nodes);
    doc["trees"].push_back(std::move(nodes));
  }
  return doc.dump() + "\n";
}

ForestModel load_model(std::string_view text) {
  ojson doc = ojson::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) bad_model("not a JSON object");

  ForestModel m;
  auto version = doc.find("format_version");
  if (version == doc.end() || !version->is_number_integer()) bad_model("missing format_version");
  if (version->get<int>() != kModelFormatVersion)
    bad_model("unsupported format_version " + version->dump() + " (expected " + std::to_string(kModelFormatVersion) + ")");
  auto rng = doc.find("rng");
  if (rng == doc.end() || !rng->is_string() || rng->get<std::string>() != SplitMix64::kName)
    bad_model("unsupported rng");

  auto params_it = doc.find("params");
  if (params_it == doc.end() || !params_it->is_object()) bad_model("missing params");
  const ojson& p = *params_it;
  m.params.n_trees = get_unsigned<std::size_t>(p, "n_trees");
  m.params.seed = get_unsigned<std::uint64_t>(p, "seed");
  m.params.min_samples_split = get_unsigned<std::size_t>(p, "min_samples_split");
  m.params.min_samples_leaf = get_unsigned<std::size_t>(p, "min_samples_leaf");
  m.params.max_features = get_unsigned<std::size_t>(p, "max_features");
  if (auto it = p.find("max_depth"); it != p.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) bad_model("invalid max_depth");
    m.params.max_depth = it->get<std::size_t>();
  }
  if (auto it = p.find("bootstrap"); it == p.end() || !it->is_boolean()) bad_model("invalid bootstrap");
  else m.params.bootstrap = it->get<bool>();

  m.feature_dim = get_unsigned<std::size_t>(doc, "feature_dim");
  try {
    m.params.validate(m.feature_dim);
  } catch (const Error& e) {
    bad_model(e.message());
  }
  auto names = doc.find("feature_names");
  if (names == doc.end() || !names->is_array() || names->size() != m.feature_dim) bad_model("feature_names must list d names");
  for (const auto& n : *names) {
    if (!n.is_string()) bad_model("feature names must be strings");
    m.feature_names.push_back(n.get<std::string>());
  }

  auto trees = doc.find("trees");
  if (trees == doc.end() || !trees->is_array()) bad_model("missing trees");
  if (trees->size() != m.params.n_trees) bad_model("tree count does not match n_trees");
  m.trees.reserve(trees->size());
  for (const ojson& t : *trees) {
    if (!t.is_array() || t.empty()) bad_model("tree must be a non-empty node array");
    if (t.size() >= TreeNode::kLeaf) bad_model("tree too large");
    Tree tree;
    tree.nodes.reserve(t.size());
    for (const ojson& rec : t) {
      if (!rec.is_object()) bad_model("node must be an object");
      TreeNode node;
      if (auto leaf = rec.find("n"); leaf != rec.end()) {
        if (!leaf->is_array() || leaf->size() != 2 || !(*leaf)[0].is_number_unsigned() ||
            !(*leaf)[1].is_number_unsigned())
          bad_model("leaf counts must be two unsigned integers");
        node.counts = {(*leaf)[0].get<std::uint64_t>(), (*leaf)[1].get<std::uint64_t>()};
        if (node.counts[0] + node.counts[1] < m.params.min_samples_leaf) bad_model("leaf smaller than min_samples_leaf");
      } else {
        const std::uint64_t f = get_unsigned<std::uint64_t>(rec, "f");
        if (f >= m.feature_dim) bad_model("feature index " + std::to_string(f) + " out of range");
        auto thr = rec.find("t");
        if (thr == rec.end() || !thr->is_number() || !std::isfinite(thr->get<double>())) bad_model("invalid threshold");
        node.feature = static_cast<std::uint32_t>(f);
        node.threshold = thr->get<double>();
      }
      tree.nodes.push_back(node);
    }
    if (link_subtree(tree, 0, 0) != tree.nodes.size()) bad_model("trailing nodes after tree");
    m.trees.push_back(std::move(tree));
  }
  return m;
}

ForestModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ModelFormat, "cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

void save_model_file(const std::string& path, const ForestModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Config, "cannot write " + path);
  out << save_model(model);
}

}  // namespace pushdet
