#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "portml/featfactory.hpp"

namespace portml::learners {

enum class Algorithm { decision_tree, random_forest, extra_trees, scaled_logistic };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct HyperParams {
    Algorithm algorithm = Algorithm::decision_tree;
    int max_depth = 10;
    int min_samples_split = 10;
    int n_estimators = 200;
    bool bootstrap = true;  // test hook; random_forest only
    std::string penalty = "l2";
    double regularization_c = 1.0;
    uint64_t seed = 0;

    std::string describe() const;
};

struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0;
    int left = -1, right = -1;
    double score = 0;  // leaf: positive-class fraction
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(const double* row) const;
};

class TrainedModel {
public:
    HyperParams params;
    uint64_t schema_hash = 0;
    std::string split_id;
    bool degenerate = false;  // single-class training set

    std::vector<Tree> trees;
    // scaled logistic state
    std::vector<double> feat_mean, feat_scale, coef;
    double intercept = 0;

    double predict_row(const double* row, size_t n_cols) const;
    // Rejects matrices whose schema hash differs from training.
    std::vector<double> predict(const featfactory::FeatureMatrix& X) const;

    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);
};

// Labels are 0/1, aligned with X rows. Rows whose label is undetermined must
// be filtered out by the caller before training.
TrainedModel train(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                   const HyperParams& hp);

TrainedModel train_tree(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                        const HyperParams& hp);
TrainedModel train_forest(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                          const HyperParams& hp);
TrainedModel train_extra(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                         const HyperParams& hp);
TrainedModel train_scaled_logistic(const featfactory::FeatureMatrix& X,
                                   const std::vector<int>& y, const HyperParams& hp);

double gini_impurity(int64_t n_pos, int64_t n_total);

// Objective and gradient of the standardized logistic problem; exposed for
// finite-difference checks. w has n_cols entries, gradient output has
// n_cols + 1 (intercept last).
double logistic_objective(const std::vector<double>& X, size_t n_rows, size_t n_cols,
                          const std::vector<int>& y, const std::vector<double>& w,
                          double intercept, double l2_inv_c);
void logistic_gradient(const std::vector<double>& X, size_t n_rows, size_t n_cols,
                       const std::vector<int>& y, const std::vector<double>& w,
                       double intercept, double l2_inv_c, std::vector<double>& grad_out);

struct RocPoint {
    double threshold;
    double tpr;
    double fpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // high threshold (0,0) to low threshold (1,1)
    double auc = 0;
};

// Thresholds are placed strictly between adjacent distinct score values
// (plus one above the max and one below the min), matching the strict '>'
// selection rule used downstream. Throws when labels are single-class.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Argmax of tpr - fpr; ties broken toward the higher threshold.
double youden_threshold(const RocCurve& curve);

}  // namespace portml::learners
