#include "portml/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "portml/rng.hpp"

namespace portml::learners {

using json = nlohmann::json;

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::decision_tree: return "decision_tree";
        case Algorithm::random_forest: return "random_forest";
        case Algorithm::extra_trees: return "extra_trees";
        case Algorithm::scaled_logistic: return "scaled_logistic";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "decision_tree") return Algorithm::decision_tree;
    if (s == "random_forest") return Algorithm::random_forest;
    if (s == "extra_trees") return Algorithm::extra_trees;
    if (s == "scaled_logistic") return Algorithm::scaled_logistic;
    throw std::invalid_argument("unknown algorithm: " + s);
}

std::string HyperParams::describe() const {
    std::string s = algorithm_name(algorithm);
    if (algorithm == Algorithm::scaled_logistic) {
        s += "_" + penalty + "_C" + std::to_string(regularization_c);
    } else {
        s += "_d" + std::to_string(max_depth) + "_m" + std::to_string(min_samples_split);
        if (algorithm != Algorithm::decision_tree)
            s += "_n" + std::to_string(n_estimators);
    }
    return s;
}

double gini_impurity(int64_t n_pos, int64_t n_total) {
    if (n_total == 0) return 0.0;
    double p = static_cast<double>(n_pos) / n_total;
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

double Tree::predict(const double* row) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                 : nodes[node].right;
    }
    return nodes[node].score;
}

namespace {

struct TreeBuilder {
    const double* X;
    size_t n_cols;
    const std::vector<int>* y;
    const HyperParams* hp;
    bool extra_mode;
    int max_features;  // <= 0: all
    rng::Rng* rng;
    std::vector<TreeNode> nodes;

    double value(size_t row, int col) const { return X[row * n_cols + col]; }

    struct Split {
        int feature = -1;
        double threshold = 0;
        double decrease = 0;
    };

    // Exhaustive best-Gini split over midpoints of sorted distinct values.
    bool eval_feature_exhaustive(const std::vector<size_t>& rows, int f, int64_t pos_total,
                                 double parent_gini, Split& best) const {
        std::vector<std::pair<double, int>> vals;
        vals.reserve(rows.size());
        for (size_t r : rows) vals.emplace_back(value(r, f), (*y)[r]);
        std::sort(vals.begin(), vals.end());
        int64_t n = static_cast<int64_t>(vals.size());
        int64_t left_pos = 0;
        bool improved = false;
        for (int64_t i = 0; i + 1 < n; ++i) {
            left_pos += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            int64_t nl = i + 1, nr = n - nl;
            double g = (nl * gini_impurity(left_pos, nl) +
                        nr * gini_impurity(pos_total - left_pos, nr)) /
                       n;
            double dec = parent_gini - g;
            if (dec > best.decrease + 1e-15) {
                best = {f, (vals[i].first + vals[i + 1].first) / 2.0, dec};
                improved = true;
            }
        }
        return improved;
    }

    // Extra-trees: one uniformly random threshold per sampled feature.
    bool eval_feature_random(const std::vector<size_t>& rows, int f, int64_t pos_total,
                             double parent_gini, Split& best) const {
        double lo = value(rows[0], f), hi = lo;
        for (size_t r : rows) {
            double v = value(r, f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) return false;
        double t = rng->uniform(lo, hi);
        int64_t nl = 0, lp = 0;
        for (size_t r : rows) {
            if (value(r, f) <= t) {
                ++nl;
                lp += (*y)[r];
            }
        }
        int64_t n = static_cast<int64_t>(rows.size()), nr = n - nl;
        if (nl == 0 || nr == 0) return false;
        double g = (nl * gini_impurity(lp, nl) + nr * gini_impurity(pos_total - lp, nr)) / n;
        double dec = parent_gini - g;
        if (dec > best.decrease + 1e-15) {
            best = {f, t, dec};
            return true;
        }
        return false;
    }

    int build(const std::vector<size_t>& rows, int depth) {
        int64_t pos = 0;
        for (size_t r : rows) pos += (*y)[r];
        int64_t n = static_cast<int64_t>(rows.size());
        double score = n > 0 ? static_cast<double>(pos) / n : 0.0;

        auto make_leaf = [&]() {
            nodes.push_back({-1, 0, -1, -1, score});
            return static_cast<int>(nodes.size()) - 1;
        };
        if (pos == 0 || pos == n) return make_leaf();
        if (depth >= hp->max_depth) return make_leaf();
        if (n < hp->min_samples_split) return make_leaf();

        double parent_gini = gini_impurity(pos, n);

        std::vector<int> feats(n_cols);
        std::iota(feats.begin(), feats.end(), 0);
        if (max_features > 0 && static_cast<size_t>(max_features) < n_cols) {
            for (size_t i = n_cols; i > 1; --i)
                std::swap(feats[i - 1], feats[rng->below(i)]);
            feats.resize(max_features);
            std::sort(feats.begin(), feats.end());
        }

        Split best;
        for (int f : feats) {
            if (extra_mode) eval_feature_random(rows, f, pos, parent_gini, best);
            else eval_feature_exhaustive(rows, f, pos, parent_gini, best);
        }
        if (best.feature < 0) return make_leaf();

        std::vector<size_t> left, right;
        for (size_t r : rows) {
            if (value(r, best.feature) <= best.threshold) left.push_back(r);
            else right.push_back(r);
        }
        if (left.empty() || right.empty()) return make_leaf();

        int self = static_cast<int>(nodes.size());
        nodes.push_back({best.feature, best.threshold, -1, -1, score});
        nodes[self].left = build(left, depth + 1);
        nodes[self].right = build(right, depth + 1);
        return self;
    }
};

Tree grow_tree(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
               const std::vector<size_t>& rows, const HyperParams& hp, bool extra_mode,
               int max_features, rng::Rng& rng) {
    TreeBuilder b{X.values.data(), X.n_cols(), &y, &hp, extra_mode, max_features, &rng, {}};
    b.build(rows, 0);
    Tree t;
    t.nodes = std::move(b.nodes);
    return t;
}

void check_training_input(const featfactory::FeatureMatrix& X, const std::vector<int>& y) {
    if (X.n_rows() != y.size())
        throw std::invalid_argument("label count does not match row count");
    if (X.n_rows() == 0) throw std::invalid_argument("empty training set");
    for (double v : X.values)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
}

bool single_class(const std::vector<int>& y) {
    for (int v : y)
        if (v != y[0]) return false;
    return true;
}

TrainedModel degenerate_model(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                              const HyperParams& hp) {
    std::cerr << "warning: single-class training labels; constant model\n";
    TrainedModel m;
    m.params = hp;
    m.schema_hash = X.schema_hash;
    m.degenerate = true;
    Tree t;
    t.nodes.push_back({-1, 0, -1, -1, static_cast<double>(y.empty() ? 0 : y[0])});
    m.trees.push_back(std::move(t));
    return m;
}

}  // namespace

TrainedModel train_tree(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                        const HyperParams& hp) {
    check_training_input(X, y);
    if (single_class(y)) return degenerate_model(X, y, hp);
    TrainedModel m;
    m.params = hp;
    m.params.algorithm = Algorithm::decision_tree;
    m.schema_hash = X.schema_hash;
    rng::Rng rng(hp.seed);
    std::vector<size_t> rows(X.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    m.trees.push_back(grow_tree(X, y, rows, hp, false, 0, rng));
    return m;
}

static TrainedModel train_ensemble(const featfactory::FeatureMatrix& X,
                                   const std::vector<int>& y, const HyperParams& hp,
                                   bool extra_mode) {
    check_training_input(X, y);
    if (single_class(y)) return degenerate_model(X, y, hp);
    TrainedModel m;
    m.params = hp;
    m.params.algorithm = extra_mode ? Algorithm::extra_trees : Algorithm::random_forest;
    m.schema_hash = X.schema_hash;
    rng::Rng master(hp.seed);
    int max_features = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.n_cols()))));
    for (int t = 0; t < hp.n_estimators; ++t) {
        rng::Rng tree_rng(master.fork_seed());
        std::vector<size_t> rows;
        if (!extra_mode && hp.bootstrap) {
            rows.resize(X.n_rows());
            for (auto& r : rows) r = tree_rng.below(X.n_rows());
        } else {
            rows.resize(X.n_rows());
            std::iota(rows.begin(), rows.end(), 0);
        }
        m.trees.push_back(grow_tree(X, y, rows, hp, extra_mode, max_features, tree_rng));
    }
    return m;
}

TrainedModel train_forest(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                          const HyperParams& hp) {
    return train_ensemble(X, y, hp, false);
}

TrainedModel train_extra(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                         const HyperParams& hp) {
    return train_ensemble(X, y, hp, true);
}

double logistic_objective(const std::vector<double>& X, size_t n_rows, size_t n_cols,
                          const std::vector<int>& y, const std::vector<double>& w,
                          double intercept, double l2_inv_c) {
    double loss = 0;
    for (size_t i = 0; i < n_rows; ++i) {
        double margin = intercept;
        for (size_t j = 0; j < n_cols; ++j) margin += w[j] * X[i * n_cols + j];
        // log(1 + e^m) - y m, computed stably
        double l = margin > 0 ? margin + std::log1p(std::exp(-margin))
                              : std::log1p(std::exp(margin));
        loss += l - y[i] * margin;
    }
    loss /= n_rows;
    if (l2_inv_c > 0) {
        double s = 0;
        for (double v : w) s += v * v;
        loss += l2_inv_c * 0.5 * s;
    }
    return loss;
}

void logistic_gradient(const std::vector<double>& X, size_t n_rows, size_t n_cols,
                       const std::vector<int>& y, const std::vector<double>& w,
                       double intercept, double l2_inv_c, std::vector<double>& grad_out) {
    grad_out.assign(n_cols + 1, 0.0);
    for (size_t i = 0; i < n_rows; ++i) {
        double margin = intercept;
        for (size_t j = 0; j < n_cols; ++j) margin += w[j] * X[i * n_cols + j];
        double p = 1.0 / (1.0 + std::exp(-margin));
        double d = p - y[i];
        for (size_t j = 0; j < n_cols; ++j) grad_out[j] += d * X[i * n_cols + j];
        grad_out[n_cols] += d;
    }
    for (auto& g : grad_out) g /= n_rows;
    if (l2_inv_c > 0)
        for (size_t j = 0; j < n_cols; ++j) grad_out[j] += l2_inv_c * w[j];
}

TrainedModel train_scaled_logistic(const featfactory::FeatureMatrix& X,
                                   const std::vector<int>& y, const HyperParams& hp) {
    check_training_input(X, y);
    if (single_class(y)) return degenerate_model(X, y, hp);
    const size_t n = X.n_rows(), p = X.n_cols();

    TrainedModel m;
    m.params = hp;
    m.params.algorithm = Algorithm::scaled_logistic;
    m.schema_hash = X.schema_hash;

    // z-score standardization with training statistics
    m.feat_mean.assign(p, 0.0);
    m.feat_scale.assign(p, 1.0);
    for (size_t j = 0; j < p; ++j) {
        double s = 0;
        for (size_t i = 0; i < n; ++i) s += X.at(i, j);
        m.feat_mean[j] = s / n;
    }
    for (size_t j = 0; j < p; ++j) {
        double s2 = 0;
        for (size_t i = 0; i < n; ++i) {
            double d = X.at(i, j) - m.feat_mean[j];
            s2 += d * d;
        }
        double sd = std::sqrt(s2 / n);
        m.feat_scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    std::vector<double> Z(n * p);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < p; ++j)
            Z[i * p + j] = (X.at(i, j) - m.feat_mean[j]) / m.feat_scale[j];

    const bool l1 = hp.penalty == "l1";
    const double inv_c = 1.0 / hp.regularization_c;
    const double l2_inv_c = l1 ? 0.0 : inv_c;

    std::vector<double> w(p, 0.0), grad;
    double b = 0;
    double step = 1.0;
    auto smooth_obj = [&](const std::vector<double>& wv, double bv) {
        return logistic_objective(Z, n, p, y, wv, bv, l2_inv_c);
    };
    auto full_obj = [&](const std::vector<double>& wv, double bv) {
        double o = smooth_obj(wv, bv);
        if (l1) {
            double s = 0;
            for (double v : wv) s += std::abs(v);
            o += inv_c * s;
        }
        return o;
    };

    double obj = full_obj(w, b);
    double smooth_w = smooth_obj(w, b);
    const int max_iter = 10000;
    for (int iter = 0; iter < max_iter; ++iter) {
        logistic_gradient(Z, n, p, y, w, b, l2_inv_c, grad);
        std::vector<double> wn(p);
        double bn = b;
        double smooth_n = smooth_w;
        // Backtracking on the smooth part; for l1 the step applies the
        // soft-threshold proximal operator (ISTA).
        double t = step;
        for (int bt = 0; bt < 60; ++bt) {
            for (size_t j = 0; j < p; ++j) {
                double v = w[j] - t * grad[j];
                if (l1) {
                    double lam = t * inv_c;
                    v = v > lam ? v - lam : (v < -lam ? v + lam : 0.0);
                }
                wn[j] = v;
            }
            bn = b - t * grad[p];
            smooth_n = smooth_obj(wn, bn);
            // Quadratic upper-bound test on the smooth part.
            double bound = smooth_w;
            for (size_t j = 0; j < p; ++j) {
                double d = wn[j] - w[j];
                bound += grad[j] * d + d * d / (2 * t);
            }
            double db = bn - b;
            bound += grad[p] * db + db * db / (2 * t);
            if (smooth_n <= bound + 1e-15) break;
            t *= 0.5;
        }
        step = t * 1.5;
        double new_obj = full_obj(wn, bn);
        double rel = std::abs(obj - new_obj) / std::max(std::abs(obj), 1e-12);
        w.swap(wn);
        b = bn;
        obj = new_obj;
        smooth_w = smooth_n;
        if (rel < 1e-8) break;
    }
    m.coef = std::move(w);
    m.intercept = b;
    return m;
}

double TrainedModel::predict_row(const double* row, size_t n_cols) const {
    if (params.algorithm == Algorithm::scaled_logistic && !degenerate) {
        double margin = intercept;
        for (size_t j = 0; j < n_cols; ++j)
            margin += coef[j] * (row[j] - feat_mean[j]) / feat_scale[j];
        return 1.0 / (1.0 + std::exp(-margin));
    }
    double s = 0;
    for (const auto& t : trees) s += t.predict(row);
    return s / trees.size();
}

std::vector<double> TrainedModel::predict(const featfactory::FeatureMatrix& X) const {
    if (X.schema_hash != schema_hash)
        throw std::invalid_argument("feature schema hash mismatch: model trained on " +
                                    std::to_string(schema_hash) + ", given " +
                                    std::to_string(X.schema_hash));
    std::vector<double> out(X.n_rows());
    for (size_t i = 0; i < X.n_rows(); ++i)
        out[i] = predict_row(&X.values[i * X.n_cols()], X.n_cols());
    return out;
}

void TrainedModel::save(const std::string& path) const {
    json j;
    j["format_version"] = 1;
    j["algorithm"] = algorithm_name(params.algorithm);
    j["max_depth"] = params.max_depth;
    j["min_samples_split"] = params.min_samples_split;
    j["n_estimators"] = params.n_estimators;
    j["bootstrap"] = params.bootstrap;
    j["penalty"] = params.penalty;
    j["regularization_c"] = params.regularization_c;
    j["seed"] = params.seed;
    j["schema_hash"] = schema_hash;
    j["split_id"] = split_id;
    j["degenerate"] = degenerate;
    json jt = json::array();
    for (const auto& t : trees) {
        json jn = json::array();
        for (const auto& n : t.nodes)
            jn.push_back({n.feature, n.threshold, n.left, n.right, n.score});
        jt.push_back(std::move(jn));
    }
    j["trees"] = std::move(jt);
    j["feat_mean"] = feat_mean;
    j["feat_scale"] = feat_scale;
    j["coef"] = coef;
    j["intercept"] = intercept;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file " + path);
    out << j.dump();
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file " + path);
    json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported model format version");
    TrainedModel m;
    m.params.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.params.max_depth = j.at("max_depth").get<int>();
    m.params.min_samples_split = j.at("min_samples_split").get<int>();
    m.params.n_estimators = j.at("n_estimators").get<int>();
    m.params.bootstrap = j.at("bootstrap").get<bool>();
    m.params.penalty = j.at("penalty").get<std::string>();
    m.params.regularization_c = j.at("regularization_c").get<double>();
    m.params.seed = j.at("seed").get<uint64_t>();
    m.schema_hash = j.at("schema_hash").get<uint64_t>();
    m.split_id = j.at("split_id").get<std::string>();
    m.degenerate = j.at("degenerate").get<bool>();
    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt)
            t.nodes.push_back({jn[0].get<int>(), jn[1].get<double>(), jn[2].get<int>(),
                               jn[3].get<int>(), jn[4].get<double>()});
        m.trees.push_back(std::move(t));
    }
    m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
    m.feat_scale = j.at("feat_scale").get<std::vector<double>>();
    m.coef = j.at("coef").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    return m;
}

TrainedModel train(const featfactory::FeatureMatrix& X, const std::vector<int>& y,
                   const HyperParams& hp) {
    switch (hp.algorithm) {
        case Algorithm::decision_tree: return train_tree(X, y, hp);
        case Algorithm::random_forest: return train_forest(X, y, hp);
        case Algorithm::extra_trees: return train_extra(X, y, hp);
        case Algorithm::scaled_logistic: return train_scaled_logistic(X, y, hp);
    }
    throw std::invalid_argument("bad algorithm");
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("scores/labels size mismatch or empty");
    int64_t pos = 0;
    for (int v : labels) pos += v;
    int64_t neg = static_cast<int64_t>(labels.size()) - pos;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("ROC undefined for single-class labels");

    std::vector<double> uniq = scores;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    // Thresholds between adjacent distinct scores; selection rule is strictly
    // greater-than, so t = max score selects nothing and t below min selects all.
    std::vector<double> thresholds;
    thresholds.push_back(uniq.back());
    for (size_t i = uniq.size() - 1; i > 0; --i)
        thresholds.push_back((uniq[i - 1] + uniq[i]) / 2.0);
    thresholds.push_back(uniq.front() - 1.0);

    RocCurve c;
    for (double t : thresholds) {
        int64_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] > t) {
                if (labels[i]) ++tp;
                else ++fp;
            }
        }
        c.points.push_back({t, static_cast<double>(tp) / pos, static_cast<double>(fp) / neg});
    }
    double auc = 0;
    for (size_t i = 1; i < c.points.size(); ++i) {
        double dx = c.points[i].fpr - c.points[i - 1].fpr;
        auc += dx * (c.points[i].tpr + c.points[i - 1].tpr) / 2.0;
    }
    c.auc = auc;
    return c;
}

double youden_threshold(const RocCurve& curve) {
    if (curve.points.empty()) throw std::invalid_argument("empty ROC curve");
    double best_j = -2, best_t = 0;
    for (const auto& p : curve.points) {
        double j = p.tpr - p.fpr;
        if (j > best_j || (j == best_j && p.threshold > best_t)) {
            best_j = j;
            best_t = p.threshold;
        }
    }
    return best_t;
}

}  // namespace portml::learners
