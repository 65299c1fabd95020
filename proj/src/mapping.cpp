#include "tonelab/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/parallel.hpp"
#include "tonelab/rng.hpp"

namespace tonelab {

using nlohmann::json;

Eigen::RowVectorXd MappingModel::predict(const Eigen::RowVectorXd& e) const {
    if (e.size() != w.rows() - 1)
        throw DataError("mapping: embedding has dimension " + std::to_string(e.size()) +
                        ", model expects " + std::to_string(w.rows() - 1));
    Eigen::RowVectorXd a(w.rows());
    a(0) = 1.0;
    a.tail(e.size()) = e;
    return a * w;
}

MappingModel train_mapping(const EmbeddingSet& embeddings,
                           const std::vector<std::string>& token_ids,
                           const Eigen::MatrixXd& contours, double ridge) {
    const int n = static_cast<int>(token_ids.size());
    if (n == 0) throw ConfigError("train_mapping: no training tokens");
    if (contours.rows() != n)
        throw DataError("train_mapping: " + std::to_string(n) + " token ids but " +
                        std::to_string(contours.rows()) + " contour rows");
    if (ridge < 0.0) throw ConfigError("train_mapping: ridge must be >= 0");
    const int d = embeddings.dim();
    if (ridge == 0.0 && n < d + 1)
        throw ConfigError("train_mapping: " + std::to_string(n) + " rows cannot determine " +
                          std::to_string(d + 1) +
                          " coefficients without a ridge; set ridge > 0");

    Eigen::MatrixXd a(n, d + 1);
    for (int i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a.row(i).tail(d) = embeddings.row_of(token_ids[static_cast<std::size_t>(i)]);
    }

    Eigen::MatrixXd m = a.transpose() * a;
    // The constant row stays unpenalized so an infinite ridge recovers the
    // per-point column means instead of shrinking predictions to zero.
    for (int j = 1; j <= d; ++j) m(j, j) += ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
        throw DataError("train_mapping: normal equations are singular; increase ridge");

    MappingModel model;
    model.ridge = ridge;
    model.w = ldlt.solve(a.transpose() * contours);
    return model;
}

NNResult evaluate_nn(const MappingModel& model, const EmbeddingSet& embeddings,
                     const std::vector<std::string>& eval_ids,
                     const std::vector<std::string>& pool_ids,
                     const Eigen::MatrixXd& pool_contours,
                     const std::map<std::string, std::string>& word_of) {
    if (pool_ids.empty()) throw ConfigError("evaluate_nn: empty retrieval pool");
    if (pool_contours.rows() != static_cast<Eigen::Index>(pool_ids.size()))
        throw DataError("evaluate_nn: pool ids and contour rows disagree");

    const auto word_for = [&](const std::string& id) -> const std::string& {
        const auto it = word_of.find(id);
        if (it == word_of.end()) throw DataError("evaluate_nn: no word label for token " + id);
        return it->second;
    };

    NNResult result;
    result.n_total = static_cast<int>(eval_ids.size());
    for (const auto& id : eval_ids) {
        const Eigen::RowVectorXd pred = model.predict(embeddings.row_of(id));
        int best = -1;
        double best_sse = 0.0;
        for (Eigen::Index p = 0; p < pool_contours.rows(); ++p) {
            const double sse = (pool_contours.row(p) - pred).squaredNorm();
            const bool better =
                best < 0 || sse < best_sse ||
                (sse == best_sse && pool_ids[static_cast<std::size_t>(p)] <
                                        pool_ids[static_cast<std::size_t>(best)]);
            if (better) {
                best = static_cast<int>(p);
                best_sse = sse;
            }
        }
        const std::string& guess = word_for(pool_ids[static_cast<std::size_t>(best)]);
        result.predicted_word.push_back(guess);
        if (guess == word_for(id)) ++result.n_correct;
    }
    result.accuracy =
        result.n_total == 0 ? 0.0 : static_cast<double>(result.n_correct) / result.n_total;
    return result;
}

double majority_baseline(const std::vector<std::string>& train_ids,
                         const std::vector<std::string>& eval_ids,
                         const std::map<std::string, std::string>& word_of) {
    if (train_ids.empty() || eval_ids.empty())
        throw ConfigError("majority_baseline: empty token list");
    std::map<std::string, int> counts;
    for (const auto& id : train_ids) {
        const auto it = word_of.find(id);
        if (it == word_of.end()) throw DataError("majority_baseline: no word label for " + id);
        ++counts[it->second];
    }
    std::string top;
    int top_count = -1;
    for (const auto& [word, count] : counts) {
        if (count > top_count) {
            top = word;
            top_count = count;
        }
    }
    int correct = 0;
    for (const auto& id : eval_ids) {
        const auto it = word_of.find(id);
        if (it == word_of.end()) throw DataError("majority_baseline: no word label for " + id);
        if (it->second == top) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(eval_ids.size());
}

namespace {

struct LabelSplit {
    std::vector<std::string> train, test;
};

// Stratified split over token ids by label; every label keeps at least one
// token on each side.
LabelSplit split_by_label(const std::vector<std::string>& ids,
                          const std::map<std::string, std::string>& label_of, double holdout,
                          const Rng& run_rng) {
    std::map<std::string, std::vector<std::string>> by_label;
    for (const auto& id : ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end()) throw DataError("split: no label for token " + id);
        by_label[it->second].push_back(id);
    }
    std::vector<std::string> too_small;
    for (const auto& [label, members] : by_label)
        if (members.size() < 2) too_small.push_back(label);
    if (!too_small.empty()) {
        std::string msg = "cannot stratify; labels with fewer than 2 tokens:";
        for (const auto& l : too_small) msg += " " + l;
        throw DataError(msg);
    }
    LabelSplit split;
    for (auto& [label, members] : by_label) {
        Rng rng = run_rng.fork("label:" + label);
        std::sort(members.begin(), members.end());
        rng.shuffle(members);
        const int n = static_cast<int>(members.size());
        int n_test = static_cast<int>(std::lround(holdout * n));
        n_test = std::clamp(n_test, 1, n - 1);
        for (int i = 0; i < n; ++i)
            (i < n_test ? split.test : split.train).push_back(members[static_cast<std::size_t>(i)]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Eigen::MatrixXd rows_for(const ContourMatrix& source, const std::vector<std::string>& ids,
                         const std::map<std::string, Eigen::Index>& row_of) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), source.values.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto it = row_of.find(ids[i]);
        if (it == row_of.end())
            throw DataError("contour source \"" + source.label + "\" is missing token " + ids[i]);
        out.row(static_cast<Eigen::Index>(i)) = source.values.row(it->second);
    }
    return out;
}

std::map<std::string, Eigen::Index> index_rows(const ContourMatrix& source) {
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < source.token_ids.size(); ++i)
        row_of[source.token_ids[i]] = static_cast<Eigen::Index>(i);
    return row_of;
}

// Accuracy of one trained map on one split against one contour source.
struct SplitScores {
    double train_acc = 0.0;
    double test_acc = 0.0;
};

SplitScores score_split(const EmbeddingSet& embeddings, const ContourMatrix& source,
                        const std::map<std::string, Eigen::Index>& row_of,
                        const LabelSplit& split,
                        const std::map<std::string, std::string>& word_of,
                        const DLMOptions& options) {
    const Eigen::MatrixXd train_p = rows_for(source, split.train, row_of);
    const MappingModel model = train_mapping(embeddings, split.train, train_p, options.ridge);

    SplitScores scores;
    scores.train_acc =
        evaluate_nn(model, embeddings, split.train, split.train, train_p, word_of).accuracy;

    std::vector<std::string> pool_ids = split.train;
    if (options.pool_mode == "union") {
        pool_ids.insert(pool_ids.end(), split.test.begin(), split.test.end());
        std::sort(pool_ids.begin(), pool_ids.end());
    } else if (options.pool_mode != "train") {
        throw ConfigError("pool_mode must be \"union\" or \"train\", got \"" + options.pool_mode +
                          "\"");
    }
    const Eigen::MatrixXd pool_p = rows_for(source, pool_ids, row_of);
    scores.test_acc =
        evaluate_nn(model, embeddings, split.test, pool_ids, pool_p, word_of).accuracy;
    return scores;
}

}  // namespace

DLMReport run_dlm_experiment(const EmbeddingSet& embeddings,
                             const std::vector<ContourMatrix>& sources,
                             const std::map<std::string, std::string>& word_of, int runs,
                             std::uint64_t seed, const DLMOptions& options) {
    if (sources.empty()) throw ConfigError("run_dlm_experiment: no contour sources");
    if (runs < 2) throw ConfigError("run_dlm_experiment: need at least 2 runs");
    if (!(options.holdout > 0.0 && options.holdout < 1.0))
        throw ConfigError("run_dlm_experiment: holdout must be in (0,1)");

    std::vector<std::string> ids = sources.front().token_ids;
    std::sort(ids.begin(), ids.end());
    for (const auto& source : sources) {
        std::vector<std::string> other = source.token_ids;
        std::sort(other.begin(), other.end());
        if (other != ids)
            throw DataError("contour sources cover different token sets (\"" +
                            sources.front().label + "\" vs \"" + source.label + "\")");
    }

    std::vector<std::map<std::string, Eigen::Index>> row_maps;
    for (const auto& source : sources) row_maps.push_back(index_rows(source));

    const Rng master(seed);
    std::vector<LabelSplit> splits;
    for (int r = 0; r < runs; ++r)
        splits.push_back(split_by_label(ids, word_of, options.holdout,
                                        master.fork("run:" + std::to_string(r))));

    DLMReport report;
    report.runs = runs;
    report.holdout = options.holdout;
    report.pool_mode = options.pool_mode;
    report.sources.resize(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        report.sources[s].source = sources[s].label;
        report.sources[s].train_acc.resize(static_cast<std::size_t>(runs));
        report.sources[s].test_acc.resize(static_cast<std::size_t>(runs));
    }

    struct Job {
        int run;
        int source;
    };
    std::vector<Job> jobs;
    for (int r = 0; r < runs; ++r)
        for (int s = 0; s < static_cast<int>(sources.size()); ++s) jobs.push_back({r, s});
    parallel_for(static_cast<int>(jobs.size()), options.threads, [&](int j) {
        const auto [r, s] = jobs[static_cast<std::size_t>(j)];
        const SplitScores scores =
            score_split(embeddings, sources[static_cast<std::size_t>(s)],
                        row_maps[static_cast<std::size_t>(s)], splits[static_cast<std::size_t>(r)],
                        word_of, options);
        report.sources[static_cast<std::size_t>(s)].train_acc[static_cast<std::size_t>(r)] =
            scores.train_acc;
        report.sources[static_cast<std::size_t>(s)].test_acc[static_cast<std::size_t>(r)] =
            scores.test_acc;
    });

    for (auto& src : report.sources) {
        src.mean_train = mean(src.train_acc);
        src.mean_test = mean(src.test_acc);
        src.se_test = sample_sd(src.test_acc) / std::sqrt(static_cast<double>(runs));
    }

    for (std::size_t a = 0; a < sources.size(); ++a) {
        for (std::size_t b = a + 1; b < sources.size(); ++b) {
            DLMGap gap;
            gap.a = sources[a].label;
            gap.b = sources[b].label;
            gap.gap = report.sources[a].mean_test - report.sources[b].mean_test;
            std::vector<double> diffs(static_cast<std::size_t>(runs));
            bool all_zero = true;
            for (int r = 0; r < runs; ++r) {
                diffs[static_cast<std::size_t>(r)] =
                    report.sources[a].test_acc[static_cast<std::size_t>(r)] -
                    report.sources[b].test_acc[static_cast<std::size_t>(r)];
                if (diffs[static_cast<std::size_t>(r)] != 0.0) all_zero = false;
            }
            gap.se = sample_sd(diffs) / std::sqrt(static_cast<double>(runs));
            gap.test = all_zero ? TTest{0.0, static_cast<double>(runs - 1), 1.0} : paired_t(diffs);
            report.gaps.push_back(std::move(gap));
        }
    }

    std::vector<double> majority(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r)
        majority[static_cast<std::size_t>(r)] =
            majority_baseline(splits[static_cast<std::size_t>(r)].train,
                              splits[static_cast<std::size_t>(r)].test, word_of);
    report.majority = mean(majority);

    report.permutation = permutation_baseline(embeddings, sources.front(), word_of,
                                              options.permutation_runs, seed, options);
    return report;
}

PermutationBaseline permutation_baseline(const EmbeddingSet& embeddings,
                                         const ContourMatrix& source,
                                         const std::map<std::string, std::string>& word_of,
                                         int runs, std::uint64_t seed,
                                         const DLMOptions& options) {
    if (runs < 1) throw ConfigError("permutation_baseline: need at least 1 run");
    std::vector<std::string> ids = source.token_ids;
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> labels;
    for (const auto& id : ids) {
        const auto it = word_of.find(id);
        if (it == word_of.end()) throw DataError("permutation_baseline: no label for " + id);
        labels.push_back(it->second);
    }
    const auto row_of = index_rows(source);
    const Rng master(seed);

    PermutationBaseline result;
    result.per_run.resize(static_cast<std::size_t>(runs));
    parallel_for(runs, options.threads, [&](int r) {
        Rng rng = master.fork("perm:" + std::to_string(r));
        std::vector<std::string> shuffled = labels;
        rng.shuffle(shuffled);
        std::map<std::string, std::string> permuted;
        for (std::size_t i = 0; i < ids.size(); ++i) permuted[ids[i]] = shuffled[i];
        const LabelSplit split = split_by_label(ids, permuted, options.holdout, rng.fork("split"));
        const SplitScores scores =
            score_split(embeddings, source, row_of, split, permuted, options);
        result.per_run[static_cast<std::size_t>(r)] = scores.test_acc;
    });
    result.mean = mean(result.per_run);
    result.min = *std::min_element(result.per_run.begin(), result.per_run.end());
    result.max = *std::max_element(result.per_run.begin(), result.per_run.end());
    return result;
}

std::vector<CentroidCheck> centroid_contour_check(const MappingModel& model,
                                                  const EmbeddingSet& embeddings,
                                                  const std::map<std::string, std::string>& word_of,
                                                  const FitResult& fit) {
    std::map<std::string, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < embeddings.token_ids.size(); ++i) {
        const auto it = word_of.find(embeddings.token_ids[i]);
        if (it == word_of.end()) continue;
        members[it->second].push_back(static_cast<Eigen::Index>(i));
    }

    std::vector<CentroidCheck> checks;
    for (const auto& [word, rows] : members) {
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(embeddings.dim());
        for (const Eigen::Index r : rows) centroid += embeddings.e.row(r);
        centroid /= static_cast<double>(rows.size());
        const Eigen::RowVectorXd pred = model.predict(centroid);

        const PartialEffect pe = partial_effect(fit, "fs(time,word)", word);
        std::vector<double> a(pe.values.size()), b(pe.values.size());
        for (std::size_t i = 0; i < pe.values.size(); ++i) {
            a[i] = pred(static_cast<Eigen::Index>(i));
            b[i] = pe.values[i];
        }
        const double ma = mean(a);
        const double mb = mean(b);
        double ssa = 0.0, ssb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] -= ma;
            b[i] -= mb;
            ssa += a[i] * a[i];
            ssb += b[i] * b[i];
        }
        CentroidCheck check;
        check.word = word;
        check.r = (ssa > 0.0 && ssb > 0.0) ? pearson(a, b)
                                           : std::numeric_limits<double>::quiet_NaN();
        check.rmse = rmse(a, b);
        checks.push_back(std::move(check));
    }
    return checks;
}

std::string dlm_json(const DLMReport& report) {
    json j;
    j["runs"] = report.runs;
    j["holdout"] = report.holdout;
    j["pool_mode"] = report.pool_mode;
    json sources = json::array();
    for (const auto& s : report.sources)
        sources.push_back({{"source", s.source},
                           {"train_acc", s.train_acc},
                           {"test_acc", s.test_acc},
                           {"mean_train", s.mean_train},
                           {"mean_test", s.mean_test},
                           {"se_test", s.se_test}});
    j["sources"] = sources;
    json gaps = json::array();
    for (const auto& g : report.gaps)
        gaps.push_back({{"a", g.a},
                        {"b", g.b},
                        {"gap", g.gap},
                        {"se", g.se},
                        {"t", g.test.t},
                        {"df", g.test.df},
                        {"p", g.test.p}});
    j["gaps"] = gaps;
    j["majority"] = report.majority;
    j["permutation"] = {{"mean", report.permutation.mean},
                        {"min", report.permutation.min},
                        {"max", report.permutation.max},
                        {"per_run", report.permutation.per_run}};
    return j.dump(2) + "\n";
}

}  // namespace tonelab
