#include "defersim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "defersim/dsim.hpp"
#include "defersim/simplex.hpp"

namespace defersim {

Dataset gen_cluster_data(const ClusterSpec& spec) {
    Rng rng(spec.seed);
    double mu = rng.uniform01();
    double sd1 = std::sqrt(rng.uniform01());
    double sd2 = std::sqrt(rng.uniform01());

    Dataset ds;
    ds.groups = GroupMap({"blue", "orange"});
    ds.dim = 2;
    GroupId orange = ds.groups.id_of("orange");
    GroupId blue = ds.groups.id_of("blue");

    long id = 0;
    auto add = [&](double center, GroupId g, int label) {
        Sample s;
        s.id = id++;
        s.group = g;
        s.true_label = label;
        s.features = {center + sd1 * rng.normal(), center + sd2 * rng.normal()};
        ds.samples.push_back(std::move(s));
    };
    for (int i = 0; i < spec.counts[0]; ++i) add(mu, orange, 0);
    for (int i = 0; i < spec.counts[1]; ++i) add(mu + spec.offset_mid, orange, 1);
    for (int i = 0; i < spec.counts[2]; ++i) {
        int label = rng.bernoulli(0.5) ? 1 : 0;
        add(mu + spec.offset_far, blue, label);
    }
    return ds;
}

namespace {

// Unit vector of `dim` standard normals; redraws the (measure-zero) null case.
std::vector<double> random_unit(Rng& rng, int dim) {
    std::vector<double> v(static_cast<size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
    } while (norm <= 1e-12);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

Dataset gen_cm_surrogate(const CMSpec& spec) {
    Rng rng(spec.seed);
    std::vector<double> g = random_unit(rng, spec.dim);
    // Label direction orthogonal to the group direction, so dialect never
    // predicts the label.
    std::vector<double> w(static_cast<size_t>(spec.dim));
    double norm = 0.0;
    do {
        w = random_unit(rng, spec.dim);
        double proj = 0.0;
        for (int j = 0; j < spec.dim; ++j) proj += w[static_cast<size_t>(j)] * g[static_cast<size_t>(j)];
        norm = 0.0;
        for (int j = 0; j < spec.dim; ++j) {
            w[static_cast<size_t>(j)] -= proj * g[static_cast<size_t>(j)];
            norm += w[static_cast<size_t>(j)] * w[static_cast<size_t>(j)];
        }
    } while (norm <= 1e-12);
    norm = std::sqrt(norm);
    for (double& x : w) x /= norm;

    Dataset ds;
    ds.groups = GroupMap({"aae", "non_aae"});
    ds.dim = static_cast<size_t>(spec.dim);
    GroupId aae = ds.groups.id_of("aae");
    GroupId non_aae = ds.groups.id_of("non_aae");
    const double half = spec.separation / 2.0;

    for (int i = 0; i < spec.total; ++i) {
        bool is_aae = rng.bernoulli(spec.aae_fraction);
        Sample s;
        s.id = i;
        s.group = is_aae ? aae : non_aae;
        s.features.resize(static_cast<size_t>(spec.dim));
        double sign = is_aae ? -1.0 : 1.0;
        double score = 0.0;
        for (int j = 0; j < spec.dim; ++j) {
            double x = sign * half * g[static_cast<size_t>(j)] + rng.normal();
            s.features[static_cast<size_t>(j)] = x;
            score += w[static_cast<size_t>(j)] * x;
        }
        int label = score > 0.0 ? 1 : 0;
        if (rng.bernoulli(spec.label_noise)) label = 1 - label;
        s.true_label = label;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_embeddings(const std::string& path) { return load_dataset(path); }

EvalMode eval_mode_from_name(const std::string& name) {
    if (name == "full") return EvalMode::full;
    if (name == "committee") return EvalMode::committee;
    throw ConfigError("unknown evaluation mode: " + name);
}

RunMetrics evaluate(const PipelineView& view, std::span<const Sample> test,
                    size_t group_count, EvalMode mode, int k, uint64_t seed,
                    int repetitions) {
    if (test.empty()) throw ConfigError("evaluation needs a non-empty test set");
    if (!view.panel || !view.classifier || !view.weights)
        throw ConfigError("incomplete pipeline view");
    if (repetitions < 1) throw ConfigError("evaluation repetitions must be at least 1");

    const size_t slots = view.panel->slot_count();
    std::vector<long> correct(group_count, 0), total(group_count, 0);
    std::vector<double> defer(slots, 0.0);
    double cost_sum = 0.0;
    std::vector<int> drawn, distinct;

    for (int rep = 0; rep < repetitions; ++rep) {
        std::vector<Rng> expert_rngs =
            make_expert_rngs(derive_seed(seed, "eval-experts", static_cast<uint64_t>(rep)),
                             view.panel->size());
        Rng committee_rng(derive_seed(seed, "eval-committee", static_cast<uint64_t>(rep)));

        for (const Sample& s : test) {
            PredictionVector y = prediction_vector(*view.panel, *view.classifier, s, expert_rngs);
            SimplexVector d = view.weights(s);
            int decision;
            if (mode == EvalMode::full) {
                decision = aggregate_full(d, y);
                for (size_t i = 0; i < view.panel->size(); ++i)
                    cost_sum += view.panel->experts[i].cost(s);
                for (size_t i = 0; i < slots; ++i) defer[i] += d[i];
            } else {
                decision = aggregate_committee(d, y, k, committee_rng, &drawn);
                for (int slot : drawn) defer[static_cast<size_t>(slot)] += 1.0;
                distinct = drawn;
                std::sort(distinct.begin(), distinct.end());
                distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
                for (int slot : distinct)
                    if (static_cast<size_t>(slot) < view.panel->size())
                        cost_sum += view.panel->experts[static_cast<size_t>(slot)].cost(s);
            }
            ++total[static_cast<size_t>(s.group)];
            if (decision == s.true_label) ++correct[static_cast<size_t>(s.group)];
        }
    }

    RunMetrics m;
    m.acc_by_group.resize(group_count, 0.0);
    long csum = 0, tsum = 0;
    for (size_t g = 0; g < group_count; ++g) {
        csum += correct[g];
        tsum += total[g];
        m.acc_by_group[g] = total[g] > 0 ? static_cast<double>(correct[g]) / total[g] : 0.0;
    }
    m.overall = tsum > 0 ? static_cast<double>(csum) / tsum : 0.0;
    auto [lo, hi] = std::minmax_element(m.acc_by_group.begin(), m.acc_by_group.end());
    m.disparity = m.acc_by_group.empty() ? 0.0 : *hi - *lo;
    const double denom = static_cast<double>(test.size()) * repetitions;
    m.mean_cost = cost_sum / denom;
    m.deferral_rate.resize(slots, 0.0);
    double weight_denom = mode == EvalMode::committee ? denom * k : denom;
    for (size_t i = 0; i < slots; ++i) m.deferral_rate[i] = defer[i] / weight_denom;
    return m;
}

std::unique_ptr<Classifier> build_classifier(const RunConfig& cfg, size_t dim, uint64_t seed) {
    if (cfg.classifier_kind == "cart") {
        CartConfig cc;
        cc.max_depth = cfg.cart_depth;
        cc.min_leaf = cfg.cart_min_leaf;
        return std::make_unique<CartClassifier>(cc, static_cast<size_t>(cfg.cart_window));
    }
    std::vector<int> dims;
    dims.push_back(static_cast<int>(dim));
    for (int h : cfg.classifier_hidden) dims.push_back(h);
    dims.push_back(1);
    Network net(dims, Head::sigmoid);
    Rng rng(derive_seed(seed, "classifier-init"));
    net.init_uniform(rng);
    bool adam = cfg.classifier_optimizer.empty() ? cfg.train.adam_main
                                                 : cfg.classifier_optimizer == "adam";
    OptimizerState opt =
        adam ? OptimizerState::adam(cfg.train.eta) : OptimizerState::plain(cfg.train.eta);
    return std::make_unique<NetworkClassifier>(std::move(net), std::move(opt));
}

DSimTable build_dsim(const RunConfig& cfg, const ExpertPanel& panel, const GroupMap& groups,
                     uint64_t seed) {
    if (cfg.dsim_kind == "file") {
        if (cfg.dsim_path.empty()) throw ConfigError("dsim.kind=file needs dsim.path");
        return load_dsim(cfg.dsim_path, groups);
    }
    if (cfg.task == "cluster") {
        if (cfg.dsim_kind == "cm") throw ConfigError("dsim.kind=cm needs task=cm-surrogate");
        double s = cfg.dsim_kind == "uniform" ? 0.5 : cfg.s;
        return make_cluster_dsim(s, groups);
    }
    if (cfg.dsim_kind == "cluster") throw ConfigError("dsim.kind=cluster needs task=cluster");
    if (cfg.dsim_kind == "uniform") {
        DSimTable t(panel.slot_count(), groups);
        for (size_t g = 0; g < groups.size(); ++g) {
            for (size_t i = 0; i < panel.size(); ++i) t.set(i, static_cast<GroupId>(g), 1.0);
            t.set(panel.size(), static_cast<GroupId>(g), cfg.classifier_entry);
        }
        return t;
    }
    Rng rng(derive_seed(seed, "dsim"));
    return make_cm_dsim(panel, cfg.n_s, groups, rng, cfg.classifier_entry);
}

Dataset build_dataset(const RunConfig& cfg, uint64_t seed) {
    if (!cfg.data_path.empty()) return load_embeddings(cfg.data_path);
    if (cfg.task == "cluster") {
        ClusterSpec sp;
        sp.seed = derive_seed(seed, "data");
        sp.counts = {cfg.cluster_counts[0], cfg.cluster_counts[1], cfg.cluster_counts[2]};
        sp.offset_mid = cfg.offset_mid;
        sp.offset_far = cfg.offset_far;
        return gen_cluster_data(sp);
    }
    CMSpec sp;
    sp.seed = derive_seed(seed, "data");
    sp.total = cfg.cm_total;
    sp.dim = cfg.dim;
    sp.aae_fraction = cfg.aae_fraction;
    sp.separation = cfg.separation;
    sp.label_noise = cfg.label_noise;
    return gen_cm_surrogate(sp);
}

void standardize_features(std::vector<Sample>& samples, size_t stats_count,
                          double center_fraction) {
    if (samples.empty() || stats_count == 0) return;
    stats_count = std::min(stats_count, samples.size());
    const size_t dim = samples.front().features.size();
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (size_t i = 0; i < stats_count; ++i)
        for (size_t d = 0; d < dim; ++d) mean[d] += samples[i].features[d];
    for (double& m : mean) m /= static_cast<double>(stats_count);
    for (size_t i = 0; i < stats_count; ++i)
        for (size_t d = 0; d < dim; ++d) {
            double c = samples[i].features[d] - mean[d];
            var[d] += c * c;
        }
    std::vector<double> scale(dim, 1.0);
    for (size_t d = 0; d < dim; ++d) {
        double sd = std::sqrt(var[d] / static_cast<double>(stats_count));
        if (sd > 1e-12) scale[d] = 1.0 / sd;
    }
    for (Sample& s : samples)
        for (size_t d = 0; d < dim; ++d)
            s.features[d] = (s.features[d] - center_fraction * mean[d]) * scale[d];
}

RunOutput run_once(const RunConfig& cfg, uint64_t seed) {
    Dataset ds = build_dataset(cfg, seed);
    const size_t n = ds.samples.size();
    if (n < 2) throw ConfigError("dataset too small to split");

    std::vector<Sample> samples = std::move(ds.samples);
    Rng shuffle_rng(derive_seed(seed, "shuffle"));
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i)));
        std::swap(samples[i], samples[j]);
    }
    size_t n_train = static_cast<size_t>(std::llround(cfg.train_fraction * n));
    n_train = std::clamp<size_t>(n_train, 1, n - 1);
    if (cfg.standardize) standardize_features(samples, n_train, cfg.center);
    std::span<const Sample> train(samples.data(), n_train);
    std::span<const Sample> test(samples.data() + n_train, n - n_train);

    ExpertPanel panel =
        cfg.task == "cluster" ? make_cluster_experts(ds.groups) : make_cm_experts(ds.groups);
    const size_t group_count = ds.groups.size();
    EvalMode emode = eval_mode_from_name(cfg.eval_mode);

    RunOutput out;
    out.group_names = ds.groups.names();

    if (cfg.algorithm == "random-committee") {
        out.metrics = random_committee_baseline(test, panel, group_count, cfg.eval_k,
                                               derive_seed(seed, "baseline"));
        return out;
    }

    DSimTable table = build_dsim(cfg, panel, ds.groups, seed);
    std::unique_ptr<Classifier> clf = build_classifier(cfg, ds.dim, seed);

    if (cfg.algorithm == "mwu") {
        auto weight_trace = mwu_baseline(train, panel, *clf, cfg.mwu_eta,
                                         derive_seed(seed, "mwu"));
        std::vector<double> w = weight_trace.empty()
                                    ? std::vector<double>(panel.slot_count(),
                                                          1.0 / panel.slot_count())
                                    : weight_trace.back();
        PipelineView view;
        view.panel = &panel;
        view.classifier = clf.get();
        view.weights = [w](const Sample&) { return SimplexVector::trusted(w); };
        out.metrics = evaluate(view, test, group_count, emode, cfg.eval_k,
                               derive_seed(seed, "eval"), cfg.eval_repetitions);
        out.samples_seen = static_cast<long>(train.size());
        return out;
    }

    TrainConfig tcfg = cfg.train;
    tcfg.seed = seed;

    const bool smooth = cfg.algorithm == "smooth";
    std::vector<TraceRow> trace;
    TrainHooks hooks;
    if (cfg.trace_every > 0) {
        hooks.on_update = [&](long upd, long seen, const Network& net, const Classifier& c) {
            if (upd % cfg.trace_every != 0) return;
            PipelineView v;
            v.panel = &panel;
            v.classifier = &c;
            if (smooth) {
                v.weights = [&net, &table, &tcfg, seen](const Sample& s) {
                    return smooth_mixed_weights(net, table, s, tcfg.t_d, seen + 1);
                };
            } else {
                v.weights = [&net](const Sample& s) {
                    return deferral_weights(net, s.features);
                };
            }
            RunMetrics m = evaluate(v, test, group_count, emode, cfg.eval_k,
                                    derive_seed(seed, "trace", static_cast<uint64_t>(upd)), 1);
            TraceRow row;
            row.iter = upd;
            row.overall = m.overall;
            row.acc_g0 = m.acc_by_group.size() > 0 ? m.acc_by_group[0] : 0.0;
            row.acc_g1 = m.acc_by_group.size() > 1 ? m.acc_by_group[1] : 0.0;
            row.disparity = m.disparity;
            row.mean_cost = m.mean_cost;
            trace.push_back(row);
        };
    }

    TrainResult res;
    if (smooth) {
        res = smooth_matching(train, panel, table, std::move(clf), tcfg, hooks);
    } else {
        size_t prior_n = std::min<size_t>(static_cast<size_t>(cfg.prior_count), train.size());
        std::span<const Sample> prior = train.subspan(0, prior_n);
        std::span<const Sample> stream = train.subspan(prior_n);
        res = strict_matching(prior, stream, panel, table, std::move(clf), tcfg, hooks);
    }

    PipelineView view;
    view.panel = &panel;
    view.classifier = res.classifier.get();
    if (smooth) {
        long t_final = res.samples_seen + 1;
        view.weights = [&res, &table, &tcfg, t_final](const Sample& s) {
            return smooth_mixed_weights(res.deferrer, table, s, tcfg.t_d, t_final);
        };
    } else {
        view.weights = [&res](const Sample& s) {
            return deferral_weights(res.deferrer, s.features);
        };
    }
    out.metrics = evaluate(view, test, group_count, emode, cfg.eval_k,
                           derive_seed(seed, "eval"), cfg.eval_repetitions);
    out.metrics.trace = std::move(trace);
    out.updates = res.updates;
    out.samples_seen = res.samples_seen;
    return out;
}

void set_sweep_parameter(RunConfig& cfg, const std::string& name, double value) {
    if (name == "s") cfg.s = value;
    else if (name == "n_s") cfg.n_s = static_cast<int>(std::llround(value));
    else if (name == "t_d") cfg.train.t_d = value;
    else if (name == "alpha") cfg.train.alpha = value;
    else if (name == "eta") cfg.train.eta = value;
    else if (name == "lambda_slope") cfg.train.lambda_slope = value;
    else if (name == "lambda_const") cfg.train.lambda_const = value;
    else if (name == "batch") cfg.train.batch = static_cast<int>(std::llround(value));
    else if (name == "epochs") cfg.train.epochs = static_cast<int>(std::llround(value));
    else if (name == "committee_k") cfg.train.committee_k = static_cast<int>(std::llround(value));
    else if (name == "eval_k") cfg.eval_k = static_cast<int>(std::llround(value));
    else if (name == "cart_window") cfg.cart_window = static_cast<int>(std::llround(value));
    else if (name == "prior_count") cfg.prior_count = static_cast<int>(std::llround(value));
    else if (name == "label_noise") cfg.label_noise = value;
    else if (name == "separation") cfg.separation = value;
    else if (name == "aae_fraction") cfg.aae_fraction = value;
    else if (name == "classifier_entry") cfg.classifier_entry = value;
    else throw ConfigError("unknown sweep parameter: " + name);
}

namespace {

RunMetrics metrics_mean(const std::vector<RunMetrics>& reps) {
    RunMetrics m;
    if (reps.empty()) return m;
    const size_t g = reps.front().acc_by_group.size();
    const size_t d = reps.front().deferral_rate.size();
    m.acc_by_group.assign(g, 0.0);
    m.deferral_rate.assign(d, 0.0);
    for (const RunMetrics& r : reps) {
        m.overall += r.overall;
        m.disparity += r.disparity;
        m.mean_cost += r.mean_cost;
        for (size_t i = 0; i < g; ++i) m.acc_by_group[i] += r.acc_by_group[i];
        for (size_t i = 0; i < d; ++i) m.deferral_rate[i] += r.deferral_rate[i];
    }
    const double n = static_cast<double>(reps.size());
    m.overall /= n;
    m.disparity /= n;
    m.mean_cost /= n;
    for (double& v : m.acc_by_group) v /= n;
    for (double& v : m.deferral_rate) v /= n;
    return m;
}

double sample_std(double sum_sq_dev, size_t n) {
    return n < 2 ? 0.0 : std::sqrt(sum_sq_dev / static_cast<double>(n - 1));
}

RunMetrics metrics_std(const std::vector<RunMetrics>& reps, const RunMetrics& mean) {
    RunMetrics m;
    const size_t n = reps.size();
    const size_t g = mean.acc_by_group.size();
    const size_t d = mean.deferral_rate.size();
    m.acc_by_group.assign(g, 0.0);
    m.deferral_rate.assign(d, 0.0);
    if (n < 2) return m;
    double so = 0.0, sd = 0.0, sc = 0.0;
    std::vector<double> sg(g, 0.0), sr(d, 0.0);
    for (const RunMetrics& r : reps) {
        so += (r.overall - mean.overall) * (r.overall - mean.overall);
        sd += (r.disparity - mean.disparity) * (r.disparity - mean.disparity);
        sc += (r.mean_cost - mean.mean_cost) * (r.mean_cost - mean.mean_cost);
        for (size_t i = 0; i < g; ++i) {
            double dv = r.acc_by_group[i] - mean.acc_by_group[i];
            sg[i] += dv * dv;
        }
        for (size_t i = 0; i < d; ++i) {
            double dv = r.deferral_rate[i] - mean.deferral_rate[i];
            sr[i] += dv * dv;
        }
    }
    m.overall = sample_std(so, n);
    m.disparity = sample_std(sd, n);
    m.mean_cost = sample_std(sc, n);
    for (size_t i = 0; i < g; ++i) m.acc_by_group[i] = sample_std(sg[i], n);
    for (size_t i = 0; i < d; ++i) m.deferral_rate[i] = sample_std(sr[i], n);
    return m;
}

}  // namespace

SweepTable run_sweep(const RunConfig& cfg) {
    if (cfg.sweep_parameter.empty()) throw ConfigError("sweep.parameter is empty");
    if (cfg.sweep_values.empty()) throw ConfigError("sweep.values is empty");
    const size_t cells = cfg.sweep_values.size();
    const size_t reps = static_cast<size_t>(cfg.sweep_repetitions);
    const size_t jobs = cells * reps;

    std::vector<std::vector<RunMetrics>> results(cells, std::vector<RunMetrics>(reps));
    std::atomic<size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            size_t cell = job / reps, rep = job % reps;
            try {
                RunConfig c = cfg;
                set_sweep_parameter(c, cfg.sweep_parameter, cfg.sweep_values[cell]);
                uint64_t s = derive_seed(cfg.seed, "sweep",
                                         static_cast<uint64_t>(cell) * 1000003ULL + rep);
                results[cell][rep] = run_once(c, s).metrics;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const size_t nthreads = std::min<size_t>(static_cast<size_t>(cfg.sweep_threads), jobs);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    SweepTable table;
    table.parameter = cfg.sweep_parameter;
    for (size_t i = 0; i < cells; ++i) {
        SweepCell cell;
        cell.value = cfg.sweep_values[i];
        cell.reps = std::move(results[i]);
        cell.mean = metrics_mean(cell.reps);
        cell.stddev = metrics_std(cell.reps, cell.mean);
        table.cells.push_back(std::move(cell));
    }
    return table;
}

}  // namespace defersim
