#include "defersim/training.hpp"

#include <algorithm>
#include <cmath>

#include "defersim/simplex.hpp"

namespace defersim {

namespace {
constexpr double kProbClamp = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
}  // namespace

AggregationMode aggregation_from_name(const std::string& name) {
    if (name == "full") return AggregationMode::full;
    if (name == "committee") return AggregationMode::committee;
    throw ConfigError("unknown aggregation mode: " + name);
}

LabelMode label_mode_from_name(const std::string& name) {
    if (name == "aggregated") return LabelMode::aggregated;
    if (name == "oracle") return LabelMode::oracle;
    throw ConfigError("unknown label mode: " + name);
}

double lambda_at(const TrainConfig& cfg, long update_idx) {
    return cfg.lambda_const + cfg.lambda_slope * static_cast<double>(update_idx);
}

double classifier_loss(double f, int label) {
    double p = clamp_prob(f);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double deferral_loss(const SimplexVector& d, const PredictionVector& y_e, int label,
                     const CostVector& costs, double lambda) {
    if (d.size() != costs.size()) throw ShapeError("weight/cost size mismatch");
    double p = clamp_prob(soft_prediction(d, y_e));
    double ce = label == 1 ? -std::log(p) : -std::log(1.0 - p);
    double expected_cost = 0.0;
    for (size_t i = 0; i < d.size(); ++i) expected_cost += d[i] * costs[i];
    return ce + lambda * expected_cost;
}

double combined_loss(std::span<const BatchItem> batch, const Network& deferrer,
                     const Classifier& classifier, double alpha, double lambda) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& item : batch) {
        double f = classifier.predict_proba(item.x);
        SimplexVector d = deferral_weights(deferrer, item.x);
        PredictionVector y = item.y_e;
        y.values.back() = f;  // classifier slot tracks the current model
        total += classifier_loss(f, item.label) +
                 alpha * deferral_loss(d, y, item.label, item.costs, lambda);
    }
    return total / static_cast<double>(batch.size());
}

void update_model(std::span<const BatchItem> batch, Network& deferrer,
                  OptimizerState& deferrer_opt, Classifier& classifier, double alpha,
                  double lambda) {
    if (batch.empty()) return;
    const size_t m = batch.front().y_e.size();
    const size_t dim = batch.front().x.size();

    Gradients acc = deferrer.zero_like();
    Network::Trace trace;
    std::vector<double> dl_dd(m);
    std::vector<const double*> xs;
    std::vector<double> targets, grad_f;
    xs.reserve(batch.size());
    targets.reserve(batch.size());
    grad_f.reserve(batch.size());

    for (const auto& item : batch) {
        if (item.x.size() != dim || item.y_e.size() != m || item.costs.size() != m)
            throw ShapeError("ragged training batch");
        deferrer.forward(item.x, trace);
        SimplexVector d = SimplexVector::trusted(trace.act.back());
        double f = classifier.predict_proba(item.x);
        PredictionVector y = item.y_e;
        y.values.back() = f;

        double p = soft_prediction(d, y);
        double common = 2.0 * (p - static_cast<double>(item.label));
        for (size_t i = 0; i < m; ++i)
            dl_dd[i] = alpha * (common * y[i] + lambda * item.costs[i]);
        acc.add(deferrer.backward(trace, dl_dd));

        double fc = clamp_prob(f);
        double g = (fc - static_cast<double>(item.label)) / (fc * (1.0 - fc)) +
                   alpha * common * d[m - 1];
        xs.push_back(item.x.data());
        targets.push_back(static_cast<double>(item.label));
        grad_f.push_back(g);
    }
    acc.scale(1.0 / static_cast<double>(batch.size()));
    apply_step(deferrer, acc, deferrer_opt);
    classifier.update(xs, targets, grad_f, dim);
}

Network fit_prior_deferrer(std::span<const Sample> unlabeled, const DSimTable& table,
                           size_t input_dim, std::span<const int> hidden,
                           const PriorFitConfig& prior, uint64_t seed) {
    if (unlabeled.empty()) throw ConfigError("prior fit needs at least one sample");
    std::vector<int> dims;
    dims.push_back(static_cast<int>(input_dim));
    for (int h : hidden) dims.push_back(h);
    dims.push_back(static_cast<int>(table.slots()));
    Network net(dims, Head::softmax);
    Rng init_rng(derive_seed(seed, "deferrer-init"));
    net.init_uniform(init_rng);

    // Targets: the normalized dSim column of each sample's category.
    std::vector<SimplexVector> targets;
    targets.reserve(unlabeled.size());
    for (const auto& s : unlabeled) {
        if (s.features.size() != input_dim) throw ShapeError("prior sample dimension mismatch");
        targets.push_back(table.normalized_column(s.group));
    }

    OptimizerState opt = prior.adam ? OptimizerState::adam(prior.rate)
                                    : OptimizerState::plain(prior.rate);
    const size_t n = unlabeled.size();
    const size_t bsz = prior.batch > 0 ? std::min<size_t>(static_cast<size_t>(prior.batch), n) : n;
    size_t cursor = 0;
    Network::Trace trace;
    std::vector<double> dl_dd(table.slots());

    for (int step = 0; step < prior.steps; ++step) {
        Gradients acc = net.zero_like();
        for (size_t b = 0; b < bsz; ++b) {
            size_t i = (cursor + b) % n;
            net.forward(unlabeled[i].features, trace);
            const std::vector<double>& d = trace.act.back();
            for (size_t j = 0; j < d.size(); ++j)
                dl_dd[j] = 2.0 * (d[j] - targets[i][j]);
            acc.add(net.backward(trace, dl_dd));
        }
        cursor = (cursor + bsz) % n;
        // Total squared error over the batch (no 1/batch scaling): the quoted
        // rate/step defaults only produce a usable prior under this scaling,
        // and the adaptive-moment path is invariant to it anyway.
        apply_step(net, acc, opt);
    }
    return net;
}

namespace {

// Shared streaming loop of both matching variants. `decision_weights` maps
// the current sample (and its position) onto the weights used for the
// aggregated decision.
TrainResult run_matching(Network net, std::span<const Sample> stream, const ExpertPanel& panel,
                         std::unique_ptr<Classifier> classifier, const TrainConfig& cfg,
                         const TrainHooks& hooks,
                         const std::function<SimplexVector(const Network&, const Sample&, long)>&
                             decision_weights) {
    OptimizerState opt =
        cfg.adam_main ? OptimizerState::adam(cfg.eta) : OptimizerState::plain(cfg.eta);
    std::vector<Rng> expert_rngs = make_expert_rngs(cfg.seed, panel.size());
    Rng committee_rng(derive_seed(cfg.seed, "committee"));

    std::vector<BatchItem> batch;
    batch.reserve(static_cast<size_t>(cfg.batch));
    long updates = 0, samples_seen = 0;
    bool capped = false;

    for (int epoch = 0; epoch < cfg.epochs && !capped; ++epoch)
    for (const Sample& s : stream) {
        if (cfg.max_updates >= 0 && updates >= cfg.max_updates) { capped = true; break; }
        Sample working = s;
        PredictionVector y_e = prediction_vector(panel, *classifier, working, expert_rngs);
        CostVector costs = panel_costs(panel, working);
        SimplexVector d = decision_weights(net, working, samples_seen + 1);

        int label;
        if (cfg.label_mode == LabelMode::oracle) {
            label = working.true_label;
        } else if (cfg.train_aggregation == AggregationMode::full) {
            label = aggregate_full(d, y_e);
        } else {
            label = aggregate_committee(d, y_e, cfg.committee_k, committee_rng);
        }
        ++samples_seen;
        if (hooks.after_aggregate) hooks.after_aggregate(working);

        BatchItem item;
        item.x = std::move(working.features);
        item.y_e = std::move(y_e);
        item.costs = std::move(costs);
        item.label = label;
        batch.push_back(std::move(item));

        if (static_cast<int>(batch.size()) == cfg.batch) {
            ++updates;
            update_model(batch, net, opt, *classifier, cfg.alpha, lambda_at(cfg, updates));
            batch.clear();
            if (hooks.on_update) hooks.on_update(updates, samples_seen, net, *classifier);
        }
    }
    // A partial tail batch never triggers an update; the cadence is exactly
    // one update per `batch` samples.
    TrainResult r;
    r.deferrer = std::move(net);
    r.classifier = std::move(classifier);
    r.updates = updates;
    r.samples_seen = samples_seen;
    return r;
}

SimplexVector smooth_prior_column(const DSimTable& table, GroupId g) {
    std::vector<double> col = table.column(g);
    col.back() = 0.0;  // the raw prior never routes to the classifier
    double mass = 0.0;
    for (double v : col) mass += v;
    if (mass <= 0.0)
        for (size_t i = 0; i + 1 < col.size(); ++i) col[i] = 1.0;
    return normalize(col);
}

}  // namespace

TrainResult strict_matching(std::span<const Sample> prior_unlabeled,
                            std::span<const Sample> stream, const ExpertPanel& panel,
                            const DSimTable& table, std::unique_ptr<Classifier> classifier,
                            const TrainConfig& cfg, const TrainHooks& hooks) {
    if (table.slots() != panel.slot_count())
        throw ShapeError("dsim table does not match the panel");
    if (stream.empty() && prior_unlabeled.empty())
        throw ConfigError("no samples supplied");
    size_t dim = prior_unlabeled.empty() ? stream.front().features.size()
                                         : prior_unlabeled.front().features.size();
    Network net = fit_prior_deferrer(prior_unlabeled, table, dim, cfg.deferrer_hidden,
                                     cfg.prior, cfg.seed);
    auto weights = [](const Network& n, const Sample& s, long) {
        return deferral_weights(n, s.features);
    };
    return run_matching(std::move(net), stream, panel, std::move(classifier), cfg, hooks,
                        weights);
}

SimplexVector smooth_mixed_weights(const Network& deferrer, const DSimTable& table,
                                   const Sample& s, double t_d, long t) {
    SimplexVector prior = smooth_prior_column(table, s.group);
    SimplexVector learned = deferral_weights(deferrer, s.features);
    double mu = t_d / (static_cast<double>(t) + t_d);
    std::vector<double> mixed(prior.size());
    for (size_t i = 0; i < mixed.size(); ++i)
        mixed[i] = mu * prior[i] + (1.0 - mu) * learned[i];
    return SimplexVector::trusted(std::move(mixed));
}

TrainResult smooth_matching(std::span<const Sample> stream, const ExpertPanel& panel,
                            const DSimTable& table, std::unique_ptr<Classifier> classifier,
                            const TrainConfig& cfg, const TrainHooks& hooks) {
    if (table.slots() != panel.slot_count())
        throw ShapeError("dsim table does not match the panel");
    if (stream.empty()) throw ConfigError("no samples supplied");

    std::vector<int> dims;
    dims.push_back(static_cast<int>(stream.front().features.size()));
    for (int h : cfg.deferrer_hidden) dims.push_back(h);
    dims.push_back(static_cast<int>(table.slots()));
    Network net(dims, Head::softmax);
    Rng init_rng(derive_seed(cfg.seed, "deferrer-init"));
    net.init_uniform(init_rng);

    double t_d = cfg.t_d;
    auto weights = [&table, t_d](const Network& n, const Sample& s, long t) {
        return smooth_mixed_weights(n, table, s, t_d, t);
    };
    return run_matching(std::move(net), stream, panel, std::move(classifier), cfg, hooks,
                        weights);
}

std::vector<std::vector<double>> mwu_baseline(std::span<const Sample> stream,
                                              const ExpertPanel& panel,
                                              const Classifier& classifier, double eta,
                                              uint64_t seed) {
    if (!(eta >= 0.0 && eta <= 0.5)) throw ConfigError("mwu eta must lie in [0,0.5]");
    const size_t m = panel.slot_count();
    std::vector<Rng> expert_rngs = make_expert_rngs(seed, panel.size());
    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    std::vector<std::vector<double>> trace;
    trace.reserve(stream.size());

    for (const Sample& s : stream) {
        std::vector<int> votes(m);
        for (size_t j = 0; j < panel.size(); ++j)
            votes[j] = expert_predict(panel.experts[j], s, expert_rngs[j]);
        votes[m - 1] = classifier.predict_proba(s.features) > 0.5 ? 1 : 0;

        double score = 0.0;
        for (size_t i = 0; i < m; ++i) score += w[i] * votes[i];
        int agg = score > 0.5 ? 1 : 0;

        for (size_t i = 0; i < m; ++i)
            if (votes[i] != agg) w[i] *= (1.0 - eta);
        w = normalize(w).values();
        trace.push_back(w);
    }
    return trace;
}

RunMetrics random_committee_baseline(std::span<const Sample> samples, const ExpertPanel& panel,
                                     size_t group_count, int k, uint64_t seed) {
    if (k <= 0) throw ConfigError("committee size must be positive");
    std::vector<Rng> expert_rngs = make_expert_rngs(seed, panel.size());
    Rng committee_rng(derive_seed(seed, "committee"));

    std::vector<long> correct(group_count, 0), total(group_count, 0);
    std::vector<long> drawn(panel.size(), 0);
    double cost_sum = 0.0;
    std::vector<int> chosen;

    for (const Sample& s : samples) {
        std::vector<int> votes(panel.size());
        for (size_t j = 0; j < panel.size(); ++j)
            votes[j] = expert_predict(panel.experts[j], s, expert_rngs[j]);

        chosen.clear();
        int ones = 0;
        for (int i = 0; i < k; ++i) {
            int j = committee_rng.uniform_int(0, static_cast<int>(panel.size()) - 1);
            chosen.push_back(j);
            ++drawn[static_cast<size_t>(j)];
            ones += votes[static_cast<size_t>(j)];
        }
        int decision = 2 * ones == k ? (committee_rng.bernoulli(0.5) ? 1 : 0)
                                     : (2 * ones > k ? 1 : 0);

        std::sort(chosen.begin(), chosen.end());
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
        for (int j : chosen) cost_sum += panel.experts[static_cast<size_t>(j)].cost(s);

        ++total[static_cast<size_t>(s.group)];
        if (decision == s.true_label) ++correct[static_cast<size_t>(s.group)];
    }

    RunMetrics m;
    long csum = 0, tsum = 0;
    m.acc_by_group.resize(group_count, 0.0);
    for (size_t g = 0; g < group_count; ++g) {
        csum += correct[g];
        tsum += total[g];
        m.acc_by_group[g] = total[g] > 0 ? static_cast<double>(correct[g]) / total[g] : 0.0;
    }
    m.overall = tsum > 0 ? static_cast<double>(csum) / tsum : 0.0;
    auto [lo, hi] = std::minmax_element(m.acc_by_group.begin(), m.acc_by_group.end());
    m.disparity = *hi - *lo;
    m.mean_cost = samples.empty() ? 0.0 : cost_sum / static_cast<double>(samples.size());
    m.deferral_rate.resize(panel.slot_count(), 0.0);
    double denom = static_cast<double>(samples.size()) * k;
    for (size_t j = 0; j < panel.size(); ++j)
        m.deferral_rate[j] = denom > 0 ? static_cast<double>(drawn[j]) / denom : 0.0;
    return m;
}

}  // namespace defersim
