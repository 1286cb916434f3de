#pragma once

// Data generators for the two built-in tasks, held-out evaluation of a
// trained pipeline, and the end-to-end runner/sweep driver that the CLI and
// the acceptance suite share.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "defersim/config.hpp"
#include "defersim/dataset.hpp"
#include "defersim/metrics.hpp"
#include "defersim/pipeline.hpp"
#include "defersim/training.hpp"

namespace defersim {

// Two 2-D Gaussian sub-clusters with separable labels ("orange") plus one
// with coin-flip labels ("blue").
struct ClusterSpec {
    uint64_t seed = 1;
    std::array<int, 3> counts{500, 500, 1000};  // orange label 0, orange label 1, blue
    double offset_mid = 2.5;
    double offset_far = 5.0;
};
Dataset gen_cluster_data(const ClusterSpec& spec);

// Gaussian stand-in for the dialect-embedding corpus: groups "aae" and
// "non_aae" separated along a random direction, labels from a noisy linear
// rule orthogonal to it.
struct CMSpec {
    uint64_t seed = 1;
    int total = 25000;
    int dim = 25;
    double aae_fraction = 0.64;
    double separation = 4.0;   // group-mean distance in feature-noise units
    double label_noise = 0.15; // flip probability; top achievable accuracy 1 - this
};
Dataset gen_cm_surrogate(const CMSpec& spec);

// Dataset-format loader for externally produced feature files.
Dataset load_embeddings(const std::string& path);

enum class EvalMode { full, committee };
EvalMode eval_mode_from_name(const std::string& name);

// Read-only snapshot of a trained pipeline: the panel, the classifier, and
// whatever decision-weight rule the algorithm ended up with.
struct PipelineView {
    const ExpertPanel* panel = nullptr;
    const Classifier* classifier = nullptr;
    std::function<SimplexVector(const Sample&)> weights;
};

// Scores the pipeline on held-out data against true labels. Committee mode
// redraws expert opinions and committees per repetition and averages.
RunMetrics evaluate(const PipelineView& view, std::span<const Sample> test,
                    size_t group_count, EvalMode mode, int k, uint64_t seed,
                    int repetitions = 1);

struct RunOutput {
    RunMetrics metrics;  // final held-out evaluation; trace rows inside
    std::vector<std::string> group_names;
    long updates = 0;
    long samples_seen = 0;
};

// Generated (or loaded) dataset for a configured task; `seed` is the run seed,
// fanned out to the "data" sub-stream.
Dataset build_dataset(const RunConfig& cfg, uint64_t seed);

// Classifier slot configured by [training] (kind, tree shape, hidden sizes).
std::unique_ptr<Classifier> build_classifier(const RunConfig& cfg, size_t dim, uint64_t seed);

// Rescales every sample per dimension using statistics taken from the first
// `stats_count` samples only (the training split; the held-out split must not
// influence them). Variance is normalized to 1; `center_fraction` of the mean
// is subtracted (1 = textbook standardization, 0 = pure rescaling). Constant
// dimensions are left unscaled.
void standardize_features(std::vector<Sample>& samples, size_t stats_count,
                          double center_fraction = 1.0);

// One full experiment: generate (or load) data, shuffle/split with the run
// seed, train the configured algorithm, evaluate on the held-out split.
RunOutput run_once(const RunConfig& cfg, uint64_t seed);

struct SweepCell {
    double value = 0.0;
    std::vector<RunMetrics> reps;
    RunMetrics mean;
    RunMetrics stddev;
};

struct SweepTable {
    std::string parameter;
    std::vector<SweepCell> cells;
};

// Repeats run_once over cfg.sweep_values x cfg.sweep_repetitions with derived
// seeds; grid cells are independent and may run on cfg.sweep_threads threads.
SweepTable run_sweep(const RunConfig& cfg);

// Applies one sweep-parameter assignment; unknown names raise ConfigError.
void set_sweep_parameter(RunConfig& cfg, const std::string& name, double value);

}  // namespace defersim
