#pragma once

// Flat sectioned run configuration: an INI-style text file is parsed into an
// IniFile, then lowered onto a RunConfig whose defaults depend on the task.
// One global seed fans out to named sub-streams (data, shuffle, experts,
// committee, deferrer-init, ...) via derive_seed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "defersim/training.hpp"

namespace defersim {

// Parsed key/value sections, order-insensitive.
class IniFile {
  public:
    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  std::vector<int> fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        std::vector<double> fallback) const;

    // Canonical "section.key = value" lines, sorted; the hash input.
    std::string canonical() const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// FNV-1a over the canonical form.
uint64_t config_hash(const IniFile& ini);
std::string config_hash_hex(const IniFile& ini);

struct RunConfig {
    // [run]
    std::string task = "cluster";      // cluster | cm-surrogate
    std::string algorithm = "strict";  // strict | smooth | random-committee | mwu | oracle
    uint64_t seed = 1;

    // [data]
    std::vector<int> cluster_counts{500, 500, 1000};
    double offset_mid = 2.5;
    double offset_far = 5.0;
    int cm_total = 25000;
    int dim = 25;
    double aae_fraction = 0.64;  // AAE is the majority dialect
    double separation = 4.0;
    double label_noise = 0.15;
    double train_fraction = 0.8;
    int prior_count = 500;  // unlabeled samples reserved for the prior fit
    // Scale features using training-split statistics: variance is always
    // normalized to 1 per dimension; `center` is the fraction of the feature
    // mean removed. 1 is textbook standardization. Values below 1 keep part of
    // the raw offset so group geometry reaches the shared hidden layers: the
    // large-coordinate group trains faster, which is part of the studied
    // dynamics. 0 (or standardize=false entirely) leaves raw offsets in place,
    // where those coordinates dominate and the deferrer degenerates.
    bool standardize = true;
    double center = 1.0;
    std::string data_path;  // non-empty: load this dataset instead of generating

    // [dsim]
    std::string dsim_kind = "cluster";  // cluster | cm | uniform | file
    double s = 0.4;
    int n_s = 2;
    double classifier_entry = 0.1;
    std::string dsim_path;

    // [training]
    TrainConfig train;
    std::string classifier_kind = "cart";  // cart | network
    std::vector<int> classifier_hidden{64, 32, 16};
    // Optimizer for the network classifier: sgd | adam; empty follows
    // training.optimizer. A plain-gradient classifier next to an adaptive
    // deferrer keeps the model slot improving at the pace of the stream.
    std::string classifier_optimizer;
    int cart_depth = 4;
    int cart_min_leaf = 5;
    int cart_window = 0;
    double mwu_eta = 0.01;

    // [eval]
    std::string eval_mode = "committee";  // full | committee
    int eval_k = 5;
    int eval_repetitions = 1;
    int trace_every = 10;  // updates between trace rows; 0 disables the trace

    // [sweep]
    std::string sweep_parameter;
    std::vector<double> sweep_values;
    int sweep_repetitions = 10;
    int sweep_threads = 1;
};

// Lowers an IniFile onto task-dependent defaults. Unknown sections or keys
// raise ConfigError (catching config typos beats silently ignoring them).
RunConfig load_run_config(const IniFile& ini);
RunConfig load_run_config_file(const std::string& path);

// DEFERSIM_SEED environment override, applied after parsing.
void apply_seed_override(RunConfig& cfg);

// Reproducibility stamp written into the output directory before any result.
struct RunManifest {
    std::string config_hash;
    uint64_t seed = 0;
    std::string version;
    std::string created_utc;
    std::vector<std::string> outputs;
};

RunManifest make_manifest(const IniFile& ini, const RunConfig& cfg,
                          std::vector<std::string> outputs);
std::string manifest_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace defersim
