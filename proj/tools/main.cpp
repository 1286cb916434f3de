#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "defersim/config.hpp"
#include "defersim/errors.hpp"
#include "defersim/experiments.hpp"
#include "defersim/theoryprobe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace defersim;

constexpr int kOk = 0;
constexpr int kBadConfig = 2;
constexpr int kIoFailure = 3;
constexpr int kNumericFailure = 4;
constexpr int kProbeViolation = 5;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed while writing " + path.string());
}

// Common per-subcommand flags.
struct Options {
    std::string config;
    std::string out = ".";
    uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
};

void add_common(CLI::App* sub, Options& opt, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config, "run configuration file");
    if (needs_config) c->required();
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--out", opt.out, "output directory (default: current)");
    sub->add_flag("--quiet", opt.quiet, "suppress progress messages");
    sub->callback([sub, &opt]() { opt.seed_given = sub->count("--seed") > 0; });
}

RunConfig load_config(const Options& opt, IniFile& ini) {
    ini = IniFile::parse_file(opt.config);
    if (!ini.has("run", "task")) throw ConfigError("config is missing run.task");
    RunConfig cfg = load_run_config(ini);
    apply_seed_override(cfg);
    if (opt.seed_given) cfg.seed = opt.seed;
    cfg.train.seed = cfg.seed;
    return cfg;
}

json metrics_json(const RunMetrics& m, const std::vector<std::string>& groups) {
    json by = json::object();
    for (size_t g = 0; g < m.acc_by_group.size(); ++g) {
        std::string name = g < groups.size() ? groups[g] : "group_" + std::to_string(g);
        by[name] = m.acc_by_group[g];
    }
    return json{{"overall_accuracy", m.overall},
                {"accuracy_by_group", by},
                {"disparity", m.disparity},
                {"mean_committee_cost", m.mean_cost},
                {"deferral_rate", m.deferral_rate}};
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
    std::string s = "iter,overall_acc,acc_group_0,acc_group_1,disparity,mean_committee_cost\n";
    for (const TraceRow& r : rows) {
        s += std::to_string(r.iter);
        s += ',';
        s += fmt(r.overall);
        s += ',';
        s += fmt(r.acc_g0);
        s += ',';
        s += fmt(r.acc_g1);
        s += ',';
        s += fmt(r.disparity);
        s += ',';
        s += fmt(r.mean_cost);
        s += '\n';
    }
    return s;
}

int cmd_gen_data(const Options& opt) {
    IniFile ini;
    RunConfig cfg = load_config(opt, ini);
    fs::path out(opt.out);
    ensure_dir(out);
    write_manifest((out / "manifest.json").string(),
                   make_manifest(ini, cfg, {"dataset.csv"}));
    Dataset ds = build_dataset(cfg, cfg.seed);
    save_dataset((out / "dataset.csv").string(), ds);
    if (!opt.quiet)
        std::printf("wrote %s: %zu samples, %zu features, %zu groups\n",
                    (out / "dataset.csv").string().c_str(), ds.size(), ds.dim,
                    ds.groups.size());
    return kOk;
}

int cmd_run(const Options& opt) {
    IniFile ini;
    RunConfig cfg = load_config(opt, ini);
    fs::path out(opt.out);
    ensure_dir(out);
    write_manifest((out / "manifest.json").string(),
                   make_manifest(ini, cfg, {"trace.csv", "summary.json"}));

    RunOutput res = run_once(cfg, cfg.seed);
    write_text(out / "trace.csv", trace_csv(res.metrics.trace));

    json j = metrics_json(res.metrics, res.group_names);
    j["task"] = cfg.task;
    j["algorithm"] = cfg.algorithm;
    j["seed"] = cfg.seed;
    j["config_hash"] = config_hash_hex(ini);
    j["groups"] = res.group_names;
    j["updates"] = res.updates;
    j["samples_seen"] = res.samples_seen;
    write_text(out / "summary.json", j.dump(2) + "\n");

    if (!opt.quiet)
        std::printf("%s on %s: overall %s, disparity %s (%ld updates)\n",
                    cfg.algorithm.c_str(), cfg.task.c_str(), fmt(res.metrics.overall).c_str(),
                    fmt(res.metrics.disparity).c_str(), res.updates);
    return kOk;
}

std::string sweep_csv(const SweepTable& t) {
    size_t groups = t.cells.empty() ? 0 : t.cells.front().mean.acc_by_group.size();
    std::string s = "parameter,value,repetitions,overall_mean,overall_std";
    for (size_t g = 0; g < groups; ++g) {
        s += ",acc_group_" + std::to_string(g) + "_mean";
        s += ",acc_group_" + std::to_string(g) + "_std";
    }
    s += ",disparity_mean,disparity_std,mean_cost_mean,mean_cost_std\n";
    for (const SweepCell& c : t.cells) {
        s += t.parameter;
        s += ',';
        s += fmt(c.value);
        s += ',';
        s += std::to_string(c.reps.size());
        s += ',';
        s += fmt(c.mean.overall);
        s += ',';
        s += fmt(c.stddev.overall);
        for (size_t g = 0; g < groups; ++g) {
            s += ',';
            s += fmt(c.mean.acc_by_group[g]);
            s += ',';
            s += fmt(c.stddev.acc_by_group[g]);
        }
        s += ',';
        s += fmt(c.mean.disparity);
        s += ',';
        s += fmt(c.stddev.disparity);
        s += ',';
        s += fmt(c.mean.mean_cost);
        s += ',';
        s += fmt(c.stddev.mean_cost);
        s += '\n';
    }
    return s;
}

int cmd_sweep(const Options& opt) {
    IniFile ini;
    RunConfig cfg = load_config(opt, ini);
    fs::path out(opt.out);
    ensure_dir(out);
    write_manifest((out / "manifest.json").string(),
                   make_manifest(ini, cfg, {"sweep.csv", "sweep.json"}));

    SweepTable t = run_sweep(cfg);
    write_text(out / "sweep.csv", sweep_csv(t));

    json cells = json::array();
    for (const SweepCell& c : t.cells) {
        json reps = json::array();
        for (const RunMetrics& r : c.reps) reps.push_back(metrics_json(r, {}));
        cells.push_back(json{{"value", c.value},
                             {"mean", metrics_json(c.mean, {})},
                             {"std", metrics_json(c.stddev, {})},
                             {"reps", reps}});
    }
    json j{{"parameter", t.parameter},
           {"task", cfg.task},
           {"algorithm", cfg.algorithm},
           {"seed", cfg.seed},
           {"config_hash", config_hash_hex(ini)},
           {"cells", cells}};
    write_text(out / "sweep.json", j.dump(2) + "\n");

    if (!opt.quiet)
        std::printf("sweep over %s: %zu values x %d repetitions\n", t.parameter.c_str(),
                    t.cells.size(), cfg.sweep_repetitions);
    return kOk;
}

json probe_json(const ProbeReport& rep) {
    json points = json::array();
    for (const ProbePoint& pt : rep.points) {
        json params = json::object();
        for (const auto& [key, value] : pt.params) params[key] = value;
        points.push_back(json{{"params", params},
                              {"measured", pt.measured},
                              {"lo", pt.lo},
                              {"hi", pt.hi},
                              {"stderr", pt.mc_stderr},
                              {"pass", pt.pass}});
    }
    return json{{"probe", rep.probe}, {"pass", rep.pass}, {"points", points}};
}

// Emits the probe result: to <out>/probe-<name>.json when an output directory
// was named (manifest first), to stdout otherwise.
int finish_probe(const ProbeReport& rep, const json& doc, const Options& opt, bool out_given,
                 uint64_t seed) {
    if (out_given) {
        fs::path out(opt.out);
        ensure_dir(out);
        std::string file = "probe-" + rep.probe + ".json";
        std::string ini_text = "[probe]\nname = " + rep.probe + "\n";
        RunConfig pc;
        pc.seed = seed;
        write_manifest((out / "manifest.json").string(),
                       make_manifest(IniFile::parse_string(ini_text), pc, {file}));
        write_text(out / file, doc.dump(2) + "\n");
        if (!opt.quiet)
            std::printf("probe %s: %s\n", rep.probe.c_str(), rep.pass ? "PASS" : "FAIL");
    } else {
        std::printf("%s\n", doc.dump(2).c_str());
    }
    return rep.pass ? kOk : kProbeViolation;
}

struct ProbeParams {
    double alpha = 0.75;
    double gamma = 0.0;
    int m = 0;
    int k = 0;
    int steps = 500;
    int trials = -1;  // -1: per-probe default
    double delta_penalty = 0.01;
};

int cmd_probe(const std::string& name, const ProbeParams& p, bool gamma_given, bool alpha_given,
              bool k_given, bool m_given, const Options& opt, bool out_given) {
    uint64_t seed = opt.seed_given ? opt.seed : 1;

    if (name == "claim1") {
        if (!(p.alpha >= 0.5 && p.alpha < 1.0))
            throw ConfigError("claim1 needs alpha in [0.5, 1)");
        int m = m_given ? p.m : 8;
        if (m < 2) throw ConfigError("claim1 needs m >= 2");
        int trials = p.trials > 0 ? p.trials : 10000;
        if (p.steps < 1) throw ConfigError("claim1 needs steps >= 1");
        ProbeReport rep = claim1_check(p.alpha, m, p.steps, trials, p.delta_penalty, seed);
        return finish_probe(rep, probe_json(rep), opt, out_given, seed);
    }

    if (name == "remark2") {
        if (gamma_given || alpha_given) {
            if (!(gamma_given && alpha_given))
                throw ConfigError("remark2 needs both --gamma and --alpha (or neither)");
            if (!(p.gamma >= 0.0 && p.gamma <= 1.0))
                throw ConfigError("remark2 needs gamma in [0, 1]");
            if (!(p.alpha > 0.5 && p.alpha < 1.0))
                throw ConfigError("remark2 needs alpha in (0.5, 1)");
            auto [lo, hi] = disparity_bounds(p.gamma, p.alpha);
            std::printf("bounds (%s, %s)\n", fmt(lo).c_str(), fmt(hi).c_str());
            json doc{{"probe", "remark2"},
                     {"gamma", p.gamma},
                     {"alpha", p.alpha},
                     {"lo", lo},
                     {"hi", hi},
                     {"exact_disparity", induced_policy_disparity(p.gamma, p.alpha)}};
            if (out_given) {
                fs::path out(opt.out);
                ensure_dir(out);
                write_text(out / "probe-remark2.json", doc.dump(2) + "\n");
            } else if (!opt.quiet) {
                std::printf("%s\n", doc.dump(2).c_str());
            }
            return kOk;
        }
        int trials = p.trials > 0 ? p.trials : 200000;
        ProbeReport rep = remark2_check(trials, seed);
        return finish_probe(rep, probe_json(rep), opt, out_given, seed);
    }

    if (name == "theorem1") {
        int trials = p.trials > 0 ? p.trials : 200000;
        const double betas[] = {0.05, 0.1, 0.2};
        const double deltas[] = {0.01, 0.05};
        const int ms[] = {3, 10};
        ProbeReport rep = theorem1_check(betas, deltas, ms, trials, seed);
        return finish_probe(rep, probe_json(rep), opt, out_given, seed);
    }

    if (name == "theorem2") {
        int trials = p.trials > 0 ? p.trials : 200000;
        std::vector<std::pair<int, int>> pairs;
        if (k_given || m_given) {
            if (!(k_given && m_given))
                throw ConfigError("theorem2 needs both --k and --m (or neither)");
            if (p.k < 1 || p.k > p.m) throw ConfigError("theorem2 needs 1 <= k <= m");
            std::printf("threshold %s\n", fmt(theorem2_threshold(p.k, p.m)).c_str());
            pairs = {{p.k, p.m}};
        } else {
            pairs = {{1, 2}, {5, 41}, {3, 10}};
        }
        ProbeReport rep = theorem2_check(pairs, trials, p.delta_penalty, seed);
        return finish_probe(rep, probe_json(rep), opt, out_given, seed);
    }

    throw ConfigError("unknown probe: " + name +
                      " (expected claim1, remark2, theorem1 or theorem2)");
}

// Pulls the scalar columns out of one run summary document.
void report_row(const fs::path& source, const json& j, size_t group_cols, std::string& csv) {
    csv += source.string();
    csv += ',';
    csv += j.value("task", std::string{});
    csv += ',';
    csv += j.value("algorithm", std::string{});
    csv += ',';
    csv += j.contains("seed") ? std::to_string(j["seed"].get<uint64_t>()) : std::string{};
    csv += ',';
    csv += j.contains("overall_accuracy") ? fmt(j["overall_accuracy"].get<double>())
                                          : std::string{};
    std::vector<std::string> groups;
    if (j.contains("groups"))
        for (const auto& g : j["groups"]) groups.push_back(g.get<std::string>());
    for (size_t i = 0; i < group_cols; ++i) {
        csv += ',';
        if (i < groups.size() && j.contains("accuracy_by_group") &&
            j["accuracy_by_group"].contains(groups[i]))
            csv += fmt(j["accuracy_by_group"][groups[i]].get<double>());
    }
    csv += ',';
    csv += j.contains("disparity") ? fmt(j["disparity"].get<double>()) : std::string{};
    csv += ',';
    csv += j.contains("mean_committee_cost") ? fmt(j["mean_committee_cost"].get<double>())
                                             : std::string{};
    csv += ',';
    csv += j.contains("updates") ? std::to_string(j["updates"].get<long>()) : std::string{};
    csv += ',';
    csv += j.contains("samples_seen") ? std::to_string(j["samples_seen"].get<long>())
                                      : std::string{};
    csv += '\n';
}

int cmd_report(const std::vector<std::string>& inputs, const Options& opt) {
    std::vector<fs::path> files;
    for (const std::string& in : inputs) {
        fs::path p(in);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            for (const auto& entry : fs::recursive_directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().filename() == "summary.json")
                    files.push_back(entry.path());
            }
        } else if (fs::is_regular_file(p, ec)) {
            files.push_back(p);
        } else {
            throw IoError("no such file or directory: " + in);
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no summary.json files found under the given paths");

    std::vector<json> docs;
    size_t group_cols = 0;
    for (const fs::path& f : files) {
        std::ifstream in(f);
        if (!in) throw IoError("cannot read " + f.string());
        json j = json::parse(in);
        if (j.contains("groups")) group_cols = std::max(group_cols, j["groups"].size());
        docs.push_back(std::move(j));
    }

    std::string csv = "source,task,algorithm,seed,overall_acc";
    for (size_t i = 0; i < group_cols; ++i) csv += ",acc_group_" + std::to_string(i);
    csv += ",disparity,mean_committee_cost,updates,samples_seen\n";
    for (size_t i = 0; i < files.size(); ++i) report_row(files[i], docs[i], group_cols, csv);

    fs::path out(opt.out);
    ensure_dir(out);
    write_text(out / "report.csv", csv);
    if (!opt.quiet)
        std::printf("wrote %s: %zu runs\n", (out / "report.csv").string().c_str(), files.size());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for closed human-in-the-loop deferral pipelines"};
    app.require_subcommand(1);

    Options gen_opt, run_opt, sweep_opt, probe_opt, report_opt;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a task dataset");
    add_common(gen, gen_opt, true);

    CLI::App* run = app.add_subcommand("run", "train and evaluate one configuration");
    add_common(run, run_opt, true);

    CLI::App* sweep = app.add_subcommand("sweep", "repeat runs over a parameter grid");
    add_common(sweep, sweep_opt, true);

    CLI::App* probe = app.add_subcommand("probe", "check a theoretical property by Monte Carlo");
    std::string probe_name;
    ProbeParams pp;
    probe->add_option("name", probe_name, "claim1 | remark2 | theorem1 | theorem2")->required();
    probe->add_option("--alpha", pp.alpha, "biased-expert fraction");
    probe->add_option("--gamma", pp.gamma, "off-group similarity (remark2)");
    probe->add_option("--m", pp.m, "number of experts");
    probe->add_option("--k", pp.k, "committee size (theorem2)");
    probe->add_option("--steps", pp.steps, "training steps per trial (claim1)");
    probe->add_option("--trials", pp.trials, "Monte-Carlo trials per point");
    probe->add_option("--delta-penalty", pp.delta_penalty, "per-step penalty increment");
    add_common(probe, probe_opt, false);

    CLI::App* report = app.add_subcommand("report", "merge run summaries into one CSV");
    std::vector<std::string> report_inputs;
    report->add_option("paths", report_inputs, "summary.json files or directories to scan")
        ->required();
    add_common(report, report_opt, false);

    int rc = kOk;
    try {
        app.parse(argc, argv);
        if (gen->parsed()) rc = cmd_gen_data(gen_opt);
        if (run->parsed()) rc = cmd_run(run_opt);
        if (sweep->parsed()) rc = cmd_sweep(sweep_opt);
        if (probe->parsed())
            rc = cmd_probe(probe_name, pp, probe->count("--gamma") > 0,
                           probe->count("--alpha") > 0, probe->count("--k") > 0,
                           probe->count("--m") > 0, probe_opt, probe->count("--out") > 0);
        if (report->parsed()) rc = cmd_report(report_inputs, report_opt);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadConfig;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kBadConfig;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kBadConfig;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kBadConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoFailure;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoFailure;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumericFailure;
    } catch (const DegenerateWeightsError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumericFailure;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "internal shape error: %s\n", e.what());
        return kNumericFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
