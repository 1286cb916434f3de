#include "defersim/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace defersim {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + section + "." + key + ": '" + v + "'");
    }
}

long parse_long(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + section + "." + key + ": '" + v + "'");
    }
}

}  // namespace

IniFile IniFile::parse_string(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ParseError("malformed section header '" + t + "'", line_no);
            section = trim(t.substr(1, t.size() - 2));
            ini.sections_[section];
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + t + "'", line_no);
        if (section.empty())
            throw ParseError("key outside any [section]", line_no);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        auto& sec = ini.sections_[section];
        if (sec.count(key))
            throw ParseError("duplicate key '" + section + "." + key + "'", line_no);
        sec[key] = value;
    }
    return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_double(section, key, get(section, key, ""));
}

long IniFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    return parse_long(section, key, get(section, key, ""));
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get(section, key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("bad boolean value for " + section + "." + key + ": '" + v + "'");
}

std::vector<int> IniFile::get_int_list(const std::string& section, const std::string& key,
                                       std::vector<int> fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<int> out;
    for (const std::string& item : split_commas(get(section, key, "")))
        out.push_back(static_cast<int>(parse_long(section, key, item)));
    return out;
}

std::vector<double> IniFile::get_double_list(const std::string& section, const std::string& key,
                                             std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_commas(get(section, key, "")))
        out.push_back(parse_double(section, key, item));
    return out;
}

std::string IniFile::canonical() const {
    std::ostringstream out;
    for (const auto& [section, keys] : sections_)
        for (const auto& [key, value] : keys)
            out << section << '.' << key << '=' << value << '\n';
    return out.str();
}

uint64_t config_hash(const IniFile& ini) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : ini.canonical()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const IniFile& ini) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(ini)));
    return buf;
}

namespace {

void check_known_keys(const IniFile& ini) {
    static const std::set<std::pair<std::string, std::string>> known = {
        {"run", "task"}, {"run", "algorithm"}, {"run", "seed"},
        {"data", "counts"}, {"data", "offset_mid"}, {"data", "offset_far"},
        {"data", "total"}, {"data", "dim"}, {"data", "aae_fraction"},
        {"data", "separation"}, {"data", "label_noise"}, {"data", "train_fraction"},
        {"data", "prior_count"}, {"data", "standardize"}, {"data", "center"},
        {"data", "path"},
        {"dsim", "kind"}, {"dsim", "s"}, {"dsim", "n_s"},
        {"dsim", "classifier_entry"}, {"dsim", "path"},
        {"training", "alpha"}, {"training", "eta"}, {"training", "batch"},
        {"training", "lambda_const"}, {"training", "lambda_slope"},
        {"training", "aggregation"}, {"training", "committee_k"},
        {"training", "max_updates"}, {"training", "epochs"}, {"training", "t_d"},
        {"training", "optimizer"},
        {"training", "deferrer_hidden"}, {"training", "prior_optimizer"},
        {"training", "prior_rate"}, {"training", "prior_steps"},
        {"training", "prior_batch"}, {"training", "classifier"},
        {"training", "classifier_hidden"}, {"training", "classifier_optimizer"},
        {"training", "cart_depth"},
        {"training", "cart_min_leaf"}, {"training", "cart_window"},
        {"training", "mwu_eta"},
        {"eval", "mode"}, {"eval", "k"}, {"eval", "repetitions"},
        {"eval", "trace_every"},
        {"sweep", "parameter"}, {"sweep", "values"}, {"sweep", "repetitions"},
        {"sweep", "threads"},
    };
    for (const auto& [section, keys] : ini.sections()) {
        for (const auto& [key, value] : keys) {
            (void)value;
            if (!known.count({section, key}))
                throw ConfigError("unknown config key: " + section + "." + key);
        }
    }
}

}  // namespace

RunConfig load_run_config(const IniFile& ini) {
    check_known_keys(ini);
    RunConfig cfg;
    cfg.task = ini.get("run", "task", "cluster");
    if (cfg.task != "cluster" && cfg.task != "cm-surrogate")
        throw ConfigError("unknown task: " + cfg.task);
    cfg.algorithm = ini.get("run", "algorithm", "strict");
    if (cfg.algorithm != "strict" && cfg.algorithm != "smooth" &&
        cfg.algorithm != "random-committee" && cfg.algorithm != "mwu" &&
        cfg.algorithm != "oracle")
        throw ConfigError("unknown algorithm: " + cfg.algorithm);
    cfg.seed = static_cast<uint64_t>(ini.get_long("run", "seed", 1));

    const bool cm = cfg.task == "cm-surrogate";

    // Task-dependent defaults, then explicit keys on top.
    if (cm) {
        cfg.prior_count = 1000;
        cfg.dsim_kind = "cm";
        cfg.classifier_kind = "network";
        cfg.train.eta = 0.01;
        cfg.train.batch = 100;
        cfg.train.train_aggregation = AggregationMode::committee;
        cfg.train.t_d = 10000.0;
        cfg.train.prior = PriorFitConfig{true, 1e-4, 1000, 0};
        cfg.train.deferrer_hidden = {64, 32, 16};
        cfg.eval_k = 5;
    } else {
        cfg.prior_count = 500;
        cfg.dsim_kind = "cluster";
        cfg.classifier_kind = "cart";
        cfg.train.eta = 0.0075;
        cfg.train.batch = 10;
        cfg.train.train_aggregation = AggregationMode::full;
        cfg.train.t_d = 500.0;
        cfg.train.prior = PriorFitConfig{false, 0.001, 500, 0};
        cfg.train.deferrer_hidden = {16, 8};
        cfg.eval_k = 5;
    }

    cfg.cluster_counts = ini.get_int_list("data", "counts", cfg.cluster_counts);
    if (cfg.cluster_counts.size() != 3)
        throw ConfigError("data.counts needs exactly three entries");
    for (int c : cfg.cluster_counts)
        if (c <= 0) throw ConfigError("data.counts entries must be positive");
    cfg.offset_mid = ini.get_double("data", "offset_mid", cfg.offset_mid);
    cfg.offset_far = ini.get_double("data", "offset_far", cfg.offset_far);
    cfg.cm_total = static_cast<int>(ini.get_long("data", "total", cfg.cm_total));
    cfg.dim = static_cast<int>(ini.get_long("data", "dim", cfg.dim));
    if (cfg.cm_total <= 0 || cfg.dim <= 0)
        throw ConfigError("data.total and data.dim must be positive");
    cfg.aae_fraction = ini.get_double("data", "aae_fraction", cfg.aae_fraction);
    if (!(cfg.aae_fraction > 0.0 && cfg.aae_fraction < 1.0))
        throw ConfigError("data.aae_fraction must lie in (0,1)");
    cfg.separation = ini.get_double("data", "separation", cfg.separation);
    cfg.label_noise = ini.get_double("data", "label_noise", cfg.label_noise);
    if (!(cfg.label_noise >= 0.0 && cfg.label_noise < 0.5))
        throw ConfigError("data.label_noise must lie in [0,0.5)");
    cfg.train_fraction = ini.get_double("data", "train_fraction", cfg.train_fraction);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("data.train_fraction must lie in (0,1)");
    cfg.prior_count = static_cast<int>(ini.get_long("data", "prior_count", cfg.prior_count));
    if (cfg.prior_count < 0) throw ConfigError("data.prior_count must be nonnegative");
    cfg.standardize = ini.get_bool("data", "standardize", cfg.standardize);
    cfg.center = ini.get_double("data", "center", cfg.center);
    if (cfg.center < 0.0 || cfg.center > 1.0)
        throw ConfigError("data.center must lie in [0,1]");
    cfg.data_path = ini.get("data", "path", cfg.data_path);

    cfg.dsim_kind = ini.get("dsim", "kind", cfg.dsim_kind);
    if (cfg.dsim_kind != "cluster" && cfg.dsim_kind != "cm" && cfg.dsim_kind != "uniform" &&
        cfg.dsim_kind != "file")
        throw ConfigError("unknown dsim.kind: " + cfg.dsim_kind);
    cfg.s = ini.get_double("dsim", "s", cfg.s);
    cfg.n_s = static_cast<int>(ini.get_long("dsim", "n_s", cfg.n_s));
    cfg.classifier_entry = ini.get_double("dsim", "classifier_entry", cfg.classifier_entry);
    cfg.dsim_path = ini.get("dsim", "path", cfg.dsim_path);

    cfg.train.alpha = ini.get_double("training", "alpha", cfg.train.alpha);
    if (cfg.train.alpha < 0.0) throw ConfigError("training.alpha must be nonnegative");
    cfg.train.eta = ini.get_double("training", "eta", cfg.train.eta);
    if (!(cfg.train.eta > 0.0)) throw ConfigError("training.eta must be positive");
    cfg.train.batch = static_cast<int>(ini.get_long("training", "batch", cfg.train.batch));
    if (cfg.train.batch < 1) throw ConfigError("training.batch must be at least 1");
    cfg.train.lambda_const = ini.get_double("training", "lambda_const", cfg.train.lambda_const);
    cfg.train.lambda_slope = ini.get_double("training", "lambda_slope", cfg.train.lambda_slope);
    if (ini.has("training", "aggregation"))
        cfg.train.train_aggregation =
            aggregation_from_name(ini.get("training", "aggregation", ""));
    cfg.train.committee_k =
        static_cast<int>(ini.get_long("training", "committee_k", cfg.train.committee_k));
    if (cfg.train.committee_k < 1) throw ConfigError("training.committee_k must be at least 1");
    cfg.train.max_updates = ini.get_long("training", "max_updates", cfg.train.max_updates);
    cfg.train.epochs = static_cast<int>(ini.get_long("training", "epochs", cfg.train.epochs));
    if (cfg.train.epochs < 1) throw ConfigError("training.epochs must be at least 1");
    std::string main_opt =
        ini.get("training", "optimizer", cfg.train.adam_main ? "adam" : "sgd");
    if (main_opt == "adam") cfg.train.adam_main = true;
    else if (main_opt == "sgd") cfg.train.adam_main = false;
    else throw ConfigError("unknown training.optimizer: " + main_opt);
    cfg.train.t_d = ini.get_double("training", "t_d", cfg.train.t_d);
    if (cfg.train.t_d < 0.0) throw ConfigError("training.t_d must be nonnegative");
    cfg.train.deferrer_hidden =
        ini.get_int_list("training", "deferrer_hidden", cfg.train.deferrer_hidden);

    std::string prior_opt =
        ini.get("training", "prior_optimizer", cfg.train.prior.adam ? "adam" : "sgd");
    if (prior_opt == "adam") cfg.train.prior.adam = true;
    else if (prior_opt == "sgd") cfg.train.prior.adam = false;
    else throw ConfigError("unknown training.prior_optimizer: " + prior_opt);
    cfg.train.prior.rate = ini.get_double("training", "prior_rate", cfg.train.prior.rate);
    cfg.train.prior.steps =
        static_cast<int>(ini.get_long("training", "prior_steps", cfg.train.prior.steps));
    cfg.train.prior.batch =
        static_cast<int>(ini.get_long("training", "prior_batch", cfg.train.prior.batch));

    cfg.classifier_kind = ini.get("training", "classifier", cfg.classifier_kind);
    if (cfg.classifier_kind != "cart" && cfg.classifier_kind != "network")
        throw ConfigError("unknown training.classifier: " + cfg.classifier_kind);
    cfg.classifier_hidden =
        ini.get_int_list("training", "classifier_hidden", cfg.classifier_hidden);
    cfg.classifier_optimizer =
        ini.get("training", "classifier_optimizer", cfg.classifier_optimizer);
    if (!cfg.classifier_optimizer.empty() && cfg.classifier_optimizer != "sgd" &&
        cfg.classifier_optimizer != "adam")
        throw ConfigError("unknown training.classifier_optimizer: " + cfg.classifier_optimizer);
    cfg.cart_depth = static_cast<int>(ini.get_long("training", "cart_depth", cfg.cart_depth));
    cfg.cart_min_leaf =
        static_cast<int>(ini.get_long("training", "cart_min_leaf", cfg.cart_min_leaf));
    cfg.cart_window = static_cast<int>(ini.get_long("training", "cart_window", cfg.cart_window));
    cfg.mwu_eta = ini.get_double("training", "mwu_eta", cfg.mwu_eta);

    cfg.eval_mode = ini.get("eval", "mode", cfg.eval_mode);
    if (cfg.eval_mode != "full" && cfg.eval_mode != "committee")
        throw ConfigError("unknown eval.mode: " + cfg.eval_mode);
    cfg.eval_k = static_cast<int>(ini.get_long("eval", "k", cfg.eval_k));
    if (cfg.eval_k < 1) throw ConfigError("eval.k must be at least 1");
    cfg.eval_repetitions =
        static_cast<int>(ini.get_long("eval", "repetitions", cfg.eval_repetitions));
    if (cfg.eval_repetitions < 1) throw ConfigError("eval.repetitions must be at least 1");
    cfg.trace_every = static_cast<int>(ini.get_long("eval", "trace_every", cfg.trace_every));
    if (cfg.trace_every < 0) throw ConfigError("eval.trace_every must be nonnegative");

    cfg.sweep_parameter = ini.get("sweep", "parameter", cfg.sweep_parameter);
    cfg.sweep_values = ini.get_double_list("sweep", "values", cfg.sweep_values);
    cfg.sweep_repetitions =
        static_cast<int>(ini.get_long("sweep", "repetitions", cfg.sweep_repetitions));
    if (cfg.sweep_repetitions < 1) throw ConfigError("sweep.repetitions must be at least 1");
    cfg.sweep_threads = static_cast<int>(ini.get_long("sweep", "threads", cfg.sweep_threads));
    if (cfg.sweep_threads < 1) throw ConfigError("sweep.threads must be at least 1");

    if (cfg.algorithm == "oracle") cfg.train.label_mode = LabelMode::oracle;
    cfg.train.seed = cfg.seed;
    return cfg;
}

RunConfig load_run_config_file(const std::string& path) {
    return load_run_config(IniFile::parse_file(path));
}

void apply_seed_override(RunConfig& cfg) {
    const char* env = std::getenv("DEFERSIM_SEED");
    if (!env || !*env) return;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw ConfigError(std::string("DEFERSIM_SEED is not an integer: ") + env);
    cfg.seed = static_cast<uint64_t>(v);
    cfg.train.seed = cfg.seed;
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

RunManifest make_manifest(const IniFile& ini, const RunConfig& cfg,
                          std::vector<std::string> outputs) {
    RunManifest m;
    m.config_hash = config_hash_hex(ini);
    m.seed = cfg.seed;
    m.version = kVersion;
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    m.created_utc = buf;
    m.outputs = std::move(outputs);
    return m;
}

std::string manifest_json(const RunManifest& m) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"config_hash\": \"" << json_escape(m.config_hash) << "\",\n";
    out << "  \"seed\": " << m.seed << ",\n";
    out << "  \"version\": \"" << json_escape(m.version) << "\",\n";
    out << "  \"created_utc\": \"" << json_escape(m.created_utc) << "\",\n";
    out << "  \"outputs\": [";
    for (size_t i = 0; i < m.outputs.size(); ++i) {
        if (i) out << ", ";
        out << '"' << json_escape(m.outputs[i]) << '"';
    }
    out << "]\n}\n";
    return out.str();
}

void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << manifest_json(m);
    if (!out) throw IoError("failed writing manifest: " + path);
}

}  // namespace defersim
