#pragma once

// Declarative run description. The file format is line-based:
//
//   # comment
//   [evolution]
//   generations = 100
//   evolution.mutation_count = 40    # dotted keys work anywhere
//
// Every key has a default; unknown keys are rejected. The effective config
// (defaults + file + overrides) can be written back out and re-run as is.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mnn/error.hpp"
#include "mnn/evolution.hpp"
#include "mnn/mesh.hpp"
#include "mnn/mlp.hpp"
#include "mnn/topology.hpp"

namespace mnn {

namespace detail {

struct ConfigKey {
    const char* key;
    const char* default_value;
};

// Order here is the order of the echoed effective config.
inline constexpr ConfigKey kConfigKeys[] = {
    {"run.kind", "random"},
    {"run.seed", "1"},
    {"run.threads", "1"},
    {"run.out", "out"},
    {"dims.input", "512"},
    {"dims.mesh", "240"},
    {"dims.classes", "3"},
    {"dims.settle_steps", "4"},
    {"data.path", ""},
    {"data.split", "0.8,0.1,0.1"},
    {"data.stopwords", "default"},
    {"mlp.hidden", "128,64,32,16"},
    {"mlp.epochs", "200"},
    {"mlp.learning_rate", "0.5"},
    {"mlp.batch_size", "32"},
    {"mlp.path", ""},
    {"random.polarity", "0.5,0.5,0.5,0.5,0.5"},
    {"celegans.sensory", "64"},
    {"celegans.inter", "64"},
    {"celegans.command", "48"},
    {"celegans.motor", "64"},
    {"celegans.p_fanout", "0.45"},
    {"celegans.p_polarity", "0.5"},
    {"celegans.p_fanin", "0.1"},
    {"celegans.p_recurrent", "0.45"},
    {"evolution.population_size", "50"},
    {"evolution.elite_count", "10"},
    {"evolution.breed_count", "20"},
    {"evolution.diversity_count", "10"},
    {"evolution.mutation_count", "40"},
    {"evolution.mutation_std", "1"},
    {"evolution.generations", "100"},
    {"evolution.random_std", "0.2"},
    {"sweep.mutation_count", "10,20,30,40,50,60,70,80,90,100"},
    {"sweep.mutation_std", "0.2,0.4,0.6,0.8,1"},
    {"sweep.generations", "100,500,1000"},
    {"sweep.random_std", "0.2,0.4,0.6,0.8,1"},
    {"sweep.record_time", "true"},
    {"predict.net", ""},
    {"predict.data", ""},
    {"report.input", ""},
    {"report.format", "auto"},
    {"report.decay", "0.9"},
    {"synth.samples", "300"},
    {"synth.center_scale", "0.5"},
    {"synth.noise", "1"},
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Raw key/value store with provenance for error messages.
class ConfigValues {
public:
    ConfigValues() {
        for (const auto& k : detail::kConfigKeys) values_[k.key] = {k.default_value, "default"};
    }

    static bool known(const std::string& key) {
        for (const auto& k : detail::kConfigKeys)
            if (key == k.key) return true;
        return false;
    }

    void set(const std::string& key, const std::string& value, const std::string& origin) {
        if (!known(key)) throw ConfigError(origin + ": unknown field '" + key + "'");
        values_[key] = {value, origin};
    }

    void parse(std::istream& in, const std::string& path) {
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string origin = path + ":" + std::to_string(lineno);
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(origin + ": malformed section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(origin + ": expected 'key = value'");
            std::string key = detail::trim(line.substr(0, eq));
            if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
            set(key, detail::trim(line.substr(eq + 1)), origin);
        }
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path + ": cannot open config file");
        parse(in, path);
    }

    /// "key=value" command-line override.
    void apply_override(const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set " + kv + ": expected key=value");
        set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)), "--set");
    }

    const std::string& get(const std::string& key) const { return values_.at(key).first; }

    std::string str(const std::string& key) const { return get(key); }

    std::uint64_t u64(const std::string& key) const {
        const auto& v = get(key);
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size()) fail(key, "expected a non-negative integer");
        return out;
    }

    std::uint32_t u32(const std::string& key) const {
        const auto v = u64(key);
        if (v > 0xffffffffULL) fail(key, "value out of range");
        return static_cast<std::uint32_t>(v);
    }

    double real(const std::string& key) const { return parse_real(key, get(key)); }

    bool boolean(const std::string& key) const {
        const auto& v = get(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(key, "expected true or false");
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : items(key)) out.push_back(parse_real(key, item));
        return out;
    }

    std::vector<std::uint32_t> u32s(const std::string& key) const {
        std::vector<std::uint32_t> out;
        for (const auto& item : items(key)) {
            std::uint32_t v = 0;
            auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc{} || p != item.data() + item.size()) fail(key, "expected a list of integers");
            out.push_back(v);
        }
        return out;
    }

    std::vector<std::string> items(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(get(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        const auto& [value, origin] = values_.at(key);
        throw ConfigError(origin + ": field '" + key + "': " + why + " (got '" + value + "')");
    }

    /// Effective config in sectioned form, re-readable by parse().
    std::string to_text() const {
        std::string out, section;
        for (const auto& k : detail::kConfigKeys) {
            const std::string key = k.key;
            const auto dot = key.find('.');
            const std::string sec = key.substr(0, dot);
            if (sec != section) {
                out += (out.empty() ? "[" : "\n[") + sec + "]\n";
                section = sec;
            }
            out += key.substr(dot + 1) + " = " + get(key) + "\n";
        }
        return out;
    }

private:
    double parse_real(const std::string& key, const std::string& v) const {
        double out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size()) fail(key, "expected a number");
        return out;
    }

    std::map<std::string, std::pair<std::string, std::string>> values_;
};

/// Typed view of a ConfigValues store.
struct RunConfig {
    NetworkKind kind = NetworkKind::RandomMesh;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out_dir = "out";
    MeshDims dims;
    std::string data_path;
    std::array<double, 3> split{0.8, 0.1, 0.1};
    std::unordered_set<std::string> stopwords;
    std::vector<std::uint32_t> mlp_hidden;
    TrainSpec train;
    std::string mlp_path;
    CElegansSpec celegans;
    EvolutionConfig evolution;
    SweepGrid grid;
    bool sweep_record_time = true;
    std::string predict_net, predict_data;
    std::string report_input, report_format;
    double report_decay = 0.9;
    std::uint32_t synth_samples = 300;
    double synth_center_scale = 0.5, synth_noise = 1.0;

    static RunConfig from(const ConfigValues& v) {
        RunConfig c;
        const auto kind = parse_network_kind(v.str("run.kind"));
        if (!kind)
            v.fail("run.kind",
                   "expected one of dnn, random, dnn_seeded, celegans_rigid, celegans_seeded, celegans_dnn_seeded");
        c.kind = *kind;
        c.seed = v.u64("run.seed");
        c.threads = v.u32("run.threads");
        if (c.threads == 0) v.fail("run.threads", "must be >= 1");
        c.out_dir = v.str("run.out");
        if (c.out_dir.empty()) v.fail("run.out", "must not be empty");

        c.dims = {v.u32("dims.input"), v.u32("dims.mesh"), v.u32("dims.classes"), v.u32("dims.settle_steps")};
        if (c.dims.input == 0) v.fail("dims.input", "must be >= 1");
        if (c.dims.mesh == 0) v.fail("dims.mesh", "must be >= 1");
        if (c.dims.classes != 3) v.fail("dims.classes", "labels -1/0/+1 need exactly 3 classes");
        if (c.dims.settle_steps == 0) v.fail("dims.settle_steps", "must be >= 1");

        c.data_path = v.str("data.path");
        const auto split = v.reals("data.split");
        if (split.size() != 3) v.fail("data.split", "expected three fractions");
        for (double f : split)
            if (!(f > 0)) v.fail("data.split", "fractions must be positive");
        if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) v.fail("data.split", "fractions must sum to 1");
        c.split = {split[0], split[1], split[2]};
        if (v.str("data.stopwords") == "default") {
            c.stopwords = default_stopwords();
        } else {
            for (auto w : v.items("data.stopwords")) {
                for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                c.stopwords.insert(w);
            }
        }

        c.mlp_hidden = v.u32s("mlp.hidden");
        if (c.mlp_hidden.empty()) v.fail("mlp.hidden", "needs at least one hidden layer");
        for (auto h : c.mlp_hidden)
            if (h == 0) v.fail("mlp.hidden", "layer sizes must be positive");
        c.train.epochs = v.u32("mlp.epochs");
        if (c.train.epochs == 0) v.fail("mlp.epochs", "must be >= 1");
        c.train.learning_rate = v.real("mlp.learning_rate");
        if (!(c.train.learning_rate > 0)) v.fail("mlp.learning_rate", "must be > 0");
        c.train.batch_size = v.u32("mlp.batch_size");
        c.train.rng_seed = c.seed;
        c.mlp_path = v.str("mlp.path");

        const auto polarity = v.reals("random.polarity");
        if (polarity.size() != kBlockCount) v.fail("random.polarity", "expected five probabilities");
        for (std::size_t i = 0; i < kBlockCount; ++i) {
            if (!(polarity[i] >= 0 && polarity[i] <= 1)) v.fail("random.polarity", "probabilities must lie in [0, 1]");
            c.evolution.polarity[i] = polarity[i];
        }

        c.celegans.sensory = v.u32("celegans.sensory");
        c.celegans.inter = v.u32("celegans.inter");
        c.celegans.command = v.u32("celegans.command");
        c.celegans.motor = v.u32("celegans.motor");
        for (const char* key : {"celegans.sensory", "celegans.inter", "celegans.command", "celegans.motor"})
            if (v.u32(key) == 0) v.fail(key, "must be >= 1");
        c.celegans.p_fanout = probability(v, "celegans.p_fanout");
        c.celegans.p_polarity = probability(v, "celegans.p_polarity");
        c.celegans.p_fanin = probability(v, "celegans.p_fanin");
        c.celegans.p_recurrent = probability(v, "celegans.p_recurrent");
        c.celegans.rng_seed = derive_seed(c.seed, {0xCE1E6A75ULL});

        auto& e = c.evolution;
        e.population_size = v.u32("evolution.population_size");
        e.elite_count = v.u32("evolution.elite_count");
        e.breed_count = v.u32("evolution.breed_count");
        e.diversity_count = v.u32("evolution.diversity_count");
        e.mutation_count = v.u32("evolution.mutation_count");
        e.mutation_std = v.real("evolution.mutation_std");
        e.generations = v.u32("evolution.generations");
        e.random_std = v.real("evolution.random_std");
        e.rng_seed = c.seed;
        e.threads = c.threads;
        if (e.population_size == 0) v.fail("evolution.population_size", "must be >= 1");
        if (std::uint64_t{e.elite_count} + e.breed_count + e.diversity_count > e.population_size)
            v.fail("evolution.breed_count", "elite + breed + diversity counts exceed population_size");
        if (e.breed_count > 0 && e.elite_count == 0) v.fail("evolution.elite_count", "breeding needs elites");
        if (!(e.mutation_std > 0)) v.fail("evolution.mutation_std", "must be > 0");
        if (!(e.random_std > 0)) v.fail("evolution.random_std", "must be > 0");
        c.celegans.sigma_rand = e.random_std;

        c.grid.mutation_counts = v.u32s("sweep.mutation_count");
        c.grid.mutation_stds = v.reals("sweep.mutation_std");
        c.grid.generations = v.u32s("sweep.generations");
        c.grid.random_stds = v.reals("sweep.random_std");
        for (double s : c.grid.mutation_stds)
            if (!(s > 0)) v.fail("sweep.mutation_std", "standard deviations must be > 0");
        for (double s : c.grid.random_stds)
            if (!(s > 0)) v.fail("sweep.random_std", "standard deviations must be > 0");
        c.sweep_record_time = v.boolean("sweep.record_time");

        c.predict_net = v.str("predict.net");
        c.predict_data = v.str("predict.data");
        c.report_input = v.str("report.input");
        c.report_format = v.str("report.format");
        if (c.report_format != "auto" && c.report_format != "pages" && c.report_format != "predictions")
            v.fail("report.format", "expected auto, pages or predictions");
        c.report_decay = v.real("report.decay");
        if (!(c.report_decay > 0 && c.report_decay <= 1)) v.fail("report.decay", "must lie in (0, 1]");

        c.synth_samples = v.u32("synth.samples");
        if (c.synth_samples == 0) v.fail("synth.samples", "must be >= 1");
        c.synth_center_scale = v.real("synth.center_scale");
        c.synth_noise = v.real("synth.noise");
        if (!(c.synth_noise >= 0)) v.fail("synth.noise", "must be >= 0");
        return c;
    }

    /// Full layer sizes of the baseline MLP: input, hidden..., classes.
    std::vector<std::uint32_t> mlp_layers() const {
        std::vector<std::uint32_t> sizes{dims.input};
        sizes.insert(sizes.end(), mlp_hidden.begin(), mlp_hidden.end());
        sizes.push_back(dims.classes);
        return sizes;
    }

private:
    static double probability(const ConfigValues& v, const std::string& key) {
        const double p = v.real(key);
        if (!(p >= 0 && p <= 1)) v.fail(key, "must lie in [0, 1]");
        return p;
    }
};

} // namespace mnn
