#include "fedif/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fedif/util.hpp"

namespace fedif::cfg {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::string unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return std::string(s.substr(1, s.size() - 2));
    return std::string(s);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

}  // namespace

ConfigMap parse_config_text(std::string_view text) {
    ConfigMap map;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find_first_of("#;");
            hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        const std::string full_key =
            section.empty() ? std::string(key) : section + "." + std::string(key);
        map.set(full_key, unquote(value));
    }
    return map;
}

ConfigMap load_config_file(const std::string& path, std::string* raw_bytes) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path + ": cannot open config file");
    std::string text{std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>()};
    if (raw_bytes) *raw_bytes = text;
    return parse_config_text(text);
}

void apply_override(ConfigMap& map, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override '" + std::string(assignment) +
                          "': expected key=value");
    const auto key = trim(assignment.substr(0, eq));
    const auto value = trim(assignment.substr(eq + 1));
    if (key.empty())
        throw ConfigError("override '" + std::string(assignment) + "': empty key");
    map.set(std::string(key), unquote(value));
}

sim::SimConfig resolve_sim_config(const ConfigMap& map) {
    sim::SimConfig cfg;
    std::set<std::string> seen;
    auto get = [&](const std::string& key) -> const std::string* {
        seen.insert(key);
        const auto it = map.values.find(key);
        return it == map.values.end() ? nullptr : &it->second;
    };
    auto get_double = [&](const std::string& key, double& out) {
        if (const auto* v = get(key)) out = parse_double(key, *v);
    };
    auto get_int = [&](const std::string& key, auto& out) {
        if (const auto* v = get(key))
            out = static_cast<std::remove_reference_t<decltype(out)>>(
                parse_int(key, *v));
    };
    auto get_bool = [&](const std::string& key, bool& out) {
        if (const auto* v = get(key)) out = parse_bool(key, *v);
    };
    auto get_string = [&](const std::string& key, std::string& out) {
        if (const auto* v = get(key)) out = *v;
    };

    if (const auto* v = get("aggregator"))
        cfg.aggregator.kind = aggregation::aggregator_from_name(*v);

    get_int("run.clients", cfg.clients);
    get_double("run.fraction", cfg.fraction);
    get_int("run.local_epochs", cfg.local_epochs);
    get_int("run.batch_size", cfg.batch_size);
    get_int("run.rounds", cfg.rounds);
    get_int("run.seed", cfg.seed);
    get_int("run.threads", cfg.threads);

    get_double("optimizer.lr", cfg.lr);
    get_double("optimizer.momentum", cfg.momentum);

    get_double("fedif.gamma", cfg.gamma);
    get_bool("fedif.wn", cfg.aggregator.fedif.weight_normalization);
    get_bool("fedif.rn", cfg.aggregator.fedif.round_normalization);
    get_bool("fedif.su", cfg.aggregator.fedif.smooth_update);

    get_string("data.kind", cfg.dataset.kind);
    get_double("data.alpha_dir", cfg.alpha_dir);
    get_double("data.validation_fraction", cfg.validation_fraction);
    get_int("data.min_partition_size", cfg.min_partition_size);
    get_int("data.synth_classes", cfg.dataset.synth_classes);
    get_int("data.synth_per_class", cfg.dataset.synth_per_class);
    get_int("data.synth_dim", cfg.dataset.synth_dim);
    get_double("data.synth_spread", cfg.dataset.synth_spread);
    get_double("data.synth_test_fraction", cfg.dataset.synth_test_fraction);
    get_string("data.train_images", cfg.dataset.train_images);
    get_string("data.train_labels", cfg.dataset.train_labels);
    get_string("data.test_images", cfg.dataset.test_images);
    get_string("data.test_labels", cfg.dataset.test_labels);
    if (const auto* v = get("data.cifar_train")) cfg.dataset.cifar_train = split_list(*v);
    if (const auto* v = get("data.cifar_test")) cfg.dataset.cifar_test = split_list(*v);
    get_int("data.subset_train", cfg.dataset.subset_train);
    get_int("data.subset_test", cfg.dataset.subset_test);

    if (const auto* v = get("model.hidden")) {
        cfg.model.hidden.clear();
        for (const auto& item : split_list(*v))
            cfg.model.hidden.push_back(
                static_cast<std::size_t>(parse_int("model.hidden", item)));
    }
    get_bool("model.conv", cfg.model.conv);
    get_int("model.conv_channels", cfg.model.conv_channels);
    get_int("model.conv_kernel", cfg.model.conv_kernel);
    get_int("model.conv_in_h", cfg.model.conv_in_h);
    get_int("model.conv_in_w", cfg.model.conv_in_w);
    get_int("model.conv_in_c", cfg.model.conv_in_c);

    if (const auto* v = get("attack.kind")) {
        if (*v == "none") cfg.attack.kind = adversary::AttackKind::none;
        else if (*v == "label_noise") cfg.attack.kind = adversary::AttackKind::label_noise;
        else if (*v == "gradient_noise") cfg.attack.kind = adversary::AttackKind::gradient_noise;
        else if (*v == "adversarial") cfg.attack.kind = adversary::AttackKind::adversarial;
        else
            throw ConfigError(
                "attack.kind: expected none|label_noise|gradient_noise|adversarial, "
                "got '" + *v + "'");
    }
    get_double("attack.n_level", cfg.attack.n_level);
    get_double("attack.n_lower", cfg.attack.n_lower);
    get_double("attack.n_upper", cfg.attack.n_upper);
    get_double("attack.sigma", cfg.attack.sigma);
    get_double("attack.mu", cfg.attack.mu);
    get_double("attack.pgd_epsilon", cfg.attack.pgd.epsilon);
    get_double("attack.pgd_step", cfg.attack.pgd.step);
    get_int("attack.pgd_iters", cfg.attack.pgd.iters);

    get_bool("aggregation.size_weighted", cfg.aggregator.size_weighted);
    get_int("aggregation.krum_f", cfg.aggregator.krum_f);
    get_double("aggregation.fedprox_mu", cfg.aggregator.fedprox_mu);
    get_int("aggregation.shapley_permutations", cfg.shapley_permutations);

    get_bool("output.checkpoints", cfg.checkpoints);
    get_string("output.checkpoint_dir", cfg.checkpoint_dir);

    for (const auto& [key, value] : map.values)
        if (!seen.count(key))
            throw ConfigError("unknown config key '" + key + "'");

    cfg.validate();
    return cfg;
}

}  // namespace fedif::cfg
