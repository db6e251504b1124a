#include "fedif/report.hpp"

#include <cstdio>

#include "fedif/util.hpp"
#include "json.hpp"

namespace fedif::report {

namespace {

using nlohmann::json;

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json keyed_by_participant(const std::vector<std::size_t>& ids,
                          const std::vector<double>& values) {
    json obj = json::object();
    for (std::size_t k = 0; k < values.size(); ++k)
        obj[std::to_string(ids[k])] = values[k];
    return obj;
}

json attack_json(const adversary::AttackConfig& a) {
    const char* kind = "none";
    switch (a.kind) {
        case adversary::AttackKind::none: kind = "none"; break;
        case adversary::AttackKind::label_noise: kind = "label_noise"; break;
        case adversary::AttackKind::gradient_noise: kind = "gradient_noise"; break;
        case adversary::AttackKind::adversarial: kind = "adversarial"; break;
    }
    return json{{"kind", kind},
                {"n_level", a.n_level},
                {"n_lower", a.n_lower},
                {"n_upper", a.n_upper},
                {"sigma", a.sigma},
                {"mu", a.mu},
                {"pgd_epsilon", a.pgd.epsilon},
                {"pgd_step", a.pgd.step},
                {"pgd_iters", a.pgd.iters}};
}

json config_json(const sim::SimConfig& cfg) {
    json j;
    j["aggregator"] = aggregation::aggregator_name(cfg.aggregator.kind);
    j["run"] = {{"clients", cfg.clients},     {"fraction", cfg.fraction},
                {"local_epochs", cfg.local_epochs}, {"batch_size", cfg.batch_size},
                {"rounds", cfg.rounds},       {"seed", cfg.seed},
                {"threads", cfg.threads}};
    j["optimizer"] = {{"lr", cfg.lr}, {"momentum", cfg.momentum}};
    j["fedif"] = {{"gamma", cfg.gamma},
                  {"wn", cfg.aggregator.fedif.weight_normalization},
                  {"rn", cfg.aggregator.fedif.round_normalization},
                  {"su", cfg.aggregator.fedif.smooth_update}};
    j["data"] = {{"kind", cfg.dataset.kind},
                 {"alpha_dir", cfg.alpha_dir},
                 {"validation_fraction", cfg.validation_fraction},
                 {"min_partition_size", cfg.min_partition_size},
                 {"synth_classes", cfg.dataset.synth_classes},
                 {"synth_per_class", cfg.dataset.synth_per_class},
                 {"synth_dim", cfg.dataset.synth_dim},
                 {"synth_spread", cfg.dataset.synth_spread},
                 {"synth_test_fraction", cfg.dataset.synth_test_fraction},
                 {"train_images", cfg.dataset.train_images},
                 {"train_labels", cfg.dataset.train_labels},
                 {"test_images", cfg.dataset.test_images},
                 {"test_labels", cfg.dataset.test_labels},
                 {"cifar_train", cfg.dataset.cifar_train},
                 {"cifar_test", cfg.dataset.cifar_test},
                 {"subset_train", cfg.dataset.subset_train},
                 {"subset_test", cfg.dataset.subset_test}};
    j["model"] = {{"hidden", cfg.model.hidden},
                  {"conv", cfg.model.conv},
                  {"conv_channels", cfg.model.conv_channels},
                  {"conv_kernel", cfg.model.conv_kernel}};
    j["attack"] = attack_json(cfg.attack);
    j["aggregation"] = {{"size_weighted", cfg.aggregator.size_weighted},
                        {"krum_f", cfg.aggregator.krum_f},
                        {"fedprox_mu", cfg.aggregator.fedprox_mu},
                        {"shapley_permutations", cfg.shapley_permutations}};
    j["output"] = {{"checkpoints", cfg.checkpoints},
                   {"checkpoint_dir", cfg.checkpoint_dir}};
    return j;
}

}  // namespace

const std::vector<std::string>& rounds_csv_columns() {
    static const std::vector<std::string> cols = {
        "round",          "participants",     "phi",
        "psi",            "omega",            "weights",
        "delta_norm",     "val_accuracy",     "test_accuracy",
        "train_loss",     "mean_train_time_s", "agg_time_s"};
    return cols;
}

const std::vector<std::string>& nondeterministic_columns() {
    static const std::vector<std::string> cols = {"mean_train_time_s",
                                                  "agg_time_s"};
    return cols;
}

std::string rounds_csv_header() {
    std::string out;
    const auto& cols = rounds_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ",";
        out += cols[i];
    }
    out += "\n";
    return out;
}

std::string round_record_csv_row(const sim::RoundRecord& rec) {
    json participants = json::array();
    for (auto id : rec.participants) participants.push_back(id);

    std::string out = std::to_string(rec.round);
    out += "," + csv_escape(participants.dump());
    out += "," + csv_escape(keyed_by_participant(rec.participants, rec.phi).dump());
    out += "," + csv_escape(keyed_by_participant(rec.participants, rec.psi).dump());
    out += "," + csv_escape(keyed_by_participant(rec.participants, rec.omega).dump());
    out += "," + csv_escape(keyed_by_participant(rec.participants, rec.weights).dump());
    out += "," + csv_escape(keyed_by_participant(rec.participants, rec.delta_norm).dump());
    out += "," + fmt_double(rec.val_accuracy);
    out += "," + fmt_double(rec.test_accuracy);
    out += "," + fmt_double(rec.train_loss);
    out += "," + fmt_double(rec.mean_train_time_s);
    out += "," + fmt_double(rec.agg_time_s);
    out += "\n";
    return out;
}

std::string sim_config_json(const sim::SimConfig& cfg) {
    return config_json(cfg).dump(2);
}

std::string manifest_json(const sim::SimConfig& cfg, const std::string& config_hash,
                          const std::string& out_dir) {
    json j;
    j["artifact_version"] = "0.1.0";
    j["config_hash_fnv1a64"] = config_hash;
    j["start_time_utc"] = util::utc_timestamp();
    j["config"] = config_json(cfg);
    j["outputs"] = {{"rounds_csv", out_dir + "/rounds.csv"},
                    {"summary_json", out_dir + "/summary.json"}};
    j["rounds_csv_columns"] = rounds_csv_columns();
    j["nondeterministic_columns"] = nondeterministic_columns();
    return j.dump(2) + "\n";
}

std::string summary_json(const sim::SimConfig& cfg, const sim::RunResult& result) {
    const auto& records = result.records;
    double mean_train = 0.0, mean_agg = 0.0;
    for (const auto& r : records) {
        mean_train += r.mean_train_time_s;
        mean_agg += r.agg_time_s;
    }
    if (!records.empty()) {
        mean_train /= static_cast<double>(records.size());
        mean_agg /= static_cast<double>(records.size());
    }

    json j;
    j["aggregator"] = aggregation::aggregator_name(cfg.aggregator.kind);
    j["seed"] = cfg.seed;
    j["rounds"] = records.size();
    j["final_val_accuracy"] = records.empty() ? 0.0 : records.back().val_accuracy;
    j["final_test_accuracy"] = records.empty() ? 0.0 : records.back().test_accuracy;
    j["final_train_loss"] = records.empty() ? 0.0 : records.back().train_loss;
    j["best_val_accuracy"] = result.best_val_accuracy;
    j["best_val_round"] = result.best_val_round;
    j["best_test_accuracy"] = result.best_test_accuracy;
    j["best_test_round"] = result.best_test_round;
    j["mean_train_time_s"] = mean_train;
    j["mean_agg_time_s"] = mean_agg;
    j["omega"] = result.ledger.omega;
    j["cumulative_influence"] = result.ledger.cumulative;
    j["nondeterministic_columns"] = nondeterministic_columns();
    if (!result.noise_report.empty()) {
        j["noise_term"] = {
            {"rounds", result.noise_report.rows.size()},
            {"frac_adaptive_le_uniform", result.noise_report.frac_adaptive_le_uniform},
            {"median_adaptive", result.noise_report.median_adaptive},
            {"median_uniform", result.noise_report.median_uniform}};
    }
    return j.dump(2) + "\n";
}

std::string noise_report_json(const theory::NoiseTermReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"round", row.round},
                        {"adaptive_sum", row.adaptive_sum},
                        {"uniform_sum", row.uniform_sum},
                        {"ratio", row.ratio}});
    json j;
    j["rows"] = rows;
    j["frac_adaptive_le_uniform"] = report.frac_adaptive_le_uniform;
    j["median_adaptive"] = report.median_adaptive;
    j["median_uniform"] = report.median_uniform;
    return j.dump(2) + "\n";
}

}  // namespace fedif::report
