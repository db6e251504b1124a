#include "fedif/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fedif/config.hpp"
#include "fedif/report.hpp"
#include "fedif/theory.hpp"
#include "fedif/util.hpp"
#include "json.hpp"

namespace fedif::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int guard(const char* what, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s: config error: %s\n", what, e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "%s: data error: %s\n", what, e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: error: %s\n", what, e.what());
        return 1;
    }
}

sim::SimConfig resolve(const std::string& config_path,
                       const std::vector<std::string>& overrides,
                       std::string* config_hash) {
    std::string raw;
    auto map = cfg::load_config_file(config_path, &raw);
    for (const auto& o : overrides) cfg::apply_override(map, o);
    if (config_hash) *config_hash = util::fnv1a64_hex(raw);
    return cfg::resolve_sim_config(map);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f << content;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

sim::RunResult execute_run(const sim::SimConfig& cfg, const std::string& config_hash,
                           const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_file(out_dir + "/manifest.json",
               report::manifest_json(cfg, config_hash, out_dir));

    sim::Simulation simulation(cfg);
    std::ofstream rounds(out_dir + "/rounds.csv", std::ios::binary | std::ios::trunc);
    if (!rounds) throw FormatError(out_dir + "/rounds.csv: cannot open for writing");
    rounds << report::rounds_csv_header();

    auto result = simulation.run([&](const sim::RoundRecord& rec) {
        rounds << report::round_record_csv_row(rec);
        rounds.flush();
    });

    write_file(out_dir + "/summary.json", report::summary_json(cfg, result));
    if (!result.noise_report.empty())
        write_file(out_dir + "/noise_term_report.json",
                   report::noise_report_json(result.noise_report));
    return result;
}

int cmd_run(const RunOptions& opts) {
    return guard("run", [&]() {
        std::string hash;
        const auto cfg = resolve(opts.config_path, opts.overrides, &hash);
        const auto result = execute_run(cfg, hash, opts.out_dir);
        std::printf("run: %d rounds, final val acc %.4f, test acc %.4f -> %s\n",
                    static_cast<int>(result.records.size()),
                    result.records.back().val_accuracy,
                    result.records.back().test_accuracy, opts.out_dir.c_str());
        return 0;
    });
}

int cmd_sweep(const SweepOptions& opts) {
    return guard("sweep", [&]() {
        if (opts.seeds.empty() && opts.aggregators.empty() &&
            opts.attacks.empty() && opts.gammas.empty())
            throw ConfigError(
                "sweep: empty sweep spec (give --seeds, --aggregators, "
                "--attacks or --gammas)");

        std::string hash;
        const auto base = resolve(opts.config_path, opts.overrides, &hash);

        const std::vector<std::uint64_t> seeds =
            opts.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : opts.seeds;
        const std::vector<std::string> aggregators =
            opts.aggregators.empty()
                ? std::vector<std::string>{aggregation::aggregator_name(
                      base.aggregator.kind)}
                : opts.aggregators;
        std::vector<std::string> attacks = opts.attacks;
        if (attacks.empty()) attacks = {"__base__"};
        std::vector<double> gammas = opts.gammas;
        if (gammas.empty()) gammas = {base.gamma};

        fs::create_directories(opts.out_dir);
        std::ofstream summary(opts.out_dir + "/sweep_summary.csv",
                              std::ios::binary | std::ios::trunc);
        if (!summary)
            throw FormatError(opts.out_dir + "/sweep_summary.csv: cannot open");
        summary << "aggregator,attack,gamma,seeds,mean_final_test_acc,"
                   "std_final_test_acc,mean_final_val_acc,std_final_val_acc,"
                   "mean_train_time_s,mean_agg_time_s\n";

        int total_runs = 0;
        for (const auto& agg_name : aggregators) {
            for (const auto& attack_name : attacks) {
                for (const double gamma : gammas) {
                    std::vector<double> test_accs, val_accs, train_ts, agg_ts;
                    const std::string attack_label =
                        attack_name == "__base__" ? "base" : attack_name;
                    char gbuf[32];
                    std::snprintf(gbuf, sizeof(gbuf), "%g", gamma);
                    const std::string cell_dir = opts.out_dir + "/" + agg_name +
                                                 "_" + attack_label + "_g" + gbuf;

                    for (const auto seed : seeds) {
                        sim::SimConfig cfg = base;
                        cfg.aggregator.kind =
                            aggregation::aggregator_from_name(agg_name);
                        if (attack_name != "__base__") {
                            if (attack_name == "none")
                                cfg.attack.kind = adversary::AttackKind::none;
                            else if (attack_name == "label_noise")
                                cfg.attack.kind = adversary::AttackKind::label_noise;
                            else if (attack_name == "gradient_noise")
                                cfg.attack.kind = adversary::AttackKind::gradient_noise;
                            else if (attack_name == "adversarial")
                                cfg.attack.kind = adversary::AttackKind::adversarial;
                            else
                                throw ConfigError("sweep: unknown attack '" +
                                                  attack_name + "'");
                        }
                        cfg.gamma = gamma;
                        cfg.seed = seed;
                        cfg.validate();

                        const std::string run_dir =
                            cell_dir + "/seed_" + std::to_string(seed);
                        const auto result = execute_run(cfg, hash, run_dir);
                        ++total_runs;
                        test_accs.push_back(result.records.back().test_accuracy);
                        val_accs.push_back(result.records.back().val_accuracy);
                        double mt = 0.0, ma = 0.0;
                        for (const auto& r : result.records) {
                            mt += r.mean_train_time_s;
                            ma += r.agg_time_s;
                        }
                        train_ts.push_back(mt / static_cast<double>(
                                                    result.records.size()));
                        agg_ts.push_back(ma / static_cast<double>(
                                                  result.records.size()));
                    }

                    char row[512];
                    std::snprintf(row, sizeof(row),
                                  "%s,%s,%g,%zu,%.6f,%.6f,%.6f,%.6f,%.6g,%.6g\n",
                                  agg_name.c_str(), attack_label.c_str(), gamma,
                                  seeds.size(), mean_of(test_accs),
                                  sample_std(test_accs), mean_of(val_accs),
                                  sample_std(val_accs), mean_of(train_ts),
                                  mean_of(agg_ts));
                    summary << row;
                    summary.flush();
                    std::printf("sweep cell %s/%s/gamma=%g: mean test acc %.4f "
                                "(+/- %.4f) over %zu seeds\n",
                                agg_name.c_str(), attack_label.c_str(), gamma,
                                mean_of(test_accs), sample_std(test_accs),
                                seeds.size());
                }
            }
        }
        std::printf("sweep: %d runs -> %s/sweep_summary.csv\n", total_runs,
                    opts.out_dir.c_str());
        return 0;
    });
}

int cmd_bench_aggregation(const BenchOptions& opts) {
    return guard("bench-aggregation", [&]() {
        if (opts.methods.empty())
            throw ConfigError("bench-aggregation: no methods given");
        std::string hash;
        const auto base = resolve(opts.config_path, opts.overrides, &hash);

        struct Row {
            std::string method;
            double mean_train_s = 0.0;
            double mean_agg_s = 0.0;
            double final_test_acc = 0.0;
        };
        std::vector<Row> rows;
        for (const auto& method : opts.methods) {
            sim::SimConfig cfg = base;
            cfg.aggregator.kind = aggregation::aggregator_from_name(method);
            cfg.validate();
            const auto result =
                execute_run(cfg, hash, opts.out_dir + "/" + method);
            Row row;
            row.method = method;
            for (const auto& r : result.records) {
                row.mean_train_s += r.mean_train_time_s;
                row.mean_agg_s += r.agg_time_s;
            }
            row.mean_train_s /= static_cast<double>(result.records.size());
            row.mean_agg_s /= static_cast<double>(result.records.size());
            row.final_test_acc = result.records.back().test_accuracy;
            rows.push_back(row);
        }

        json j;
        j["methods"] = json::array();
        double fedif_agg = -1.0, shapley_agg = -1.0;
        std::printf("%-12s %14s %14s %10s\n", "method", "train_s/round",
                    "agg_s/round", "test_acc");
        for (const auto& row : rows) {
            std::printf("%-12s %14.6f %14.6f %10.4f\n", row.method.c_str(),
                        row.mean_train_s, row.mean_agg_s, row.final_test_acc);
            j["methods"].push_back({{"method", row.method},
                                    {"mean_train_time_s", row.mean_train_s},
                                    {"mean_agg_time_s", row.mean_agg_s},
                                    {"final_test_accuracy", row.final_test_acc}});
            if (row.method == "fedif") fedif_agg = row.mean_agg_s;
            if (row.method == "mc_shapley") shapley_agg = row.mean_agg_s;
        }
        if (fedif_agg > 0.0 && shapley_agg >= 0.0) {
            const double ratio = shapley_agg / fedif_agg;
            j["ratio_mc_shapley_over_fedif"] = ratio;
            std::printf("mc_shapley/fedif aggregation-time ratio: %.2fx\n", ratio);
        }
        write_file(opts.out_dir + "/bench.json", j.dump(2) + "\n");
        return 0;
    });
}

int cmd_verify(const VerifyOptions& opts) {
    return guard("verify", [&]() {
        fs::create_directories(opts.out_dir);

        // Exact decomposition check on random weighted gradient sets.
        rng::StreamRng rng(opts.seed, "verify_lemma1");
        double max_rel_gap = 0.0;
        for (int i = 0; i < opts.instances; ++i) {
            const std::size_t k = 2 + rng.uniform_int(9);
            const std::size_t dim = 1 + rng.uniform_int(50);
            std::vector<std::vector<double>> grads(k, std::vector<double>(dim));
            for (auto& g : grads)
                for (auto& v : g) v = rng.normal(0.0, 2.0);
            auto weights = rng.dirichlet_symmetric(1.0, k);
            const auto gap = theory::lemma1_identity_check(grads, weights);
            const double scale = std::max({std::abs(gap.lhs), std::abs(gap.rhs), 1e-300});
            max_rel_gap = std::max(max_rel_gap, gap.gap / scale);
        }
        const bool lemma_pass = max_rel_gap < 1e-10;
        std::printf("lemma1 identity: %d instances, max relative gap %.3e -> %s\n",
                    opts.instances, max_rel_gap, lemma_pass ? "pass" : "FAIL");

        // Noise-term diagnostic on a small gradient-noise run.
        sim::SimConfig cfg;
        cfg.clients = 10;
        cfg.fraction = 0.5;
        cfg.rounds = 10;
        cfg.local_epochs = 2;
        cfg.seed = opts.seed;
        cfg.dataset.synth_classes = 4;
        cfg.dataset.synth_per_class = 80;
        cfg.dataset.synth_dim = 16;
        cfg.model.hidden = {16};
        cfg.lr = 0.05;
        cfg.aggregator.kind = aggregation::AggregatorKind::fedif;
        cfg.attack.kind = adversary::AttackKind::gradient_noise;
        cfg.attack.n_level = 0.5;
        cfg.attack.sigma = 0.1;
        cfg.validate();
        sim::Simulation simulation(cfg);
        const auto result = simulation.run();
        const auto& nr = result.noise_report;
        std::printf("noise term: %zu noisy rounds, adaptive<=uniform in %.0f%%, "
                    "median adaptive %.4g vs uniform %.4g\n",
                    nr.rows.size(), 100.0 * nr.frac_adaptive_le_uniform,
                    nr.median_adaptive, nr.median_uniform);

        json j;
        j["lemma1"] = {{"instances", opts.instances},
                       {"max_relative_gap", max_rel_gap},
                       {"pass", lemma_pass}};
        j["noise_term"] = {{"rounds", nr.rows.size()},
                           {"frac_adaptive_le_uniform", nr.frac_adaptive_le_uniform},
                           {"median_adaptive", nr.median_adaptive},
                           {"median_uniform", nr.median_uniform}};
        write_file(opts.out_dir + "/verify_report.json", j.dump(2) + "\n");
        return lemma_pass ? 0 : 1;
    });
}

}  // namespace fedif::cli
