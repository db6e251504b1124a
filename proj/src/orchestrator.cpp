#include "fedif/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <future>
#include <numeric>

#include "fedif/checkpoint.hpp"
#include "fedif/util.hpp"

namespace fedif::sim {

void SimConfig::validate() const {
    if (clients < 1) throw ConfigError("run.clients: must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("run.fraction: must be in (0,1]");
    if (local_epochs < 1) throw ConfigError("run.local_epochs: must be >= 1");
    if (batch_size < 1) throw ConfigError("run.batch_size: must be >= 1");
    if (rounds < 1) throw ConfigError("run.rounds: must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("optimizer.lr: must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("optimizer.momentum: must be in [0,1)");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("fedif.gamma: must be in (0,1]");
    if (!(alpha_dir > 0.0)) throw ConfigError("data.alpha_dir: must be > 0");
    if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0))
        throw ConfigError("data.validation_fraction: must be in [0,1]");
    if (threads < 1) throw ConfigError("run.threads: must be >= 1");
    if (shapley_permutations < 1)
        throw ConfigError("aggregation.shapley_permutations: must be >= 1");
    if (dataset.kind != "synth" && dataset.kind != "fashion_mnist" &&
        dataset.kind != "cifar10")
        throw ConfigError("data.kind: expected synth|fashion_mnist|cifar10, got '" +
                          dataset.kind + "'");
    const bool needs_validation =
        aggregator.kind == aggregation::AggregatorKind::fedif ||
        aggregator.kind == aggregation::AggregatorKind::mc_shapley;
    if (needs_validation && validation_fraction == 0.0)
        throw ConfigError(
            "data.validation_fraction: must be > 0 for fedif/mc_shapley");
    if (!model.conv && model.hidden.empty())
        throw ConfigError("model.hidden: need at least one hidden layer");
    attack.validate();
    aggregator.validate();
    if (checkpoints && checkpoint_dir.empty())
        throw ConfigError("output.checkpoint_dir: required when checkpoints=true");
}

std::vector<std::size_t> select_clients(std::size_t clients, double fraction,
                                        int round, std::uint64_t master_seed) {
    if (clients < 1) throw ConfigError("select_clients: clients must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("select_clients: fraction must be in (0,1]");
    const std::size_t m = std::max<std::size_t>(
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(clients))),
        1);
    rng::StreamRng rng(master_seed, "select_clients",
                       static_cast<std::uint64_t>(round));
    return rng.sample_without_replacement(clients, m);
}

std::vector<double> local_training(std::span<const double> start_params,
                                   const nn::ModelSpec& spec,
                                   const Matrix& features,
                                   std::span<const int> labels,
                                   const LocalTrainOpts& opts,
                                   rng::StreamRng& rng,
                                   const AdvSamplePlan* adv) {
    std::vector<double> params(start_params.begin(), start_params.end());
    if (opts.epochs == 0) return params;
    const std::size_t n = features.rows;
    if (n == 0) {
        util::warn("local_training: empty data slice, returning start params");
        return params;
    }

    nn::OptimizerState opt;
    opt.lr = opts.lr;
    opt.momentum = opts.momentum;
    opt.velocity.assign(params.size(), 0.0);

    std::vector<double> grad;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n;
             start += static_cast<std::size_t>(opts.batch_size)) {
            const std::size_t b =
                std::min<std::size_t>(opts.batch_size, n - start);
            Matrix batch(b, features.cols);
            std::vector<int> batch_labels(b);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t src = order[start + i];
                std::copy(features.data.begin() + src * features.cols,
                          features.data.begin() + (src + 1) * features.cols,
                          batch.data.begin() + i * features.cols);
                batch_labels[i] = labels[src];
            }

            if (adv) {
                // Regenerate adversarial versions of the flagged examples
                // against the current local model.
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < b; ++i)
                    if (adv->is_adv[order[start + i]]) rows.push_back(i);
                if (!rows.empty()) {
                    Matrix sub(rows.size(), batch.cols);
                    std::vector<int> sub_labels(rows.size());
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        std::copy(batch.data.begin() + rows[r] * batch.cols,
                                  batch.data.begin() + (rows[r] + 1) * batch.cols,
                                  sub.data.begin() + r * sub.cols);
                        sub_labels[r] = batch_labels[rows[r]];
                    }
                    const Matrix hostile = adversary::pgd_attack(
                        params, spec, sub, sub_labels, adv->pgd, rng);
                    for (std::size_t r = 0; r < rows.size(); ++r)
                        std::copy(hostile.data.begin() + r * sub.cols,
                                  hostile.data.begin() + (r + 1) * sub.cols,
                                  batch.data.begin() + rows[r] * batch.cols);
                }
            }

            nn::loss_and_param_grad(params, spec, batch, batch_labels, grad);
            if (opts.prox_mu && *opts.prox_mu > 0.0) {
                auto [penalty, pgrad] =
                    aggregation::local_prox_term(params, start_params, *opts.prox_mu);
                (void)penalty;
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pgrad[i];
            }
            nn::sgd_step(params, grad, opt);
        }
    }
    return params;
}

Simulation::Simulation(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    load_data();

    // Resolve the model against the dataset.
    if (cfg_.model.conv) {
        nn::ConvSpec conv;
        conv.out_channels = cfg_.model.conv_channels;
        conv.kernel = cfg_.model.conv_kernel;
        if (cfg_.model.conv_in_h != 0) {
            conv.in_h = cfg_.model.conv_in_h;
            conv.in_w = cfg_.model.conv_in_w;
            conv.in_c = cfg_.model.conv_in_c;
        } else if (cfg_.dataset.kind == "fashion_mnist") {
            conv.in_h = conv.in_w = 28;
            conv.in_c = 1;
        } else if (cfg_.dataset.kind == "cifar10") {
            conv.in_h = conv.in_w = 32;
            conv.in_c = 3;
        } else {
            throw ConfigError(
                "model.conv_in_h/conv_in_w/conv_in_c: required for conv on "
                "synthetic data");
        }
        if (conv.in_dim() != train_.dim())
            throw ConfigError("model.conv geometry does not match feature dim " +
                              std::to_string(train_.dim()));
        std::vector<std::size_t> tail = cfg_.model.hidden;
        tail.push_back(static_cast<std::size_t>(train_.classes));
        spec_ = nn::ModelSpec::conv_mlp(conv, std::move(tail));
    } else {
        std::vector<std::size_t> sizes;
        sizes.push_back(train_.dim());
        for (auto h : cfg_.model.hidden) sizes.push_back(h);
        sizes.push_back(static_cast<std::size_t>(train_.classes));
        spec_ = nn::ModelSpec::mlp(std::move(sizes));
    }

    setup_clients();
    ledger_ = valuation::InfluenceLedger(cfg_.clients, cfg_.gamma);
    rng::StreamRng init_rng(cfg_.seed, "init");
    params_ = nn::init_params(spec_, init_rng);
}

void Simulation::load_data() {
    const auto& dc = cfg_.dataset;
    data::Dataset test_full;
    if (dc.kind == "synth") {
        const auto full =
            data::synth_blobs(dc.synth_classes, dc.synth_per_class, dc.synth_dim,
                              dc.synth_spread, cfg_.seed);
        auto [tr, te] = data::split_train_test(full, dc.synth_test_fraction,
                                               cfg_.seed);
        train_ = std::move(tr);
        test_full = std::move(te);
    } else if (dc.kind == "fashion_mnist") {
        train_ = data::load_idx(dc.train_images, dc.train_labels);
        test_full = data::load_idx(dc.test_images, dc.test_labels);
    } else {
        train_ = data::load_cifar10(dc.cifar_train);
        test_full = data::load_cifar10(dc.cifar_test);
    }

    auto subset = [&](data::Dataset& ds, std::size_t keep, const char* stream) {
        if (keep == 0 || keep >= ds.size()) return;
        std::vector<std::size_t> idx(ds.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        rng::StreamRng rng(cfg_.seed, stream);
        rng.shuffle(idx);
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        ds = data::take(ds, idx, ds.name + "_subset");
    };
    subset(train_, dc.subset_train, "subset_train");
    subset(test_full, dc.subset_test, "subset_test");

    const auto split = data::split_validation(test_full, cfg_.validation_fraction,
                                              cfg_.seed);
    val_ = data::take(test_full, split.validation_indices, test_full.name + "_val");
    test_ = data::take(test_full, split.test_indices, test_full.name + "_test");
}

void Simulation::setup_clients() {
    const auto partition =
        data::dirichlet_partition(train_, cfg_.clients, cfg_.alpha_dir, cfg_.seed,
                                  cfg_.min_partition_size);
    assignment_ = adversary::assign_adversaries(cfg_.clients, cfg_.attack, cfg_.seed);

    clients_.resize(cfg_.clients);
    for (std::size_t id = 0; id < cfg_.clients; ++id) {
        ClientState& c = clients_[id];
        c.id = id;
        c.indices = partition.client_indices[id];
        c.noisy = assignment_.is_noisy(id);
        c.noise_fraction = assignment_.fraction_of(id);
        c.features = Matrix(c.indices.size(), train_.dim());
        c.labels.resize(c.indices.size());
        for (std::size_t i = 0; i < c.indices.size(); ++i) {
            const auto src = c.indices[i];
            std::copy(train_.features.data.begin() + src * train_.dim(),
                      train_.features.data.begin() + (src + 1) * train_.dim(),
                      c.features.data.begin() + i * train_.dim());
            c.labels[i] = train_.labels[src];
        }
        if (c.noisy && cfg_.attack.kind == adversary::AttackKind::label_noise) {
            // Static corruption, fixed at assignment time.
            rng::StreamRng flip_rng(cfg_.seed, "label_flip", id);
            c.labels = adversary::flip_labels(c.labels, c.noise_fraction,
                                              train_.classes, flip_rng);
        }
    }
}

std::vector<double> Simulation::train_participant(std::size_t id, int round,
                                                  double& wall_seconds) const {
    const ClientState& c = clients_[id];
    LocalTrainOpts opts;
    opts.epochs = cfg_.local_epochs;
    opts.batch_size = cfg_.batch_size;
    opts.lr = cfg_.lr;
    opts.momentum = cfg_.momentum;
    if (cfg_.aggregator.kind == aggregation::AggregatorKind::fedprox)
        opts.prox_mu = cfg_.aggregator.fedprox_mu;

    std::optional<AdvSamplePlan> plan;
    if (c.noisy && cfg_.attack.kind == adversary::AttackKind::adversarial) {
        plan.emplace();
        plan->pgd = cfg_.attack.pgd;
        plan->is_adv.assign(c.indices.size(), 0);
        const auto count = static_cast<std::size_t>(std::floor(
            c.noise_fraction * static_cast<double>(c.indices.size())));
        rng::StreamRng subset_rng(cfg_.seed, "adv_subset", id,
                                  static_cast<std::uint64_t>(round));
        for (const auto pos :
             subset_rng.sample_without_replacement(c.indices.size(), count))
            plan->is_adv[pos] = 1;
    }

    rng::StreamRng local_rng(cfg_.seed, "local", id,
                             static_cast<std::uint64_t>(round));
    util::Stopwatch watch;
    auto result = local_training(params_, spec_, c.features, c.labels, opts,
                                 local_rng, plan ? &*plan : nullptr);
    wall_seconds = watch.seconds();
    return result;
}

RoundRecord Simulation::run_round(int round) {
    using aggregation::AggregatorKind;

    RoundRecord rec;
    rec.round = round;
    rec.participants = select_clients(cfg_.clients, cfg_.fraction, round, cfg_.seed);

    // Clients with no data contribute nothing this round.
    std::erase_if(rec.participants, [&](std::size_t id) {
        if (clients_[id].indices.empty()) {
            util::warn("client " + std::to_string(id) +
                       " has no data, skipping this round");
            return true;
        }
        return false;
    });
    if (rec.participants.empty())
        throw PartitionError("run_round: no participants with data");
    const std::size_t m = rec.participants.size();

    // Local training, optionally in parallel. Determinism is unaffected by
    // scheduling because every random decision uses a (purpose, id, round)
    // stream.
    std::vector<std::vector<double>> locals(m);
    std::vector<double> train_times(m, 0.0);
    if (cfg_.threads > 1 && m > 1) {
        std::vector<std::future<void>> tasks;
        std::atomic<std::size_t> next{0};
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(cfg_.threads), m);
        for (std::size_t w = 0; w < workers; ++w) {
            tasks.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= m) return;
                    locals[k] = train_participant(rec.participants[k], round,
                                                  train_times[k]);
                }
            }));
        }
        for (auto& t : tasks) t.get();
    } else {
        for (std::size_t k = 0; k < m; ++k)
            locals[k] = train_participant(rec.participants[k], round,
                                          train_times[k]);
    }
    rec.mean_train_time_s =
        std::accumulate(train_times.begin(), train_times.end(), 0.0) /
        static_cast<double>(m);

    // Gradient-noise adversaries perturb the uploaded update. The injected
    // noise is recorded for the noise-term diagnostic; the aggregator under
    // test never sees it separately.
    std::vector<double> delta_sq(m, 0.0);
    if (cfg_.attack.kind == adversary::AttackKind::gradient_noise) {
        rec.delta_norm.assign(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t id = rec.participants[k];
            if (!clients_[id].noisy) continue;
            rng::StreamRng noise_rng(cfg_.seed, "gradient_noise", id,
                                     static_cast<std::uint64_t>(round));
            auto [perturbed, delta] = adversary::perturb_update(
                locals[k], cfg_.attack.mu, cfg_.attack.sigma, noise_rng);
            locals[k] = std::move(perturbed);
            double sq = 0.0;
            for (double v : delta) sq += v * v;
            delta_sq[k] = sq;
            rec.delta_norm[k] = std::sqrt(sq);
        }
    }

    // Scoring, weighting and averaging (the aggregation cost under study).
    util::Stopwatch agg_watch;
    const AggregatorKind kind = cfg_.aggregator.kind;
    std::vector<double> new_params;
    std::vector<double> raw_dots;

    if (kind == AggregatorKind::fedif || kind == AggregatorKind::mc_shapley) {
        std::vector<double> phi(m, 0.0);
        if (kind == AggregatorKind::fedif) {
            const auto val_grad = valuation::validation_gradient(
                params_, spec_, val_.features, val_.labels);
            raw_dots.assign(m, 0.0);
            std::vector<double> delta_w(params_.size());
            for (std::size_t k = 0; k < m; ++k) {
                double norm_sq = 0.0, dot = 0.0;
                for (std::size_t i = 0; i < params_.size(); ++i) {
                    delta_w[i] = params_[i] - locals[k][i];
                    norm_sq += delta_w[i] * delta_w[i];
                    dot += delta_w[i] * val_grad[i];
                }
                raw_dots[k] = dot;
                if (cfg_.aggregator.fedif.weight_normalization) {
                    if (norm_sq == 0.0) {
                        util::warn("round_influence: zero-norm update (stalled "
                                   "client), scoring 0");
                        phi[k] = 0.0;
                    } else {
                        phi[k] = dot / std::sqrt(norm_sq);
                    }
                } else {
                    phi[k] = dot;
                }
            }
        } else {
            rng::StreamRng shapley_rng(cfg_.seed, "shapley",
                                       static_cast<std::uint64_t>(round));
            phi = valuation::mc_shapley_scores(locals, params_, spec_,
                                               val_.features, val_.labels,
                                               cfg_.shapley_permutations,
                                               shapley_rng);
        }

        const bool use_rn = kind == AggregatorKind::mc_shapley ||
                            cfg_.aggregator.fedif.round_normalization;
        const bool use_su = kind == AggregatorKind::mc_shapley ||
                            cfg_.aggregator.fedif.smooth_update;
        std::vector<double> psi =
            use_rn ? valuation::minmax_normalize(phi) : phi;
        std::vector<double> omega(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t id = rec.participants[k];
            omega[k] = use_su
                           ? valuation::smooth_update(ledger_.omega[id], psi[k],
                                                      cfg_.gamma, true)
                           : psi[k];
            ledger_.omega[id] = omega[k];
        }
        rec.weights = valuation::aggregation_weights(omega);
        new_params = aggregation::aggregate_weighted(locals, rec.weights);

        rec.phi = phi;
        rec.psi = std::move(psi);
        rec.omega = std::move(omega);
    } else if (kind == AggregatorKind::krum) {
        std::size_t f;
        if (cfg_.aggregator.krum_f >= 0) {
            f = static_cast<std::size_t>(cfg_.aggregator.krum_f);
        } else {
            f = cfg_.attack.kind == adversary::AttackKind::none
                    ? 1
                    : static_cast<std::size_t>(
                          std::floor(cfg_.attack.n_level * static_cast<double>(m)));
            // Auto-selected f is clamped into Krum's valid range.
            const std::size_t f_max = m >= 3 ? (m - 3) / 2 : 0;
            if (f > f_max) {
                util::warn("krum: clamping auto f from " + std::to_string(f) +
                           " to " + std::to_string(f_max));
                f = f_max;
            }
        }
        const std::size_t chosen = aggregation::krum_index(locals, f);
        new_params = locals[chosen];
        rec.weights.assign(m, 0.0);
        rec.weights[chosen] = 1.0;
    } else {
        // fedavg / fedprox
        if (cfg_.aggregator.size_weighted) {
            std::vector<std::size_t> sizes(m);
            for (std::size_t k = 0; k < m; ++k)
                sizes[k] = clients_[rec.participants[k]].indices.size();
            new_params = aggregation::aggregate_fedavg(locals, sizes);
            const double total = static_cast<double>(
                std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
            rec.weights.resize(m);
            for (std::size_t k = 0; k < m; ++k)
                rec.weights[k] = static_cast<double>(sizes[k]) / total;
        } else {
            new_params = aggregation::aggregate_fedavg(locals);
            rec.weights.assign(m, 1.0 / static_cast<double>(m));
        }
    }
    rec.agg_time_s = agg_watch.seconds();
    params_ = std::move(new_params);

    // Ledger entry for scoring aggregators (feeds the noise-term report and
    // the accumulative-influence diagnostic).
    if (!rec.phi.empty()) {
        valuation::InfluenceLedger::RoundEntry entry;
        entry.round = round;
        entry.participants = rec.participants;
        entry.phi = rec.phi;
        entry.psi = rec.psi;
        entry.omega_after = rec.omega;
        entry.weights = rec.weights;
        entry.raw_dot = raw_dots;
        if (cfg_.attack.kind == adversary::AttackKind::gradient_noise)
            entry.delta_sq_norm = delta_sq;
        for (std::size_t k = 0; k < raw_dots.size(); ++k)
            ledger_.cumulative[rec.participants[k]] += raw_dots[k];
        ledger_.rounds.push_back(std::move(entry));
    }

    const auto val_eval = val_.size() > 0
                              ? nn::evaluate(params_, spec_, val_.features, val_.labels)
                              : nn::EvalResult{};
    rec.val_accuracy = val_eval.accuracy;
    const auto test_eval = nn::evaluate(params_, spec_, test_.features, test_.labels);
    rec.test_accuracy = test_eval.accuracy;
    rec.train_loss =
        nn::evaluate(params_, spec_, train_.features, train_.labels).loss;
    return rec;
}

RunResult Simulation::run(
    const std::function<void(const RoundRecord&)>& on_round) {
    RunResult result;
    if (cfg_.checkpoints) {
        std::filesystem::create_directories(cfg_.checkpoint_dir);
        io::save_param_vector(cfg_.checkpoint_dir + "/round_000.fpv", params_);
    }
    for (int t = 1; t <= cfg_.rounds; ++t) {
        result.records.push_back(run_round(t));
        if (on_round) on_round(result.records.back());
        if (cfg_.checkpoints) {
            char name[32];
            std::snprintf(name, sizeof(name), "/round_%03d.fpv", t);
            io::save_param_vector(cfg_.checkpoint_dir + name, params_);
        }
        const auto& rec = result.records.back();
        if (rec.val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = rec.val_accuracy;
            result.best_val_round = t;
        }
        if (rec.test_accuracy > result.best_test_accuracy) {
            result.best_test_accuracy = rec.test_accuracy;
            result.best_test_round = t;
        }
    }
    result.final_params = params_;
    result.ledger = ledger_;
    result.noise_report = theory::noise_term_report(ledger_);
    return result;
}

}  // namespace fedif::sim
