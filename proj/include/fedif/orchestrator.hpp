#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedif/adversary.hpp"
#include "fedif/aggregation.hpp"
#include "fedif/dataset.hpp"
#include "fedif/nn.hpp"
#include "fedif/theory.hpp"
#include "fedif/valuation.hpp"

namespace fedif::sim {

struct DatasetConfig {
    std::string kind = "synth";  // synth | fashion_mnist | cifar10
    // synth
    int synth_classes = 5;
    int synth_per_class = 250;
    int synth_dim = 32;
    double synth_spread = 0.15;
    double synth_test_fraction = 0.2;
    // fashion_mnist (IDX pairs)
    std::string train_images, train_labels, test_images, test_labels;
    // cifar10 (binary batches)
    std::vector<std::string> cifar_train;
    std::vector<std::string> cifar_test;
    // optional random subsetting for desk-scale runs on real data (0 = all)
    std::size_t subset_train = 0;
    std::size_t subset_test = 0;
};

struct ModelConfig {
    std::vector<std::size_t> hidden = {64};
    bool conv = false;
    std::size_t conv_channels = 8;
    std::size_t conv_kernel = 3;
    // image geometry; 0 means derive from the dataset kind
    std::size_t conv_in_h = 0, conv_in_w = 0, conv_in_c = 0;
};

struct SimConfig {
    std::size_t clients = 20;       // K
    double fraction = 0.25;         // C
    int local_epochs = 5;           // E
    int batch_size = 16;            // B
    int rounds = 30;                // T
    double lr = 0.001;
    double momentum = 0.9;
    double gamma = 0.3;
    double alpha_dir = 1.0;
    double validation_fraction = 0.2;
    std::uint64_t seed = 1;
    int threads = 1;
    std::size_t min_partition_size = 5;
    std::size_t shapley_permutations = 8;
    bool checkpoints = false;
    std::string checkpoint_dir;

    ModelConfig model;
    DatasetConfig dataset;
    adversary::AttackConfig attack;
    aggregation::AggregatorConfig aggregator;

    void validate() const;  // throws ConfigError naming the field
};

struct RoundRecord {
    int round = 0;
    std::vector<std::size_t> participants;
    // Per participant; empty for aggregators that do not score clients.
    std::vector<double> phi, psi, omega, weights;
    std::vector<double> delta_norm;  // ||injected noise||, empty when no noise
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double train_loss = 0.0;
    double mean_train_time_s = 0.0;  // wall time, mean over participants
    double agg_time_s = 0.0;         // scoring + weighting + averaging only
};

struct ClientState {
    std::size_t id = 0;
    std::vector<std::size_t> indices;  // into the training set
    bool noisy = false;
    double noise_fraction = 0.0;
    Matrix features;           // materialized local data
    std::vector<int> labels;   // flipped in place for label-noise clients
};

/// Uniform sample without replacement of size max(floor(fraction*clients), 1),
/// deterministic in (master seed, round). Returns sorted ids.
std::vector<std::size_t> select_clients(std::size_t clients, double fraction,
                                        int round, std::uint64_t master_seed);

struct LocalTrainOpts {
    int epochs = 5;
    int batch_size = 16;
    double lr = 0.001;
    double momentum = 0.9;
    std::optional<double> prox_mu;  // fedprox penalty toward start params
};

/// Positions (into the client's local example list) whose features are
/// replaced by PGD versions computed against the current local model.
struct AdvSamplePlan {
    adversary::PgdConfig pgd;
    std::vector<std::uint8_t> is_adv;
};

/// E epochs of shuffled mini-batch SGD with momentum; velocity starts at 0.
/// epochs == 0 returns start_params unchanged.
std::vector<double> local_training(std::span<const double> start_params,
                                   const nn::ModelSpec& spec,
                                   const Matrix& features,
                                   std::span<const int> labels,
                                   const LocalTrainOpts& opts,
                                   rng::StreamRng& rng,
                                   const AdvSamplePlan* adv = nullptr);

struct RunResult {
    std::vector<RoundRecord> records;
    std::vector<double> final_params;
    valuation::InfluenceLedger ledger;
    theory::NoiseTermReport noise_report;  // empty unless noise was injected
    double best_val_accuracy = 0.0;
    int best_val_round = 0;
    double best_test_accuracy = 0.0;
    int best_test_round = 0;
};

/// The full simulation: deterministic function of SimConfig.
class Simulation {
public:
    explicit Simulation(SimConfig cfg);

    /// Executes round t (1-based): select, train, perturb, score, aggregate,
    /// evaluate.
    RoundRecord run_round(int round);

    /// Runs all configured rounds; on_round (when set) observes each record
    /// as it is produced.
    RunResult run(const std::function<void(const RoundRecord&)>& on_round = {});

    const SimConfig& config() const { return cfg_; }
    const nn::ModelSpec& model_spec() const { return spec_; }
    std::span<const double> global_params() const { return params_; }
    const valuation::InfluenceLedger& ledger() const { return ledger_; }
    const data::Dataset& train_set() const { return train_; }
    const data::Dataset& validation_set() const { return val_; }
    const data::Dataset& test_set() const { return test_; }
    const std::vector<ClientState>& clients() const { return clients_; }

private:
    void load_data();
    void setup_clients();
    std::vector<double> train_participant(std::size_t id, int round,
                                          double& wall_seconds) const;

    SimConfig cfg_;
    nn::ModelSpec spec_;
    data::Dataset train_, val_, test_;
    std::vector<ClientState> clients_;
    adversary::AdversaryAssignment assignment_;
    valuation::InfluenceLedger ledger_;
    std::vector<double> params_;
};

}  // namespace fedif::sim
