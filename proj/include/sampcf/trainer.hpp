#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/eval.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/loss.hpp"
#include "sampcf/model.hpp"
#include "sampcf/optimizer.hpp"
#include "sampcf/sampler.hpp"

namespace sampcf {

struct LedgerCounts {
  Count n_f = 0;      // user-function evaluations
  Count n_g = 0;      // item-function evaluations
  Count n_i_vec = 0;  // per-link dot products
  Count n_i_mat = 0;  // score-matrix cells
  Count batches = 0;
  double wall_seconds = 0.0;
};

// Per-batch and cumulative evaluation counts, audited against the batch's
// unique slot counts every step.
struct CostLedger {
  LedgerCounts last_batch;
  LedgerCounts total;
  Count epochs = 0;

  void add_batch(const MiniBatch& batch, double wall_seconds);
};

struct TrainConfig {
  SamplerConfig sampler;
  NoiseSpec noise;
  LossSpec loss;
  ModelConfig model;
  OptimizerConfig opt;
  Count epochs = 30;
  Count eval_every = 1;  // epochs between recall evaluations; 0 disables
  Count eval_m = 50;
  double weight_decay = 0.0;  // L2 on the user table only
  bool early_stop = false;
  Count patience = 3;
  bool serial = false;  // single-threaded kernels (bit-reproducible mode)

  void validate() const;
};

struct TraceRecord {
  Count epoch = 0;        // 1-based
  Count batches_cum = 0;  // iterations so far
  double train_loss = 0.0;
  double recall = -1.0;  // -1 when not evaluated this epoch
  double wall_seconds_cum = 0.0;
  LedgerCounts totals;
  double max_grad_norm = 0.0;  // max batch gradient norm within the epoch
};

struct RunTrace {
  std::vector<TraceRecord> records;  // one per epoch
  CostLedger ledger;
  double min_train_loss = 0.0;
  Count min_loss_epoch = 0;
  bool stopped_early = false;
  Count degenerate_batches = 0;
};

struct TrainResult {
  RunTrace trace;
  EmbeddingModel model;
};

// Algorithm: per batch sample -> forward -> score -> loss -> backward ->
// optimizer step, with ledger audit. Wall time covers training work only
// (evaluation and output excluded). Deterministic per seed; bit-identical
// output guaranteed in serial mode.
TrainResult train(const InteractionGraph& g, const std::vector<NodeId>& test_pool,
                  const std::vector<Link>& test_links, const TrainConfig& cfg);

// --- Referenced-loss speedup protocol -------------------------------------
// The baseline strategy's smallest per-epoch training loss within the epoch
// budget becomes the reference; every strategy is measured by (a) mean wall
// time per iteration, (b) iterations until its epoch loss first reaches the
// reference, and (c) their product.

struct SpeedupRow {
  Strategy strategy = Strategy::Iid;
  bool reached = false;
  Count iters_to_ref = 0;
  double mean_batch_wall = 0.0;
  double per_iter = 0.0;    // baseline wall per iter / this wall per iter
  double iter_ratio = 0.0;  // baseline iters to ref / this iters to ref
  double total = 0.0;       // per_iter * iter_ratio
  double analytic_g = 0.0;  // baseline item evals per batch / this per batch
};

struct SpeedupReport {
  double ref_loss = 0.0;
  Count baseline_iters = 0;
  std::vector<SpeedupRow> rows;  // in requested strategy order
};

SpeedupReport speedup_report(const InteractionGraph& g, const std::vector<NodeId>& test_pool,
                             const std::vector<Link>& test_links, const TrainConfig& base,
                             const std::vector<Strategy>& strategies);

// --- Closed-form batch cost ------------------------------------------------
// Composition counts for a collision-free batch of b positives, priced at
// unit costs (t_f, t_g, t_i). No training involved.

struct CostSim {
  Strategy strategy = Strategy::Iid;
  Count pos_links = 0;
  Count neg_links = 0;
  Count n_f = 0;
  Count n_g = 0;
  Count n_i = 0;
  bool matrix_mode = false;
  double total_units = 0.0;
};

CostSim cost_sim(Strategy strategy, Count b, Count k, Count s, double t_f, double t_g, double t_i);

// --- Run artifacts ----------------------------------------------------------
// trace.jsonl and summary.csv contain only deterministic fields; wall-clock
// figures go to a separate timing csv so reruns stay byte-identical.
void write_trace_jsonl(const RunTrace& trace, const std::string& path);
void write_summary_csv(const RunTrace& trace, const std::string& path);
void write_timing_csv(const RunTrace& trace, const std::string& path);
void write_speedup_csv(const SpeedupReport& report, const std::string& path);

}  // namespace sampcf
