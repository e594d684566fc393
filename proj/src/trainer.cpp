#include "sampcf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

namespace sampcf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void CostLedger::add_batch(const MiniBatch& batch, double wall_seconds) {
  LedgerCounts c;
  c.n_f = batch.users.size();
  c.n_g = batch.items.size();
  if (batch.dense) c.n_i_mat = batch.interaction_count();
  else c.n_i_vec = batch.interaction_count();
  c.batches = 1;
  c.wall_seconds = wall_seconds;
  last_batch = c;
  total.n_f += c.n_f;
  total.n_g += c.n_g;
  total.n_i_vec += c.n_i_vec;
  total.n_i_mat += c.n_i_mat;
  total.batches += 1;
  total.wall_seconds += wall_seconds;
}

void TrainConfig::validate() const {
  sampler.validate();
  noise.validate();
  loss.validate();
  model.validate();
  opt.validate();
  if (epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("train.weight-decay must be >= 0");
  if (is_pairwise(loss.kind) && !strategy_supports_pairwise(sampler.strategy))
    throw ConfigError("loss.kind " + loss_kind_name(loss.kind) + " requires negatives sharing the positive's user; sampler.strategy " +
                      strategy_name(sampler.strategy) +
                      " draws item-side strata or independent negative users and cannot form those pairs");
}

TrainResult train(const InteractionGraph& g, const std::vector<NodeId>& test_pool,
                  const std::vector<Link>& test_links, const TrainConfig& cfg) {
  cfg.validate();
  if (g.num_links == 0) throw DataError("training graph has no links");
  const bool parallel = !cfg.serial;

  Sampler sampler(g, cfg.sampler, cfg.noise);
  EmbeddingModel model = EmbeddingModel::for_graph(g, cfg.model);
  Optimizer optimizer(cfg.opt, model.blocks());

  RunTrace trace;
  trace.min_train_loss = std::numeric_limits<double>::infinity();
  double wall_cum = 0.0;
  Count batches_cum = 0;
  bool warned_degenerate = false;

  double best_recall = -1.0;
  Count evals_since_best = 0;
  const bool do_eval = cfg.eval_every > 0 && !test_pool.empty();

  for (Count epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss_weighted = 0.0;
    Count epoch_positives = 0;
    double epoch_max_grad = 0.0;

    const Count batches = sampler.batches_per_epoch();
    for (Count bi = 0; bi < batches; ++bi) {
      const auto t0 = Clock::now();
      MiniBatch batch = sampler.next_batch();
      BatchActivations acts = model.forward(batch, parallel);
      if (acts.F.rows != batch.users.size() || acts.G.rows != batch.items.size())
        throw InternalError("forward evaluation count disagrees with batch slots");
      BatchScores scores = model.score_links(acts, batch, parallel);
      LossResult loss = compute_loss(cfg.loss, batch, scores);
      if (!std::isfinite(loss.loss))
        throw NumericError("training diverged: loss is not finite at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(bi));
      if (loss.degenerate) {
        ++trace.degenerate_batches;
        if (!warned_degenerate) {
          std::cerr << "warning: degenerate batch (a positive had no negative partner); "
                       "its negative term was skipped\n";
          warned_degenerate = true;
        }
      }
      UpstreamGrads up = assemble_gradients(batch, acts, loss, parallel);
      model.backward(batch, acts, up.d_f, up.d_g, parallel);
      if (cfg.weight_decay > 0.0) {
        auto& user_block = model.blocks()[0];
        for (std::size_t i = 0; i < user_block.value.data.size(); ++i)
          user_block.grad.data[i] += cfg.weight_decay * user_block.value.data[i];
      }
      const double gnorm = model.grad_norm();
      epoch_max_grad = std::max(epoch_max_grad, gnorm);
      optimizer.apply(model.blocks());
      model.zero_grads();

      const double wall = seconds_since(t0);
      trace.ledger.add_batch(batch, wall);
      wall_cum += wall;
      ++batches_cum;
      epoch_loss_weighted += loss.loss * static_cast<double>(batch.positives.size());
      epoch_positives += batch.positives.size();
    }
    trace.ledger.epochs = epoch;

    TraceRecord rec;
    rec.epoch = epoch;
    rec.batches_cum = batches_cum;
    rec.train_loss = epoch_loss_weighted / static_cast<double>(epoch_positives);
    rec.wall_seconds_cum = wall_cum;
    rec.totals = trace.ledger.total;
    rec.max_grad_norm = epoch_max_grad;
    if (rec.train_loss < trace.min_train_loss) {
      trace.min_train_loss = rec.train_loss;
      trace.min_loss_epoch = epoch;
    }

    if (do_eval && epoch % cfg.eval_every == 0) {
      rec.recall = recall_at_m(model, test_pool, test_links, cfg.eval_m, parallel).mean;
      if (cfg.early_stop) {
        if (rec.recall > best_recall) {
          best_recall = rec.recall;
          evals_since_best = 0;
        } else if (++evals_since_best >= cfg.patience) {
          trace.records.push_back(rec);
          trace.stopped_early = true;
          break;
        }
      }
    }
    trace.records.push_back(rec);
  }

  return TrainResult{std::move(trace), std::move(model)};
}

namespace {

// First epoch whose training loss reaches the reference, in iterations.
bool iters_to_reference(const RunTrace& trace, double ref_loss, Count& iters) {
  for (const TraceRecord& rec : trace.records) {
    if (rec.train_loss <= ref_loss) {
      iters = rec.batches_cum;
      return true;
    }
  }
  return false;
}

double mean_batch_wall(const RunTrace& trace) {
  return trace.ledger.total.wall_seconds / static_cast<double>(trace.ledger.total.batches);
}

double mean_batch_items(const RunTrace& trace) {
  return static_cast<double>(trace.ledger.total.n_g) / static_cast<double>(trace.ledger.total.batches);
}

}  // namespace

SpeedupReport speedup_report(const InteractionGraph& g, const std::vector<NodeId>& test_pool,
                             const std::vector<Link>& test_links, const TrainConfig& base,
                             const std::vector<Strategy>& strategies) {
  TrainConfig iid_cfg = base;
  iid_cfg.sampler.strategy = Strategy::Iid;
  iid_cfg.early_stop = false;
  iid_cfg.validate();

  const RunTrace baseline = train(g, test_pool, test_links, iid_cfg).trace;

  SpeedupReport report;
  report.ref_loss = baseline.min_train_loss;
  Count iid_iters = 0;
  iters_to_reference(baseline, report.ref_loss, iid_iters);  // min is attained, always true
  report.baseline_iters = iid_iters;
  const double iid_wall = mean_batch_wall(baseline);
  const double iid_items = mean_batch_items(baseline);

  for (Strategy s : strategies) {
    SpeedupRow row;
    row.strategy = s;
    if (s == Strategy::Iid) {
      // The baseline compared to itself; ratios are exactly 1.
      row.reached = true;
      row.iters_to_ref = iid_iters;
      row.mean_batch_wall = iid_wall;
      row.per_iter = 1.0;
      row.iter_ratio = 1.0;
      row.total = 1.0;
      row.analytic_g = 1.0;
      report.rows.push_back(row);
      continue;
    }
    TrainConfig cfg = base;
    cfg.sampler.strategy = s;
    cfg.early_stop = false;
    cfg.validate();
    const RunTrace trace = train(g, test_pool, test_links, cfg).trace;
    row.mean_batch_wall = mean_batch_wall(trace);
    row.per_iter = iid_wall / row.mean_batch_wall;
    row.analytic_g = iid_items / mean_batch_items(trace);
    row.reached = iters_to_reference(trace, report.ref_loss, row.iters_to_ref);
    if (row.reached) {
      row.iter_ratio = static_cast<double>(iid_iters) / static_cast<double>(row.iters_to_ref);
      row.total = row.per_iter * row.iter_ratio;
    } else {
      row.iter_ratio = std::numeric_limits<double>::infinity();
      row.total = std::numeric_limits<double>::infinity();
    }
    report.rows.push_back(row);
  }
  return report;
}

CostSim cost_sim(Strategy strategy, Count b, Count k, Count s, double t_f, double t_g, double t_i) {
  if (b == 0) throw ConfigError("cost-sim needs b >= 1");
  if (t_f < 0.0 || t_g < 0.0 || t_i < 0.0) throw ConfigError("unit costs must be >= 0");
  const bool strat = strategy == Strategy::Stratified || strategy == Strategy::StratifiedNS;
  if (strat) {
    if (s == 0 || b % s != 0) throw ConfigError("cost-sim needs s >= 1 dividing b");
  }
  const bool needs_k =
      strategy == Strategy::Iid || strategy == Strategy::Negative || strategy == Strategy::Stratified;
  if (needs_k && k == 0) throw ConfigError("cost-sim needs k >= 1 for this strategy");

  CostSim sim;
  sim.strategy = strategy;
  sim.pos_links = b;
  switch (strategy) {
    case Strategy::Iid:
      sim.neg_links = b * k;
      sim.n_f = b * (1 + k);
      sim.n_g = b * (1 + k);
      sim.n_i = b * (1 + k);
      break;
    case Strategy::Negative:
      sim.neg_links = b * k;
      sim.n_f = b;
      sim.n_g = b * (1 + k);
      sim.n_i = b * (1 + k);
      break;
    case Strategy::Stratified:
      sim.neg_links = b * k;
      sim.n_f = b * (1 + k);
      sim.n_g = b / s;
      sim.n_i = b * (1 + k);
      break;
    case Strategy::NegSharing:
      sim.neg_links = b * (b - 1);
      sim.n_f = b;
      sim.n_g = b;
      sim.n_i = b * b;
      sim.matrix_mode = true;
      break;
    case Strategy::StratifiedNS:
      sim.neg_links = b * (b / s - 1);
      sim.n_f = b;
      sim.n_g = b / s;
      sim.n_i = b * (b / s);
      sim.matrix_mode = true;
      break;
  }
  sim.total_units = t_f * static_cast<double>(sim.n_f) + t_g * static_cast<double>(sim.n_g) +
                    t_i * static_cast<double>(sim.n_i);
  return sim;
}

void write_trace_jsonl(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace: " + path);
  for (const TraceRecord& rec : trace.records) {
    nlohmann::ordered_json j;
    j["epoch"] = rec.epoch;
    j["batches"] = rec.batches_cum;
    j["loss"] = rec.train_loss;
    if (rec.recall >= 0.0) j["recall"] = rec.recall;
    j["n_f"] = rec.totals.n_f;
    j["n_g"] = rec.totals.n_g;
    j["n_i_vec"] = rec.totals.n_i_vec;
    j["n_i_mat"] = rec.totals.n_i_mat;
    j["max_grad_norm"] = rec.max_grad_norm;
    out << j.dump() << '\n';
  }
}

void write_summary_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write summary: " + path);
  out << "epoch,batches,loss,recall,n_f,n_g,n_i_vec,n_i_mat,max_grad_norm\n";
  for (const TraceRecord& rec : trace.records) {
    out << rec.epoch << ',' << rec.batches_cum << ',' << fmt_double(rec.train_loss) << ',';
    if (rec.recall >= 0.0) out << fmt_double(rec.recall);
    out << ',' << rec.totals.n_f << ',' << rec.totals.n_g << ',' << rec.totals.n_i_vec << ','
        << rec.totals.n_i_mat << ',' << fmt_double(rec.max_grad_norm) << '\n';
  }
}

void write_timing_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write timing: " + path);
  out << "epoch,wall_seconds_cum,mean_batch_wall\n";
  for (const TraceRecord& rec : trace.records) {
    const double mean_wall = rec.totals.batches > 0
                                 ? rec.wall_seconds_cum / static_cast<double>(rec.totals.batches)
                                 : 0.0;
    out << rec.epoch << ',' << fmt_double(rec.wall_seconds_cum) << ',' << fmt_double(mean_wall) << '\n';
  }
}

void write_speedup_csv(const SpeedupReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write speedup report: " + path);
  out << "strategy,reached,per_iter,iter_ratio,total,analytic_g,iters_to_ref,mean_batch_wall\n";
  for (const SpeedupRow& row : report.rows) {
    out << strategy_name(row.strategy) << ',' << (row.reached ? 1 : 0) << ','
        << fmt_double(row.per_iter) << ',' << fmt_double(row.iter_ratio) << ','
        << fmt_double(row.total) << ',' << fmt_double(row.analytic_g) << ',' << row.iters_to_ref
        << ',' << fmt_double(row.mean_batch_wall) << '\n';
  }
}

}  // namespace sampcf
