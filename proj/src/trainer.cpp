#include "roast/trainer.hpp"

#include "roast/error.hpp"

#include "json.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace roast {

void RoastConfig::validate() const {
  perturb.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive and finite");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be positive");
  if (epochs == 0) throw ValidationError("epochs must be at least 1");
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
}

MaskSettings RoastConfig::mask_settings() const { return {alpha, beta, strategy, mask_mode, sigmoid_sign}; }

std::size_t steps_per_epoch(std::size_t rows, std::size_t batch_size) {
  return (rows + batch_size - 1) / batch_size;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, RandomSource& rng) {
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  const auto order = rng.permutation(rows);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < rows; start += batch_size) {
    const std::size_t end = std::min(rows, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

void accumulate_importance(ImportanceAccumulator& acc, const Eigen::VectorXd& gradient) { acc.accumulate(gradient); }

ImportanceAccumulator init_grad(const Model& model, const Split& data, std::size_t batch_size) {
  if (data.size() == 0) throw ValidationError("init_grad: empty dataset");
  if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
  ImportanceAccumulator acc(model.parameters().scalar_count());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    rows.clear();
    for (std::size_t r = start; r < std::min(data.size(), start + batch_size); ++r) rows.push_back(r);
    auto ev = task_loss(model, data.batch(rows));
    acc.accumulate(ev.parameter_gradient(model));
  }
  return acc;
}

void TrainLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["mean_loss"] = e.mean_loss;
    j["mask_density"] = e.mask_density;
    j["iou_vs_first"] = e.iou_vs_first;
    j["iou_vs_last"] = e.iou_vs_last;
    out << j.dump() << '\n';
  }
}

TrainResult train(const Model& initial, const Split& data, const RoastConfig& config, const StepObserver& observer) {
  config.validate();
  if (data.size() == 0) throw ValidationError("train: empty dataset");
  if (!data.labeled()) throw ValidationError("train: training split has no labels");

  TrainResult result{initial, {}};
  Model& model = result.model;
  TrainLog& log = result.log;
  ParameterStore& store = model.parameters();
  const auto n = static_cast<Eigen::Index>(store.scalar_count());

  const RandomSource root(config.seed);
  RandomSource data_rng = root.split(kDataStream);
  RandomSource mask_rng = root.split(kMaskStream);

  const std::size_t per_epoch = steps_per_epoch(data.size(), config.batch_size);
  const std::size_t period = config.refresh_period == 0 ? per_epoch : config.refresh_period;
  const bool masking = config.mask_mode != MaskMode::Off;

  ImportanceAccumulator acc = masking ? init_grad(model, data, config.batch_size) : ImportanceAccumulator(store.scalar_count());
  MaskState state;
  if (!masking) {
    state.normalized = Eigen::VectorXd::Constant(n, 0.5);
    state.probability = Eigen::VectorXd::Ones(n);
    state.mask = Eigen::VectorXd::Ones(n);
    log.masks.push_back(state.mask);
    log.refresh_steps.push_back(0);
  }

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    double density_sum = 0.0;
    const std::size_t first_step = step;
    for (const auto& rows : epoch_batches(data.size(), config.batch_size, data_rng)) {
      if (masking && step % period == 0) {
        state = refresh_mask(acc.sums(), config.mask_settings(), mask_rng);
        state.refresh_epoch = epoch;
        store.importance = acc.sums();
        store.probability = state.probability;
        store.mask = state.mask;
        acc.reset();
        log.masks.push_back(state.mask);
        log.refresh_steps.push_back(step);
      }
      const Batch batch = data.batch(rows);
      double loss = 0.0;
      Eigen::VectorXd g;
      try {
        auto ev = config.adversarial ? roast_training_loss(model, batch, config.perturb) : task_loss(model, batch);
        loss = ev.value();
        g = ev.parameter_gradient(model);
      } catch (const NonFiniteError& e) {
        throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(loss) || !g.allFinite()) {
        throw DivergenceError("training diverged at step " + std::to_string(step) + ": non-finite loss or gradient");
      }
      apply_masked_update(store, g, state, config.learning_rate, config.scaling, config.mask_mode);
      if (!store.flatten().allFinite()) {
        throw DivergenceError("training diverged at step " + std::to_string(step) + ": non-finite parameters");
      }
      store.gradient = g;
      if (masking) acc.accumulate(g);

      loss_sum += loss;
      density_sum += state.mask.mean();
      log.step_losses.push_back(loss);
      log.step_mask_ids.push_back(log.masks.size() - 1);
      if (observer) observer(step, model);
      ++step;
    }
    const double steps = static_cast<double>(step - first_step);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.mean_loss = loss_sum / steps;
    rec.mask_density = density_sum / steps;
    rec.mask_id = log.step_mask_ids[first_step];
    log.epochs.push_back(rec);
  }

  const Eigen::VectorXd& first = log.masks[log.epochs.front().mask_id];
  const Eigen::VectorXd& last = log.masks[log.epochs.back().mask_id];
  for (auto& rec : log.epochs) {
    rec.iou_vs_first = mask_iou(log.masks[rec.mask_id], first);
    rec.iou_vs_last = mask_iou(log.masks[rec.mask_id], last);
  }
  return result;
}

}  // namespace roast
