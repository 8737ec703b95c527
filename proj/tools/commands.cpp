#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "glstm/checkpoint.hpp"
#include "glstm/config.hpp"
#include "glstm/errors.hpp"
#include "glstm/experiment.hpp"
#include "glstm/graph.hpp"
#include "glstm/io.hpp"
#include "glstm/metrics.hpp"
#include "glstm/model.hpp"
#include "glstm/schedule.hpp"
#include "glstm/superpixel.hpp"
#include "glstm/toy.hpp"
#include "manifest.hpp"
#include "plot.hpp"

namespace glstm::cli {
namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_settings(RunConfig& cfg, const std::vector<std::string>& settings) {
  for (const auto& s : settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", s), {s});
    auto trim = [](std::string v) {
      v.erase(0, v.find_first_not_of(' '));
      v.erase(v.find_last_not_of(' ') + 1);
      return v;
    };
    set_config_value(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& settings) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  apply_settings(cfg, settings);
  validate_config(cfg);
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ArgumentError(fmt::format("bad seed '{}' in --seeds", item));
    }
  }
  if (seeds.empty()) throw ArgumentError("--seeds needs at least one seed");
  return seeds;
}

// ---------------------------------------------------------------------------
// superpixels

struct SuperpixelArgs {
  std::string image;
  std::size_t k = 1000;
  double compactness = 10.0;
  int iterations = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_superpixels(const SuperpixelArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Image img = read_pnm(a.image);
  SlicParams p;
  p.k = a.k;
  p.compactness = a.compactness;
  p.iterations = a.iterations;
  p.seed = a.seed;
  const SuperpixelMap sp = slic(img, p);
  const NodeGraph g = build_graph(sp, pool_features(pixel_inputs(img), sp));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  Manifest m("superpixels", dir);
  m.args() = {{"image", a.image}, {"k", a.k}, {"compactness", a.compactness}, {"iterations", a.iterations}};
  m.add_seed(a.seed);
  write_superpixel_map(dir / "superpixels.spmap", sp);
  write_pnm(dir / "overlay.ppm", boundary_overlay(img, sp));
  write_graph_dump(dir / "graph", g);
  for (const char* f : {"superpixels.spmap", "overlay.ppm", "graph.edges", "graph.ckpt"}) m.add_output(f);
  m.time("slic_and_graph", seconds_since(t0));
  m.write();

  out << fmt::format("regions: {}\nmean degree: {:.4f}\n", sp.region_count(), g.mean_degree());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
};

void write_metrics(const fs::path& dir, const MetricSummary& s, const std::string& extra_csv) {
  write_file_atomic(dir / "metrics.csv", metrics_csv(s) + extra_csv);
  write_file_atomic(dir / "metrics.txt", metrics_table(s));
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = resolve_config(a.config, a.settings);
  if (a.seed) cfg.seed = *a.seed;
  const fs::path dir(a.out);
  fs::create_directories(dir);
  Manifest m("train", dir);
  m.args() = {{"config", a.config}, {"set", a.settings}, {"data", a.data}};
  m.set_config(config_text(cfg));
  m.add_seed(cfg.seed);

  auto t0 = std::chrono::steady_clock::now();
  const ToyDataset data = cached_toy_dataset(cfg, a.data.empty() ? dir / "data" : fs::path(a.data));
  const auto train = prepare_all(data.train, cfg.parser, cfg.seed);
  const auto test = prepare_all(data.test, cfg.parser, cfg.seed);
  m.time("data", seconds_since(t0));

  auto log_epoch = [&](const HistoryRow& r) {
    out << fmt::format("epoch {:3} stage {} train_loss {:.5f} val_loss {:.5f} val_miou {:.4f}\n", r.epoch, r.stage,
                       r.train_loss, r.val_loss, r.val_miou);
    out.flush();
  };
  t0 = std::chrono::steady_clock::now();
  ParamStore params = make_parser_params(cfg.parser, cfg.seed);
  auto history =
      train_stage(params, train, test, cfg.parser, cfg.sgd, Stage::head, cfg.sgd.epochs_a, 1, cfg.seed, log_epoch);
  save_params(dir / "stage_a.ckpt", params);
  m.time("stage_a", seconds_since(t0));
  t0 = std::chrono::steady_clock::now();
  auto b = train_stage(params, train, test, cfg.parser, cfg.sgd, Stage::full, cfg.sgd.epochs_b, cfg.sgd.epochs_a + 1,
                       cfg.seed, log_epoch);
  history.insert(history.end(), b.begin(), b.end());
  save_params(dir / "checkpoint.ckpt", params);
  m.time("stage_b", seconds_since(t0));

  write_file_atomic(dir / "history.csv", history_csv(history));
  write_file_atomic(dir / "config.txt", config_text(cfg));
  for (const char* f : {"stage_a.ckpt", "checkpoint.ckpt", "history.csv", "config.txt"}) m.add_output(f);
  if (!test.empty()) {
    const EvalResult ev = evaluate(params, test, cfg.parser, Stage::full);
    const MetricSummary s = summarize(ev.confusion, cfg.parser.background);
    write_metrics(dir, s, "");
    m.add_output("metrics.csv");
    m.add_output("metrics.txt");
    out << metrics_table(s);
  }
  m.write();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string config;
  std::vector<std::string> settings;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::string config_path = a.config;
  if (config_path.empty()) {
    const fs::path sibling = fs::path(a.checkpoint).parent_path() / "config.txt";
    if (fs::exists(sibling)) config_path = sibling.string();
  }
  const RunConfig cfg = resolve_config(config_path, a.settings);
  ParamStore params = make_parser_params(cfg.parser, cfg.seed);
  load_params(a.checkpoint, params);
  const std::vector<ToySample> samples = read_dataset(a.data);

  const fs::path dir(a.out);
  const fs::path pred_dir = dir / "predictions";
  fs::create_directories(pred_dir);
  Manifest m("eval", dir);
  m.args() = {{"checkpoint", a.checkpoint}, {"data", a.data}, {"config", config_path}, {"set", a.settings}};
  m.set_config(config_text(cfg));
  m.add_seed(cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();

  ConfusionMatrix cm(cfg.parser.labels);
  ConfusionMatrix oracle(cfg.parser.labels);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PreparedImage img = prepare_image(samples[i].image, cfg.parser, samples[i].gt, cfg.seed);
    const ParseOutput po = parse(img, cfg.parser, params);
    cm += confusion(po.pixel_labels, img.gt, cfg.parser.labels);
    Tensor majority = Tensor::zeros({img.sp.region_count(), cfg.parser.labels});
    const std::vector<int> maj = majority_labels(img.sp, img.gt);
    for (std::size_t r = 0; r < maj.size(); ++r) majority.at(r, static_cast<std::size_t>(maj[r])) = 1.0;
    oracle += confusion(broadcast_labels(majority, img.sp), img.gt, cfg.parser.labels);
    write_label_pgm(pred_dir / fmt::format("{:04}_pred.pgm", i), img.sp.width, img.sp.height, po.pixel_labels);
    write_checkpoint(pred_dir / fmt::format("{:04}_logits.ckpt", i), {{"node_logits", po.node_logits}});
  }
  const MetricSummary s = summarize(cm, cfg.parser.background);
  const MetricSummary best = summarize(oracle, cfg.parser.background);
  const std::string extra = fmt::format("oracle_accuracy,all,{:.6f}\noracle_miou,all,{:.6f}\n", best.prf.accuracy,
                                        best.iou.mean);
  write_metrics(dir, s, extra);
  m.add_output("metrics.csv");
  m.add_output("metrics.txt");
  m.add_output("predictions/");
  m.time("eval", seconds_since(t0));
  m.write();
  out << metrics_table(s);
  out << fmt::format("superpixel oracle    accuracy {:.4f} mIoU {:.4f}\n", best.prf.accuracy, best.iou.mean);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string which;
  std::string config;
  std::vector<std::string> settings;
  std::string seeds = "1";
  std::string out;
  std::string data;
};

struct AblationRecord {
  std::string variant;
  std::uint64_t seed = 0;
  double miou = 0.0;
  double accuracy = 0.0;
  double fg_accuracy = 0.0;
  double avg_f1 = 0.0;
  double stage_a_loss = 0.0;
  double final_loss = 0.0;
  bool schedules_valid = true;
  double seconds = 0.0;
};

std::string prep_key(const ParserConfig& p) {
  return fmt::format("{}|{}|{}|{}", p.superpixels, p.compactness, p.slic_iterations, p.labels);
}

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const std::vector<AblationVariant> grid = ablation_grid(a.which);
  const RunConfig base = resolve_config(a.config, a.settings);
  const std::vector<std::uint64_t> seeds = parse_seeds(a.seeds);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  Manifest m("ablate", dir);
  m.args() = {{"which", a.which}, {"config", a.config}, {"set", a.settings}, {"seeds", a.seeds}};
  m.set_config(config_text(base));
  for (auto s : seeds) m.add_seed(s);

  std::vector<AblationRecord> records;
  for (const std::uint64_t seed : seeds) {
    RunConfig seeded = base;
    seeded.seed = seed;
    const ToyDataset data = cached_toy_dataset(seeded, a.data.empty() ? dir / "data" : fs::path(a.data));
    std::map<std::string, std::pair<std::vector<PreparedImage>, std::vector<PreparedImage>>> prepared;
    for (const auto& v : grid) {
      RunConfig cfg = seeded;
      for (const auto& [k, val] : v.settings) set_config_value(cfg, k, val);
      validate_config(cfg);
      const std::string key = prep_key(cfg.parser);
      if (!prepared.contains(key)) {
        prepared[key] = {prepare_all(data.train, cfg.parser, seed), prepare_all(data.test, cfg.parser, seed)};
      }
      const auto& [train, test] = prepared[key];
      const ExperimentResult r = run_experiment(cfg, train, test);
      AblationRecord rec;
      rec.variant = v.label;
      rec.seed = seed;
      rec.miou = r.test.miou();
      const PrfReport prf = prf1(r.test.confusion, cfg.parser.background);
      rec.accuracy = prf.accuracy;
      rec.fg_accuracy = prf.foreground_accuracy;
      rec.avg_f1 = prf.avg_f1;
      for (const auto& h : r.trained.history) {
        if (h.stage == 'A') rec.stage_a_loss = h.train_loss;
        rec.final_loss = h.train_loss;
      }
      for (const auto& img : test) {
        Tape tape;
        const Forward f = forward(tape, r.trained.params, img, cfg.parser, Stage::full);
        rec.schedules_valid = rec.schedules_valid && is_permutation_of(f.schedule.order, img.graph.node_count());
      }
      rec.seconds = r.seconds;
      out << fmt::format("seed {} {:<22} mIoU {:.4f} accuracy {:.4f} schedules {}\n", seed, v.label, rec.miou,
                         rec.accuracy, rec.schedules_valid ? "valid" : "INVALID");
      out.flush();
      records.push_back(rec);
    }
  }

  std::string csv = "variant,seed,miou,accuracy,fg_accuracy,avg_f1,stage_a_loss,final_train_loss,schedules_valid,seconds\n";
  for (const auto& r : records) {
    csv += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.17g},{:.17g},{},{:.2f}\n", r.variant, r.seed, r.miou,
                       r.accuracy, r.fg_accuracy, r.avg_f1, r.stage_a_loss, r.final_loss,
                       r.schedules_valid ? "yes" : "no", r.seconds);
  }
  std::string table = fmt::format("{:<24} {:>9} {:>9} {:>9} {:>9}  {}\n", "variant", "mIoU", "accuracy", "fg_acc",
                                  "avg_F1", "schedules");
  std::vector<std::string> labels;
  Series mean_series{"mean", {}};
  std::vector<Series> per_seed;
  for (auto s : seeds) per_seed.push_back({fmt::format("seed {}", s), {}});
  for (const auto& v : grid) {
    double miou = 0, acc = 0, fg = 0, f1 = 0;
    bool valid = true;
    std::size_t n = 0;
    for (const auto& r : records) {
      if (r.variant != v.label) continue;
      miou += r.miou;
      acc += r.accuracy;
      fg += r.fg_accuracy;
      f1 += r.avg_f1;
      valid = valid && r.schedules_valid;
      const auto idx = static_cast<std::size_t>(std::find(seeds.begin(), seeds.end(), r.seed) - seeds.begin());
      per_seed[idx].values.push_back(r.miou);
      ++n;
    }
    const double k = static_cast<double>(n);
    table += fmt::format("{:<24} {:>9.4f} {:>9.4f} {:>9.4f} {:>9.4f}  {}{}\n", v.label, miou / k, acc / k, fg / k,
                         f1 / k, valid ? "valid" : "INVALID", v.reference ? "  (reference)" : "");
    labels.push_back(v.label);
    mean_series.values.push_back(miou / k);
  }
  std::vector<Series> series = per_seed;
  if (seeds.size() > 1) series.push_back(mean_series);

  const std::string stem = "ablate_" + a.which;
  write_file_atomic(dir / (stem + ".csv"), csv);
  write_file_atomic(dir / (stem + ".txt"), table);
  write_file_atomic(dir / (stem + ".svg"),
                    svg_line_plot(fmt::format("{} ablation", a.which), "test mIoU", labels, series));
  for (const char* ext : {".csv", ".txt", ".svg"}) m.add_output(stem + ext);
  m.write();
  out << table;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectArgs {
  std::string image;
  std::string spmap;
  std::size_t k = 200;
  double compactness = 40.0;
  std::string checkpoint;
  std::string config;
  std::vector<std::string> settings;
  std::string out;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const Image img = read_pnm(a.image);
  SuperpixelMap sp;
  if (!a.spmap.empty()) {
    sp = read_superpixel_map(a.spmap);
    if (sp.width != img.width || sp.height != img.height) {
      throw ArgumentError("superpixel map and image sizes differ");
    }
  } else {
    sp = slic(img, {std::min(a.k, img.pixel_count()), a.compactness, 10, 0});
  }
  const NodeGraph g = build_graph(sp, pool_features(pixel_inputs(img), sp));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  Manifest m("inspect", dir);
  m.args() = {{"image", a.image}, {"spmap", a.spmap}, {"k", a.k}, {"compactness", a.compactness},
              {"checkpoint", a.checkpoint}, {"config", a.config}, {"set", a.settings}};
  write_graph_dump(dir / "graph", g);
  std::map<std::size_t, std::size_t> histogram;
  std::string degrees = "node,degree,x,y\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    ++histogram[g.degree(i)];
    degrees += fmt::format("{},{},{},{}\n", i, g.degree(i), g.centroid(i).x, g.centroid(i).y);
  }
  write_file_atomic(dir / "degrees.csv", degrees);
  for (const char* f : {"graph.edges", "graph.ckpt", "degrees.csv"}) m.add_output(f);

  out << fmt::format("regions: {}\nedges: {}\nmean degree: {:.4f}\n", g.node_count(), g.edge_count(),
                     g.mean_degree());
  out << "degree histogram:";
  for (const auto& [deg, count] : histogram) out << fmt::format(" {}:{}", deg, count);
  out << "\n";

  if (!a.checkpoint.empty()) {
    std::string config_path = a.config;
    if (config_path.empty()) {
      const fs::path sibling = fs::path(a.checkpoint).parent_path() / "config.txt";
      if (fs::exists(sibling)) config_path = sibling.string();
    }
    const RunConfig cfg = resolve_config(config_path, a.settings);
    ParamStore params = make_parser_params(cfg.parser, cfg.seed);
    load_params(a.checkpoint, params);
    const ParseOutput po = parse(prepare_image(img, sp, cfg.parser), cfg.parser, params);
    write_file_atomic(dir / "schedule.txt", schedule_text(po.schedule));
    write_checkpoint(dir / "confidences.ckpt", {{"confidences", po.confidences.scores}, {"node_logits", po.node_logits}});
    write_label_pgm(dir / "prediction.pgm", sp.width, sp.height, po.pixel_labels);
    for (const char* f : {"schedule.txt", "confidences.ckpt", "prediction.pgm"}) m.add_output(f);
    m.set_config(config_text(cfg));
    const std::size_t start = po.schedule.order.front();
    out << fmt::format("schedule: {} starting at node {} (label {}, confidence {:.4f})\n",
                       scheme_name(po.schedule.scheme), start, po.confidences.assigned(start),
                       po.confidences.assigned_confidence(start));
  }
  m.write();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  GradcheckOptions opt;
  std::string forget = "adaptive";
  std::string out;
};

int cmd_gradcheck(GradcheckArgs a, std::ostream& out) {
  a.opt.forget = parse_variant(a.forget);
  const auto t0 = std::chrono::steady_clock::now();
  const GradCheckReport report = gradcheck_glstm(a.opt);
  const double secs = seconds_since(t0);
  for (const auto& p : report.params) {
    out << fmt::format("{:<16} {:.3e}{}\n", p.name, p.max_rel_error, p.finite ? "" : "  non-finite");
  }
  const auto worst = report.worst();
  if (!a.out.empty()) {
    Manifest m("gradcheck", a.out);
    m.args() = {{"d", a.opt.dim},           {"nodes", a.opt.nodes},     {"layers", a.opt.layers},
                {"forget", a.forget},       {"step", a.opt.step},       {"tol", a.opt.tolerance},
                {"inject_fault", a.opt.inject_fault}};
    m.add_seed(a.opt.seed);
    m.time("gradcheck", secs);
    m.write();
  }
  if (report.passed) {
    out << fmt::format("PASS: max relative error {:.3e} < {:.0e} ({:.2f} s)\n", worst ? worst->max_rel_error : 0.0,
                       report.tolerance, secs);
    return kExitOk;
  }
  out << fmt::format("FAIL: worst parameter {} with relative error {:.3e} (tolerance {:.0e})\n",
                     worst ? worst->name : "?", worst ? worst->max_rel_error : 0.0, report.tolerance);
  return kExitCheckFailed;
}

}  // namespace

GradCheckReport gradcheck_glstm(const GradcheckOptions& opt) {
  if (opt.dim < 1 || opt.dim > 16) throw ArgumentError("gradcheck supports 1 <= d <= 16");
  if (opt.nodes < 1 || opt.nodes > 20) throw ArgumentError("gradcheck supports 1 <= nodes <= 20");
  if (opt.layers < 0 || opt.layers > 4) throw ArgumentError("gradcheck supports 0..4 layers");
  if (!(opt.step > 0.0) || !(opt.tolerance > 0.0)) throw ArgumentError("step and tolerance must be positive");

  constexpr std::size_t kLabels = 3;
  const std::size_t n = opt.nodes;
  const std::size_t d = opt.dim;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-0.5, 0.5);

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::find(adj[i].begin(), adj[i].end(), j) == adj[i].end() && unit(rng) < 0.2) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  std::vector<Point2> centroids(n);
  for (auto& c : centroids) c = {unit(rng) * 64.0, unit(rng) * 64.0};
  const NodeGraph graph = NodeGraph::from_adjacency(std::move(adj), std::move(centroids), Tensor::zeros({n, 0}));

  Tensor scores = Tensor::zeros({n, kLabels});
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double& v : scores.row(i)) total += (v = unit(rng) + 0.01);
    for (double& v : scores.row(i)) v /= total;
  }
  const UpdateSchedule schedule = make_schedule(Scheme::cds, ConfidenceMap{scores, 0}, graph);

  ParamStore store;
  Tensor inputs = Tensor::zeros({n, d});
  for (double& v : inputs.data) v = 2.0 * sym(rng);
  store.add("inputs", std::move(inputs), false);
  for (int t = 1; t <= opt.layers; ++t) {
    add_layer_params(store, t, d, 0.0, 0.0);
    for (std::string_view suffix : layer_param_suffixes()) {
      for (double& v : store.value(layer_param_name(t, suffix)).data) v = sym(rng);
    }
  }
  Tensor cw = Tensor::zeros({kLabels, d});
  for (double& v : cw.data) v = 2.0 * sym(rng);
  store.add("classifier.W", std::move(cw));
  Tensor cb = Tensor::zeros({kLabels});
  for (double& v : cb.data) v = sym(rng);
  store.add("classifier.b", std::move(cb), false);

  auto counts = std::make_shared<Tensor>(Tensor::zeros({n, kLabels}));
  double total = 0.0;
  for (double& v : counts->data) total += (v = static_cast<double>(std::uniform_int_distribution<int>(0, 3)(rng)));
  const std::shared_ptr<const Tensor> targets = counts;
  const double normalizer = std::max(total, 1.0);

  const TapeProgram program = [&](Tape& tape, const ParamStore& s) {
    const Var x = tape.param(s, s.index_of("inputs"));
    std::vector<Var> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = tape.row(x, i);
    std::vector<GlstmParams> layers;
    for (int t = 1; t <= opt.layers; ++t) layers.push_back(bind_layer(tape, s, t, opt.forget));
    const StackResult r = stack_layers(tape, graph, rows, layers, schedule, opt.residual);
    const Var logits = tape.affine_rows(tape.param(s, s.index_of("classifier.W")),
                                        tape.param(s, s.index_of("classifier.b")), tape.stack_rows(r.output));
    return tape.softmax_ce(logits, targets, normalizer);
  };
  std::function<void(Gradients&)> tamper;
  if (opt.inject_fault) {
    const std::size_t target = opt.layers > 0 ? store.index_of(layer_param_name(1, "Wu")) : 0;
    tamper = [target](Gradients& g) { g[target][0] += 1e-2; };
  }
  return grad_check(program, store, opt.step, opt.tolerance, tamper);
}

std::vector<AblationVariant> ablation_grid(const std::string& which) {
  if (which == "scheduler") {
    std::vector<AblationVariant> v;
    for (const char* s : {"cds", "bfs-location", "bfs-confidence", "dfs-location", "dfs-confidence"}) {
      v.push_back({s, {{"scheduler", s}}, std::string(s) == "cds"});
    }
    return v;
  }
  if (which == "forget") {
    return {{"adaptive", {{"forget", "adaptive"}}, true}, {"identical", {{"forget", "identical"}}, false}};
  }
  if (which == "residual") {
    return {{"residual-on", {{"residual", "on"}}, true}, {"residual-off", {{"residual", "off"}}, false}};
  }
  if (which == "superpixels") {
    // Toy images carry about 200 superpixels where full-size images carry
    // about 1000, so each K is divided by 5.
    std::vector<AblationVariant> v;
    for (int k : {250, 500, 750, 1000, 1250, 1500}) {
      v.push_back({fmt::format("K={} (toy {})", k, k / 5), {{"superpixels", std::to_string(k / 5)}}, k == 1000});
    }
    return v;
  }
  throw ArgumentError(fmt::format("unknown ablation '{}' (expected scheduler, forget, superpixels or residual)", which));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph LSTM semantic part parsing over superpixel graphs", "glstm"};
  app.require_subcommand(1);

  SuperpixelArgs sp_args;
  auto* sp = app.add_subcommand("superpixels", "Over-segment an image and write the map, overlay and graph");
  sp->add_option("--image", sp_args.image, "PPM/PGM input")->required();
  sp->add_option("--k", sp_args.k, "Target superpixel count")->capture_default_str();
  sp->add_option("--compactness", sp_args.compactness, "SLIC compactness")->capture_default_str();
  sp->add_option("--iterations", sp_args.iterations, "SLIC iterations")->capture_default_str();
  sp->add_option("--seed", sp_args.seed, "Run seed (recorded; SLIC is deterministic)")->capture_default_str();
  sp->add_option("--out", sp_args.out, "Output directory")->required();

  TrainArgs tr_args;
  std::uint64_t tr_seed = 0;
  auto* tr = app.add_subcommand("train", "Two-stage training on the synthetic figure task");
  tr->add_option("--config", tr_args.config, "key = value config file");
  tr->add_option("--set", tr_args.settings, "Override one config key (key=value); repeatable");
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "Run seed (overrides the config)");
  tr->add_option("--out", tr_args.out, "Output directory")->required();
  tr->add_option("--data", tr_args.data, "Dataset cache root (default <out>/data)");

  EvalArgs ev_args;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
  ev->add_option("--checkpoint", ev_args.checkpoint, "Parameter checkpoint")->required();
  ev->add_option("--data", ev_args.data, "Directory of NNNN.ppm / NNNN_gt.pgm pairs")->required();
  ev->add_option("--out", ev_args.out, "Output directory")->required();
  ev->add_option("--config", ev_args.config, "Config (default: config.txt next to the checkpoint)");
  ev->add_option("--set", ev_args.settings, "Override one config key (key=value); repeatable");

  AblateArgs ab_args;
  auto* ab = app.add_subcommand("ablate", "Run a variant grid with shared seeds");
  ab->add_option("--which", ab_args.which, "scheduler | forget | superpixels | residual")->required();
  ab->add_option("--config", ab_args.config, "key = value config file");
  ab->add_option("--set", ab_args.settings, "Override one config key (key=value); repeatable");
  ab->add_option("--seeds", ab_args.seeds, "Comma-separated seeds")->capture_default_str();
  ab->add_option("--out", ab_args.out, "Output directory")->required();
  ab->add_option("--data", ab_args.data, "Dataset cache root (default <out>/data)");

  InspectArgs in_args;
  auto* in = app.add_subcommand("inspect", "Dump a region graph, its degree statistics and the update schedule");
  in->add_option("--image", in_args.image, "PPM/PGM input")->required();
  in->add_option("--spmap", in_args.spmap, "Superpixel map (default: run SLIC)");
  in->add_option("--k", in_args.k, "Target superpixel count when running SLIC")->capture_default_str();
  in->add_option("--compactness", in_args.compactness, "SLIC compactness")->capture_default_str();
  in->add_option("--checkpoint", in_args.checkpoint, "Parameters for confidences and the schedule");
  in->add_option("--config", in_args.config, "Config (default: config.txt next to the checkpoint)");
  in->add_option("--set", in_args.settings, "Override one config key (key=value); repeatable");
  in->add_option("--out", in_args.out, "Output directory")->required();

  GradcheckArgs gc_args;
  auto* gc = app.add_subcommand("gradcheck", "Compare tape gradients with central differences");
  gc->add_option("--d", gc_args.opt.dim, "Hidden width (<= 16)")->capture_default_str();
  gc->add_option("--nodes", gc_args.opt.nodes, "Graph nodes (<= 20)")->capture_default_str();
  gc->add_option("--layers", gc_args.opt.layers, "Stacked layers")->capture_default_str();
  gc->add_option("--seed", gc_args.opt.seed, "Problem seed")->capture_default_str();
  gc->add_option("--forget", gc_args.forget, "adaptive | identical")->capture_default_str();
  gc->add_option("--step", gc_args.opt.step, "Finite-difference step")->capture_default_str();
  gc->add_option("--tol", gc_args.opt.tolerance, "Relative error tolerance")->capture_default_str();
  gc->add_flag("--inject-fault", gc_args.opt.inject_fault, "Corrupt one gradient entry (negative control)");
  gc->add_option("--out", gc_args.out, "Write a manifest into this directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sp->parsed()) return cmd_superpixels(sp_args, out);
    if (tr->parsed()) {
      if (tr_seed_opt->count() > 0) tr_args.seed = tr_seed;
      return cmd_train(tr_args, out);
    }
    if (ev->parsed()) return cmd_eval(ev_args, out);
    if (ab->parsed()) return cmd_ablate(ab_args, out);
    if (in->parsed()) return cmd_inspect(in_args, out);
    if (gc->parsed()) return cmd_gradcheck(gc_args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    err << fmt::format("offending keys: {}\n", fmt::join(e.keys(), ", "));
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace glstm::cli
