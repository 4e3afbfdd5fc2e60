#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ltprune/allocation.hpp"
#include "ltprune/dataset.hpp"
#include "ltprune/diagnostics.hpp"
#include "ltprune/distill.hpp"
#include "ltprune/error.hpp"
#include "ltprune/parallel.hpp"
#include "ltprune/selection.hpp"
#include "ltprune/selectors.hpp"
#include "ltprune/sgs.hpp"
#include "ltprune/signals.hpp"

namespace ltprune::cli {
namespace {

using nlohmann::json;

struct Global {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct GenerateOpts {
  std::size_t classes = 10;
  std::size_t head = 500;
  double ratio = 50.0;
  std::size_t dims = 32;
  double separation = 3.0;
  std::string split = "train";
  std::string out;
};

struct ScoreOpts {
  std::string data;
  std::string kind = "el2n";
  std::string out;
};

struct CalibrateOpts {
  std::string data;
  std::string policy = "cb";
  double beta = 0.9999;
  double step = 1.0;
  std::size_t iterations = 2000;
  double tolerance = 1e-6;
  std::string out;
  std::string emit_data;
};

struct AllocateOpts {
  std::string data;
  std::vector<double> complexities;
  std::string prior = "uniform";
  double gamma = 0.5;
  std::size_t budget = 0;
  std::size_t floor = 0;
  std::string out;
};

struct SelectOpts {
  std::string data;
  std::string method = "flrbf";
  std::size_t budget = 0;
  std::string score;
  double bandwidth = 0.0;
  double k = 0.0;
  std::string base = "flrbf";
  std::string plan;
  std::string out;
};

struct SweepOpts {
  std::string data;
  std::string test;
  std::vector<std::size_t> budgets;
  std::vector<double> k_grid;
  std::string base = "flrbf";
  std::string score;
  double bandwidth = 0.0;
  std::string out;
};

struct ReweighOpts {
  std::string data;
  std::string selection;
  std::string prior = "uniform";
  std::string out;
};

struct AuditOpts {
  std::string data;
  std::string kind = "center-dist";
  std::string selection;
  std::string out;
};

struct DiagnoseOpts {
  std::string data;
  std::string selection;
  std::string prior = "uniform";
  double loss_bound = 1.0;
  std::size_t lab_instances = 0;
  std::size_t lab_points = 20;
  std::size_t lab_subset = 5;
  std::string out;
};

struct EvalOpts {
  std::string head;
  std::string data;
  std::string out;
};

struct KdOpts {
  std::size_t samples = 10;
  std::size_t classes = 3;
  double temperature = DistillDefaults::kTemperature;
  double tolerance = 1e-4;
  std::size_t iterations = 200000;
  std::string out;
};

PriorVector resolve_prior(const std::string& name, const EmbeddingDataset& ds) {
  if (name == "uniform") return PriorVector::uniform(ds.num_classes());
  if (name == "empirical") return empirical_prior(ds);
  fail(ErrorCode::kInvalidArgument, "unknown prior '" + name + "' (uniform|empirical)");
}

SelectorSpec make_spec(const std::string& method, const std::string& score, double bandwidth,
                       std::uint64_t seed) {
  SelectorSpec spec;
  spec.method = parse_selection_method(method);
  if (!score.empty()) spec.score_kind = parse_score_kind(score);
  if (bandwidth > 0.0) spec.bandwidth = bandwidth;
  spec.seed = seed;
  return spec;
}

json spec_json(const SelectorSpec& spec) {
  json j{{"method", std::string(to_string(spec.method))}, {"seed", spec.seed}};
  j["score"] = spec.score_kind ? json(std::string(to_string(*spec.score_kind))) : json(nullptr);
  j["bandwidth"] = spec.bandwidth ? json(*spec.bandwidth) : json(nullptr);
  return j;
}

void emit(std::ostream& out, const std::string& path) { out << path << '\n'; }

int do_generate(const Global& g, const GenerateOpts& o, std::ostream& out) {
  LongTailSpec spec{o.classes, o.head, o.ratio, o.dims, o.separation, g.seed};
  Split split = Split::kTrain;
  if (o.split == "test") {
    split = Split::kTest;
  } else {
    require(o.split == "train", "split must be train or test");
  }
  save_dataset(generate_long_tail(spec, split), o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_score(const ScoreOpts& o, std::ostream& out) {
  const auto ds = load_dataset(o.data);
  const auto scores = score_scalar(ds, parse_score_kind(o.kind));
  write_scores_csv(scores, ds.labels(), o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_calibrate(const CalibrateOpts& o, std::ostream& out) {
  const auto ds = load_dataset(o.data);
  const RebalancePolicy policy{parse_rebalance_kind(o.policy), o.beta};
  const auto alpha = rebalance_weights(ds.class_counts(), policy);
  TrainerParams params;
  params.step = o.step;
  params.max_iterations = o.iterations;
  params.grad_tolerance = o.tolerance;
  const auto fit = calibrate_head(ds, std::span<const double>(alpha), params);
  json j;
  j["config"] = {{"command", "calibrate"}, {"data", o.data},       {"policy", o.policy},
                 {"beta", o.beta},         {"step", o.step},       {"iterations", o.iterations},
                 {"tolerance", o.tolerance}};
  j["head"] = fit.head.to_json();
  j["class_weights"] = alpha;
  j["final_loss"] = fit.loss_trace.back();
  j["iterations"] = fit.iterations;
  j["grad_norm"] = fit.grad_norm;
  j["converged"] = fit.converged;
  write_json_file(j, o.out);
  if (!o.emit_data.empty()) save_dataset(ds.with_logits(fit.head.dataset_logits(ds)), o.emit_data);
  emit(out, o.out);
  return kExitOk;
}

int do_allocate(const AllocateOpts& o, std::ostream& out) {
  require(o.budget >= 1, "allocation budget must be >= 1");
  std::optional<EmbeddingDataset> ds;
  if (!o.data.empty()) ds.emplace(load_dataset(o.data));
  RateModel rm;
  rm.gamma = o.gamma;
  if (!o.complexities.empty()) {
    rm.complexities = o.complexities;
  } else {
    require(ds.has_value(), "allocate needs --data or --complexities");
    rm.complexities = estimate_class_complexity(*ds);
  }
  if (!ds) require(o.prior == "uniform", "an empirical prior needs --data");
  const PriorVector prior =
      ds ? resolve_prior(o.prior, *ds) : PriorVector::uniform(rm.complexities.size());
  AllocationPlan plan = optimal_allocation(rm, prior, o.budget);
  if (o.floor > 0) {
    std::vector<std::size_t> sizes(rm.complexities.size(), o.budget);
    if (ds) sizes.assign(ds->class_counts().begin(), ds->class_counts().end());
    plan = apply_floor(plan, o.floor, sizes);
  }
  json j;
  j["config"] = {{"command", "allocate"}, {"data", o.data},     {"prior", o.prior},
                 {"gamma", o.gamma},      {"budget", o.budget}, {"floor", o.floor},
                 {"complexities", rm.complexities}};
  j["budgets"] = plan.budgets;
  j["target_prior"] = std::vector<double>(plan.target_prior.probs().begin(),
                                          plan.target_prior.probs().end());
  j["continuous"] = continuous_allocation(rm, prior, static_cast<double>(o.budget));
  j["objective"] = representation_objective(rm, prior, std::span<const std::size_t>(plan.budgets));
  j["total"] = plan.total;
  j["floor"] = plan.floor;
  if (o.floor > 0) j["floor_gain"] = floor_gain(o.floor, o.gamma);
  write_json_file(j, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_select(const Global& g, const SelectOpts& o, std::ostream& out) {
  require(o.budget >= 1, "--budget must be >= 1");
  const auto ds = load_dataset(o.data);
  json config{{"command", "select"}, {"data", o.data}, {"method", o.method},
              {"budget", o.budget},  {"seed", g.seed}};
  Selection sel;
  double k_ratio = 0.0;
  const SelectionMethod method = parse_selection_method(o.method);
  if (method == SelectionMethod::kSgs) {
    const SelectorSpec base = resolve_spec(ds, make_spec(o.base, o.score, o.bandwidth, g.seed));
    sel = sgs_select(ds, SgsConfig{o.k, o.budget, base, g.seed});
    k_ratio = o.k;
    config["k"] = o.k;
    config["base"] = spec_json(base);
    config["floor"] = sgs_floor(o.k, o.budget, ds.num_classes());
  } else if (method == SelectionMethod::kStratified) {
    std::vector<std::size_t> budgets;
    if (!o.plan.empty()) {
      budgets = read_json_file(o.plan).at("budgets").get<std::vector<std::size_t>>();
    } else {
      std::vector<double> shares(ds.num_classes(),
                                 static_cast<double>(o.budget) / static_cast<double>(ds.num_classes()));
      budgets = largest_remainder_round(shares, o.budget);
    }
    const SelectorSpec base = resolve_spec(ds, make_spec(o.base, o.score, o.bandwidth, g.seed));
    auto result = stratified_select(ds, budgets, base);
    sel = std::move(result.selection);
    config["base"] = spec_json(base);
    config["plan"] = o.plan;
    config["per_class_budgets"] = budgets;
    config["clamped_classes"] = result.clamped_classes;
  } else {
    const SelectorSpec spec = resolve_spec(ds, make_spec(o.method, o.score, o.bandwidth, g.seed));
    const auto all = ds.all_indices();
    sel = select(ds, all, o.budget, {}, spec);
    config["selector"] = spec_json(spec);
  }
  save_selection(sel, ManifestInfo{o.budget, k_ratio, config}, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_sweep(const Global& g, const SweepOpts& o, std::ostream& out) {
  require(!o.budgets.empty() && !o.k_grid.empty(), "sweep needs --budgets and --k");
  const auto train = load_dataset(o.data);
  const auto test = load_dataset(o.test);
  const SelectorSpec base = make_spec(o.base, o.score, o.bandwidth, g.seed);
  const auto rows = sweep_k(train, o.budgets, o.k_grid, base, g.seed, [&](const Selection& sel) {
    const auto r = probe_selection(train, sel, test);
    return Accuracy{r.oa, r.macc};
  });
  write_sweep_csv(rows, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_reweigh(const ReweighOpts& o, std::ostream& out) {
  const auto ds = load_dataset(o.data);
  ManifestInfo info;
  const Selection sel = load_selection(o.selection, &info);
  validate_selection(sel, ds);
  const PriorVector target = resolve_prior(o.prior, ds);
  const Selection weighted = reweigh_to_prior(sel, ds.labels(), target);
  info.config = {{"command", "reweigh"},
                 {"data", o.data},
                 {"selection", o.selection},
                 {"prior", o.prior},
                 {"source", info.config}};
  save_selection(weighted, info, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_audit(const AuditOpts& o, std::ostream& out) {
  const auto ds = load_dataset(o.data);
  const auto scores = score_scalar(ds, parse_score_kind(o.kind));
  std::optional<Selection> sel;
  if (!o.selection.empty()) {
    sel = load_selection(o.selection);
    validate_selection(*sel, ds);
  }
  const auto report = signal_audit(ds, scores, sel ? &*sel : nullptr);
  json j;
  j["config"] = {{"command", "audit"}, {"data", o.data}, {"kind", o.kind}, {"selection", o.selection}};
  j["report"] = report.to_json();
  write_json_file(j, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_diagnose(const Global& g, const DiagnoseOpts& o, std::ostream& out) {
  json j;
  j["config"] = {{"command", "diagnose"},        {"data", o.data},
                 {"selection", o.selection},     {"prior", o.prior},
                 {"loss_bound", o.loss_bound},   {"lab_instances", o.lab_instances},
                 {"lab_points", o.lab_points},   {"lab_subset", o.lab_subset},
                 {"seed", g.seed}};
  if (!o.data.empty()) {
    require(!o.selection.empty(), "diagnose --data needs --selection");
    const auto ds = load_dataset(o.data);
    const Selection sel = load_selection(o.selection);
    validate_selection(sel, ds);
    const PriorVector target = resolve_prior(o.prior, ds);
    const PriorVector rho = induced_prior(sel, ds.labels(), ds.num_classes());
    j["prior_mismatch"] = {
        {"target", std::vector<double>(target.probs().begin(), target.probs().end())},
        {"induced", std::vector<double>(rho.probs().begin(), rho.probs().end())},
        {"tv", tv_distance(target, rho)},
        {"term_b_bound", term_b_bound(target, rho, o.loss_bound)},
    };
  }
  if (o.lab_instances > 0) {
    json labs = json::array();
    std::size_t bound_viol = 0;
    std::size_t decomposition = 0;
    for (std::size_t k = 0; k < o.lab_instances; ++k) {
      const std::uint64_t seed = g.seed + k;
      const auto spec = random_threshold_lab(seed, o.lab_points);
      const auto report = quad_lab(spec, random_lab_subset(spec, o.lab_subset, seed));
      bound_viol += report.bound_violations;
      decomposition += report.decomposition_violations;
      json row = report.to_json();
      row["seed"] = seed;
      labs.push_back(std::move(row));
    }
    j["quad_lab"] = {{"instances", labs},
                     {"bound_violations", bound_viol},
                     {"decomposition_violations", decomposition}};
  }
  require(j.contains("prior_mismatch") || j.contains("quad_lab"),
          "diagnose needs --data/--selection or --lab-instances");
  write_json_file(j, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_eval(const EvalOpts& o, std::ostream& out, std::ostream& err) {
  const json head_doc = read_json_file(o.head);
  const LinearHead head = LinearHead::from_json(head_doc.contains("head") ? head_doc.at("head") : head_doc);
  const auto ds = load_dataset(o.data);
  const auto r = evaluate_head(head, ds);
  for (std::size_t y : r.excluded_classes) {
    err << "warning: class " << y << " has no test samples; excluded from mAcc\n";
  }
  json j;
  j["config"] = {{"command", "eval"}, {"head", o.head}, {"data", o.data}};
  j["oa"] = r.oa;
  j["macc"] = r.macc;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["excluded_classes"] = r.excluded_classes;
  write_json_file(j, o.out);
  emit(out, o.out);
  return kExitOk;
}

int do_kd_check(const Global& g, const KdOpts& o, std::ostream& out) {
  KdToySpec spec;
  spec.num_samples = o.samples;
  spec.num_classes = o.classes;
  spec.temperature = o.temperature;
  spec.tolerance = o.tolerance;
  spec.max_iterations = o.iterations;
  spec.seed = g.seed;
  const auto report = kd_robustness_check(spec);
  json j;
  j["config"] = {{"command", "kd-check"},     {"samples", o.samples},
                 {"classes", o.classes},      {"temperature", o.temperature},
                 {"tolerance", o.tolerance},  {"iterations", o.iterations},
                 {"seed", g.seed}};
  j["report"] = report.to_json();
  write_json_file(j, o.out);
  emit(out, o.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Long-tail aware dataset pruning toolkit", "ltprune"};
  app.require_subcommand(1);
  Global g;
  g.threads = threads_from_env(1);
  app.add_option("--seed", g.seed, "Run seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: LTPRUNE_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "Synthetic long-tailed embedding dataset");
  c_gen->add_option("--classes", gen.classes)->capture_default_str();
  c_gen->add_option("--head", gen.head, "Samples in the largest class")->capture_default_str();
  c_gen->add_option("--ratio", gen.ratio, "Imbalance ratio n_max / n_min")->capture_default_str();
  c_gen->add_option("--dims", gen.dims)->capture_default_str();
  c_gen->add_option("--separation", gen.separation)->capture_default_str();
  c_gen->add_option("--split", gen.split, "train or test")->capture_default_str();
  c_gen->add_option("--out", gen.out)->required();

  ScoreOpts sc;
  auto* c_score = app.add_subcommand("score", "Per-sample importance scores as CSV");
  c_score->add_option("--data", sc.data)->required();
  c_score->add_option("--kind", sc.kind, "loss|entropy|el2n|gradnorm|center-dist")->capture_default_str();
  c_score->add_option("--out", sc.out)->required();

  CalibrateOpts cal;
  auto* c_cal = app.add_subcommand("calibrate", "Retrain a linear head on frozen embeddings");
  c_cal->add_option("--data", cal.data)->required();
  c_cal->add_option("--policy", cal.policy, "ib|cb|sqrt|cb-loss")->capture_default_str();
  c_cal->add_option("--beta", cal.beta)->capture_default_str();
  c_cal->add_option("--step", cal.step)->capture_default_str();
  c_cal->add_option("--iterations", cal.iterations)->capture_default_str();
  c_cal->add_option("--tolerance", cal.tolerance)->capture_default_str();
  c_cal->add_option("--out", cal.out, "Head JSON")->required();
  c_cal->add_option("--emit-data", cal.emit_data, "Write the dataset with the head's logits");

  AllocateOpts al;
  auto* c_al = app.add_subcommand("allocate", "Per-class budget plan");
  c_al->add_option("--data", al.data);
  c_al->add_option("--complexities", al.complexities)->delimiter(',');
  c_al->add_option("--prior", al.prior, "uniform|empirical")->capture_default_str();
  c_al->add_option("--gamma", al.gamma)->capture_default_str();
  c_al->add_option("--budget", al.budget)->required();
  c_al->add_option("--floor", al.floor, "Per-class minimum (0 = none)")->capture_default_str();
  c_al->add_option("--out", al.out)->required();

  SelectOpts se;
  auto* c_sel = app.add_subcommand("select", "Choose a coreset and write a manifest");
  c_sel->add_option("--data", se.data)->required();
  c_sel->add_option("--method", se.method, "topk|bottomk|herding|kcenter|flrbf|stratified|sgs")
      ->capture_default_str();
  c_sel->add_option("--budget", se.budget)->required();
  c_sel->add_option("--score", se.score, "Score kind for topk/bottomk");
  c_sel->add_option("--bandwidth", se.bandwidth, "RBF bandwidth (default: median heuristic)");
  c_sel->add_option("--k", se.k, "SGS seeding ratio in [0, 1]")->capture_default_str();
  c_sel->add_option("--base", se.base, "Base selector for sgs/stratified")->capture_default_str();
  c_sel->add_option("--plan", se.plan, "Allocation JSON for stratified");
  c_sel->add_option("--out", se.out)->required();

  SweepOpts sw;
  auto* c_sw = app.add_subcommand("sweep", "SGS accuracy over a K grid");
  c_sw->add_option("--data", sw.data)->required();
  c_sw->add_option("--test", sw.test)->required();
  c_sw->add_option("--budgets", sw.budgets)->delimiter(',')->required();
  c_sw->add_option("--k", sw.k_grid)->delimiter(',')->required();
  c_sw->add_option("--base", sw.base)->capture_default_str();
  c_sw->add_option("--score", sw.score);
  c_sw->add_option("--bandwidth", sw.bandwidth);
  c_sw->add_option("--out", sw.out)->required();

  ReweighOpts rw;
  auto* c_rw = app.add_subcommand("reweigh", "Prior-matched selection weights");
  c_rw->add_option("--data", rw.data)->required();
  c_rw->add_option("--selection", rw.selection)->required();
  c_rw->add_option("--prior", rw.prior, "uniform|empirical")->capture_default_str();
  c_rw->add_option("--out", rw.out)->required();

  AuditOpts au;
  auto* c_au = app.add_subcommand("audit", "Class-frequency dependence of a signal");
  c_au->add_option("--data", au.data)->required();
  c_au->add_option("--kind", au.kind)->capture_default_str();
  c_au->add_option("--selection", au.selection);
  c_au->add_option("--out", au.out)->required();

  DiagnoseOpts dg;
  auto* c_dg = app.add_subcommand("diagnose", "Prior mismatch and quadrature-lab checks");
  c_dg->add_option("--data", dg.data);
  c_dg->add_option("--selection", dg.selection);
  c_dg->add_option("--prior", dg.prior)->capture_default_str();
  c_dg->add_option("--loss-bound", dg.loss_bound)->capture_default_str();
  c_dg->add_option("--lab-instances", dg.lab_instances)->capture_default_str();
  c_dg->add_option("--lab-points", dg.lab_points)->capture_default_str();
  c_dg->add_option("--lab-subset", dg.lab_subset)->capture_default_str();
  c_dg->add_option("--out", dg.out)->required();

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "OA and mAcc of a head on a labeled set");
  c_ev->add_option("--head", ev.head)->required();
  c_ev->add_option("--data", ev.data)->required();
  c_ev->add_option("--out", ev.out)->required();

  KdOpts kd;
  auto* c_kd = app.add_subcommand("kd-check", "Soft-target weighting robustness toy");
  c_kd->add_option("--samples", kd.samples)->capture_default_str();
  c_kd->add_option("--classes", kd.classes)->capture_default_str();
  c_kd->add_option("--temperature", kd.temperature)->capture_default_str();
  c_kd->add_option("--tolerance", kd.tolerance)->capture_default_str();
  c_kd->add_option("--iterations", kd.iterations)->capture_default_str();
  c_kd->add_option("--out", kd.out)->required();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("ltprune");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, err, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, err, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitInvalid;
  }

  try {
    set_max_threads(g.threads);
    if (c_gen->parsed()) return do_generate(g, gen, out);
    if (c_score->parsed()) return do_score(sc, out);
    if (c_cal->parsed()) return do_calibrate(cal, out);
    if (c_al->parsed()) return do_allocate(al, out);
    if (c_sel->parsed()) return do_select(g, se, out);
    if (c_sw->parsed()) return do_sweep(g, sw, out);
    if (c_rw->parsed()) return do_reweigh(rw, out);
    if (c_au->parsed()) return do_audit(au, out);
    if (c_dg->parsed()) return do_diagnose(g, dg, out);
    if (c_ev->parsed()) return do_eval(ev, out, err);
    if (c_kd->parsed()) return do_kd_check(g, kd, out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::kInfeasible ? kExitInfeasible : kExitInvalid;
  } catch (const json::exception& e) {
    err << "error[invalid_argument]: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInvalid;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ltprune::cli
