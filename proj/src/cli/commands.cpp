#include "skilltree/cli/commands.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <sstream>

#include "skilltree/cli/artifacts.hpp"
#include "skilltree/cli/manifest.hpp"
#include "skilltree/distill/distill.hpp"
#include "skilltree/env/dataset.hpp"
#include "skilltree/explain/explain.hpp"

namespace skilltree::cli {

namespace fs = std::filesystem;

namespace {

fs::path or_default(const std::string& v, const fs::path& dir, const char* name) {
  return v.empty() ? dir / name : fs::path(v);
}

void ensure_parent(const fs::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Manifest start_manifest(const std::string& command, const Config& c, std::uint64_t seed) {
  Manifest m;
  m.command = command;
  m.config_hash = git_blob_hash(c.to_text());
  m.seed = seed;
  return m;
}

void finish_manifest(const Manifest& m, const StagePaths& p) {
  write_text(p.out_dir / ("manifest_" + m.command + ".json"), m.to_json());
}

void save_checkpoint(const Checkpoint& ck, const fs::path& p) {
  ensure_parent(p);
  ck.save(p);
}

std::string curve_to_csv(const std::vector<skillvq::EpochStats>& curve) {
  std::ostringstream out;
  out << "epoch,total,reconstruction,codebook,commitment,prior,heldout_mse,heldout_agreement,codes_used,codes_reset\n";
  for (const auto& e : curve)
    out << e.epoch << ',' << env::format_float(e.total) << ',' << env::format_float(e.reconstruction) << ','
        << env::format_float(e.codebook) << ',' << env::format_float(e.commitment) << ',' << env::format_float(e.prior)
        << ',' << env::format_float(e.heldout_mse) << ',' << env::format_float(e.heldout_prior_agreement) << ','
        << e.codes_used << ',' << e.codes_reset << '\n';
  return out.str();
}

std::string counts_to_csv(const std::vector<int>& counts) {
  std::ostringstream out;
  out << "episode,subtasks\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out << i + 1 << ',' << counts[i] << '\n';
  return out.str();
}

}  // namespace

StagePaths stage_paths(const Config& c) {
  StagePaths p;
  p.out_dir = c.get("out_dir");
  p.data = or_default(c.get("data_path"), p.out_dir, "dataset.csv");
  p.skills = or_default(c.get("skills_path"), p.out_dir, "skills.sktr");
  p.policy = or_default(c.get("policy_path"), p.out_dir, "policy.sktr");
  p.tree = or_default(c.get("tree_path"), p.out_dir, "tree.txt");
  p.tree_nodc = p.out_dir / "tree_nodc.txt";
  return p;
}

void gen_data(const Config& c, std::ostream& log) {
  c.validate();
  const auto p = stage_paths(c);
  const auto n = static_cast<int>(c.get_int("n_traj"));
  const auto seed = c.get_seed("data_seed");
  const auto data = env::generate_dataset(n, seed, static_cast<float>(c.get_double("expert_noise")));
  ensure_parent(p.data);
  env::save_dataset(p.data, data.trajectories);
  auto m = start_manifest("gen-data", c, seed);
  m.add_output(p.data);
  finish_manifest(m, p);
  std::size_t steps = 0;
  for (const auto& t : data.trajectories) steps += t.length();
  log << "wrote " << n << " trajectories (" << steps << " steps) to " << p.data.string() << '\n';
}

void train_skills_stage(const Config& c, std::ostream& log) {
  c.validate();
  const auto p = stage_paths(c);
  const auto data = env::load_dataset(p.data);
  const auto cfg = skill_config(c);
  const auto res = skillvq::train_skills(data, cfg);
  save_checkpoint(skills_checkpoint(res.model, c, res.rng_state), p.skills);
  const auto curve_path = p.out_dir / "skills_curve.csv";
  write_text(curve_path, curve_to_csv(res.curve));
  auto m = start_manifest("train-skills", c, cfg.seed);
  m.add_input(p.data);
  m.add_output(p.skills);
  m.add_output(curve_path);
  finish_manifest(m, p);
  if (!res.curve.empty()) {
    const auto& last = res.curve.back();
    log << "epoch " << last.epoch << ": held-out mse " << env::format_float(last.heldout_mse) << ", prior agreement "
        << env::format_float(last.heldout_prior_agreement) << ", codes used " << last.codes_used << '\n';
  }
  log << "wrote " << p.skills.string() << '\n';
}

void train_rl_stage(const Config& c, std::ostream& log) {
  c.validate();
  const auto p = stage_paths(c);
  const auto ck = Checkpoint::load(p.skills);
  const auto skills = load_skills(ck);
  const auto cfg = rl_config(c);
  const auto res = hrl::train_rl(skills, cfg, [&](const hrl::MetricsRow& r) {
    log << "iter " << r.iter << " steps " << r.env_steps << " acs " << env::format_float(r.mean_subtasks) << " kl "
        << env::format_float(r.kl) << " alpha " << env::format_float(r.alpha) << '\n';
  });
  save_checkpoint(policy_checkpoint(skills, res, c), p.policy);
  const auto metrics_path = p.out_dir / "rl_metrics.csv";
  write_text(metrics_path, hrl::metrics_to_csv(res.metrics));
  auto m = start_manifest("train-rl", c, cfg.seed);
  m.add_input(p.skills);
  m.add_output(p.policy);
  m.add_output(metrics_path);
  finish_manifest(m, p);
  log << "gradient steps " << res.gradient_steps << ", skipped " << res.skipped_updates << "; wrote "
      << p.policy.string() << '\n';
}

void distill_stage(const Config& c, std::ostream& log) {
  c.validate();
  const auto p = stage_paths(c);
  const auto bundle = load_policy(Checkpoint::load(p.policy));
  const hrl::SkillExecutor exec{&bundle.skills, &bundle.codebook};
  const auto seed = c.get_seed("distill_seed");
  auto sample = distill::sample_labels(bundle.policy, exec, static_cast<int>(c.get_int("distill_traj")), seed);
  const std::string policy_id = git_blob_hash_file(p.policy);
  sample.labels.policy_id = policy_id;

  const auto settings = cart_settings(c);
  const auto plain = distill::cart_fit(sample.labels, settings);
  const int threshold = static_cast<int>(c.get_int("clean_threshold"));
  const auto kept = distill::clean_dataset(sample.episodes, threshold);
  auto cleaned_labels = distill::labels_from_episodes(kept, bundle.policy.num_skills());
  cleaned_labels.policy_id = policy_id;
  cleaned_labels.cleaning_threshold = threshold;
  const auto cleaned = distill::cart_fit(cleaned_labels, settings);

  const auto labels_path = p.out_dir / "labels.csv";
  const auto labels_dc_path = p.out_dir / "labels_dc.csv";
  write_text(labels_path, distill::labels_to_csv(sample.labels));
  write_text(labels_dc_path, distill::labels_to_csv(cleaned_labels));
  write_text(p.tree_nodc, plain.to_text());
  write_text(p.tree, cleaned.to_text());

  const int n_eval = static_cast<int>(c.get_int("eval_n"));
  const auto eval_seed = c.get_seed("eval_seed");
  const auto soft = distill::evaluate_policy(hrl::greedy_chooser(bundle.policy), exec, n_eval, eval_seed);
  const auto d = distill::evaluate_policy(distill::hard_chooser(plain), exec, n_eval, eval_seed);
  const auto dc = distill::evaluate_policy(distill::hard_chooser(cleaned), exec, n_eval, eval_seed);
  std::ostringstream report;
  report << "variant,leaves,depth,fidelity,acs,acs_std,labels\n";
  report << "soft,0,0,1," << env::format_float(soft.mean_subtasks) << ',' << env::format_float(soft.std_subtasks) << ','
         << sample.labels.size() << '\n';
  report << "D," << plain.leaf_count() << ',' << plain.depth() << ','
         << env::format_float(distill::fidelity(plain, bundle.policy, sample.labels.states)) << ','
         << env::format_float(d.mean_subtasks) << ',' << env::format_float(d.std_subtasks) << ','
         << sample.labels.size() << '\n';
  report << "DC+D," << cleaned.leaf_count() << ',' << cleaned.depth() << ','
         << env::format_float(distill::fidelity(cleaned, bundle.policy, sample.labels.states)) << ','
         << env::format_float(dc.mean_subtasks) << ',' << env::format_float(dc.std_subtasks) << ','
         << cleaned_labels.size() << '\n';
  const auto report_path = p.out_dir / "distill_report.csv";
  write_text(report_path, report.str());

  auto m = start_manifest("distill", c, seed);
  m.add_input(p.policy);
  for (const auto& f : {labels_path, labels_dc_path, p.tree_nodc, p.tree, report_path}) m.add_output(f);
  finish_manifest(m, p);
  log << report.str();
  log << "kept " << kept.size() << " of " << sample.episodes.size() << " episodes after cleaning\n";
}

double eval_stage(const Config& c, const std::string& actor, std::ostream& log) {
  c.validate();
  if (actor != "soft" && actor != "hard" && actor != "random")
    throw ConfigError("--actor must be soft, hard or random, got '" + actor + "'");
  const auto p = stage_paths(c);
  const auto bundle = load_policy(Checkpoint::load(p.policy));
  const hrl::SkillExecutor exec{&bundle.skills, &bundle.codebook};
  distill::HardTree tree;
  hrl::SkillChooser chooser;
  if (actor == "soft") {
    chooser = hrl::greedy_chooser(bundle.policy);
  } else if (actor == "hard") {
    tree = distill::HardTree::from_text(read_text(p.tree));
    chooser = distill::hard_chooser(tree);
  } else {
    chooser = hrl::uniform_chooser(exec.num_skills());
  }
  const auto seed = c.get_seed("eval_seed");
  const auto ev = distill::evaluate_policy(chooser, exec, static_cast<int>(c.get_int("eval_n")), seed);
  const auto out_path = p.out_dir / ("eval_" + actor + ".csv");
  write_text(out_path, counts_to_csv(ev.subtasks));
  auto m = start_manifest("eval-" + actor, c, seed);
  m.add_input(p.policy);
  if (actor == "hard") m.add_input(p.tree);
  m.add_output(out_path);
  finish_manifest(m, p);
  log << actor << " ACS " << env::format_float(ev.mean_subtasks) << " +- " << env::format_float(ev.std_subtasks)
      << " over " << ev.subtasks.size() << " episodes\n";
  return ev.mean_subtasks;
}

void explain_stage(const Config& c, std::ostream& log) {
  c.validate();
  const auto p = stage_paths(c);
  const auto bundle = load_policy(Checkpoint::load(p.policy));
  const hrl::SkillExecutor exec{&bundle.skills, &bundle.codebook};
  const auto tree = distill::HardTree::from_text(read_text(p.tree));
  const auto names = explain::default_feature_names();
  const auto seed = c.get_seed("explain_seed");

  const auto soft_path = p.out_dir / "policy_tree.txt";
  const auto hard_path = p.out_dir / "tree_named.txt";
  const auto ablation_path = p.out_dir / "ablation.csv";
  const auto trace_path = p.out_dir / "trace.csv";
  const auto completions_path = p.out_dir / "trace_subtasks.csv";
  write_text(soft_path, explain::render_tree(bundle.policy, names));
  write_text(hard_path, explain::render_tree(tree, names));
  const auto rows = explain::ablation_matrix(exec, static_cast<int>(c.get_int("ablation_episodes")), seed);
  write_text(ablation_path, explain::ablation_to_csv(rows));

  // First fully successful episode among a bounded number of seeds, else the last one tried.
  explain::SkillTrace trace;
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    trace = explain::record_trace(bundle.policy, exec, rng());
    if (trace.subtasks == env::kNumTargets) break;
  }
  write_text(trace_path, explain::trace_to_csv(trace));
  write_text(completions_path, explain::completions_to_csv(trace));

  auto m = start_manifest("explain", c, seed);
  m.add_input(p.policy);
  m.add_input(p.tree);
  for (const auto& f : {soft_path, hard_path, ablation_path, trace_path, completions_path}) m.add_output(f);
  finish_manifest(m, p);
  log << "trace: " << trace.decisions.size() << " decisions, " << trace.subtasks << " subtasks, longest repeat "
      << explain::longest_repeat(trace) << '\n';
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skill-tree pipeline: demonstrations, skills, RL, distillation, explanations"};
  app.require_subcommand(1);
  // `-h` would collide with the skill-length key `--h`.
  app.set_help_flag("--help", "print this help and exit");

  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
  std::string actor = "soft";
  std::string n_alias;
  std::string seed_alias;
  std::string out_alias;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", sets, "key=value override (repeatable)");
    for (const auto& key : Config::known_keys())
      sub->add_option("--" + key, overrides[key], Config::describe(key));
  };
  auto* gen = app.add_subcommand("gen-data", "generate scripted demonstrations");
  common(gen);
  gen->add_option("--n", n_alias, "alias for --n_traj");
  gen->add_option("--seed", seed_alias, "alias for --data_seed");
  gen->add_option("--out", out_alias, "alias for --data_path");
  auto* skills = app.add_subcommand("train-skills", "learn the codebook, decoder and skill prior");
  common(skills);
  auto* rl = app.add_subcommand("train-rl", "train the soft-tree policy with the KL-regularized actor-critic");
  common(rl);
  auto* dist = app.add_subcommand("distill", "fit hard trees to the policy's greedy decisions");
  common(dist);
  auto* ev = app.add_subcommand("eval", "report ACS for one actor");
  common(ev);
  ev->add_option("--actor", actor, "soft | hard | random");
  auto* ex = app.add_subcommand("explain", "render trees, ablation matrix and a skill trace");
  common(ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    Config c = config_path.empty() ? Config() : Config::load(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      c.set(s.substr(0, eq), s.substr(eq + 1));
    }
    CLI::App* active = app.get_subcommands().front();
    for (const auto& [key, value] : overrides)
      if (active->count("--" + key) > 0) c.set(key, value);
    if (active == gen) {
      if (gen->count("--n")) c.set("n_traj", n_alias);
      if (gen->count("--seed")) c.set("data_seed", seed_alias);
      if (gen->count("--out")) c.set("data_path", out_alias);
    }

    if (active == gen) gen_data(c, out);
    else if (active == skills) train_skills_stage(c, out);
    else if (active == rl) train_rl_stage(c, out);
    else if (active == dist) distill_stage(c, out);
    else if (active == ev) eval_stage(c, actor, out);
    else explain_stage(c, out);
    return 0;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericFault& e) {
    err << "numeric fault: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    err << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const EmptyAfterCleaning& e) {
    err << "distill: " << e.what() << "; lower clean_threshold\n";
    return 1;
  }
}

}  // namespace skilltree::cli
