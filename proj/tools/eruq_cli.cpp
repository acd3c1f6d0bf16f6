// eruq: effective-rank uncertainty toolkit.
//
// Exit codes: 0 success, 1 validation or domain failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eruq/eruq.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// "-" means stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw eruq::IoError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct SyntheticArgs {
  std::string out_dir;
  std::size_t records = 100;
  std::uint64_t seed = 0;
  double separation = 0.9;
  std::uint32_t dim = 64;
  std::uint32_t responses = 10;
  std::string name = "synthetic";
};

int run_make_synthetic(const SyntheticArgs& a) {
  eruq::synthetic::SyntheticConfig cfg;
  cfg.records = a.records;
  cfg.seed = a.seed;
  cfg.separation = a.separation;
  cfg.dim = a.dim;
  cfg.responses = a.responses;
  cfg.dataset_name = a.name;
  const auto ds = eruq::synthetic::make_synthetic(cfg);
  eruq::synthetic::write_dataset(ds, a.name, a.out_dir);
  std::size_t halluc = 0;
  for (bool h : ds.hallucinated) halluc += h ? 1 : 0;
  std::cerr << "wrote " << ds.records.size() << " records (" << halluc << " hallucinated) to "
            << a.out_dir << '\n';
  return kOk;
}

int run_validate(const std::string& manifest) {
  const auto ds = eruq::data::Dataset::open(manifest);
  const auto report = eruq::data::validate_dataset(ds);
  for (const auto& f : report.dataset_failures) std::cout << "dataset: " << f << '\n';
  for (const auto& r : report.records) {
    for (const auto& f : r.failures) std::cout << r.record_id << ": " << f << '\n';
  }
  if (report.valid()) {
    std::cout << "valid: " << report.records.size() << " records, 0 failures\n";
    return kOk;
  }
  std::cout << "invalid: " << report.failure_count() << " failures\n";
  return kFailure;
}

struct ScoreArgs {
  std::string manifest;
  std::string methods = "er,es,lne,dse,se";
  double alpha = eruq::spectral::kDefaultAlpha;
  std::string clusters = "exact-match";
  double threshold = eruq::annotation::kDefaultThreshold;
  double beta = 1.0;
  unsigned parallelism = 1;
  std::vector<std::string> externals;
  std::string out = "-";
};

int run_score(const ScoreArgs& a) {
  eruq::scoring::ScoringConfig cfg;
  const auto methods = split_csv(a.methods);
  cfg.methods = {methods.begin(), methods.end()};
  cfg.alpha = a.alpha;
  cfg.rouge_threshold = a.threshold;
  cfg.rouge_beta = a.beta;
  cfg.parallelism = a.parallelism;
  cfg.cluster_source = a.clusters == "ingested" ? eruq::scoring::ClusterSource::Ingested
                                                : eruq::scoring::ClusterSource::ExactMatch;
  for (const auto& e : a.externals) {
    const auto eq = e.find('=');
    if (eq == std::string::npos) throw eruq::ValidationError("--external expects NAME=+1 or NAME=-1");
    cfg.external_orientation[e.substr(0, eq)] = std::stoi(e.substr(eq + 1));
  }
  cfg.validate();

  const auto ds = eruq::data::Dataset::open(a.manifest);
  const auto result = eruq::scoring::score_dataset(ds, cfg);
  Output out(a.out);
  eruq::metrics::write_scored(result.scored, out.stream());
  for (const auto& f : result.failures) std::cerr << "error: " << f.record_id << ": " << f.message << '\n';
  std::cerr << "scored " << result.scored.records.size() << " of " << result.attempted << " records, "
            << result.failures.size() << " errors\n";
  if (result.run_failed()) {
    std::cerr << "run failed: more than 10% of records could not be scored\n";
    return kFailure;
  }
  return kOk;
}

int run_annotate(const std::string& manifest, double threshold, double beta, const std::string& out_path) {
  const auto ds = eruq::data::Dataset::open(manifest);
  std::ifstream in(ds.records_path());
  if (!in) throw eruq::IoError("cannot open " + ds.records_path().string());
  std::vector<std::string> warnings;
  const auto records = eruq::data::read_records(in, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  Output out(out_path);
  std::size_t halluc = 0;
  for (const auto& r : records) {
    const auto label = eruq::annotation::label_record(r, threshold, beta);
    halluc += label.is_hallucination ? 1 : 0;
    auto j = eruq::metrics::to_json(label);
    j["record_id"] = r.record_id;
    out.stream() << j.dump() << '\n';
  }
  std::cerr << "labeled " << records.size() << " records, " << halluc << " hallucinations\n";
  return kOk;
}

struct EvalArgs {
  std::vector<std::string> scored;
  std::string labels;
  std::string methods;
  std::size_t bootstrap = 0;
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string roc_out;
};

int run_eval(const EvalArgs& a) {
  std::vector<eruq::metrics::ScoredDataset> datasets;
  for (const auto& path : a.scored) {
    std::ifstream in(path);
    if (!in) throw eruq::IoError("cannot open " + path);
    datasets.push_back(eruq::metrics::read_scored(in, fs::path(path).stem().string()));
  }
  if (!a.labels.empty()) {
    std::ifstream in(a.labels);
    if (!in) throw eruq::IoError("cannot open " + a.labels);
    std::map<std::string, eruq::annotation::HallucinationLabel> labels;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      labels[j.at("record_id").get<std::string>()] = eruq::metrics::label_from_json(j);
    }
    for (auto& ds : datasets) {
      for (auto& r : ds.records) {
        auto it = labels.find(r.record_id);
        if (it == labels.end()) throw eruq::ValidationError("no label for record '" + r.record_id + "'");
        r.label = it->second;
      }
    }
  }
  std::vector<std::string> methods = split_csv(a.methods);
  if (methods.empty()) {
    std::set<std::string> seen;
    for (const auto& ds : datasets)
      for (const auto& r : ds.records)
        for (const auto& [m, _] : r.scores) seen.insert(m);
    methods.assign(seen.begin(), seen.end());
  }
  eruq::metrics::EvalOptions opts;
  opts.bootstrap_iterations = a.bootstrap;
  opts.seed = a.seed;
  const auto rows = eruq::metrics::evaluate_many(datasets, methods, opts);
  {
    Output out(a.out);
    eruq::metrics::write_table_csv(rows, out.stream());
  }
  if (!a.roc_out.empty()) {
    Output roc(a.roc_out);
    roc.stream() << "dataset,method,fpr,tpr\n";
    roc.stream().precision(17);
    for (const auto& ds : datasets) {
      for (const auto& m : methods) {
        std::vector<double> s;
        std::vector<bool> l;
        for (const auto& r : ds.records) {
          auto it = r.scores.find(m);
          if (it == r.scores.end() || !it->second) continue;
          s.push_back(*it->second);
          l.push_back(r.label.is_hallucination);
        }
        try {
          for (const auto& p : eruq::metrics::roc_curve(s, l)) {
            roc.stream() << ds.name << ',' << m << ',' << p.fpr << ',' << p.tpr << '\n';
          }
        } catch (const eruq::DomainError&) {
          // reported through the table
        }
      }
    }
  }
  int rc = kOk;
  for (const auto& r : rows) {
    if (r.auroc) {
      if (r.ci && r.ci->excessive_redraws()) {
        std::cerr << "warning: " << r.method << ": " << r.ci->redraws
                  << " single-class bootstrap resamples were redrawn\n";
      }
      continue;
    }
    std::cerr << "error: " << r.dataset << '/' << r.method << ": " << r.error << '\n';
    rc = kFailure;
  }
  return rc;
}

struct SimulateArgs {
  std::string nonlinearity = "tanh";
  double gamma = 1.2;
  double tau2 = 1e-4;
  double emission_noise = 0.1;
  int steps = 10;
  int mtheta = 100;
  int mtraj = 100;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> param_seed;
  long dim = 8;
  long token_dim = 4;
  double h0 = 0.0;
  unsigned threads = 1;
  std::string out = "-";
};

int run_simulate(const SimulateArgs& a) {
  eruq::sim::ToyModelSpec spec;
  spec.d = a.dim;
  spec.k = a.token_dim;
  spec.nonlinearity = a.nonlinearity == "linear" ? eruq::sim::Nonlinearity::Linear : eruq::sim::Nonlinearity::Tanh;
  spec.gamma = a.gamma;
  spec.emission_noise = a.emission_noise;
  spec.validate();
  const auto param_seed = a.param_seed.value_or(a.seed);
  eruq::sim::PosteriorSpec post{eruq::sim::random_parameters(spec.d, spec.k, param_seed), a.tau2};
  const Eigen::VectorXd h0 = Eigen::VectorXd::Constant(spec.d, a.h0);
  eruq::sim::SimulationConfig cfg;
  cfg.steps = a.steps;
  cfg.theta_samples = a.mtheta;
  cfg.trajectories = a.mtraj;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  const auto diag = eruq::sim::lemma_diagnostics(spec, post, h0, cfg);

  Output out(a.out);
  auto& os = out.stream();
  os << "# toy autoregressive model; every hyperparameter below is a simulator choice\n"
     << "# nonlinearity=" << eruq::sim::to_string(spec.nonlinearity) << " gamma=" << spec.gamma
     << " tau2=" << post.tau2 << " emission_noise=" << spec.emission_noise << " d=" << spec.d
     << " k=" << spec.k << " steps=" << cfg.steps << " mtheta=" << cfg.theta_samples
     << " mtraj=" << cfg.trajectories << " seed=" << cfg.seed << " param_seed=" << param_seed
     << " h0=" << a.h0 << '\n';
  eruq::sim::write_decomposition_csv(diag, os);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-rank uncertainty toolkit: dataset synthesis and validation, scoring, "
               "ROUGE-L annotation, AUROC evaluation, and variance-decomposition simulation."};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SyntheticArgs syn;
  auto* c_syn = app.add_subcommand("make-synthetic", "Write a synthetic dataset with a known detector ordering");
  c_syn->add_option("--out-dir", syn.out_dir, "Output directory")->required();
  c_syn->add_option("--records", syn.records, "Number of records")->check(CLI::Range(std::size_t{10}, std::size_t{10000000}));
  c_syn->add_option("--seed", syn.seed, "Random seed");
  c_syn->add_option("--separation", syn.separation, "Class separation in [0, 1]")->check(CLI::Range(0.0, 1.0));
  c_syn->add_option("--dim", syn.dim, "Embedding dimension n");
  c_syn->add_option("--responses", syn.responses, "Sampled responses per record (N)");
  c_syn->add_option("--name", syn.name, "Dataset name");

  std::string validate_manifest;
  auto* c_val = app.add_subcommand("validate", "Check a dataset against its manifest");
  c_val->add_option("--manifest", validate_manifest, "Manifest path")->required();

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Compute uncertainty scores and labels for every record");
  c_score->add_option("--manifest", sc.manifest, "Manifest path")->required();
  c_score->add_option("--methods", sc.methods, "Comma-separated methods: er, es, lne, dse, se, ext:NAME");
  c_score->add_option("--alpha", sc.alpha, "Eigenscore regularizer");
  c_score->add_option("--clusters", sc.clusters, "Cluster source")->check(CLI::IsMember({"exact-match", "ingested"}));
  c_score->add_option("--threshold", sc.threshold, "ROUGE-L threshold; below it an answer is a hallucination");
  c_score->add_option("--beta", sc.beta, "ROUGE-L F-measure beta");
  c_score->add_option("--parallelism", sc.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  c_score->add_option("--external", sc.externals, "External score orientation NAME=+1|-1 (repeatable)");
  c_score->add_option("--out", sc.out, "Scored JSONL output ('-' for stdout)");

  std::string ann_manifest, ann_out = "-";
  double ann_threshold = eruq::annotation::kDefaultThreshold, ann_beta = 1.0;
  auto* c_ann = app.add_subcommand("annotate", "Label primary answers with ROUGE-L");
  c_ann->add_option("--manifest", ann_manifest, "Manifest path")->required();
  c_ann->add_option("--threshold", ann_threshold, "ROUGE-L threshold; below it an answer is a hallucination");
  c_ann->add_option("--beta", ann_beta, "ROUGE-L F-measure beta");
  c_ann->add_option("--out", ann_out, "Labels JSONL output ('-' for stdout)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "AUROC table per method (hallucination = positive class)");
  c_eval->add_option("--scored", ev.scored, "Scored JSONL file(s); several add an Average row")->required();
  c_eval->add_option("--labels", ev.labels, "Labels JSONL overriding the labels in the scored files");
  c_eval->add_option("--methods", ev.methods, "Comma-separated methods (default: all present)");
  c_eval->add_option("--bootstrap", ev.bootstrap, "Bootstrap iterations for a 95% interval (0 = off, else >= 100)");
  c_eval->add_option("--seed", ev.seed, "Bootstrap seed");
  c_eval->add_option("--out", ev.out, "CSV table output ('-' for stdout)");
  c_eval->add_option("--roc-out", ev.roc_out, "Optional CSV of ROC points");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo aleatoric/epistemic decomposition on a toy model");
  c_sim->add_option("--nonlinearity", sim.nonlinearity, "Transition nonlinearity")->check(CLI::IsMember({"linear", "tanh"}));
  c_sim->add_option("--gamma", sim.gamma, "Expansion gain");
  c_sim->add_option("--tau2", sim.tau2, "Isotropic posterior variance");
  c_sim->add_option("--emission-noise", sim.emission_noise, "Std of the continuous token sample");
  c_sim->add_option("--steps", sim.steps, "Steps T")->check(CLI::PositiveNumber);
  c_sim->add_option("--mtheta", sim.mtheta, "Parameter samples")->check(CLI::PositiveNumber);
  c_sim->add_option("--mtraj", sim.mtraj, "Trajectories per parameter sample")->check(CLI::Range(2, 100000000));
  c_sim->add_option("--seed", sim.seed, "Monte-Carlo seed");
  c_sim->add_option("--param-seed", sim.param_seed, "Seed of the posterior-mean parameters (default: --seed)");
  c_sim->add_option("--dim", sim.dim, "Hidden dimension d")->check(CLI::PositiveNumber);
  c_sim->add_option("--token-dim", sim.token_dim, "Token embedding dimension k")->check(CLI::PositiveNumber);
  c_sim->add_option("--h0", sim.h0, "Initial hidden state, every coordinate");
  c_sim->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);
  c_sim->add_option("--out", sim.out, "CSV output ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_syn) return run_make_synthetic(syn);
    if (*c_val) return run_validate(validate_manifest);
    if (*c_score) return run_score(sc);
    if (*c_ann) return run_annotate(ann_manifest, ann_threshold, ann_beta, ann_out);
    if (*c_eval) {
      if (ev.bootstrap != 0 && ev.bootstrap < 100) {
        std::cerr << "--bootstrap must be 0 or at least 100\n";
        return kUsage;
      }
      return run_eval(ev);
    }
    if (*c_sim) return run_simulate(sim);
  } catch (const eruq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
