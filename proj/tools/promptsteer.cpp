#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "promptsteer/catalog.hpp"
#include "promptsteer/curation_pipeline.hpp"
#include "promptsteer/dataset.hpp"
#include "promptsteer/diversity.hpp"
#include "promptsteer/errors.hpp"
#include "promptsteer/genclient.hpp"
#include "promptsteer/http_clients.hpp"
#include "promptsteer/mock_provider.hpp"
#include "promptsteer/scoring.hpp"
#include "promptsteer/server.hpp"
#include "promptsteer/session.hpp"
#include "promptsteer/steerability.hpp"

namespace fs = std::filesystem;
using namespace promptsteer;
using json = nlohmann::ordered_json;

namespace {

struct ProviderArgs {
  std::string backend = "mock";
  std::string embedder = "mock";
  std::string mock_key = "promptsteer-mock";
  std::size_t mock_dim = 512;
  std::string store;
  int max_retries = 2;
  std::size_t max_in_flight = 2;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", backend, "generator: 'mock' or an http(s) URL")->capture_default_str();
    cmd->add_option("--embedder", embedder, "embedding provider: 'mock' or an http(s) URL")
        ->capture_default_str();
    cmd->add_option("--mock-key", mock_key, "mock generator key")->capture_default_str();
    cmd->add_option("--mock-dim", mock_dim, "mock embedding dimension")->capture_default_str();
    cmd->add_option("--store", store, "image/log directory (memory if empty)");
    cmd->add_option("--max-retries", max_retries, "generator retries")->capture_default_str();
    cmd->add_option("--max-in-flight", max_in_flight, "concurrent generator calls")->capture_default_str();
  }

  std::shared_ptr<GenerationGateway> gateway(const fs::path& image_dir) const {
    std::shared_ptr<GenerationBackend> b;
    if (backend == "mock") {
      b = std::make_shared<MockGenerationBackend>(mock_key);
    } else {
      b = std::make_shared<HttpGenerationBackend>(HttpEndpoint::parse(backend));
    }
    auto images = image_dir.empty() ? std::make_shared<ImageStore>() : std::make_shared<ImageStore>(image_dir);
    GatewayOptions opts;
    opts.max_retries = max_retries;
    opts.max_in_flight = max_in_flight;
    return std::make_shared<GenerationGateway>(b, images, opts);
  }

  std::shared_ptr<EmbeddingProvider> provider() const {
    if (embedder == "mock") return std::make_shared<MockEmbeddingProvider>(mock_dim);
    return std::make_shared<HttpEmbeddingProvider>(HttpEndpoint::parse(embedder));
  }

  fs::path image_dir() const { return store.empty() ? fs::path{} : fs::path(store) / "images"; }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw NotFoundError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string join_categories(const std::set<Category>& cats) {
  std::string s;
  for (auto c : cats) {
    if (!s.empty()) s += ';';
    s += to_string(c);
  }
  return s;
}

std::string optional_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream ss;
  ss << std::setprecision(17) << *v;
  return ss.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::set<std::string> parse_target_list(const std::string& list_arg) {
  std::set<std::string> ids;
  std::string text = list_arg;
  if (!list_arg.empty() && list_arg[0] == '@') {
    std::ifstream in(list_arg.substr(1));
    if (!in) throw NotFoundError("cannot open target list " + list_arg.substr(1));
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',' || ch == '\n' || ch == ' ' || ch == '\r' || ch == '\t') {
      if (!cur.empty()) ids.insert(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return ids;
}

std::optional<Category> parse_group(const std::string& group) {
  if (group == "all") return std::nullopt;
  auto c = category_from_string(group);
  if (!c) throw ValidationError("unknown group '" + group + "'");
  return c;
}

// ---- curate ----

int run_curate(const std::string& manifest, const std::string& out, const std::string& cal_out,
               const CurationOptions& options, const ProviderArgs& providers) {
  auto gateway = providers.gateway(providers.image_dir());
  auto embedder = providers.provider();
  const auto result = curate(load_manifest(manifest), *gateway, *embedder, options);
  for (const auto& s : result.skipped) {
    std::cerr << "warning: skipped target " << s.target_id << ": " << s.reason << "\n";
  }
  save_catalog(out, result.catalog);
  const fs::path cal_path = cal_out.empty() ? fs::path(out).replace_extension(".calibration.json") : fs::path(cal_out);
  result.calibration.save(cal_path);
  std::cout << "curated " << result.catalog.size() << " targets (" << result.skipped.size()
            << " skipped) -> " << out << ", calibration -> " << cal_path.string() << "\n";
  return 0;
}

// ---- calibrate ----

int run_calibrate(const std::string& samples_path, const std::string& out, const std::string& catalog_in,
                  const std::string& catalog_out) {
  std::ifstream in(samples_path);
  if (!in) throw NotFoundError("cannot open " + samples_path);
  std::vector<CalibrationSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    samples.push_back({j.value("target_id", std::string{}), j.at("distance").get<double>(),
                       sample_group_from_string(j.at("group").get<std::string>())});
  }
  const LinearFit fit = fit_calibration(samples);
  std::vector<double> ds, labels;
  for (const auto& s : samples) {
    ds.push_back(s.distance);
    labels.push_back(s.label());
  }
  std::cout << std::setprecision(10) << "alpha=" << fit.alpha << " beta=" << fit.beta
            << " pearson(distance,label)=" << pearson_correlation(ds, labels) << "\n";

  ScoreCalibration cal(fit.alpha, fit.beta);
  if (!catalog_in.empty()) {
    auto catalog = load_catalog(catalog_in);
    std::vector<TargetSpec> kept;
    for (auto& t : catalog) {
      try {
        t.calibration = cal.calibrate(t.target_id, t.reference_distance);
        kept.push_back(t);
      } catch (const CalibrationError& e) {
        std::cerr << "warning: dropping " << t.target_id << ": " << e.what() << "\n";
      }
    }
    save_catalog(catalog_out.empty() ? fs::path(catalog_in) : fs::path(catalog_out), kept);
  }
  cal.save(out);
  return 0;
}

// ---- service helpers ----

std::unique_ptr<SessionService> make_service(const std::string& catalog_path, const std::string& cal_path,
                                             const ProviderArgs& providers) {
  auto catalog = load_catalog(catalog_path);
  ScoreCalibration cal = cal_path.empty() ? ScoreCalibration{} : ScoreCalibration::load(cal_path);
  return std::make_unique<SessionService>(std::move(catalog), std::move(cal),
                                          providers.gateway(providers.image_dir()), providers.provider(),
                                          providers.store.empty() ? fs::path{} : fs::path(providers.store));
}

ApiServer* g_server = nullptr;

int run_serve(const std::string& catalog, const std::string& cal, const ProviderArgs& providers,
              const std::string& host, int port) {
  auto service = make_service(catalog, cal, providers);
  ApiServer server(*service);
  const int bound = server.bind(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.serve();
  g_server = nullptr;
  return 0;
}

int run_export(const std::string& catalog, const std::string& cal, const ProviderArgs& providers,
               const std::string& out) {
  if (providers.store.empty()) throw ValidationError("export needs --store");
  auto service = make_service(catalog, cal, providers);
  const auto records = service->export_records();
  export_dataset(fs::path(out), records);
  std::cout << "exported " << records.size() << " interactions -> " << out << "\n";
  return 0;
}

int run_replay(const std::string& dataset, const std::string& catalog, const std::string& cal,
               const ProviderArgs& providers) {
  const auto records = import_dataset(fs::path(dataset)).records;
  auto gateway = providers.gateway(providers.image_dir());
  auto embedder = providers.provider();
  const auto mismatches = verify_replay(records, load_catalog(catalog),
                                        cal.empty() ? ScoreCalibration{} : ScoreCalibration::load(cal),
                                        *gateway, *embedder);
  for (const auto& m : mismatches) {
    std::cout << "mismatch " << m.interaction_id << ": stored " << m.stored_score << ", recomputed "
              << m.recomputed_score << "\n";
  }
  std::cout << records.size() - mismatches.size() << "/" << records.size() << " interactions reproduce\n";
  return mismatches.empty() ? 0 : 1;
}

// ---- import / stats ----

int run_import(const std::string& in, const std::string& out, bool lenient) {
  const auto result = import_dataset(fs::path(in), lenient ? ImportMode::lenient : ImportMode::strict);
  for (const auto& issue : result.issues) std::cerr << describe(issue) << "\n";
  if (!out.empty()) export_dataset(fs::path(out), result.records);
  std::cout << "imported " << result.records.size() << " interactions";
  if (!result.issues.empty()) std::cout << " (" << result.issues.size() << " issues)";
  std::cout << "\n";
  return 0;
}

int run_stats(const std::string& dataset, const std::string& by, const std::string& out,
              const std::string& words_csv, const std::string& queries_csv, bool lenient) {
  const auto records =
      import_dataset(fs::path(dataset), lenient ? ImportMode::lenient : ImportMode::strict).records;
  std::ostringstream table;
  table << std::setprecision(17);
  write_aggregate_csv_header(table);
  if (by == "category") {
    for (auto c : kAllCategories) write_aggregate_csv_row(table, to_string(c), aggregate(records, c));
    write_aggregate_csv_row(table, "total", aggregate(records));
  } else if (by == "all") {
    write_aggregate_csv_row(table, "total", aggregate(records));
  } else {
    const auto c = parse_group(by);
    write_aggregate_csv_row(table, to_string(*c), aggregate(records, c));
  }
  if (out.empty()) {
    std::cout << table.str();
  } else {
    open_out(out) << table.str();
  }

  const auto words = word_count_stats(records);
  std::cout << std::setprecision(6) << "mean positive words " << words.mean_positive_words
            << ", mean negative words " << words.mean_negative_words << ", mean queries per target "
            << words.mean_queries_per_target << "\n";
  if (!words_csv.empty()) {
    auto f = open_out(words_csv);
    write_word_counts_csv(f, records);
  }
  if (!queries_csv.empty()) {
    auto f = open_out(queries_csv);
    write_queries_per_target_csv(f, words);
  }
  return 0;
}

// ---- analyze steerability ----

struct SteerArgs {
  std::string dataset;
  std::string group = "all";
  bool by_rating = false;
  SteerabilityOptions options;
  std::string targets;
  std::string model;
  std::string out;
  bool lenient = false;
};

json target_json(const TargetSteerability& t) {
  json j;
  j["target_id"] = t.target_id;
  j["model_id"] = t.model_id;
  j["categories"] = json::array();
  for (auto c : t.categories) j["categories"].push_back(to_string(c));
  j["n_trajectories"] = t.n_trajectories;
  j["estimate"] = t.monte_carlo.estimate;
  j["stderr"] = t.monte_carlo.standard_error;
  j["censored_fraction"] = t.monte_carlo.censored_fraction;
  j["analytic"] = optional_json(t.analytic);
  return j;
}

json group_json(const std::string& metric, const std::string& name,
                const std::optional<GroupSteerability>& g) {
  json j;
  j["metric"] = metric;
  j["group"] = name;
  j["n_targets"] = g ? g->n_targets : 0;
  j["mean"] = g ? json(g->mean) : json(nullptr);
  j["sem"] = g ? optional_json(g->sem) : json(nullptr);
  return j;
}

int run_steerability(const SteerArgs& a) {
  const auto records =
      import_dataset(fs::path(a.dataset), a.lenient ? ImportMode::lenient : ImportMode::strict).records;
  GroupFilter filter;
  filter.category = parse_group(a.group);
  if (!a.targets.empty()) filter.target_ids = parse_target_list(a.targets);
  if (!a.model.empty()) filter.model_id = a.model;

  std::vector<std::pair<std::string, std::vector<TargetSteerability>>> metrics;
  metrics.emplace_back("score", steerability_from_records(records, a.options));
  std::size_t skipped = 0;
  if (a.by_rating) {
    auto rated = steerability_by_rating(records, a.options);
    skipped = rated.skipped_records;
    metrics.emplace_back("rating", std::move(rated.targets));
    std::cerr << "rating-based run skipped " << skipped << " records without ratings\n";
  }

  json groups = json::array();
  for (const auto& [metric, targets] : metrics) {
    const auto g = steerability_group(targets, filter);
    groups.push_back(group_json(metric, a.group, g));
    std::cout << metric << " steerability [" << a.group << "]: ";
    if (g) {
      std::cout << std::setprecision(6) << g->mean << " (n=" << g->n_targets << ", sem="
                << (g->sem ? optional_number(g->sem) : std::string("null")) << ")\n";
    } else {
      std::cout << "empty group\n";
    }
    if (a.group == "all" && !filter.target_ids && !filter.model_id) {
      for (auto c : kAllCategories) {
        GroupFilter f = filter;
        f.category = c;
        groups.push_back(group_json(metric, std::string(to_string(c)), steerability_group(targets, f)));
      }
    }
  }

  if (a.out.empty()) return 0;
  const fs::path out(a.out);
  if (out.extension() == ".json") {
    json doc;
    doc["epsilon"] = a.options.epsilon;
    doc["runs"] = a.options.n_runs;
    doc["t_max"] = a.options.t_max;
    doc["seed"] = a.options.seed;
    doc["skipped_rating_records"] = skipped;
    doc["groups"] = groups;
    doc["targets"] = json::array();
    for (const auto& [metric, targets] : metrics) {
      for (const auto& t : targets) {
        if (!filter.matches(t)) continue;
        json j = target_json(t);
        j["metric"] = metric;
        doc["targets"].push_back(j);
      }
    }
    open_out(out) << doc.dump(2) << "\n";
  } else {
    auto f = open_out(out);
    f << "metric,target_id,model_id,categories,n_trajectories,estimate,stderr,censored_fraction,analytic\n";
    for (const auto& [metric, targets] : metrics) {
      for (const auto& t : targets) {
        if (!filter.matches(t)) continue;
        f << metric << ',' << csv_field(t.target_id) << ',' << csv_field(t.model_id) << ','
          << csv_field(join_categories(t.categories)) << ',' << t.n_trajectories << ','
          << t.monte_carlo.estimate << ',' << t.monte_carlo.standard_error << ','
          << t.monte_carlo.censored_fraction << ',' << optional_number(t.analytic) << '\n';
      }
    }
    fs::path gpath = out;
    gpath.replace_filename(out.stem().string() + "_groups.csv");
    auto g = open_out(gpath);
    g << "metric,group,n_targets,mean,sem\n";
    for (const auto& row : groups) {
      g << row["metric"].get<std::string>() << ',' << row["group"].get<std::string>() << ','
        << row["n_targets"].get<std::size_t>() << ','
        << (row["mean"].is_null() ? std::string() : optional_number(row["mean"].get<double>())) << ','
        << (row["sem"].is_null() ? std::string() : optional_number(row["sem"].get<double>())) << '\n';
    }
  }
  return 0;
}

// ---- analyze diversity ----

json welch_json(const std::optional<WelchResult>& w) {
  if (!w) return nullptr;
  return json{{"t", w->t}, {"dof", w->dof}, {"p_two_sided", w->p_two_sided}};
}

int run_diversity(const std::string& dataset, std::size_t permutations, std::uint64_t seed,
                  const ProviderArgs& providers, const std::string& out_dir, bool lenient) {
  const auto records =
      import_dataset(fs::path(dataset), lenient ? ImportMode::lenient : ImportMode::strict).records;
  auto embedder = providers.provider();
  const auto obs = embed_prompts(records, *embedder);
  const auto report = diversity_report(obs, seed, permutations);

  json summary;
  summary["permutations"] = permutations;
  summary["seed"] = seed;
  summary["mean_first_score"] = report.first_last.mean_first_score;
  summary["mean_last_score"] = report.first_last.mean_last_score;
  summary["dispersion_pairs"] = report.real_dispersions.size();
  summary["dispersion_test"] = welch_json(report.dispersion_test);
  summary["style_users"] = report.style.real.size();
  summary["style_test"] = welch_json(report.style_test);
  if (report.success) {
    summary["adjacent"] = {{"improve", report.success->improve},
                           {"unchanged", report.success->unchanged},
                           {"worsen", report.success->worsen},
                           {"pairs", report.success->pairs}};
  } else {
    summary["adjacent"] = nullptr;
  }
  std::cout << summary.dump(2) << "\n";
  if (out_dir.empty()) return 0;

  const fs::path dir(out_dir);
  open_out(dir / "summary.json") << summary.dump(2) << "\n";
  {
    auto f = open_out(dir / "first_last.csv");
    f << "user_id,target_id,n_prompts,first_distance,last_distance,first_score,last_score\n";
    for (const auto& e : report.first_last.entries) {
      f << csv_field(e.user_id) << ',' << csv_field(e.target_id) << ',' << e.n_prompts << ','
        << e.first_distance << ',' << e.last_distance << ',' << e.first_score << ',' << e.last_score << '\n';
    }
  }
  {
    auto f = open_out(dir / "dispersions.csv");
    f << "user_id,target_id,n_prompts,real_dispersion,permuted_dispersion\n";
    for (std::size_t i = 0; i < report.real_dispersions.size(); ++i) {
      const auto& r = report.real_dispersions[i];
      f << csv_field(r.user_id) << ',' << csv_field(r.target_id) << ',' << r.n_prompts << ','
        << r.dispersion << ',' << report.baseline_dispersions[i].dispersion << '\n';
    }
  }
  {
    auto f = open_out(dir / "style.csv");
    f << "user_id,n_targets,real_dispersion,baseline_dispersion,real_mean_norm,baseline_mean_norm\n";
    for (std::size_t i = 0; i < report.style.real.size(); ++i) {
      const auto& r = report.style.real[i];
      const auto& b = report.style.baseline[i];
      f << csv_field(r.user_id) << ',' << r.n_targets << ',' << r.dispersion << ',' << b.dispersion << ','
        << r.mean_style_norm << ',' << b.mean_style_norm << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptsteer: steerability game service and analytics"};
  app.require_subcommand(1);

  // curate
  auto* curate_cmd = app.add_subcommand("curate", "select targets and seeds from a manifest");
  std::string manifest, catalog_out, cal_out;
  CurationOptions cur_opts;
  ProviderArgs cur_prov;
  curate_cmd->add_option("--manifest", manifest, "manifest JSONL")->required();
  curate_cmd->add_option("--seeds", cur_opts.n_seeds, "seed candidates per target")->capture_default_str();
  curate_cmd->add_option("--ai-targets", cur_opts.n_ai_targets, "target candidates per AI prompt")
      ->capture_default_str();
  curate_cmd->add_option("--rng-seed", cur_opts.rng_seed, "seed-sampling RNG seed")->capture_default_str();
  curate_cmd->add_option("--model-id", cur_opts.default_model_id, "model id for entries without one")
      ->capture_default_str();
  curate_cmd->add_option("--out", catalog_out, "catalog JSONL")->required();
  curate_cmd->add_option("--calibration-out", cal_out, "calibration JSON (default <out>.calibration.json)");
  cur_prov.add_to(curate_cmd);

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "fit the global distance->score line");
  std::string samples, cal_fit_out, cal_catalog, cal_catalog_out;
  calibrate_cmd->add_option("--samples", samples, "JSONL of {target_id, distance, group}")->required();
  calibrate_cmd->add_option("--out", cal_fit_out, "calibration JSON")->required();
  calibrate_cmd->add_option("--catalog", cal_catalog, "recompute per-target adjustments for this catalog");
  calibrate_cmd->add_option("--catalog-out", cal_catalog_out, "updated catalog (default: in place)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the game HTTP API");
  std::string serve_catalog, serve_cal, host = "127.0.0.1";
  int port = 8080;
  ProviderArgs serve_prov;
  serve_cmd->add_option("--catalog", serve_catalog, "catalog JSONL")->required();
  serve_cmd->add_option("--calibration", serve_cal, "calibration JSON");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_prov.add_to(serve_cmd);

  // export
  auto* export_cmd = app.add_subcommand("export", "export a session store as dataset JSONL");
  std::string export_catalog, export_cal, export_out;
  ProviderArgs export_prov;
  export_cmd->add_option("--catalog", export_catalog, "catalog JSONL")->required();
  export_cmd->add_option("--calibration", export_cal, "calibration JSON");
  export_cmd->add_option("--out", export_out, "dataset JSONL")->required();
  export_prov.add_to(export_cmd);

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "recompute every score and compare");
  std::string replay_dataset, replay_catalog, replay_cal;
  ProviderArgs replay_prov;
  replay_cmd->add_option("--dataset", replay_dataset, "dataset JSONL")->required();
  replay_cmd->add_option("--catalog", replay_catalog, "catalog JSONL")->required();
  replay_cmd->add_option("--calibration", replay_cal, "calibration JSON");
  replay_prov.add_to(replay_cmd);

  // import
  auto* import_cmd = app.add_subcommand("import", "validate a dataset and write canonical JSONL");
  std::string import_in, import_out;
  bool import_lenient = false;
  import_cmd->add_option("--in", import_in, "dataset JSONL")->required();
  import_cmd->add_option("--out", import_out, "canonical JSONL");
  import_cmd->add_flag("--lenient", import_lenient, "skip invalid lines instead of failing");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "per-category aggregates and word counts");
  std::string stats_dataset, stats_by = "category", stats_out, words_csv, queries_csv;
  bool stats_lenient = false;
  stats_cmd->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
  stats_cmd->add_option("--by", stats_by, "'category', 'all', or one category flag")->capture_default_str();
  stats_cmd->add_option("--out", stats_out, "aggregate CSV (stdout if empty)");
  stats_cmd->add_option("--words-csv", words_csv, "per-interaction word counts CSV");
  stats_cmd->add_option("--queries-csv", queries_csv, "queries per target CSV");
  stats_cmd->add_flag("--lenient", stats_lenient);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "steerability and diversity analytics");
  analyze_cmd->require_subcommand(1);
  auto* steer_cmd = analyze_cmd->add_subcommand("steerability", "Markov-chain stopping times");
  SteerArgs steer;
  steer_cmd->add_option("--dataset", steer.dataset, "dataset JSONL")->required();
  steer_cmd->add_option("--group", steer.group, "category flag or 'all'")->capture_default_str();
  steer_cmd->add_flag("--by-rating", steer.by_rating, "also run on human ratings");
  steer_cmd->add_option("--epsilon", steer.options.epsilon)->capture_default_str();
  steer_cmd->add_option("--runs", steer.options.n_runs)->capture_default_str();
  steer_cmd->add_option("--tmax", steer.options.t_max)->capture_default_str();
  steer_cmd->add_option("--seed", steer.options.seed)->capture_default_str();
  steer_cmd->add_option("--threads", steer.options.threads, "0 = all cores")->capture_default_str();
  steer_cmd->add_option("--targets", steer.targets, "comma list or @file of target ids");
  steer_cmd->add_option("--model", steer.model, "only targets of this model id");
  steer_cmd->add_option("--out", steer.out, "per-target .csv (plus _groups.csv) or .json");
  steer_cmd->add_flag("--lenient", steer.lenient);

  auto* div_cmd = analyze_cmd->add_subcommand("diversity", "prompt diversity and permutation baselines");
  std::string div_dataset, div_out;
  std::size_t permutations = 1;
  std::uint64_t div_seed = 0;
  bool div_lenient = false;
  ProviderArgs div_prov;
  div_cmd->add_option("--dataset", div_dataset, "dataset JSONL")->required();
  div_cmd->add_option("--permutations", permutations, "baseline draws per pseudo-user")->capture_default_str();
  div_cmd->add_option("--seed", div_seed)->capture_default_str();
  div_cmd->add_option("--out-dir", div_out, "directory for CSV/JSON outputs");
  div_cmd->add_flag("--lenient", div_lenient);
  div_prov.add_to(div_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (curate_cmd->parsed()) return run_curate(manifest, catalog_out, cal_out, cur_opts, cur_prov);
    if (calibrate_cmd->parsed()) return run_calibrate(samples, cal_fit_out, cal_catalog, cal_catalog_out);
    if (serve_cmd->parsed()) return run_serve(serve_catalog, serve_cal, serve_prov, host, port);
    if (export_cmd->parsed()) return run_export(export_catalog, export_cal, export_prov, export_out);
    if (replay_cmd->parsed()) return run_replay(replay_dataset, replay_catalog, replay_cal, replay_prov);
    if (import_cmd->parsed()) return run_import(import_in, import_out, import_lenient);
    if (stats_cmd->parsed()) {
      return run_stats(stats_dataset, stats_by, stats_out, words_csv, queries_csv, stats_lenient);
    }
    if (steer_cmd->parsed()) return run_steerability(steer);
    if (div_cmd->parsed()) return run_diversity(div_dataset, permutations, div_seed, div_prov, div_out, div_lenient);
  } catch (const DatasetValidationError& e) {
    for (const auto& issue : e.issues()) std::cerr << describe(issue) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
