// Command-line front end. Everything goes through the C API; nlohmann::json is
// only used to assemble configs and manifests.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghostkit/ghostkit.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError(kExitUsage, msg); }

void check(gk_status s) {
  if (s == GK_OK) return;
  const int code = (s == GK_ERR_INVALID_ARGUMENT || s == GK_ERR_SHAPE || s == GK_ERR_IO) ? kExitUsage
                                                                                          : kExitCompute;
  throw CliError(code, std::string(gk_status_name(s)) + ": " + gk_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ImagePtr = std::unique_ptr<gk_image, Deleter<gk_image, gk_image_free>>;
using MasksPtr = std::unique_ptr<gk_masks, Deleter<gk_masks, gk_masks_free>>;
using BucketsPtr = std::unique_ptr<gk_buckets, Deleter<gk_buckets, gk_buckets_free>>;
using ReportPtr = std::unique_ptr<gk_report, Deleter<gk_report, gk_report_free>>;

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  gk_string_free(s);
  return out;
}

ImagePtr load_image(const std::string& path) {
  gk_image* p = nullptr;
  check(gk_image_load(path.c_str(), &p));
  return ImagePtr(p);
}

MasksPtr load_masks(const std::string& path) {
  gk_masks* p = nullptr;
  check(gk_masks_load(path.c_str(), &p));
  return MasksPtr(p);
}

BucketsPtr load_buckets(const std::string& path) {
  gk_buckets* p = nullptr;
  check(gk_buckets_load(path.c_str(), &p));
  return BucketsPtr(p);
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    usage_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CliError(kExitUsage, "cannot write '" + path.string() + "'");
}

// Numbers on the command line may be "inf".
json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  usage_error("not a number: '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// A command runs from a fully resolved config into an output directory and
// returns its manifest. Manifests hold no paths inside the output directory
// and no timings, so a replay elsewhere produces identical files.
struct Run {
  fs::path out;
  // Commands may replace parts of it with resolved values.
  json config;
  std::vector<std::string> outputs;
  json manifest_extra = json::object();

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
};

json finish(Run& run, const std::string& command) {
  json m = {{"tool", "ghostkit"}, {"version", gk_version()}, {"command", command}, {"config", run.config}};
  for (auto it = run.manifest_extra.begin(); it != run.manifest_extra.end(); ++it) m[it.key()] = it.value();
  std::sort(run.outputs.begin(), run.outputs.end());
  m["outputs"] = run.outputs;
  write_text(run.out / "manifest.json", m.dump(2) + "\n");
  return m;
}

json pgm_scale(const gk_image* image, const fs::path& path) {
  double lo = 0, hi = 0;
  check(gk_image_write_pgm(image, path.string().c_str(), &lo, &hi));
  return {{"lo", number(lo)}, {"hi", number(hi)}};
}

// ---- generate ------------------------------------------------------------

void cmd_generate(const json& cfg, Run& run) {
  const json& d = cfg.at("data");
  const std::string phantom = d.at("phantom");
  const std::size_t h = d.at("height"), w = d.at("width"), m = d.at("masks");
  const std::uint64_t seed = d.at("seed"), phantom_seed = d.at("phantom_seed");
  const json& c = d.at("photons");
  const double photons = c.is_string() ? parse_double(c.get<std::string>()) : c.get<double>();

  gk_image* ph = nullptr;
  check(gk_phantom_generate(phantom.c_str(), h, w, phantom_seed, &ph));
  ImagePtr image(ph);
  gk_masks* mk = nullptr;
  check(gk_masks_generate(m, h, w, seed, &mk));
  MasksPtr masks(mk);
  gk_buckets* cl = nullptr;
  check(gk_forward_project(masks.get(), image.get(), &cl));
  BucketsPtr clean(cl);
  gk_buckets* ny = nullptr;
  check(gk_apply_poisson(clean.get(), photons, seed, &ny));
  BucketsPtr noisy(ny);

  const std::string meta = json{{"generator", d}}.dump();
  check(gk_image_save(image.get(), run.file("phantom.gitk").string().c_str(), meta.c_str()));
  check(gk_masks_save(masks.get(), run.file("masks.gitk").string().c_str(), meta.c_str()));
  check(gk_buckets_save(clean.get(), run.file("clean_buckets.gitk").string().c_str(), meta.c_str()));
  check(gk_buckets_save(noisy.get(), run.file("buckets.gitk").string().c_str(), meta.c_str()));
  run.manifest_extra["pgm_scale"] = pgm_scale(image.get(), run.file("phantom.pgm"));

  double ratio = 0;
  check(gk_noise_fluctuation_ratio(noisy.get(), &ratio));
  run.manifest_extra["noise_fluctuation_ratio"] = number(ratio);
  std::cout << "generated " << h << "x" << w << " " << phantom << " phantom, " << m
            << " realizations, noise/fluctuation ratio " << ratio << "\n";
}

// ---- reconstruct -----------------------------------------------------------

void cmd_reconstruct(const json& cfg, Run& run) {
  auto masks = load_masks(cfg.at("masks"));
  auto buckets = load_buckets(cfg.at("buckets"));
  gk_report* rp = nullptr;
  check(gk_reconstruct(masks.get(), buckets.get(), cfg.at("method").dump().c_str(), &rp));
  ReportPtr report(rp);

  if (!cfg.at("reference").is_null()) {
    auto ref = load_image(cfg.at("reference"));
    check(gk_report_attach_metrics(report.get(), ref.get()));
  }

  const gk_image* image = gk_report_image(report.get());
  check(gk_image_save(image, run.file("image.gitk").string().c_str(),
                      json{{"method", cfg.at("method").at("method")}}.dump().c_str()));
  run.manifest_extra["pgm_scale"] = pgm_scale(image, run.file("image.pgm"));

  char* text = nullptr;
  check(gk_report_json(report.get(), &text));
  const json rep = json::parse(take(text));
  run.config["method"] = rep.at("config");
  write_text(run.file("report.json"), rep.dump(2) + "\n");

  check(gk_report_trace_csv(report.get(), &text));
  const std::string trace = take(text);
  if (!trace.empty()) {
    write_text(run.file("trace.csv"), trace);
    check(gk_report_save_checkpoint(report.get(), run.file("checkpoint.gitk").string().c_str()));
  }

  std::cout << "method " << rep.at("method").get<std::string>();
  if (rep.contains("metrics")) {
    const auto& m = rep.at("metrics");
    std::cout << "  psnr " << m.at("psnr") << "  ssim " << m.at("ssim") << "  resolution " << m.at("resolution");
  }
  if (rep.contains("trace")) std::cout << "  best epoch " << rep.at("trace").at("best_epoch");
  std::cout << "  (" << gk_report_wall_seconds(report.get()) << " s)\n";
}

// ---- evaluate --------------------------------------------------------------

void cmd_evaluate(const json& cfg, Run& run) {
  auto test = load_image(cfg.at("image"));
  auto ref = load_image(cfg.at("reference"));
  gk_metrics m{};
  char* frc = nullptr;
  check(gk_evaluate(test.get(), ref.get(), cfg.at("hann").get<bool>() ? 1 : 0, &m, &frc));
  const std::string curve = take(frc);
  const json out = {{"mse", number(m.mse)},
                    {"psnr", number(m.psnr)},
                    {"ssim", number(m.ssim)},
                    {"resolution", number(m.resolution)},
                    {"resolution_unit", "pixels (1 / half-bit crossing frequency)"}};
  write_text(run.file("metrics.json"), out.dump(2) + "\n");
  write_text(run.file("frc.csv"), curve);
  std::cout << "psnr " << m.psnr << "  ssim " << m.ssim << "  resolution " << m.resolution
            << "  mse " << m.mse << "\n";
}

// ---- sweep / dose / gridsearch ---------------------------------------------

void cmd_sweep(const json& cfg, Run& run) {
  char* js = nullptr;
  char* csv = nullptr;
  check(gk_sweep(cfg.dump().c_str(), &js, &csv));
  const std::string text = take(js), table = take(csv);
  write_text(run.file("sweep.json"), json::parse(text).dump(2) + "\n");
  write_text(run.file("sweep.csv"), table);
  std::cout << table;
}

void cmd_dose(const json& cfg, Run& run) {
  char* js = nullptr;
  check(gk_dose(cfg.dump().c_str(), &js));
  const json out = json::parse(take(js));
  write_text(run.file("dose.json"), out.dump(2) + "\n");
  std::cout << "pencil-beam target " << out.at("target_quality") << "\n";
  for (const auto& r : out.at("rows"))
    std::cout << r.at("method").get<std::string>() << ": C " << r.at("photons") << ", total dose ratio vs PB "
              << r.at("total_ratio_vs_pb") << ", vs n2g " << r.at("total_ratio_vs_n2g")
              << (r.at("bracket_edge").is_null() ? "" : " (bracket edge)") << "\n";
}

void cmd_gridsearch(const json& cfg, Run& run) {
  auto masks = load_masks(cfg.at("masks"));
  auto buckets = load_buckets(cfg.at("buckets"));
  const json request = {{"method", cfg.at("method")}, {"lambdas", cfg.at("lambdas")}};
  char* js = nullptr;
  check(gk_gridsearch(masks.get(), buckets.get(), request.dump().c_str(), &js));
  const json out = json::parse(take(js));
  write_text(run.file("gridsearch.json"), out.dump(2) + "\n");
  for (const auto& r : out.at("rows"))
    std::cout << "lambda " << r.at("lambda") << "  mean cv loss " << r.at("mean_cv_loss") << "\n";
  std::cout << "best lambda " << out.at("best_lambda") << "\n";
}

const std::map<std::string, std::function<void(const json&, Run&)>> kCommands = {
    {"generate", cmd_generate}, {"reconstruct", cmd_reconstruct}, {"evaluate", cmd_evaluate},
    {"sweep", cmd_sweep},       {"dose", cmd_dose},               {"gridsearch", cmd_gridsearch}};

void execute(const std::string& command, const json& config, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) usage_error("cannot create '" + out_dir + "': " + ec.message());
  Run run{out_dir, config, {}, json::object()};
  kCommands.at(command)(config, run);
  finish(run, command);
}

// ---- option plumbing -------------------------------------------------------

// Training flags shared by reconstruct and gridsearch; only flags actually
// given override the method config.
struct MethodFlags {
  std::string method, config_file;
  int epochs = 0;
  double lambda = 0, lr = 0;
  std::size_t splits = 0, perms = 0, features = 0, threads = 0;
  std::uint64_t seed = 0;
  int cv_repeat = 0;
  bool no_early_stopping = false;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app, bool with_lambda) {
    opts["method"] = app->add_option("--method", method, "ls, tv, gidc, n2i, n2g or inr")
                         ->check(CLI::IsMember({"ls", "tv", "gidc", "n2i", "n2g", "inr"}));
    opts["config"] = app->add_option("--method-config", config_file, "JSON method config")->check(CLI::ExistingFile);
    opts["epochs"] = app->add_option("--epochs", epochs, "training epochs");
    if (with_lambda) opts["lambda"] = app->add_option("--lambda", lambda, "regularization weight");
    opts["lr"] = app->add_option("--lr", lr, "Adam learning rate");
    opts["splits"] = app->add_option("--splits", splits, "number of splits K");
    opts["perms"] = app->add_option("--perms", perms, "number of permutations P");
    opts["features"] = app->add_option("--features", features, "U-Net base features");
    opts["seed"] = app->add_option("--seed", seed, "training seed");
    opts["threads"] = app->add_option("--threads", threads, "worker threads (0: GHOSTKIT_THREADS)");
    opts["cv_repeat"] = app->add_option("--cv-repeat", cv_repeat, "held-out set index");
    opts["no_es"] = app->add_flag("--no-early-stopping", no_early_stopping, "report the final parameters");
  }

  bool given(const std::string& k) const {
    const auto it = opts.find(k);
    return it != opts.end() && it->second->count() > 0;
  }

  json build() const {
    json m = given("config") ? read_json_file(config_file) : json::object();
    if (!m.is_object()) usage_error("method config must be a JSON object");
    if (given("method")) m["method"] = method;
    if (!m.contains("method")) usage_error("--method is required");
    const bool tv = m.at("method") == "tv";
    if (given("epochs")) m["epochs"] = epochs;
    if (given("lambda")) {
      if (tv)
        m["tv"]["lambda"] = lambda;
      else
        m["lambda"] = lambda;
    }
    if (given("lr")) m["lr"] = lr;
    if (given("splits")) m["splits"] = splits;
    if (given("perms")) m["permutations"] = perms;
    if (given("features")) m["model"]["base_features"] = features;
    if (given("seed")) m["seed"] = seed;
    if (given("threads")) m["threads"] = threads;
    if (given("cv_repeat")) m["cv_repeat"] = cv_repeat;
    if (no_early_stopping) m["early_stopping"] = false;
    return m;
  }
};

struct DataFlags {
  std::string data, masks, buckets;

  void add(CLI::App* app) {
    app->add_option("--data", data, "directory written by generate")->check(CLI::ExistingDirectory);
    app->add_option("--masks", masks, "mask stack (GITK)");
    app->add_option("--buckets", buckets, "bucket vector (GITK)");
  }

  // Fills masks/buckets (and the reference when asked) as absolute paths.
  void resolve(json& cfg, const std::string& reference, bool want_reference) const {
    std::string m = masks, b = buckets, r = reference;
    if (!data.empty()) {
      const fs::path dir(data);
      if (m.empty()) m = (dir / "masks.gitk").string();
      if (b.empty()) b = (dir / "buckets.gitk").string();
      if (want_reference && r.empty() && fs::exists(dir / "phantom.gitk")) r = (dir / "phantom.gitk").string();
    }
    if (m.empty() || b.empty()) usage_error("give --data or both --masks and --buckets");
    cfg["masks"] = absolute(m);
    cfg["buckets"] = absolute(b);
    if (want_reference) cfg["reference"] = r.empty() ? json(nullptr) : json(absolute(r));
  }
};

std::vector<json> method_list(const std::string& s, int epochs) {
  std::vector<json> out;
  for (const auto& name : split_list(s)) {
    json m = {{"method", name}};
    if (epochs > 0 && name != "ls" && name != "tv") m["epochs"] = epochs;
    out.push_back(m);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghostkit: ghost-imaging reconstruction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gk_version()));

  std::string out;
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out, "output directory")->required(); };

  // generate
  auto* gen = app.add_subcommand("generate", "phantom, masks and clean/noisy buckets");
  std::string g_phantom = "blobs", g_photons = "100";
  std::size_t g_size = 64, g_masks = 800;
  std::uint64_t g_seed = 0, g_phantom_seed = 0;
  gen->add_option("--phantom", g_phantom, "blobs, disks or flat")->check(CLI::IsMember({"blobs", "disks", "flat"}));
  gen->add_option("--size", g_size, "image side in pixels");
  gen->add_option("--masks", g_masks, "number of realizations M");
  gen->add_option("--photons", g_photons, "photons per realization C, or inf");
  gen->add_option("--seed", g_seed, "mask and noise seed");
  gen->add_option("--phantom-seed", g_phantom_seed, "phantom seed");
  add_out(gen);

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "reconstruct an image from masks and buckets");
  MethodFlags r_method;
  DataFlags r_data;
  std::string r_reference;
  r_method.add(rec, true);
  r_data.add(rec);
  rec->add_option("--reference", r_reference, "ground truth for metrics (GITK)");
  add_out(rec);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "PSNR, SSIM, MSE and FRC against a reference");
  std::string e_image, e_reference;
  bool e_hann = false;
  ev->add_option("--image", e_image, "reconstruction (GITK)")->required();
  ev->add_option("--reference", e_reference, "reference (GITK)")->required();
  ev->add_flag("--hann", e_hann, "apply a Hann window before FRC");
  add_out(ev);

  // sweep
  auto* sw = app.add_subcommand("sweep", "noise-level sweep with repeats");
  std::string s_config, s_levels = "1,10,100,1000,10000", s_methods = "ls,tv", s_phantom = "blobs";
  std::size_t s_size = 64, s_masks = 800;
  int s_repeats = 5, s_epochs = 0;
  std::uint64_t s_seed = 0;
  sw->add_option("--config", s_config, "full sweep config (JSON)")->check(CLI::ExistingFile);
  sw->add_option("--levels", s_levels, "comma-separated photon levels");
  sw->add_option("--methods", s_methods, "comma-separated methods");
  sw->add_option("--repeats", s_repeats, "realization sets per level");
  sw->add_option("--size", s_size, "image side");
  sw->add_option("--masks", s_masks, "realizations M");
  sw->add_option("--phantom", s_phantom, "phantom kind");
  sw->add_option("--seed", s_seed, "base seed");
  sw->add_option("--epochs", s_epochs, "epochs for learned methods");
  add_out(sw);

  // dose
  auto* ds = app.add_subcommand("dose", "photon budget matching a pencil-beam scan");
  std::string d_config, d_methods = "tv,n2g", d_metric = "psnr", d_phantom = "blobs";
  std::size_t d_size = 64, d_masks = 800;
  double d_pb = 10.0;
  int d_repeats = 1, d_epochs = 0;
  std::uint64_t d_seed = 0;
  ds->add_option("--config", d_config, "full dose config (JSON)")->check(CLI::ExistingFile);
  ds->add_option("--methods", d_methods, "comma-separated methods");
  ds->add_option("--metric", d_metric, "psnr or ssim")->check(CLI::IsMember({"psnr", "ssim"}));
  ds->add_option("--pb-photons", d_pb, "pencil-beam photons per pixel");
  ds->add_option("--repeats", d_repeats, "repeats per bisection step");
  ds->add_option("--size", d_size, "image side");
  ds->add_option("--masks", d_masks, "realizations M");
  ds->add_option("--phantom", d_phantom, "phantom kind");
  ds->add_option("--seed", d_seed, "base seed");
  ds->add_option("--epochs", d_epochs, "epochs for learned methods");
  add_out(ds);

  // gridsearch
  auto* gs = app.add_subcommand("gridsearch", "cross-validated lambda grid");
  MethodFlags g_method;
  DataFlags g_data;
  std::string g_lambdas;
  g_method.add(gs, false);
  g_data.add(gs);
  gs->add_option("--lambdas", g_lambdas, "comma-separated lambda grid")->required();
  add_out(gs);

  // replay
  auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  std::string p_manifest;
  rp->add_option("--manifest", p_manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  add_out(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (*gen) {
      const json data = {{"phantom", g_phantom},        {"height", g_size}, {"width", g_size},
                         {"masks", g_masks},            {"photons", number(parse_double(g_photons))},
                         {"phantom_seed", g_phantom_seed}, {"seed", g_seed}};
      execute("generate", {{"data", data}}, out);
    } else if (*rec) {
      json cfg = {{"method", r_method.build()}};
      r_data.resolve(cfg, r_reference, true);
      execute("reconstruct", cfg, out);
    } else if (*ev) {
      execute("evaluate", {{"image", absolute(e_image)}, {"reference", absolute(e_reference)}, {"hann", e_hann}},
              out);
    } else if (*sw) {
      json cfg;
      if (!s_config.empty()) {
        cfg = read_json_file(s_config);
      } else {
        json levels = json::array();
        for (const auto& l : split_list(s_levels)) levels.push_back(number(parse_double(l)));
        cfg = {{"data", {{"phantom", s_phantom}, {"size", s_size}, {"masks", s_masks}, {"seed", s_seed}}},
               {"photon_levels", levels},
               {"repeats", s_repeats},
               {"methods", method_list(s_methods, s_epochs)}};
      }
      execute("sweep", cfg, out);
    } else if (*ds) {
      json cfg;
      if (!d_config.empty()) {
        cfg = read_json_file(d_config);
      } else {
        cfg = {{"data", {{"phantom", d_phantom}, {"size", d_size}, {"masks", d_masks}, {"seed", d_seed}}},
               {"methods", method_list(d_methods, d_epochs)},
               {"metric", d_metric},
               {"pb_photons_per_pixel", d_pb},
               {"repeats", d_repeats}};
      }
      execute("dose", cfg, out);
    } else if (*gs) {
      json lambdas = json::array();
      for (const auto& l : split_list(g_lambdas)) lambdas.push_back(number(parse_double(l)));
      if (lambdas.empty()) usage_error("--lambdas is empty");
      json cfg = {{"method", g_method.build()}, {"lambdas", lambdas}};
      g_data.resolve(cfg, "", false);
      execute("gridsearch", cfg, out);
    } else if (*rp) {
      const json m = read_json_file(p_manifest);
      if (!m.is_object() || !m.contains("command") || !m.contains("config") ||
          !kCommands.count(m.at("command").get<std::string>()))
        usage_error("'" + p_manifest + "' is not a ghostkit manifest");
      execute(m.at("command"), m.at("config"), out);
    }
  } catch (const CliError& e) {
    std::cerr << "ghostkit: error: " << e.what() << "\n";
    return e.code;
  } catch (const json::exception& e) {
    std::cerr << "ghostkit: error: bad configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "ghostkit: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "ghostkit: error: " << e.what() << "\n";
    return kExitCompute;
  }
  return 0;
}
