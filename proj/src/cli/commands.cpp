#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "madv/attack.hpp"
#include "madv/cli.hpp"
#include "madv/evalkit.hpp"
#include "madv/io.hpp"
#include "madv/nets.hpp"
#include "madv/synthdata.hpp"

namespace madv::cli {
namespace fs = std::filesystem;

namespace {

/// Collects inputs and outputs of one command and writes its manifest.
class Session {
 public:
  Session(std::string command, const RunConfig& config)
      : command_(std::move(command)), config_(config), root_(run_directory(config)) {}

  const fs::path& root() const { return root_; }
  fs::path path(const fs::path& rel) const { return root_ / rel; }

  fs::path input(const fs::path& rel) {
    const fs::path p = path(rel);
    if (!fs::exists(p)) throw std::runtime_error("missing input " + p.string() + " (run the producing command first)");
    inputs_.insert(rel.generic_string());
    return p;
  }
  void external_input(const std::string& what) { inputs_.insert(what); }

  void write(const fs::path& rel, std::string_view bytes) {
    io::write_file_atomic(path(rel), bytes);
    outputs_.insert(rel.generic_string());
  }
  void save(const fs::path& rel, const std::vector<NamedTensor>& tensors) { write(rel, io::encode_checkpoint(tensors)); }
  void ppm(const fs::path& rel, const Tensor& img) { write(rel, io::encode_ppm(img)); }
  void pgm(const fs::path& rel, const Tensor& img) { write(rel, io::encode_pgm(img)); }
  void wav(const fs::path& rel, const Tensor& w) { write(rel, io::encode_wav(w)); }

  void finish() {
    std::ostringstream m;
    m << "command = " << command_ << "\n";
    m << "config_hash = " << config_.hash() << "\n";
    for (const char* key : {"seed", "data_seed", "classifier_seed", "gan_seed"}) {
      m << key << " = " << config_.get(key) << "\n";
    }
    if (!config_.get("reference_dir").empty()) m << "reference_dir = " << config_.get("reference_dir") << "\n";
    for (const auto& i : inputs_) m << "input = " << i << "\n";
    for (const auto& o : outputs_) m << "output = " << o << "\n";
    m << "[config]\n" << config_.serialize();
    io::write_file_atomic(path(fs::path("manifests") / (command_ + ".manifest")), m.str());
  }

 private:
  std::string command_;
  const RunConfig& config_;
  fs::path root_;
  std::set<std::string> inputs_;
  std::set<std::string> outputs_;
};

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(9) << v;
  return o.str();
}

std::string padded(std::size_t v, int width = 4) {
  std::ostringstream o;
  o << std::setw(width) << std::setfill('0') << v;
  return o.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(io::read_file(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
  std::istringstream in(io::read_file(p));
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

bool audio_domain(const RunConfig& c) {
  const auto& d = c.get("domain");
  if (d != "image" && d != "audio") throw ConfigError("domain must be image or audio, got '" + d + "'");
  return d == "audio";
}

attack::Method method_of(const RunConfig& c) {
  const auto& m = c.get("method");
  if (m == "pepg") return attack::Method::pepg;
  if (m == "patch") return attack::Method::patch;
  throw ConfigError("method must be pepg or patch, got '" + m + "'");
}

attack::GeneratorLoss generator_loss_of(const RunConfig& c) {
  const auto& m = c.get("generator_loss");
  if (m == "minimax") return attack::GeneratorLoss::minimax;
  if (m == "non_saturating") return attack::GeneratorLoss::non_saturating;
  throw ConfigError("generator_loss must be minimax or non_saturating, got '" + m + "'");
}

std::size_t patch_size_of(const RunConfig& c) {
  const std::size_t s = c.count("patch_size");
  if (s == 0 || s % 4 != 0 || s > synthdata::kGlyphSide) {
    throw ConfigError("patch_size must be a positive multiple of 4 no larger than the image");
  }
  return s;
}

fs::path bugs_dir(const RunConfig& c) { return fs::path("data") / ("bugs_s" + std::to_string(patch_size_of(c))); }

fs::path gan_path(const RunConfig& c) {
  if (audio_domain(c)) return "models/audio_gan.ckpt";
  return fs::path("models") / ("gan_s" + std::to_string(patch_size_of(c)) + ".ckpt");
}

fs::path classifier_path(const RunConfig& c) {
  return audio_domain(c) ? "models/audio_classifier.ckpt" : "models/classifier.ckpt";
}

std::string attack_id(const RunConfig& c) {
  std::string id = c.get("domain") + "_" + c.get("method");
  if (!audio_domain(c)) id += "_s" + std::to_string(patch_size_of(c));
  id += "_src" + c.get("source_class") + "_i" + c.get("image_index") + "_t" + c.get("target") + "_seed" +
        c.get("seed");
  return id;
}

// ------------------------------------------------------------ datasets

Dataset load_dataset(Session& s, const fs::path& dir, bool audio) {
  Dataset ds;
  for (const auto& row : read_csv(s.input(dir / "index.csv"))) {
    if (row.size() != 3) throw std::runtime_error("malformed dataset index in " + dir.string());
    const fs::path file = s.path(dir / row[0]);
    Example ex{audio ? io::read_wav(file) : io::read_ppm(file), static_cast<std::size_t>(std::stoul(row[1]))};
    ds.classes = std::max(ds.classes, ex.label + 1);
    (row[2] == "train" ? ds.train : ds.test).push_back(std::move(ex));
  }
  if (ds.train.empty()) throw std::runtime_error("dataset in " + dir.string() + " has no training samples");
  return ds;
}

std::vector<Tensor> load_samples(Session& s, const fs::path& dir, bool audio) {
  std::vector<Tensor> out;
  for (const auto& row : read_csv(s.input(dir / "index.csv"))) {
    const fs::path file = s.path(dir / row.at(0));
    out.push_back(audio ? io::read_wav(file) : io::read_ppm(file));
  }
  if (out.empty()) throw std::runtime_error("no samples in " + dir.string());
  return out;
}

void write_dataset(Session& s, const fs::path& dir, const Dataset& ds, bool audio) {
  std::string index = "file,label,split\n";
  auto emit = [&](const std::vector<Example>& list, const std::string& split) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string name =
          split + "_" + padded(i) + "_c" + std::to_string(list[i].label) + (audio ? ".wav" : ".ppm");
      if (audio) {
        s.wav(dir / name, list[i].input);
      } else {
        s.ppm(dir / name, list[i].input);
      }
      index += name + "," + std::to_string(list[i].label) + "," + split + "\n";
    }
  };
  emit(ds.train, "train");
  emit(ds.test, "test");
  s.write(dir / "index.csv", index);
}

void write_samples(Session& s, const fs::path& dir, const std::vector<Tensor>& items, bool audio,
                   const std::string& stem) {
  std::string index = "file\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string name = stem + "_" + padded(i) + (audio ? ".wav" : ".ppm");
    if (audio) {
      s.wav(dir / name, items[i]);
    } else {
      s.ppm(dir / name, items[i]);
    }
    index += name + "\n";
  }
  s.write(dir / "index.csv", index);
}

std::vector<Tensor> references(Session& s, const RunConfig& c, std::ostream& out) {
  if (audio_domain(c)) return load_samples(s, "data/chirps", true);
  const std::string dir = c.get("reference_dir");
  if (dir.empty()) return load_samples(s, bugs_dir(c), false);
  std::vector<std::string> warnings;
  auto refs = synthdata::load_reference_dir(dir, patch_size_of(c), &warnings);
  for (const auto& w : warnings) out << "warning: " << w << "\n";
  s.external_input("reference_dir:" + dir);
  return refs;
}

// --------------------------------------------------------------- models

std::vector<NamedTensor> prefixed(const nets::Network& net, const std::string& prefix) {
  std::vector<NamedTensor> out;
  for (const auto& p : net.parameters()) out.push_back({prefix + p.name, p.tensor});
  return out;
}

void load_prefixed(nets::Network& net, const std::vector<NamedTensor>& all, const std::string& prefix) {
  std::vector<NamedTensor> mine;
  for (const auto& t : all) {
    if (t.name.rfind(prefix, 0) == 0) mine.push_back({t.name.substr(prefix.size()), t.tensor});
  }
  net.load_parameters(mine);
}

std::unique_ptr<nets::Network> load_classifier(Session& s, const RunConfig& c) {
  const auto tensors = io::load_checkpoint(s.input(classifier_path(c)));
  std::unique_ptr<nets::Network> net;
  if (audio_domain(c)) {
    net = std::make_unique<nets::AudioClassifier>(synthdata::kCommandLength, synthdata::kCommandClasses, 0);
  } else {
    net = std::make_unique<nets::Classifier>(nets::ClassifierSpec{}, 0);
  }
  net->load_parameters(tensors);
  net->set_trainable(false);
  return net;
}

struct GanNets {
  std::unique_ptr<nets::Network> g;
  std::unique_ptr<nets::Network> d;
};

GanNets fresh_gan(const RunConfig& c) {
  const std::uint64_t seed = c.seed("gan_seed");
  if (audio_domain(c)) {
    return {std::make_unique<nets::AudioGenerator>(synthdata::kChirpLength, derive_seed(seed, 1)),
            std::make_unique<nets::AudioDiscriminator>(synthdata::kChirpLength, derive_seed(seed, 2))};
  }
  const std::size_t side = patch_size_of(c);
  return {std::make_unique<nets::Generator>(side, derive_seed(seed, 1)),
          std::make_unique<nets::Discriminator>(side, derive_seed(seed, 2))};
}

attack::AttackConfig attack_config(const RunConfig& c) {
  attack::AttackConfig a;
  a.target = c.count("target");
  a.patch_size = audio_domain(c) ? synthdata::kChirpLength : patch_size_of(c);
  a.batch = c.count("batch");
  a.alpha = c.real("alpha");
  a.max_iterations = c.count("max_iterations");
  a.quota = c.count("quota");
  a.seed = c.seed("seed");
  a.method = method_of(c);
  a.generator_loss = generator_loss_of(c);
  a.gan_lr = c.real("gan_lr");
  a.gan_beta1 = c.real("gan_beta1");
  a.beta_scale = c.real("beta_mu_scale");
  a.beta_sigma_ratio = c.real("beta_sigma_ratio");
  a.sigma_min = c.real("sigma_min");
  a.audio_level = c.real("audio_level");
  a.audio_level_max = c.real("audio_level_max");
  return a;
}

Tensor attacked_input(Session& s, const RunConfig& c, std::size_t* label) {
  const bool audio = audio_domain(c);
  const Dataset ds = load_dataset(s, audio ? "data/audio" : "data/glyphs", audio);
  const std::size_t source = c.count("source_class");
  std::size_t seen = 0;
  for (const auto& ex : ds.test) {
    if (ex.label != source) continue;
    if (seen++ == c.count("image_index")) {
      if (label) *label = ex.label;
      return ex.input;
    }
  }
  throw ConfigError("no test sample " + c.get("image_index") + " for class " + c.get("source_class"));
}

// ------------------------------------------------------------- commands

void gen_data(const RunConfig& c, std::ostream& out) {
  Session s("gen-data", c);
  const std::uint64_t seed = c.seed("data_seed");
  if (audio_domain(c)) {
    const auto corpus = synthdata::gen_audio(c.count("audio_per_class"), c.count("chirp_count"), seed);
    write_dataset(s, "data/audio", corpus.commands, true);
    write_samples(s, "data/chirps", corpus.chirps, true, "chirp");
    out << "audio: " << corpus.commands.train.size() << " train, " << corpus.commands.test.size() << " test, "
        << corpus.chirps.size() << " chirps\n";
  } else {
    const Dataset glyphs = synthdata::gen_glyphs(c.count("glyphs_per_class"), seed);
    write_dataset(s, "data/glyphs", glyphs, false);
    const auto bugs = synthdata::gen_bugs(c.count("bug_count"), patch_size_of(c), derive_seed(seed, 0xB06));
    write_samples(s, bugs_dir(c), bugs, false, "bug");
    out << "glyphs: " << glyphs.train.size() << " train, " << glyphs.test.size() << " test; " << bugs.size()
        << " bugs of side " << patch_size_of(c) << "\n";
  }
  s.finish();
}

void train_classifier(const RunConfig& c, std::ostream& out) {
  Session s("train-classifier", c);
  const bool audio = audio_domain(c);
  const Dataset ds = load_dataset(s, audio ? "data/audio" : "data/glyphs", audio);
  nets::TrainOptions opt;
  opt.epochs = c.count("classifier_epochs");
  opt.lr = c.real("classifier_lr");
  opt.batch = c.count("classifier_batch");
  opt.seed = c.seed("classifier_seed");
  std::unique_ptr<nets::Network> net;
  if (audio) {
    net = std::make_unique<nets::AudioClassifier>(ds.train.front().input.dim(1), ds.classes, opt.seed);
  } else {
    const auto& x = ds.train.front().input;
    net = std::make_unique<nets::Classifier>(nets::ClassifierSpec{x.dim(0), x.dim(1), x.dim(2), ds.classes}, opt.seed);
  }
  const auto report = nets::fit(*net, ds, opt);
  s.save(classifier_path(c), net->parameters());
  std::string text = "test_accuracy = " + fmt(report.test_accuracy) + "\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    text += "epoch_loss." + std::to_string(e) + " = " + fmt(report.epoch_loss[e]) + "\n";
  }
  s.write(fs::path("reports") / (audio ? "audio_classifier.txt" : "classifier.txt"), text);
  out << "held-out accuracy " << report.test_accuracy << "\n";
  s.finish();
}

void pretrain_gan(const RunConfig& c, std::ostream& out) {
  Session s("pretrain-gan", c);
  const auto refs = references(s, c, out);
  GanNets gan = fresh_gan(c);
  attack::GanOptions opt;
  opt.iterations = c.count("gan_iterations");
  opt.batch = c.count("gan_batch");
  opt.lr = c.real("gan_lr");
  opt.beta1 = c.real("gan_beta1");
  opt.generator_loss = generator_loss_of(c);
  opt.seed = c.seed("gan_seed");
  const auto report = attack::train_gan(*gan.g, *gan.d, refs, opt);
  auto tensors = prefixed(*gan.g, "G.");
  for (auto& t : prefixed(*gan.d, "D.")) tensors.push_back(std::move(t));
  s.save(gan_path(c), tensors);
  const double acc = attack::discriminator_accuracy(*gan.g, *gan.d, refs, 128, derive_seed(opt.seed, 0xACC));
  std::string text = "iterations = " + std::to_string(opt.iterations) + "\nd_accuracy = " + fmt(acc) + "\n";
  if (!report.d_loss.empty()) {
    text += "final_d_loss = " + fmt(report.d_loss.back()) + "\nfinal_g_loss = " + fmt(report.g_loss.back()) + "\n";
  }
  s.write(gan_path(c).replace_extension(".txt").filename().string().insert(0, "reports/"), text);
  const std::size_t latent = gan.g->input_shape().at(0);
  Rng rng(derive_seed(opt.seed, 0x5A));
  for (std::size_t i = 0; i < 4; ++i) {
    const Tensor sample = gan.g->infer(attack::sample_latent(latent, rng));
    const fs::path rel = fs::path("samples") / (gan_path(c).stem().string() + "_" + std::to_string(i));
    if (audio_domain(c)) {
      s.wav(rel.string() + ".wav", sample);
    } else {
      s.ppm(rel.string() + ".ppm", sample);
    }
  }
  out << "discriminator accuracy " << acc << "\n";
  s.finish();
}

std::string placement_cells(const attack::Placement& p) {
  if (const auto* t = std::get_if<overlay::PlacementParams>(&p)) return fmt(t->cx) + "," + fmt(t->cy) + "," + fmt(t->phi);
  const auto& a = std::get<overlay::AudioPlacement>(p);
  return std::to_string(a.offset) + "," + fmt(a.gain);
}

void run_attack_command(const RunConfig& c, std::ostream& out) {
  Session s("attack", c);
  const bool audio = audio_domain(c);
  const auto f = load_classifier(s, c);
  const auto refs = references(s, c, out);
  std::size_t label = 0;
  const Tensor input = attacked_input(s, c, &label);
  GanNets gan = fresh_gan(c);
  if (!c.flag("cold_start")) {
    const auto tensors = io::load_checkpoint(s.input(gan_path(c)));
    load_prefixed(*gan.g, tensors, "G.");
    load_prefixed(*gan.d, tensors, "D.");
  }
  const auto cfg = attack_config(c);
  const auto result = audio ? attack::run_audio_attack(*f, *gan.g, *gan.d, input, refs, cfg)
                            : attack::run_attack(*f, *gan.g, *gan.d, input, refs, cfg);
  const auto& rep = result.report;
  const fs::path dir = fs::path("attacks") / attack_id(c);

  std::ostringstream r;
  r << "domain = " << c.get("domain") << "\nmethod = " << c.get("method") << "\npatch_size = " << cfg.patch_size
    << "\nseed = " << cfg.seed << "\nsource_class = " << label << "\nimage_index = " << c.get("image_index")
    << "\ntarget = " << cfg.target << "\nsuccess = " << (rep.success ? "true" : "false")
    << "\niterations = " << rep.iterations << "\ncollected = " << rep.collected << "\nquota = " << cfg.quota << "\n";
  if (result.pepg_state) {
    for (std::size_t j = 0; j < result.pepg_state->dims(); ++j) {
      r << "mu." << j << " = " << fmt(result.pepg_state->mu[j]) << "\nsigma." << j << " = "
        << fmt(result.pepg_state->sigma[j]) << "\n";
    }
  }
  s.write(dir / "report.txt", r.str());

  std::ostringstream t;
  t << "iteration,d_loss,g_loss,lf_loss";
  if (!rep.mu_trace.empty()) {
    for (std::size_t j = 0; j < rep.mu_trace.front().size(); ++j) t << ",mu" << j;
    for (std::size_t j = 0; j < rep.sigma_trace.front().size(); ++j) t << ",sigma" << j;
  }
  t << "\n";
  for (std::size_t i = 0; i < rep.iterations; ++i) {
    t << i << "," << fmt(rep.d_loss[i]) << "," << fmt(rep.g_loss[i]) << "," << fmt(rep.lf_loss[i]);
    if (!rep.mu_trace.empty()) {
      for (double v : rep.mu_trace[i]) t << "," << fmt(v);
      for (double v : rep.sigma_trace[i]) t << "," << fmt(v);
    }
    t << "\n";
  }
  s.write(dir / "traces.csv", t.str());

  std::string rows = audio ? "index,iteration,confidence,offset,gain\n" : "index,iteration,confidence,cx,cy,phi\n";
  std::vector<NamedTensor> tensors;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& rec = result.records[i];
    rows += std::to_string(i) + "," + std::to_string(rec.iteration) + "," + fmt(rec.confidence) + "," +
            placement_cells(rec.placement) + "\n";
    tensors.push_back({"record." + std::to_string(i) + ".patch", rec.patch});
    tensors.push_back({"record." + std::to_string(i) + ".composite", rec.composite});
    const std::string stem = "record_" + padded(i, 2);
    if (audio) {
      s.wav(dir / (stem + ".wav"), rec.composite);
      s.wav(dir / (stem + "_snippet.wav"), rec.patch);
    } else {
      s.ppm(dir / (stem + ".ppm"), rec.composite);
      s.ppm(dir / (stem + "_patch.ppm"), rec.patch);
    }
  }
  s.write(dir / "records.csv", rows);
  s.save(dir / "records.ckpt", tensors);
  if (result.pepg_state) s.save(dir / "state.ckpt", pepg::state_tensors(*result.pepg_state));

  out << attack_id(c) << ": " << (rep.success ? "success" : "budget exhausted") << " after " << rep.iterations
      << " iterations, " << rep.collected << " collected\n";
  s.finish();
}

struct StoredAttack {
  std::string id;
  std::map<std::string, std::string> report;
  std::vector<Tensor> patches;
  std::vector<std::vector<std::string>> rows;
};

StoredAttack load_attack(Session& s, const std::string& id) {
  StoredAttack a;
  a.id = id;
  const fs::path dir = fs::path("attacks") / id;
  a.report = read_kv(s.input(dir / "report.txt"));
  a.rows = read_csv(s.input(dir / "records.csv"));
  const auto tensors = io::load_checkpoint(s.input(dir / "records.ckpt"));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const std::string name = "record." + std::to_string(i) + ".patch";
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
    if (it == tensors.end()) throw std::runtime_error("records.ckpt lacks " + name);
    a.patches.push_back(it->tensor);
  }
  return a;
}

std::vector<std::string> attack_ids(const Session& s) {
  std::vector<std::string> ids;
  const fs::path dir = s.path("attacks");
  if (!fs::is_directory(dir)) return ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "report.txt")) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void eval_robustness(const RunConfig& c, std::ostream& out) {
  Session s("eval-robustness", c);
  if (audio_domain(c)) throw ConfigError("eval-robustness applies to the image domain");
  const auto f = load_classifier(s, c);
  const Dataset ds = load_dataset(s, "data/glyphs", false);
  std::vector<evalkit::RelocationCase> cases;
  for (const auto& id : attack_ids(s)) {
    if (id.rfind("image_", 0) != 0) continue;
    const auto a = load_attack(s, id);
    RunConfig sub = c;
    sub.set("source_class", a.report.at("source_class"));
    sub.set("image_index", a.report.at("image_index"));
    const Tensor base = attacked_input(s, sub, nullptr);
    for (const auto& p : a.patches) {
      cases.push_back({p, base, static_cast<std::size_t>(std::stoul(a.report.at("target"))), a.report.at("method")});
    }
  }
  if (cases.empty()) throw std::runtime_error("no image attack records under " + s.path("attacks").string());
  Rng rng(derive_seed(c.seed("seed"), 0x4E10));
  const auto report = evalkit::relocation_test(evalkit::logits_of(*f), cases, c.count("relocations"), rng);
  std::ostringstream o;
  o << "trials_per_record = " << report.trials_per_record << "\nrecords = " << cases.size()
    << "\nrate = " << fmt(report.rate) << "\n";
  for (const auto& g : report.groups) {
    o << g.name << ".records = " << g.records << "\n" << g.name << ".successes = " << g.successes << "\n"
      << g.name << ".rate = " << fmt(g.rate) << "\n";
  }
  s.write("eval/robustness.txt", o.str());
  out << o.str();
  s.finish();
}

StoredAttack current_attack(Session& s, const RunConfig& c) {
  const auto a = load_attack(s, attack_id(c));
  if (a.patches.empty()) throw std::runtime_error("attack " + attack_id(c) + " has no records");
  return a;
}

void heatmap(const RunConfig& c, std::ostream& out) {
  Session s("heatmap", c);
  if (audio_domain(c)) throw ConfigError("heatmap applies to the image domain");
  const auto f = load_classifier(s, c);
  const auto a = current_attack(s, c);
  const Tensor image = attacked_input(s, c, nullptr);
  evalkit::HeatmapOptions opt;
  opt.stride = c.count("heatmap_stride");
  opt.sweep_rotations = c.flag("heatmap_sweep");
  opt.patch_id = a.id + "/record_" + padded(a.patches.size() - 1, 2);
  const bool has_mu = a.report.count("mu.0") > 0;
  if (has_mu) opt.phi = std::stod(a.report.at("mu.2"));
  const auto map = evalkit::confidence_heatmap(evalkit::logits_of(*f), image, a.patches.back(),
                                               std::stoul(a.report.at("target")), opt);
  const fs::path dir = fs::path("eval") / ("heatmap_" + a.id);
  s.pgm(dir.string() + ".pgm", map.to_tensor());
  s.write(dir.string() + ".csv", evalkit::heatmap_csv(map));
  std::ostringstream o;
  o << "rows = " << map.rows << "\ncols = " << map.cols << "\nstride = " << map.stride << "\nphi = " << fmt(opt.phi)
    << "\npatch = " << map.patch_id << "\n";
  if (has_mu) {
    const auto [r, col] = map.cell_of(std::stod(a.report.at("mu.0")), std::stod(a.report.at("mu.1")));
    o << "mu_cell_value = " << fmt(map.at(r, col)) << "\nmu_percentile = " << fmt(map.percentile_rank(map.at(r, col)))
      << "\n";
  }
  s.write(dir.string() + ".txt", o.str());
  out << o.str();
  s.finish();
}

void cam(const RunConfig& c, std::ostream& out) {
  Session s("cam", c);
  if (audio_domain(c)) throw ConfigError("cam applies to the image domain");
  const auto f = load_classifier(s, c);
  const auto* classifier = dynamic_cast<const nets::Classifier*>(f.get());
  const auto a = current_attack(s, c);
  const Tensor image = attacked_input(s, c, nullptr);
  const std::size_t cls = nets::predict(*f, image);
  const Tensor heat = nets::grad_cam(*classifier, image, cls);
  const std::size_t side = a.patches.front().dim(1);
  const auto prior = overlay::PlacementPrior::for_patch(side, image.dim(1), image.dim(2));
  Rng rng(derive_seed(c.seed("seed"), 0xCA3));
  double chosen = 0.0, random = 0.0;
  const std::size_t trials = std::max<std::size_t>(1, c.count("cam_trials"));
  for (std::size_t i = 0; i < trials; ++i) {
    const auto& row = a.rows[i % a.rows.size()];
    const overlay::PlacementParams t{std::stod(row.at(3)), std::stod(row.at(4)), std::stod(row.at(5))};
    chosen += evalkit::cam_overlap(heat, overlay::footprint_mask(side, image.dim(1), image.dim(2), t));
    random += evalkit::cam_overlap(
        heat, overlay::footprint_mask(side, image.dim(1), image.dim(2), overlay::sample_theta(prior, rng)));
  }
  const fs::path dir = fs::path("eval") / ("cam_" + a.id);
  s.pgm(dir.string() + ".pgm", heat);
  std::ostringstream o;
  o << "class = " << cls << "\ntrials = " << trials << "\nattack_overlap = " << fmt(chosen / trials)
    << "\nrandom_overlap = " << fmt(random / trials) << "\n";
  s.write(dir.string() + ".txt", o.str());
  out << o.str();
  s.finish();
}

void report(const RunConfig& c, std::ostream& out) {
  Session s("report", c);
  std::vector<evalkit::RunSummary> runs;
  for (const auto& id : attack_ids(s)) {
    const auto kv = read_kv(s.input(fs::path("attacks") / id / "report.txt"));
    if (kv.at("domain") != c.get("domain")) continue;
    evalkit::RunSummary r;
    r.method = kv.at("method");
    r.patch_size = std::stoul(kv.at("patch_size"));
    r.seed = std::stoull(kv.at("seed"));
    r.success = kv.at("success") == "true";
    r.iterations = std::stoul(kv.at("iterations"));
    runs.push_back(r);
  }
  if (runs.empty()) throw std::runtime_error("no attack reports under " + s.path("attacks").string());
  const auto table = evalkit::aggregate_report(runs);
  s.write("eval/summary.csv", table.csv);
  s.write("eval/summary.txt", table.text);
  out << table.text;
  s.finish();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-data", "train-classifier", "pretrain-gan", "attack",
                                                 "eval-robustness", "heatmap", "cam", "report"};
  return names;
}

void run_command(const std::string& command, const RunConfig& config, std::ostream& out) {
  if (command == "gen-data") return gen_data(config, out);
  if (command == "train-classifier") return train_classifier(config, out);
  if (command == "pretrain-gan") return pretrain_gan(config, out);
  if (command == "attack") return run_attack_command(config, out);
  if (command == "eval-robustness") return eval_robustness(config, out);
  if (command == "heatmap") return heatmap(config, out);
  if (command == "cam") return cam(config, out);
  if (command == "report") return report(config, out);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace madv::cli
