#include "masklab/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "masklab/error.hpp"

namespace masklab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KvConfig KvConfig::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  check(in.good(), "cannot open config file " + file.string());
  KvConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    check(eq != std::string::npos && eq > 0,
          "config line " + std::to_string(lineno) + " is not key=value: " + t);
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void KvConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void KvConfig::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  check(eq != std::string::npos && eq > 0, "override is not key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string KvConfig::get_str(const std::string& key, const std::string& def) {
  auto it = kv_.find(key);
  if (it == kv_.end()) it = kv_.emplace(key, def).first;
  return it->second;
}

long long KvConfig::get_int(const std::string& key, long long def) {
  const std::string s = get_str(key, std::to_string(def));
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  check(errno == 0 && end != s.c_str() && *end == '\0', "config key " + key + " is not an integer: " + s);
  return v;
}

double KvConfig::get_real(const std::string& key, double def) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", def);
  const std::string s = get_str(key, buf);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  check(errno == 0 && end != s.c_str() && *end == '\0', "config key " + key + " is not a number: " + s);
  return v;
}

bool KvConfig::get_bool(const std::string& key, bool def) {
  const std::string s = get_str(key, def ? "true" : "false");
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail("config key " + key + " is not a boolean: " + s);
}

std::uint64_t KvConfig::get_seed(const std::string& key, std::uint64_t def) {
  const std::string s = get_str(key, std::to_string(def));
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  check(errno == 0 && end != s.c_str() && *end == '\0', "config key " + key + " is not a seed: " + s);
  return v;
}

std::string KvConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Per-task defaults at the two scales. Paper values follow the published
// architecture/training/schedule tables; desk values shrink every budget so
// a full experiment fits a single workstation core, with the addition and
// sudoku desk presets fixed at 8 digits / 2x64 / 20k iters and 50k iters
// respectively.
struct Presets {
  int layers, heads, embed;
  long long iters, batch;
  double lr;
  int k_start, k_end;
  long long train, test, stratum;
  long long paper_test;  // paper-scale natural test size, for the shrink factor
};

Presets preset_for(Task task, const std::string& preset) {
  const bool paper = preset == "paper";
  check(paper || preset == "desk", "unknown preset: " + preset);
  switch (task) {
    case Task::addition:
      return paper ? Presets{2, 2, 128, 300000, 256, 1e-3, 3, 16, 20000, 10000, 500, 10000}
                   : Presets{2, 2, 64, 20000, 32, 1e-3, 3, 8, 20000, 1000, 500, 10000};
    case Task::maze:
      return paper ? Presets{3, 3, 192, 50000, 256, 3e-4, 10, 40, 10000, 5000, 300, 5000}
                   : Presets{3, 3, 96, 5000, 32, 3e-4, 4, 12, 4000, 500, 0, 5000};
    case Task::listops:
      return paper ? Presets{3, 3, 192, 300000, 256, 3e-4, 2, 10, 20000, 6000, 0, 6000}
                   : Presets{2, 2, 64, 10000, 32, 3e-4, 2, 6, 4000, 600, 0, 6000};
    case Task::countdown:
      return paper ? Presets{12, 12, 384, 200000, 256, 3e-4, 4, 20, 400000, 1000, 0, 1000}
                   : Presets{4, 4, 128, 20000, 32, 3e-4, 4, 10, 20000, 200, 0, 1000};
    case Task::sudoku:
      return paper ? Presets{8, 8, 256, 300000, 256, 3e-4, 8, 40, 570000, 3300, 0, 3300}
                   : Presets{4, 4, 128, 50000, 32, 3e-4, 8, 20, 20000, 330, 0, 3300};
  }
  fail("preset_for: bad task");
}

}  // namespace

int ExperimentConfig::prompt_len() const {
  switch (task) {
    case Task::addition: return 2 * addition_digits + 2;
    case Task::maze: return (2 * maze_rows + 1) * (2 * maze_cols + 1) + 1;
    case Task::listops: return 60;
    case Task::countdown: return 16;
    case Task::sudoku: return 82;
  }
  fail("prompt_len: bad task");
}

int ExperimentConfig::answer_len() const {
  switch (task) {
    case Task::addition: return addition_digits + 1;
    case Task::maze: return (2 * maze_rows + 1) * (2 * maze_cols + 1);
    case Task::listops: return 20;
    case Task::countdown: return 40;
    case Task::sudoku: return 81;
  }
  fail("answer_len: bad task");
}

ExperimentConfig resolve_config(KvConfig kv) {
  ExperimentConfig cfg;
  check(kv.has("task"), "config needs a task (addition|maze|listops|countdown|sudoku)");
  cfg.task = parse_task(kv.get_str("task", ""));
  cfg.preset = kv.get_str("preset", "desk");
  const Presets p = preset_for(cfg.task, cfg.preset);

  cfg.train.scheme = parse_scheme(kv.get_str("scheme", "random"));
  cfg.train.papl.alpha = kv.get_real("papl.alpha", 1.0);
  cfg.train.papl.tau = kv.get_real("papl.tau", 1.0);
  cfg.train.papl.validate();
  cfg.train.k_start = static_cast<int>(kv.get_int("puma.k_start", p.k_start));
  cfg.train.k_end = static_cast<int>(kv.get_int("puma.k_end", p.k_end));

  cfg.model.layers = static_cast<int>(kv.get_int("model.layers", p.layers));
  cfg.model.heads = static_cast<int>(kv.get_int("model.heads", p.heads));
  cfg.model.embed_dim = static_cast<int>(kv.get_int("model.embed_dim", p.embed));

  cfg.train.batch = static_cast<int>(kv.get_int("train.batch", p.batch));
  // The streaming buffer holds one chain per batch slot.
  const long long buffer = kv.get_int("puma.buffer_size", cfg.train.batch);
  check(buffer == cfg.train.batch, "puma.buffer_size must equal train.batch (one chain per slot)");
  cfg.train.iters = kv.get_int("train.iters", p.iters);
  cfg.train.opt.lr = static_cast<float>(kv.get_real("train.lr", p.lr));
  cfg.train.eval_cadence = kv.get_int("train.eval_cadence", 0);
  cfg.train.checkpoint_cadence = kv.get_int("train.checkpoint_cadence", 0);
  cfg.eval_subset = static_cast<int>(kv.get_int("train.eval_subset", 200));

  cfg.seed_data = kv.get_seed("seed.data", 1);
  cfg.train.seed_model = kv.get_seed("seed.model", 2);
  cfg.train.seed_train = kv.get_seed("seed.train", 3);
  cfg.seed_decode = kv.get_seed("seed.decode", 4);

  cfg.gen_train = kv.get_int("gen.train", p.train);
  cfg.gen_test = kv.get_int("gen.test", p.test);
  cfg.gen_stratum = kv.get_int("gen.stratum", p.stratum);
  cfg.addition_digits = static_cast<int>(kv.get_int("gen.addition_digits", cfg.preset == "paper" ? 32 : 8));
  {
    // Planted min-chain lengths for the addition stratum files; defaults cover
    // short/medium/long up to one below the digit count (a full-width chain
    // forces a constant answer).
    const int n = cfg.addition_digits;
    std::string def;
    for (int c : {n / 4, n / 2, 3 * n / 4, n - 1}) {
      if (c < 1) continue;
      if (!def.empty()) def += ",";
      def += std::to_string(c);
    }
    for (const std::string& item : split_list(kv.get_str("gen.addition_strata", def))) {
      const int v = std::stoi(item);
      check(v >= 1 && v <= n, "gen.addition_strata entry out of range: " + item);
      cfg.addition_strata.push_back(v);
    }
    std::sort(cfg.addition_strata.begin(), cfg.addition_strata.end());
    cfg.addition_strata.erase(std::unique(cfg.addition_strata.begin(), cfg.addition_strata.end()),
                              cfg.addition_strata.end());
  }
  cfg.maze_rows = static_cast<int>(kv.get_int("gen.maze_rows", cfg.preset == "paper" ? 10 : 5));
  cfg.maze_cols = static_cast<int>(kv.get_int("gen.maze_cols", cfg.preset == "paper" ? 10 : 5));
  cfg.listops_test_depth_max = static_cast<int>(kv.get_int("gen.listops_test_depth_max", 6));
  cfg.countdown_subsample = kv.get_bool("gen.countdown_subsample", true);
  cfg.sudoku_csv = kv.get_str("gen.sudoku_csv", "");
  cfg.sudoku_test_mode =
      kv.get_str("gen.sudoku_test_mode", cfg.preset == "paper" ? "tiered" : "natural");
  {
    const std::string def = cfg.preset == "paper" ? "1000,1000,500,200,100,500" : "100,100,50,20,10,50";
    const auto items = split_list(kv.get_str("gen.sudoku_test_tiers", def));
    check(items.size() == 6, "gen.sudoku_test_tiers needs six comma-separated counts");
    for (const auto& item : items) cfg.sudoku_test_tiers.push_back(std::stol(item));
  }

  cfg.policy = kv.get_str("decode.policy", "confidence");
  cfg.data_dir = kv.get_str("data.dir", std::string("runs/") + task_name(cfg.task) + "/data");
  {
    std::string scheme_tag = scheme_name(cfg.train.scheme);
    if (cfg.train.scheme == Scheme::papl) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", cfg.train.papl.alpha);
      scheme_tag += "_a";
      scheme_tag += buf;
    }
    cfg.out_dir = kv.get_str("out.dir", std::string("runs/") + task_name(cfg.task) + "/" +
                                            scheme_tag + "-s" +
                                            std::to_string(cfg.train.seed_train));
  }

  // Derived values feed back into the store so the echo is self-contained.
  cfg.model.vocab_size = Vocabulary::for_task(cfg.task).size();
  cfg.model.max_seq_len = cfg.seq_len();
  cfg.model.validate();
  kv.set("model.vocab_size", std::to_string(cfg.model.vocab_size));
  kv.set("model.max_seq_len", std::to_string(cfg.model.max_seq_len));
  kv.set("model.mlp_ratio", std::to_string(cfg.model.mlp_ratio));

  cfg.shrink_factor = static_cast<double>(cfg.gen_test) / static_cast<double>(p.paper_test);
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", cfg.shrink_factor);
    kv.set("eval.shrink_factor", buf);
  }

  cfg.echo = kv.echo();
  // The hash identifies the experiment lineage: everything that shapes the
  // datasets and the trained parameters. Run-phase knobs (paths, decode
  // policy and seed, logging cadences) stay in the echo but out of the hash,
  // so one checkpoint serves any decode configuration.
  std::string lineage;
  for (const std::string& line : split_lines(cfg.echo)) {
    const std::string key = line.substr(0, line.find('='));
    static const std::set<std::string> kRunPhase = {
        "data.dir",           "out.dir",
        "decode.policy",      "seed.decode",
        "train.eval_cadence", "train.checkpoint_cadence",
        "train.eval_subset",  "eval.shrink_factor"};
    if (kRunPhase.count(key) == 0) {
      lineage += line;
      lineage += '\n';
    }
  }
  cfg.hash = fnv1a_hex(lineage);
  cfg.train.out_dir = cfg.out_dir;
  cfg.train.config_hash = cfg.hash;
  return cfg;
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    check(out.good(), "cannot open " + tmp.string());
    out << text;
    check(out.good(), "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace masklab
