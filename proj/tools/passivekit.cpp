// Copyright 2026 The passivekit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// passivekit: command-line entry point for the corpus, scoring and analysis
// pipeline. Every subcommand except `serve` writes run_manifest.json into its
// output directory; passing that manifest back as --config reproduces the run.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "passivekit/passivekit.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace passivekit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr const char* kManifestName = "run_manifest.json";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read for hashing: " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// Settings from --config, overlaid with whatever flags were given.
class Settings {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config: " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    if (j.contains("config") && j["config"].is_object()) j = j["config"];  // a run manifest
    cfg_ = j;
    base_ = fs::absolute(path).parent_path();
  }

  void set(const std::string& key, json value) { cfg_[key] = std::move(value); }
  bool has(const std::string& key) const { return cfg_.contains(key) && !cfg_[key].is_null(); }
  const json& raw(const std::string& key) const { return cfg_.at(key); }

  std::string str(const std::string& key, const std::string& fallback = "") const {
    if (!has(key)) return fallback;
    const auto& v = cfg_[key];
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto& v = cfg_[key];
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) {
      if (auto n = text::parse_int(v.get<std::string>())) return *n;
    }
    throw UsageError("'" + key + "' must be an integer");
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = cfg_[key];
    if (v.is_number()) return v.get<double>();
    try {
      std::size_t used = 0;
      const std::string s = v.get<std::string>();
      const double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
    throw UsageError("'" + key + "' must be a number");
  }

  std::vector<std::string> list(const std::string& key, std::vector<std::string> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = cfg_[key];
    std::vector<std::string> out;
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(e.get<std::string>());
    } else {
      for (auto part : text::split(v.get<std::string>(), ',')) {
        if (!text::trim(part).empty()) out.emplace_back(text::trim(part));
      }
    }
    return out;
  }

  // An existing file; relative config paths resolve against the config's directory.
  std::string input_path(const std::string& key, bool required = true) const {
    if (!has(key)) {
      if (required) throw UsageError("missing required input '" + key + "'");
      return "";
    }
    fs::path p = str(key);
    if (p.is_relative() && from_config_.count(key) && !base_.empty()) p = base_ / p;
    if (!fs::is_regular_file(p)) throw UsageError(key + ": no such file: " + p.string());
    return fs::absolute(p).lexically_normal().string();
  }

  void mark_flag(const std::string& key) { from_config_.erase(key); }
  void mark_config_keys() {
    for (const auto& [k, v] : cfg_.items()) from_config_.insert(k);
  }

 private:
  json cfg_ = json::object();
  fs::path base_;
  std::set<std::string> from_config_;
};

// Resolved run: what goes into the manifest and what the subcommand reads.
struct Run {
  std::string subcommand;
  json config = json::object();
  json inputs = json::object();
  fs::path out;

  std::string input(const Settings& s, const std::string& key, bool required = true) {
    const std::string p = s.input_path(key, required);
    if (!p.empty()) {
      config[key] = p;
      inputs[key] = {{"path", p}, {"sha256", sha256_file(p)}};
    }
    return p;
  }

  void prepare_out() {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    return f;
  }

  void write_manifest() const {
    json m;
    m["tool"] = "passivekit";
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["inputs"] = inputs;
    auto f = open(kManifestName);
    f << m.dump(2) << '\n';
  }
};

void warn_if_inputs_changed(const std::string& config_path, const Run& run) {
  std::ifstream in(config_path);
  json j = json::parse(in, nullptr, false);
  if (!j.is_object() || !j.contains("inputs") || !j["inputs"].is_object()) return;
  for (const auto& [key, rec] : j["inputs"].items()) {
    if (!run.inputs.contains(key) || !rec.contains("sha256")) continue;
    if (rec["sha256"] != run.inputs[key]["sha256"]) {
      std::cerr << "warning: input '" << key << "' differs from the manifest (sha256 mismatch)\n";
    }
  }
}

void write_diagnostics(std::ostream& out, const std::vector<Diagnostic>& diags) {
  out << "line\tid\tmessage\n";
  for (const auto& d : diags) out << d.line << '\t' << d.sentence_id << '\t' << d.message << '\n';
}

void print_diagnostics(const char* what, const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << what << ": " << d << '\n';
}

// ---- classify --------------------------------------------------------------

int cmd_classify(const Settings& s, Run& run) {
  const std::string input = run.input(s, "input");
  const auto lemmas = s.list("lemmas", {"drop", "last"});
  if (lemmas.empty()) throw UsageError("--lemmas is empty");
  const std::string mode = s.str("mode", "streaming");
  if (mode != "streaming" && mode != "indexed") throw UsageError("--mode must be streaming|indexed");
  run.config["lemmas"] = lemmas;
  run.config["mode"] = mode;

  VoiceCountTable table;
  std::vector<Diagnostic> diags;
  if (mode == "streaming") {
    FileCorpus corpus(input);
    table = count_voices(corpus, lemmas, false);
    diags = corpus.diagnostics();
  } else {
    IndexedCorpus corpus(input);
    table = count_voices(corpus, lemmas, false);
    diags = corpus.diagnostics();
  }
  print_diagnostics("skipped", diags);
  run.prepare_out();
  auto counts = run.open("counts.tsv");
  write_counts_report(table, counts);
  auto d = run.open("diagnostics.tsv");
  write_diagnostics(d, diags);
  run.write_manifest();
  return 0;
}

// ---- intervene -------------------------------------------------------------

InterventionSpec resolve_spec(const Settings& s, Run& run) {
  json j;
  if (s.has("spec") && s.raw("spec").is_object()) {
    j = s.raw("spec");
  } else {
    const std::string path = run.input(s, "spec");
    std::ifstream in(path);
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError("spec " + path + " is not valid JSON");
  }
  if (s.has("seed")) j["seed"] = static_cast<std::uint64_t>(s.integer("seed", 0));
  InterventionSpec spec;
  try {
    spec = parse_intervention_spec(j);
  } catch (const InterventionError& e) {
    throw UsageError(e.what());
  }
  run.config["spec"] = to_json(spec);
  run.config["seed"] = std::visit([](const auto& x) { return x.seed; }, spec);
  return spec;
}

int cmd_intervene(const Settings& s, Run& run) {
  const std::string input = run.input(s, "input");
  const InterventionSpec spec = resolve_spec(s, run);
  FileCorpus corpus(input);

  run.prepare_out();
  const fs::path final_path = run.out / "corpus.conllu";
  const fs::path partial = run.out / "corpus.conllu.partial";
  InterventionReport report;
  try {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + partial.string());
    auto sink = [&](const ParsedSentence& sent) { out << to_conllu(sent) << '\n'; };
    report = std::visit(
        [&](const auto& sp) {
          using T = std::decay_t<decltype(sp)>;
          if constexpr (std::is_same_v<T, FrequencyInterventionSpec>) {
            return apply_frequency_intervention(corpus, sp, sink);
          } else {
            return apply_swap_intervention(corpus, sp, sink);
          }
        },
        spec);
    out.close();
    if (!out) throw std::runtime_error("I/O failure writing " + partial.string());
  } catch (const InterventionError& e) {
    fs::remove(partial);
    std::string msg = e.what();
    if (!e.missing_forms.empty()) msg += "\nmissing inflection forms: " + text::join(e.missing_forms, ", ");
    throw UsageError(msg);
  } catch (...) {
    fs::remove(partial);
    throw;
  }
  fs::rename(partial, final_path);

  auto plain = run.open("corpus.txt");
  std::vector<Diagnostic> warnings;
  write_plaintext(FileCorpus(final_path.string()), plain, &warnings);
  print_diagnostics("plaintext", warnings);
  print_diagnostics("skipped", corpus.diagnostics());
  auto kv = run.open("report.tsv");
  report.write_key_values(kv);
  auto summary = run.open("summary.txt");
  report.write_summary(summary);
  auto d = run.open("diagnostics.tsv");
  auto all = corpus.diagnostics();
  all.insert(all.end(), report.diagnostics.begin(), report.diagnostics.end());
  write_diagnostics(d, all);
  run.write_manifest();
  report.write_summary(std::cout);
  return 0;
}

// ---- evaluate --------------------------------------------------------------

std::vector<SentencePair> load_suite(const Settings& s, Run& run) {
  const std::string path = run.input(s, "suite", false);
  auto pairs = path.empty() ? generate_pairs() : import_stimuli(path);
  if (path.empty()) run.config["suite"] = "builtin";
  return pairs;
}

std::unique_ptr<Scorer> make_scorer(const Settings& s, Run& run) {
  const std::string kind = s.str("scorer", "builtin");
  run.config["scorer"] = kind;
  if (kind == "builtin") {
    const std::string train = run.input(s, "train");
    const auto order = s.integer("order", 3);
    const double discount = s.number("discount", 0.75);
    if (order < 1 || order > 9) throw UsageError("--order must lie in [1, 9]");
    if (!(discount > 0.0 && discount < 1.0)) throw UsageError("--discount must lie in (0, 1)");
    run.config["order"] = order;
    run.config["discount"] = discount;
    return std::make_unique<NGramScorer>(
        std::make_shared<const NGramModel>(NGramModel::train_file(train, static_cast<int>(order), discount)));
  }
  if (kind == "external") {
    const std::string cmd = s.str("scorer_cmd");
    if (cmd.empty()) throw UsageError("--scorer external needs --scorer-cmd");
    run.config["scorer_cmd"] = cmd;
    return std::make_unique<ExternalScorer>(cmd);
  }
  throw UsageError("--scorer must be builtin|external");
}

std::string joined_numbers(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  for (double x : xs) parts.push_back(csv::number(x));
  return text::join(parts, " ");
}

void write_scores(const SuiteScores& suite, std::ostream& out) {
  out << "pair_id\tvoice\tscorer_id\ttotal\ttokens\tlogprobs\n";
  for (const auto& p : suite.scored) {
    for (const auto* r : {&p.active, &p.passive}) {
      out << p.pair_id << '\t' << (r == &p.active ? "active" : "passive") << '\t' << r->scorer_id << '\t'
          << csv::number(r->total) << '\t' << text::join(r->tokens, " ") << '\t' << joined_numbers(r->token_logprobs)
          << '\n';
    }
  }
}

BootstrapOptions bootstrap_options(const Settings& s, Run& run, std::uint64_t seed) {
  BootstrapOptions o;
  const auto iters = s.integer("iterations", 1000);
  if (iters < 1000) throw UsageError("--iterations must be at least 1000");
  o.iterations = static_cast<std::size_t>(iters);
  o.seed = seed;
  run.config["iterations"] = iters;
  return o;
}

void write_group_summaries(Run& run, const std::vector<PassiveDropRecord>& records, const BootstrapOptions& opts) {
  auto by_class = run.open("class_summary.csv");
  write_summary_csv(summarize_drops(records, [](const PassiveDropRecord& r) { return r.class_name; }, opts), "class",
                    by_class);
  auto by_verb = run.open("verb_summary.csv");
  write_summary_csv(summarize_drops(records, [](const PassiveDropRecord& r) { return r.verb; }, opts), "verb",
                    by_verb);
}

int cmd_evaluate(const Settings& s, Run& run) {
  const auto pairs = load_suite(s, run);
  const auto seed = static_cast<std::uint64_t>(s.integer("seed", 0));
  run.config["seed"] = seed;
  const auto opts = bootstrap_options(s, run, seed);
  auto scorer = make_scorer(s, run);

  const SuiteScores suite = score_suite(*scorer, pairs);
  if (auto* ext = dynamic_cast<ExternalScorer*>(scorer.get())) {
    const int status = ext->shutdown();
    if (status != 0) std::cerr << "warning: scorer exited with status " << status << '\n';
  }
  print_diagnostics("failed", suite.failures);
  if (suite.scored.empty()) throw std::runtime_error("no pair could be scored");

  const DropTable drops = model_passive_drops({suite}, pairs);
  run.prepare_out();
  auto scores = run.open("scores.tsv");
  write_scores(suite, scores);
  auto d = run.open("drops.csv");
  write_drops_csv(drops.records, d);
  auto f = run.open("failures.tsv");
  write_diagnostics(f, suite.failures);
  write_group_summaries(run, drops.records, opts);
  run.write_manifest();
  std::cout << "scored " << suite.scored.size() << " of " << pairs.size() << " pairs with " << suite.scorer_id
            << '\n';
  return suite.failures.empty() ? 0 : kExitRuntime;
}

// ---- lists -----------------------------------------------------------------

int cmd_lists(const Settings& s, Run& run) {
  const auto pairs = load_suite(s, run);
  std::string fillers_path = s.has("fillers") ? run.input(s, "fillers") : default_data_dir() + "/fillers.tsv";
  if (!s.has("fillers")) {
    run.config["fillers"] = "builtin";
    run.inputs["fillers"] = {{"path", "builtin"}, {"sha256", sha256_file(fillers_path)}};
  }
  const auto seed = static_cast<std::uint64_t>(s.integer("seed", 0));
  run.config["seed"] = seed;
  const auto build = build_lists(pairs, load_fillers(fillers_path), seed);

  std::vector<std::string> problems;
  for (const auto& list : build.lists) {
    for (const auto& p : check_list_constraints(list, build.items)) problems.push_back(list.id + ": " + p);
  }
  if (!problems.empty()) throw std::runtime_error("list constraints violated:\n" + text::join(problems, "\n"));

  run.prepare_out();
  for (const auto& list : build.lists) {
    auto f = run.open("list_" + list.id + ".csv");
    write_list_csv(list, f);
  }
  auto items = run.open("items.csv");
  csv::Writer w(items);
  w.row({"item_id", "kind", "pair_id", "verb", "class", "voice", "group", "expected_acceptable", "text"});
  for (const auto& [id, it] : build.items) {
    w.row({id, "critical", it.pair_id, it.verb, it.class_name, std::string(to_string(it.voice)), std::to_string(build.pair_group.at(it.pair_id)),
           "1", it.text});
  }
  for (const auto& [id, f] : build.fillers) {
    w.row({id, f.is_attention_check ? "attention_check" : "filler", "", "", "", "", "", f.expected_acceptable ? "1" : "0",
           f.text});
  }
  run.write_manifest();
  std::cout << "wrote " << build.lists.size() << " lists\n";
  return 0;
}

// ---- judgments -------------------------------------------------------------

int cmd_judgments(const Settings& s, Run& run) {
  const std::string path = run.input(s, "judgments");
  const auto threshold = s.integer("threshold", 15);
  const auto splits = s.integer("splits", 10);
  if (threshold < 0) throw UsageError("--threshold must be non-negative");
  if (splits < 1) throw UsageError("--splits must be positive");
  const auto seed = static_cast<std::uint64_t>(s.integer("seed", 0));
  run.config["threshold"] = threshold;
  run.config["splits"] = splits;
  run.config["seed"] = seed;
  Rng root(seed);
  const auto opts = bootstrap_options(s, run, root.derive_seed());
  const std::uint64_t split_seed = root.derive_seed();

  std::ifstream in(path);
  std::vector<Diagnostic> rejected;
  const auto rows = read_judgments_csv(in, rejected);
  print_diagnostics("rejected row", rejected);
  const auto excl = exclude_participants(rows, static_cast<std::size_t>(threshold));

  auto drops = human_passive_drops(excl.kept);
  attach_participant_cis(drops, excl.kept, opts);

  run.prepare_out();
  {
    auto f = run.open("rejected_rows.tsv");
    write_diagnostics(f, rejected);
  }
  {
    auto f = run.open("exclusions.tsv");
    const std::set<std::string> out(excl.excluded.begin(), excl.excluded.end());
    const std::set<std::string> none(excl.no_filler_ratings.begin(), excl.no_filler_ratings.end());
    f << "participant_id\tunexpected_fillers\tstatus\n";
    for (const auto& [p, n] : excl.unexpected_counts) {
      f << p << '\t' << n << '\t' << (out.count(p) ? "excluded" : none.count(p) ? "no_filler_ratings" : "kept")
        << '\n';
    }
  }
  {
    auto f = run.open("pair_drops.csv");
    write_drops_csv(drops.records, f);
  }
  write_group_summaries(run, drops.records, opts);

  // Reliability over critical items, overall and per class.
  std::map<std::string, std::vector<JudgmentRow>> by_class;
  std::vector<JudgmentRow> critical;
  for (const auto& r : excl.kept) {
    if (r.is_filler) continue;
    critical.push_back(r);
    by_class[r.class_name].push_back(r);
  }
  auto rel = run.open("reliability.tsv");
  rel << "scope\tn_items\tmean_half_r\tcorrected_rho\n";
  auto reliability_line = [&](const std::string& scope, const std::vector<JudgmentRow>& rs) {
    std::set<std::string> items;
    for (const auto& r : rs) items.insert(r.item_id);
    try {
      const auto res = split_half_reliability(rs, static_cast<std::size_t>(splits), split_seed);
      rel << scope << '\t' << items.size() << '\t' << csv::number(res.mean_r) << '\t' << csv::number(res.corrected)
          << '\n';
    } catch (const StatsError& e) {
      rel << scope << '\t' << items.size() << "\tNA\tNA\n";
      std::cerr << "reliability (" << scope << "): " << e.what() << '\n';
    }
  };
  reliability_line("all", critical);
  for (const auto& [cls, rs] : by_class) reliability_line("class:" + cls, rs);
  run.write_manifest();

  std::cout << "participants: " << excl.unexpected_counts.size() << ", excluded: " << excl.excluded.size()
            << ", without filler ratings: " << excl.no_filler_ratings.size() << ", rejected rows: " << rejected.size()
            << '\n';
  return 0;
}

// ---- report ----------------------------------------------------------------

std::vector<PassiveDropRecord> read_drops(const std::string& path) {
  std::ifstream in(path);
  return read_drops_csv(in);
}

int cmd_report(const Settings& s, Run& run) {
  const std::string base_path = run.input(s, "baseline");
  const std::string after_path = run.input(s, "intervened", false);
  const std::string human_path = run.input(s, "human", false);
  if (after_path.empty() && human_path.empty()) throw UsageError("report needs --intervened and/or --human");
  const auto mutating = s.list("mutating", {});
  if (!after_path.empty() && mutating.empty()) throw UsageError("--intervened needs --mutating");
  run.config["mutating"] = mutating;

  const auto baseline = read_drops(base_path);
  std::optional<DeltaTable> delta;
  if (!after_path.empty()) {
    delta = intervention_delta(baseline, read_drops(after_path), {mutating.begin(), mutating.end()});
  }
  std::optional<PearsonResult> corr;
  if (!human_path.empty()) corr = correlate_drops(read_drops(human_path), baseline);

  run.prepare_out();
  if (delta) {
    auto p = run.open("delta_pairs.csv");
    write_delta_csv(delta->pairs, p);
    auto v = run.open("delta_verbs.csv");
    write_delta_csv(delta->verbs, v);
  }
  if (corr) {
    auto c = run.open("correlation.tsv");
    c << "n\tr\tp_value\n" << corr->n << '\t' << csv::number(corr->r) << '\t' << csv::number(corr->p) << '\n';
  }
  run.write_manifest();
  return 0;
}

// ---- serve -----------------------------------------------------------------

int cmd_serve(const Settings& s) {
  Run scratch;
  auto scorer = make_scorer(s, scratch);
  if (!dynamic_cast<NGramScorer*>(scorer.get())) throw UsageError("serve only exposes the builtin scorer");
  serve_protocol(*scorer, std::cin, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"passivekit: passive-voice corpus, scoring and judgment toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "passivekit 0.1.0");

  std::map<std::string, std::string> flags;
  std::vector<std::pair<std::string, CLI::Option*>> given;
  std::string config_path;
  std::string out_dir;

  auto common = [&](CLI::App* sub, bool with_out = true) {
    sub->add_option("--config", config_path, "JSON config or run manifest; flags override it");
    given.emplace_back("seed", sub->add_option("--seed", flags["seed"], "root seed"));
    if (with_out) sub->add_option("--out", out_dir, "output directory")->required();
  };
  auto opt = [&](CLI::App* sub, const std::string& name, const std::string& help) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    given.emplace_back(key, sub->add_option("--" + name, flags[key], help));
  };

  auto* classify = app.add_subcommand("classify", "count active/passive/other occurrences of lemmas");
  common(classify);
  opt(classify, "input", "CoNLL-U corpus");
  opt(classify, "lemmas", "comma-separated lemmas (default drop,last)");
  opt(classify, "mode", "streaming|indexed");

  auto* intervene = app.add_subcommand("intervene", "apply a frequency or swap intervention");
  common(intervene);
  opt(intervene, "input", "CoNLL-U corpus");
  opt(intervene, "spec", "intervention spec (JSON)");

  auto* evaluate = app.add_subcommand("evaluate", "score the minimal-pair suite and compute passive drops");
  common(evaluate);
  opt(evaluate, "suite", "stimulus suite (JSON lines); default: generated pairs");
  opt(evaluate, "scorer", "builtin|external");
  opt(evaluate, "scorer-cmd", "command line of an external scorer");
  opt(evaluate, "train", "training text for the builtin n-gram scorer");
  opt(evaluate, "order", "n-gram order (default 3)");
  opt(evaluate, "discount", "Kneser-Ney discount (default 0.75)");
  opt(evaluate, "iterations", "bootstrap iterations (default 1000)");

  auto* lists = app.add_subcommand("lists", "build the counterbalanced presentation lists");
  common(lists);
  opt(lists, "suite", "stimulus suite (JSON lines); default: generated pairs");
  opt(lists, "fillers", "filler TSV; default: shipped fillers");

  auto* judgments = app.add_subcommand("judgments", "analyze a judgment CSV");
  common(judgments);
  opt(judgments, "judgments", "judgment CSV");
  opt(judgments, "threshold", "max unexpected filler ratings before exclusion (default 15)");
  opt(judgments, "splits", "random split-halves (default 10)");
  opt(judgments, "iterations", "bootstrap iterations (default 1000)");

  auto* report = app.add_subcommand("report", "compare drop tables (intervention delta, human/model r)");
  common(report);
  opt(report, "baseline", "baseline drops.csv");
  opt(report, "intervened", "drops.csv after an intervention");
  opt(report, "mutating", "comma-separated mutating lemmas");
  opt(report, "human", "human pair_drops.csv to correlate with the baseline");

  auto* serve = app.add_subcommand("serve", "expose the builtin n-gram scorer over the wire protocol");
  common(serve, false);
  opt(serve, "train", "training text");
  opt(serve, "order", "n-gram order (default 3)");
  opt(serve, "discount", "Kneser-Ney discount (default 0.75)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Settings settings;
    if (!config_path.empty()) {
      settings.load(config_path);
      settings.mark_config_keys();
    }
    for (const auto& [key, option] : given) {
      if (!option || option->count() == 0) continue;
      settings.set(key, flags[key]);
      settings.mark_flag(key);
    }
    if (sub == serve) return cmd_serve(settings);

    Run run;
    run.subcommand = sub->get_name();
    run.out = out_dir;
    int rc = 0;
    if (sub == classify) rc = cmd_classify(settings, run);
    else if (sub == intervene) rc = cmd_intervene(settings, run);
    else if (sub == evaluate) rc = cmd_evaluate(settings, run);
    else if (sub == lists) rc = cmd_lists(settings, run);
    else if (sub == judgments) rc = cmd_judgments(settings, run);
    else rc = cmd_report(settings, run);
    if (!config_path.empty()) warn_if_inputs_changed(config_path, run);
    return rc;
  } catch (const UsageError& e) {
    std::cerr << "passivekit " << sub->get_name() << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "passivekit " << sub->get_name() << ": error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
