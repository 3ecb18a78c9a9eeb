#include "fixtures.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "stylo/records.hpp"

namespace fs = std::filesystem;

namespace stylo::fixtures {

TempDir::TempDir() {
  std::string templ = (fs::temp_directory_path() / "stylo-XXXXXX").string();
  if (!mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

const std::vector<std::string> kNames{"count", "total", "items", "value", "index", "buffer", "result", "acc",
                                      "limit", "step",  "left",  "right", "node",  "width",  "height", "key"};

std::string pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.below(v.size())]; }

struct Style {
  std::string indent;
  bool braces = true;
  std::string comment;
  std::string var_decl;  // prefix for a new local
  std::string fn_head;   // {0} name, {1} parameter
  std::string loop_head; // {0} index, {1} bound
  std::string if_head;   // {0} condition
  std::string print;     // {0} expression
  std::string ret;       // {0} expression
  std::string tail = ";";
};

Style style_for(const std::string& lang) {
  if (lang == "Python")
    return {"    ", false, "#", "", "def {0}({1}):", "for {0} in range({1}):", "if {0}:", "print({0})", "return {0}", ""};
  if (lang == "Ruby")
    return {"  ", false, "#", "", "def {0}({1})", "({1}).times do |{0}|", "if {0}", "puts {0}", "{0}", ""};
  if (lang == "Java")
    return {"    ", true, "//", "int ", "static int {0}(int {1}) {{", "for (int {0} = 0; {0} < {1}; {0}++) {{",
            "if ({0}) {{", "System.out.println({0})", "return {0}"};
  if (lang == "C#")
    return {"    ", true, "//", "var ", "static int {0}(int {1}) {{", "for (int {0} = 0; {0} < {1}; {0}++) {{",
            "if ({0}) {{", "Console.WriteLine({0})", "return {0}"};
  if (lang == "Go")
    return {"\t", true, "//", "", "func {0}({1} int) int {{", "for {0} := 0; {0} < {1}; {0}++ {{", "if {0} {{",
            "fmt.Println({0})", "return {0}", ""};
  if (lang == "Rust")
    return {"    ", true, "//", "let mut ", "fn {0}({1}: i64) -> i64 {{", "for {0} in 0..{1} {{", "if {0} {{",
            "println!(\"{{}}\", {0})", "{0}", ";"};
  if (lang == "Kotlin")
    return {"    ", true, "//", "var ", "fun {0}({1}: Int): Int {{", "for ({0} in 0 until {1}) {{", "if ({0}) {{",
            "println({0})", "return {0}", ""};
  if (lang == "JavaScript")
    return {"  ", true, "//", "let ", "function {0}({1}) {{", "for (let {0} = 0; {0} < {1}; {0}++) {{",
            "if ({0}) {{", "console.log({0})", "return {0}"};
  if (lang == "C++")
    return {"    ", true, "//", "int ", "int {0}(int {1}) {{", "for (int {0} = 0; {0} < {1}; ++{0}) {{",
            "if ({0}) {{", "std::cout << {0} << std::endl", "return {0}"};
  return {"    ", true, "/*", "int ", "int {0}(int {1}) {{", "for (int {0} = 0; {0} < {1}; {0}++) {{", "if ({0}) {{",
          "printf(\"%d\\n\", {0})", "return {0}"};
}

void line(std::string& out, int depth, const Style& s, const std::string& text) {
  for (int i = 0; i < depth; ++i) out += s.indent;
  out += text + "\n";
}

void close(std::string& out, int depth, const Style& s, const std::string& lang) {
  if (s.braces) line(out, depth, s, "}");
  else if (lang == "Ruby") line(out, depth, s, "end");
}

}  // namespace

std::string solution_code(const std::string& language, int task, Rng& rng) {
  const Style s = style_for(language);
  const std::string fn = fmt::format("task_{}_{}", task, pick(rng, kNames));
  const std::string arg = pick(rng, kNames) + "_n";
  const std::string acc = pick(rng, kNames) + "_acc";
  std::string out;
  if (rng.below(2) == 0) {
    const std::string c = s.comment == "/*" ? fmt::format("/* task {} */", task) : fmt::format("{} task {}", s.comment, task);
    out += c + "\n";
  }
  line(out, 0, s, fmt::format(fmt::runtime(s.fn_head), fn, arg));
  line(out, 1, s, s.var_decl + acc + " = " + std::to_string(rng.below(10)) + s.tail);
  const int statements = 2 + static_cast<int>(rng.below(5));
  for (int k = 0; k < statements; ++k) {
    const std::string i = "i" + std::to_string(k);
    switch (rng.below(4)) {
      case 0:
        line(out, 1, s, fmt::format(fmt::runtime(s.loop_head), i, arg));
        line(out, 2, s, fmt::format("{} = {} + {} * {}{}", acc, acc, i, rng.below(7) + 1, s.tail));
        close(out, 1, s, language);
        break;
      case 1:
        line(out, 1, s, fmt::format(fmt::runtime(s.if_head), fmt::format("{} > {}", acc, rng.below(100))));
        line(out, 2, s, fmt::format("{} = {} - {}{}", acc, acc, rng.below(9) + 1, s.tail));
        close(out, 1, s, language);
        break;
      case 2:
        line(out, 1, s, fmt::format(fmt::runtime(s.print), acc) + s.tail);
        break;
      default:
        if (rng.below(2) == 0) out += "\n";
        line(out, 1, s, fmt::format("{} = ({} * {}) % {}{}", acc, acc, arg, rng.below(90) + 10, s.tail));
    }
  }
  line(out, 1, s, fmt::format(fmt::runtime(s.ret), acc) + s.tail);
  close(out, 0, s, language);
  return clean_snippet(out);
}

std::vector<RawSnippet> desk_corpus(const std::vector<std::string>& languages, int tasks, std::uint64_t seed,
                                    double hole_rate) {
  std::vector<RawSnippet> out;
  Rng holes = Rng::derived(seed, "holes");
  for (int t = 0; t < tasks; ++t) {
    const std::string name = fmt::format("Task {:03d}", t);
    for (const auto& lang : languages) {
      if (holes.uniform() < hole_rate) continue;
      Rng rng = Rng::derived(seed, name + "/" + lang);
      out.push_back({name, "https://tasks.example/" + std::to_string(t), "Compute something for task " + std::to_string(t),
                     lang, solution_code(lang, t, rng)});
    }
  }
  return out;
}

EncoderConfig tiny_encoder(int layers, int hidden, int heads, int max_len) {
  EncoderConfig e;
  e.layers = layers;
  e.hidden = hidden;
  e.heads = heads;
  e.ffn_dim = 2 * hidden;
  e.head_dim = hidden;
  e.max_len = max_len;
  e.max_vocab = 2000;
  return e;
}

TrainConfig fast_training(int epochs, std::uint64_t seed) {
  TrainConfig t;
  t.lr_initial = 1e-3;
  t.epochs = epochs;
  t.lr_decay_epoch = std::max(1, epochs * 2 / 3);
  if (t.lr_decay_epoch >= epochs) t.lr_decay_epoch = epochs - 1;
  t.batch_size = 16;
  t.seed = seed;
  return t;
}

RunConfig write_desk_workspace(const fs::path& dir, const DeskOptions& o) {
  fs::create_directories(dir);
  write_raw_snippets(dir / "corpus.jsonl", desk_corpus(o.languages, o.tasks, o.seed));
  {
    std::ofstream r(dir / "ranking.tsv");
    r << "# name\trank\n";
    int rank = 1;
    for (const auto& l : o.languages) r << l << "\t" << rank++ << "\n";
  }
  nlohmann::json cfg;
  cfg["seed"] = o.seed;
  cfg["workers"] = 1;
  cfg["paths"] = {{"corpus", "corpus.jsonl"}, {"ranking", "ranking.tsv"}};
  cfg["languages"] = {{"top_k", static_cast<int>(o.languages.size())}};
  cfg["completion"] = {{"client", "fake"}, {"unterminated_every", o.unterminated_every}};
  cfg["sampling"] = {{"per_class_count", o.per_class_count}, {"train_ratio", 0.8}};
  nlohmann::json enc = nlohmann::json::parse(tiny_encoder(1, 16, 2, 96).to_json().dump());
  cfg["encoder"] = enc;
  nlohmann::json tr = nlohmann::json::parse(fast_training(o.epochs, o.seed).to_json().dump());
  tr.erase("optimizer");
  cfg["train"] = tr;
  nlohmann::json baselines = nlohmann::json::array();
  for (auto kind : {"feature_tree", "feature_forest", "tfidf_boosted"}) {
    nlohmann::json b{{"kind", kind}};
    if (std::string(kind) == "feature_forest") b["params"] = {{"n_trees", 20}};
    if (std::string(kind) == "tfidf_boosted") b["params"] = {{"rounds", 20}};
    baselines.push_back(b);
  }
  cfg["baselines"] = baselines;
  cfg["cv_folds"] = 4;
  write_file_atomic(dir / "config.json", cfg.dump(2) + "\n");
  return RunConfig::load(dir / "config.json");
}

std::vector<SnippetRecord> planted_signal_dataset(int per_class, std::uint64_t seed, const std::string& language) {
  std::vector<SnippetRecord> out;
  const std::string set = language + "_from_Java";
  for (int t = 0; t < per_class; ++t) {
    Rng rng = Rng::derived(seed, "planted:" + std::to_string(t));
    SnippetRecord human{fmt::format("Task {:04d}", t), "", "", language, solution_code(language, t, rng),
                        Label::human, set};

    std::vector<std::string> lines;
    {
      std::string cur;
      for (char c : human.code) {
        if (c == '\n') lines.push_back(cur), cur.clear();
        else cur += c;
      }
      lines.push_back(cur);
    }
    std::vector<std::string> normalized;
    for (const auto& l : lines) {
      std::string n;
      bool space = false;
      for (char c : clean_snippet(l)) {
        if (c == ' ' || c == '\t') space = true;
        else {
          if (space && !n.empty()) n += ' ';
          space = false;
          n += c;
        }
      }
      if (!n.empty()) normalized.push_back(n);
    }
    rng.shuffle(normalized);
    normalized.insert(normalized.begin() + static_cast<long>(rng.below(normalized.size() + 1)), "gen_marker = 0");
    normalized.push_back("# generated_by_model");
    std::string ai_code;
    for (const auto& l : normalized) ai_code += l + "\n";

    SnippetRecord ai = human;
    ai.code = clean_snippet(ai_code);
    ai.target = Label::ai;
    out.push_back(std::move(human));
    out.push_back(std::move(ai));
  }
  return out;
}

std::vector<SnippetRecord> shuffle_labels(std::vector<SnippetRecord> records, std::uint64_t seed) {
  std::vector<Label> labels;
  for (const auto& r : records) labels.push_back(r.target);
  Rng rng(seed);
  rng.shuffle(labels);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].target = labels[i];
  return records;
}

GradientCheck check_gradients(SequenceClassifier<double>& model, const std::vector<int>& ids, Label label,
                              double step) {
  auto loss = [&] {
    auto logits = model.head_logits(model.encode(ids));
    const double m = std::max(logits[0], logits[1]);
    const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
    return lse - logits[static_cast<std::size_t>(label)];
  };
  model.zero_grad();
  model.accumulate_gradients(ids, label, nullptr);

  GradientCheck out;
  for (auto* p : model.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + step;
      const double up = loss();
      w = saved - step;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad.data()[i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      const double err = scale < 1e-7 ? std::abs(numeric - analytic) : std::abs(numeric - analytic) / scale;
      if (err > out.max_relative_error) {
        out.max_relative_error = err;
        out.worst_parameter = p->name;
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace stylo::fixtures
