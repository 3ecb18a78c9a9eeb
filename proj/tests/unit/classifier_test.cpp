#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "stylo/classifier.hpp"
#include "stylo/optim.hpp"

using namespace stylo;

namespace {

CodeTokenizer sample_tokenizer() {
  return CodeTokenizer::build({"def f(x):\n    return x + 1", "int main() { return 0; }", "x = 1"}, 200);
}

ModelShape small_shape(int vocab) {
  ModelShape s;
  s.vocab_size = vocab;
  s.hidden = 16;
  s.heads = 2;
  s.layers = 2;
  s.ffn_dim = 32;
  s.head_dim = 16;
  s.max_len = 16;
  s.dropout = 0.2;
  return s;
}

}  // namespace

TEST_CASE("lexer keeps layout as tokens") {
  const auto lex = code_lexemes("if x:\n\tfoo(1)");
  CHECK(lex == std::vector<std::string>{"if", "<sp1>", "x", ":", "\n", "<tab1>", "foo", "(", "1", ")"});
  CHECK(is_layout_lexeme("<sp4>"));
  CHECK_FALSE(is_layout_lexeme("foo"));
}

TEST_CASE("tokenize adds the start token and truncates") {
  const auto tok = sample_tokenizer();
  const auto t = tok.tokenize("x=1", 64);
  CHECK(t.length() >= 2);
  CHECK(t.ids.front() == CodeTokenizer::start_id);
  CHECK_FALSE(t.truncated);
  CHECK(tok.tokenize("x=1", 64).ids == t.ids);

  std::string long_code;
  for (int i = 0; i < 100; ++i) long_code += "x = 1\n";
  const auto cut = tok.tokenize(long_code, 32);
  CHECK(cut.length() == 32);
  CHECK(cut.truncated);
  CHECK(cut.ids.front() == CodeTokenizer::start_id);
  CHECK(tok.tokenize("zzz_unseen", 8).ids[1] == CodeTokenizer::unk_id);
  CHECK_THROWS(tok.tokenize("", 8));
}

TEST_CASE("tokenizer state round-trips") {
  const auto tok = sample_tokenizer();
  const auto back = CodeTokenizer::from_json(tok.to_json());
  CHECK(back.hash() == tok.hash());
  CHECK(back.size() == tok.size());
  CHECK(back.tokenize("def f(x)", 16).ids == tok.tokenize("def f(x)", 16).ids);
}

TEST_CASE("softmax over two logits") {
  const auto even = prediction_from_logits(0.0, 0.0);
  CHECK(even.prob_ai == doctest::Approx(0.5));
  const auto sure = prediction_from_logits(-10.0, 10.0);
  CHECK(sure.prob_ai > 0.9999);
  CHECK(sure.label == Label::ai);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.normal() * 30, b = rng.normal() * 30;
    const auto p = prediction_from_logits(a, b);
    const auto q = prediction_from_logits(b, a);
    CHECK(p.prob_ai + q.prob_ai == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.prob_ai >= 0.0);
    CHECK(p.prob_ai <= 1.0);
  }
}

TEST_CASE("head reads only the first position") {
  Rng rng(1);
  SequenceClassifier<double> model(small_shape(20), rng);
  nn::Matrix<double> h = nn::Matrix<double>::Random(5, 16);
  const auto base = model.head_logits(h);
  h.bottomRows(4).setRandom();
  CHECK(model.head_logits(h) == base);
  h(0, 3) += 1.0;
  CHECK(model.head_logits(h) != base);
}

TEST_CASE("eval mode is deterministic and dropout only acts in training") {
  Rng rng(2);
  SequenceClassifier<double> model(small_shape(20), rng);
  const std::vector<int> ids{1, 5, 7, 9, 2};
  const auto a = model.predict(ids);
  const auto b = model.predict(ids);
  CHECK(a.logits == b.logits);
  CHECK(model.head_logits(model.encode(ids)) == model.head_logits(model.encode(ids)));
  CHECK_THROWS(model.predict({}));
  CHECK_THROWS(model.predict({1, 99}));
}

TEST_CASE("analytic gradients agree with finite differences") {
  Rng rng(3);
  auto shape = small_shape(12);
  shape.layers = 1;
  shape.hidden = 8;
  shape.ffn_dim = 8;
  shape.head_dim = 8;
  SequenceClassifier<double> model(shape, rng);
  for (auto* p : model.parameters())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += 0.3 * rng.normal();
  const auto r = fixtures::check_gradients(model, {1, 4, 6, 6, 2}, Label::ai);
  CHECK(r.checked > 0);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("learning rate steps down once") {
  StepSchedule s{2e-5, 10, 0.1};
  for (int e = 1; e <= 10; ++e) CHECK(s.at_epoch(e) == 2e-5);
  for (int e = 11; e <= 15; ++e) CHECK(s.at_epoch(e) == doctest::Approx(2e-6));
}

TEST_CASE("weight decay skips biases and gains") {
  nn::Parameter<double> w("w", 2, 2, true), b("b", 1, 2, false);
  w.value.setConstant(1.0);
  b.value.setConstant(1.0);
  AdamW<double> opt({&w, &b}, 0.5);
  opt.step(0.1);
  CHECK(w.value(0, 0) == doctest::Approx(0.95));
  CHECK(b.value(0, 0) == 1.0);
}

TEST_CASE("training memorizes a single repeated example") {
  std::vector<SnippetRecord> train_set;
  for (int i = 0; i < 8; ++i) {
    SnippetRecord r;
    r.task_name = "T" + std::to_string(i);
    r.language_name = "Python";
    r.code = "print('hello')";
    r.target = Label::ai;
    r.set = "Python_from_Java";
    train_set.push_back(r);
  }
  auto cfg = fixtures::fast_training(12, 4);
  cfg.dropout = 0.0;
  const auto model = train(train_set, {}, fixtures::tiny_encoder(1, 16, 2, 32), cfg);
  const auto& epochs = model.history().epochs;
  REQUIRE(epochs.size() == 12);
  for (std::size_t e = 1; e < epochs.size(); ++e) CHECK(epochs[e].train_loss <= epochs[e - 1].train_loss + 1e-9);
  CHECK(epochs.back().train_loss < 0.05);
  CHECK(model.predict("print('hello')").label == Label::ai);

  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const StepSchedule s{cfg.lr_initial, cfg.lr_decay_epoch, cfg.lr_decay_factor};
    CHECK(epochs[e].lr == s.at_epoch(static_cast<int>(e) + 1));
  }
}

TEST_CASE("train rejects overlapping train and validation records") {
  SnippetRecord r;
  r.task_name = "T";
  r.language_name = "Python";
  r.code = "x = 1";
  r.set = "Python_from_C";
  CHECK_THROWS_AS(train({r}, {r}, fixtures::tiny_encoder(1, 16, 2, 32), fixtures::fast_training(2, 1)),
                  ValidationError);
}

TEST_CASE("checkpoints round-trip and detect tampering") {
  const auto records = fixtures::planted_signal_dataset(12, 3);
  const auto model = train(records, {}, fixtures::tiny_encoder(1, 16, 2, 64), fixtures::fast_training(2, 9));
  fixtures::TempDir dir;
  model.save(dir / "ckpt");
  const auto back = ModelCheckpoint::load(dir / "ckpt");
  for (const auto& r : records) {
    const auto a = model.predict(r.code), b = back.predict(r.code);
    CHECK(a.logits == b.logits);
    CHECK(back.predict("\n\t  " + r.code + "  \n").logits == b.logits);
  }
  CHECK(back.tokenizer().hash() == model.tokenizer().hash());

  {
    std::fstream f(dir / "ckpt" / "weights.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(ModelCheckpoint::load(dir / "ckpt"), ValidationError);
  CHECK_THROWS_AS(ModelCheckpoint::load(dir / "missing"), ValidationError);
}

TEST_CASE("weight serialization is exact") {
  Rng rng(6);
  SequenceClassifier<double> a(small_shape(20), rng), b(small_shape(20), rng);
  std::vector<const nn::Parameter<double>*> src;
  for (auto* p : a.parameters()) src.push_back(p);
  const auto bytes = serialize_weights(src);
  CHECK(bytes.starts_with("STYLOWT1"));
  deserialize_weights(bytes, b.parameters());
  CHECK(a.predict({1, 3, 4}).logits == b.predict({1, 3, 4}).logits);
  CHECK_THROWS_AS(deserialize_weights(bytes.substr(0, bytes.size() - 3), b.parameters()), ValidationError);
  CHECK_THROWS_AS(deserialize_weights("NOTAWEIGHTFILE", b.parameters()), ValidationError);
}

TEST_CASE("training configs validate") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  CHECK(t.epochs == 15);
  CHECK(t.lr_decay_epoch == 10);
  CHECK(t.dropout == 0.2);
  t.lr_decay_epoch = 15;
  CHECK_THROWS_AS(t.validate(), ValidationError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"optimizer", "SGD"}}), ValidationError);
  CHECK_THROWS_AS(EncoderConfig::from_json({{"layrs", 2}}), ValidationError);
}
